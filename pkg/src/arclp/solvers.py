"""Iteration drivers: two arc-search algorithms and a Mehrotra baseline.

All three share initial-point selection, the normal-equations solver
(exactly one numeric factorization per iteration), and the termination
tests.  The arc algorithms differ only in the neighborhood kept: the
first one additionally enforces the proximity condition
``x_i s_i >= theta * mu`` at every accepted point, the second only
positivity.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .arc import (ArcDerivatives, derivatives, ellipse_point,
                  select_sigma_alpha, thresholds)
from .kkt import NormalEqSolver, NumericalFailureError
from .model import (Iterate, IterationStats, LpStructureError, SolveReport,
                    SolverConfig, SolveStatus, StandardLp,
                    composite_stop_metric, duality_measure)

#: below this angle (or Mehrotra step length) the search has stalled
ALPHA_MIN = 1e-8
#: growth factor on residual norms that flags numerical breakdown
BLOWUP_FACTOR = 10.0


class StepTooSmallError(RuntimeError):
    pass


def rescale_alpha(alpha: float) -> float:
    """Pull the angle strictly inside (0, pi/2).

    ``min(0.9999*alpha, 0.99*pi/2)`` keeps ``sin(alpha) < 1`` so the
    residual-decay product stays positive and the new point stays away
    from the boundary.
    """
    return min(0.9999 * alpha, 0.99 * math.pi / 2.0)


def starting_point_metric(lp: StandardLp, point) -> float:
    """Imbalance measure ``max(|Ax-b|, |A'lam+s-c|, mu)`` of a candidate."""
    x, lam, s = point
    return max(float(np.linalg.norm(lp.A @ x - lp.b)),
               float(np.linalg.norm(lp.A.T @ lam + s - lp.c)),
               duality_measure(x, s))


def initial_point_candidates(lp: StandardLp, neq: NormalEqSolver | None = None):
    """Both starting-point candidates, least-squares heuristic first."""
    A, b, c = lp.A, lp.b, lp.c
    n = lp.n
    if neq is None:
        neq = NormalEqSolver(A)
    candidates = []

    try:
        fac = neq.factor(np.ones(n))
        x_ls = A.T @ fac.solve(b)
        lam_ls = fac.solve(A @ c)
        s_ls = c - A.T @ lam_ls
        dx = max(-1.5 * float(x_ls.min()), 0.0)
        ds = max(-1.5 * float(s_ls.min()), 0.0)
        x_hat = x_ls + dx
        s_hat = s_ls + ds
        dot = float(x_hat @ s_hat)
        sum_s = float(s_hat.sum())
        sum_x = float(x_hat.sum())
        if dot > 0 and sum_s > 0 and sum_x > 0:
            x0 = x_hat + 0.5 * dot / sum_s
            s0 = s_hat + 0.5 * dot / sum_x
        else:
            # degenerate heuristic (e.g. an exactly complementary start):
            # keep the shifts uniform so mu stays on the residual scale
            x0 = x_hat + 1.0
            s0 = s_hat + 1.0
        pos_floor = 1e-8 * max(1.0, float(np.abs(x0).max()), float(np.abs(s0).max()))
        x0 = np.maximum(x0, pos_floor)
        s0 = np.maximum(s0, pos_floor)
        # a nearly complementary start with large residuals makes the
        # duality measure converge long before feasibility; rebalance by
        # shifting both vectors up to the residual scale
        resid = max(float(np.linalg.norm(A @ x0 - b)),
                    float(np.linalg.norm(A.T @ lam_ls + s0 - c)))
        if duality_measure(x0, s0) < 1e-4 * max(1.0, resid):
            t = math.sqrt(max(1.0, resid))
            x0 = x0 + t
            s0 = s0 + t
        if np.isfinite(x0).all() and np.isfinite(s0).all() and np.isfinite(lam_ls).all():
            candidates.append((x0, lam_ls, s0))
    except NumericalFailureError:
        pass

    norm_a = float(np.abs(lp.A.data).max()) if lp.A.nnz else 1.0
    norm_b = float(np.abs(b).max()) if b.size else 0.0
    norm_c = float(np.abs(c).max()) if c.size else 0.0
    xi = math.sqrt(max(1.0, norm_b / max(1.0, norm_a), norm_c))
    candidates.append((np.full(n, xi), np.zeros(lp.m), np.full(n, xi)))
    return candidates


def initial_point(lp: StandardLp, neq: NormalEqSolver | None = None):
    """Pick the better of two starting points.

    Candidate one is the least-squares heuristic (minimum-norm primal,
    least-squares dual, shifted to strict positivity); candidate two is
    a scaled all-ones point with zero multipliers.  The one with the
    smaller value of ``max(|Ax-b|, |A'lam+s-c|, mu)`` wins.
    """
    candidates = initial_point_candidates(lp, neq)
    scored = [(starting_point_metric(lp, p), i, p)
              for i, p in enumerate(candidates)]
    scored = [(v, i, p) for v, i, p in scored if math.isfinite(v)]
    if not scored:
        raise NumericalFailureError("no finite initial point candidate")
    _, _, best = min(scored, key=lambda t: (t[0], t[1]))
    return best


def resolve_theta(cfg: SolverConfig, it: Iterate) -> float:
    """Proximity constant tied to the initial point.

    ``min(1e-6, 0.1 * min_i(x_i s_i) / mu)`` guarantees the starting
    point itself satisfies the proximity condition.
    """
    if isinstance(cfg.theta_mode, (int, float)):
        return float(cfg.theta_mode)
    return min(1e-6, 0.1 * float((it.x * it.s).min()) / it.mu)


@dataclass
class StepResult:
    iterate: Iterate
    alpha: float
    sigma: float
    alpha_dual: float | None = None
    derivatives: ArcDerivatives | None = None


@dataclass
class AlgorithmState:
    """Mutable driver state threaded through the iteration loop."""

    iterate: Iterate
    iteration: int = 0
    theta: float | None = None
    history: list[IterationStats] = field(default_factory=list)


def _arc_step(lp, it, cfg, neq, theta):
    thr = thresholds(it, cfg)
    fac = neq.factor(it.x / it.s)
    der = derivatives(lp, it, fac)
    sel = select_sigma_alpha(it, der, thr, cfg)
    sigma = sel.sigma
    alpha = rescale_alpha(sel.alpha)
    for _ in range(cfg.max_backtracks + 1):
        if alpha < ALPHA_MIN:
            raise StepTooSmallError(f"arc angle underflow: {alpha}")
        x_new, lam_new, s_new = ellipse_point(it, der, sigma, alpha)
        if (x_new > 0).all() and (s_new > 0).all():
            mu_new = duality_measure(x_new, s_new)
            ok = mu_new < it.mu
            if ok and theta is not None:
                ok = bool((x_new * s_new >= theta * mu_new).all())
            if ok:
                nu_new = it.nu * (1.0 - math.sin(alpha))
                new_it = Iterate.from_point(lp, x_new, lam_new, s_new, nu=nu_new)
                return StepResult(iterate=new_it, alpha=alpha, sigma=sigma,
                                  derivatives=der)
        alpha *= 0.5
    raise StepTooSmallError("backtracking exhausted without acceptable step")


def step_algorithm1(lp: StandardLp, it: Iterate, cfg: SolverConfig,
                    neq: NormalEqSolver, theta: float) -> StepResult:
    """One arc iteration keeping the proximity neighborhood."""
    return _arc_step(lp, it, cfg, neq, theta)


def step_algorithm2(lp: StandardLp, it: Iterate, cfg: SolverConfig,
                    neq: NormalEqSolver) -> StepResult:
    """One arc iteration in the widest (positivity-only) neighborhood."""
    return _arc_step(lp, it, cfg, neq, None)


def _max_step(z: np.ndarray, dz: np.ndarray) -> float:
    neg = dz < 0
    if not neg.any():
        return math.inf
    return float((-z[neg] / dz[neg]).min())


def step_mehrotra(lp: StandardLp, it: Iterate, cfg: SolverConfig,
                  neq: NormalEqSolver) -> StepResult:
    """Predictor-corrector iteration sharing the factorization code path."""
    A = lp.A
    x, s, mu = it.x, it.s, it.mu
    fac = neq.factor(x / s)

    # affine predictor: Newton step on the unperturbed KKT equations,
    # reduced to (A D^2 A') dlam = -r_b - A S^-1 w - A X S^-1 r_c, w = -x o s
    w_aff = -(x * s)
    dlam_a = fac.solve(-it.r_b - A @ (w_aff / s) - A @ (x * it.r_c / s))
    ds_a = -it.r_c - A.T @ dlam_a
    dx_a = (w_aff - x * ds_a) / s

    ap_aff = min(1.0, _max_step(x, dx_a))
    ad_aff = min(1.0, _max_step(s, ds_a))
    mu_aff = duality_measure(x + ap_aff * dx_a, s + ad_aff * ds_a)
    sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

    # corrector with the second-order complementarity term
    w = sigma * mu - x * s - dx_a * ds_a
    dlam = fac.solve(-it.r_b - A @ (w / s) - A @ (x * it.r_c / s))
    ds = -it.r_c - A.T @ dlam
    dx = (w - x * ds) / s

    alpha_p = min(1.0, 0.9995 * _max_step(x, dx))
    alpha_d = min(1.0, 0.9995 * _max_step(s, ds))
    if max(alpha_p, alpha_d) < ALPHA_MIN:
        raise StepTooSmallError("mehrotra step lengths underflow")
    new_it = Iterate.from_point(lp, x + alpha_p * dx, it.lam + alpha_d * dlam,
                                s + alpha_d * ds, nu=it.nu)
    return StepResult(iterate=new_it, alpha=alpha_p, sigma=sigma,
                      alpha_dual=alpha_d)


def check_termination(lp: StandardLp, it: Iterate, cfg: SolverConfig,
                      iteration: int, prev: Iterate | None = None,
                      last_alphas: tuple[float, float] | None = None,
                      elapsed: float = 0.0) -> SolveStatus | None:
    """Shared stopping tests, in priority order; None means continue."""
    if composite_stop_metric(lp, it) < cfg.epsilon:
        return SolveStatus.OPTIMAL
    if last_alphas is not None and max(last_alphas) < ALPHA_MIN:
        return SolveStatus.STEP_TOO_SMALL
    if prev is not None:
        # growth of residuals already at rounding level is not blowup
        floor_b = cfg.epsilon * (1.0 + np.linalg.norm(lp.b))
        floor_c = cfg.epsilon * (1.0 + np.linalg.norm(lp.c))
        rb, rc = np.linalg.norm(it.r_b), np.linalg.norm(it.r_c)
        if ((rb > BLOWUP_FACTOR * np.linalg.norm(prev.r_b) and rb > floor_b)
                or (rc > BLOWUP_FACTOR * np.linalg.norm(prev.r_c) and rc > floor_c)):
            return SolveStatus.RESIDUAL_BLOWUP
    if it.mu < cfg.epsilon:
        return SolveStatus.MU_CONVERGED
    if iteration >= cfg.max_iterations or elapsed > cfg.time_limit:
        return SolveStatus.ITERATION_LIMIT
    return None


def detect_binding_variables(it: Iterate, ratio: float = 1e-6) -> np.ndarray:
    """Mask of variables whose primal value has collapsed to the boundary.

    A coordinate counts as binding when ``x_i`` is tiny both against its
    own slack and against the typical primal magnitude.
    """
    x, s = it.x, it.s
    scale = float(np.median(x)) + 1e-300
    return (x < ratio * np.maximum(s, 1.0)) & (x < ratio * scale)


def _resolve_degenerate(lp: StandardLp, cfg: SolverConfig,
                        stalled: SolveReport) -> SolveReport:
    """Binding-variable re-solve used when a run stalls near a vertex.

    Variables pinned at the boundary are fixed to zero, the reduced
    problem is solved afresh, and the point is re-embedded.  Keeps the
    stalled report unless the re-solve strictly improves the metric.
    """
    it = stalled.iterate
    if it is None:
        return stalled
    binding = detect_binding_variables(it)
    if not binding.any() or binding.all():
        return stalled
    keep = ~binding
    reduced = StandardLp(A=lp.A_csc[:, np.flatnonzero(keep)], b=lp.b,
                         c=lp.c[keep], name=lp.name + "#degen")
    sub_cfg = replace(cfg, degenerate_handling=False)
    sub = solve(reduced, sub_cfg)
    if sub.iterate is None:
        return stalled
    x = np.full(lp.n, 1e-12)
    s = np.maximum(lp.c - lp.A.T @ sub.iterate.lam, 1e-12)
    x[keep] = sub.iterate.x
    s[keep] = sub.iterate.s
    try:
        merged = Iterate.from_point(lp, x, sub.iterate.lam, s, nu=it.nu)
    except LpStructureError:
        return stalled
    if composite_stop_metric(lp, merged) >= stalled.final_metric:
        return stalled
    sub.iterate = merged
    sub.final_metric = composite_stop_metric(lp, merged)
    sub.objective_primal = float(lp.c @ merged.x)
    sub.objective_dual = float(lp.b @ merged.lam)
    sub.iterations += stalled.iterations
    sub.per_iteration = stalled.per_iteration + sub.per_iteration
    sub.factorizations += stalled.factorizations
    return sub


def solve(lp: StandardLp, cfg: SolverConfig | None = None, initial=None,
          on_iteration=None) -> SolveReport:
    """Run the configured algorithm to termination on a standard-form LP.

    Parameters
    ----------
    initial : optional ``(x0, lam0, s0)`` tuple, e.g. to share one
        starting point across algorithms in a benchmark.
    on_iteration : optional callback ``f(prev_iterate, step_result)``
        invoked after every accepted step.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    neq = NormalEqSolver(lp.A, pivot_floor_rel=cfg.regularization_pivot_floor,
                         backend=cfg.kkt_backend, dense_max=cfg.dense_fallback_max_m)
    status = None
    state = AlgorithmState(iterate=None)  # type: ignore[arg-type]
    try:
        x0, lam0, s0 = initial if initial is not None else initial_point(lp, neq)
        state.iterate = Iterate.from_point(lp, x0, lam0, s0, nu=1.0)
    except (NumericalFailureError, LpStructureError):
        return SolveReport(status=SolveStatus.NUMERICAL_FAILURE, iterations=0,
                           algorithm=cfg.algorithm, problem_name=lp.name,
                           wall_time=time.perf_counter() - start)
    if cfg.algorithm == "arc1":
        state.theta = resolve_theta(cfg, state.iterate)

    loop_factor_base = neq.num_factorizations
    prev = None
    last_alphas = None
    while True:
        elapsed = time.perf_counter() - start
        status = check_termination(lp, state.iterate, cfg, state.iteration,
                                   prev, last_alphas, elapsed)
        if status is not None:
            break
        tic = time.perf_counter()
        try:
            if cfg.algorithm == "arc1":
                res = step_algorithm1(lp, state.iterate, cfg, neq, state.theta)
            elif cfg.algorithm == "arc2":
                res = step_algorithm2(lp, state.iterate, cfg, neq)
            else:
                res = step_mehrotra(lp, state.iterate, cfg, neq)
        except StepTooSmallError:
            status = SolveStatus.STEP_TOO_SMALL
            break
        except (NumericalFailureError, LpStructureError):
            status = SolveStatus.NUMERICAL_FAILURE
            break
        prev = state.iterate
        state.iterate = res.iterate
        state.iteration += 1
        it = state.iterate
        state.history.append(IterationStats(
            mu=it.mu, r_b_norm=float(np.linalg.norm(it.r_b)),
            r_c_norm=float(np.linalg.norm(it.r_c)), alpha=res.alpha,
            sigma=res.sigma, wall_time=time.perf_counter() - tic,
            alpha_dual=res.alpha_dual))
        last_alphas = (res.alpha, res.alpha_dual if res.alpha_dual is not None
                       else res.alpha)
        if on_iteration is not None:
            on_iteration(prev, res)

    it = state.iterate
    report = SolveReport(
        status=status, iterations=state.iteration, per_iteration=state.history,
        objective_primal=float(lp.c @ it.x), objective_dual=float(lp.b @ it.lam),
        final_metric=composite_stop_metric(lp, it),
        factorizations=neq.num_factorizations - loop_factor_base,
        wall_time=time.perf_counter() - start, algorithm=cfg.algorithm,
        problem_name=lp.name, iterate=it)
    if (cfg.degenerate_handling and report.iterate is not None
            and report.status in (SolveStatus.STEP_TOO_SMALL,
                                  SolveStatus.RESIDUAL_BLOWUP)):
        report = _resolve_degenerate(lp, cfg, report)
    return report
