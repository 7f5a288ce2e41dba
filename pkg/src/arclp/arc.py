"""Arc geometry: search along an ellipse approximating the central path.

From an iterate ``(x, lam, s)`` the first derivatives ``(xdot, lamdot,
sdot)`` and the centering-split second derivatives ``(p, q)`` (so that
``xddot(sigma) = p_x*sigma + q_x`` etc.) are obtained from three solves
against one normal-equations factorization.  The candidate point at
angle ``alpha`` is

    x(alpha) = x - xdot*sin(alpha) + xddot(sigma)*(1 - cos(alpha)),

and likewise for lam and s.  The largest admissible ``alpha`` for fixed
``sigma`` has a closed form per coordinate; ``sigma`` itself is chosen
by a bisection that maximizes the resulting step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .kkt import NormalEqFactor
from .model import Iterate, LpStructureError, SolverConfig, StandardLp

HALF_PI = math.pi / 2.0
#: tolerance for arcsine/arccosine arguments that leave [-1, 1] by roundoff
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class ArcDerivatives:
    """First derivatives and the sigma-affine split of the second ones.

    The actual second derivative at a given centering weight is
    ``xddot = p_x*sigma + q_x`` (same for lam and s); the split lets the
    sigma search reuse one factorization for every trial sigma.
    """

    xdot: np.ndarray
    lamdot: np.ndarray
    sdot: np.ndarray
    p_x: np.ndarray
    p_lam: np.ndarray
    p_s: np.ndarray
    q_x: np.ndarray
    q_lam: np.ndarray
    q_s: np.ndarray
    # scalar products reused by the closed-form duality measure
    dot_xs: float = field(init=False)
    cross_p: float = field(init=False)
    cross_q: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dot_xs", float(self.xdot @ self.sdot))
        object.__setattr__(self, "cross_p",
                           float(self.xdot @ self.p_s + self.sdot @ self.p_x))
        object.__setattr__(self, "cross_q",
                           float(self.sdot @ self.q_x + self.xdot @ self.q_s))

    def xddot(self, sigma: float) -> np.ndarray:
        return self.p_x * sigma + self.q_x

    def lamddot(self, sigma: float) -> np.ndarray:
        return self.p_lam * sigma + self.q_lam

    def sddot(self, sigma: float) -> np.ndarray:
        return self.p_s * sigma + self.q_s


@dataclass(frozen=True)
class StepThresholds:
    """Positivity floors the new point must stay above."""

    phi: float
    psi: float


def thresholds(it: Iterate, cfg: SolverConfig) -> StepThresholds:
    """Floors ``phi = min(rho*min(x), nu)`` and ``psi = min(rho*min(s), nu)``."""
    phi = min(cfg.rho * float(it.x.min()), it.nu)
    psi = min(cfg.rho * float(it.s.min()), it.nu)
    if phi <= 0.0 or psi <= 0.0:
        raise LpStructureError("positivity floors must be positive")
    return StepThresholds(phi=phi, psi=psi)


def first_derivatives(lp: StandardLp, it: Iterate, fac: NormalEqFactor):
    """Solve the reduced first-derivative system.

    ``(A X S^-1 A') lamdot = A X S^-1 r_c - b``, then back out
    ``sdot = r_c - A'lamdot`` and ``xdot = x - X S^-1 sdot``.
    """
    A = lp.A
    d2 = it.x / it.s
    lamdot = fac.solve(A @ (d2 * it.r_c) - lp.b)
    sdot = it.r_c - A.T @ lamdot
    xdot = it.x - d2 * sdot
    return xdot, lamdot, sdot


def second_derivative_split(lp: StandardLp, it: Iterate, xdot, sdot,
                            fac: NormalEqFactor):
    """Two more solves with the same factor give the (p, q) split.

    ``(A X S^-1 A') p_lam = -A S^-1 mu e`` and
    ``(A X S^-1 A') q_lam = 2 A S^-1 (xdot o sdot)``; the x and s parts
    follow by substitution.
    """
    A = lp.A
    x, s, mu = it.x, it.s, it.mu
    cross = xdot * sdot
    p_lam = fac.solve(-(A @ (mu / s)))
    q_lam = fac.solve(A @ (2.0 * cross / s))
    p_s = -(A.T @ p_lam)
    q_s = -(A.T @ q_lam)
    p_x = (mu - x * p_s) / s
    q_x = -(x * q_s + 2.0 * cross) / s
    return p_x, p_lam, p_s, q_x, q_lam, q_s


def derivatives(lp: StandardLp, it: Iterate, fac: NormalEqFactor) -> ArcDerivatives:
    """Convenience wrapper computing the full derivative bundle."""
    xdot, lamdot, sdot = first_derivatives(lp, it, fac)
    p_x, p_lam, p_s, q_x, q_lam, q_s = second_derivative_split(lp, it, xdot, sdot, fac)
    return ArcDerivatives(xdot=xdot, lamdot=lamdot, sdot=sdot,
                          p_x=p_x, p_lam=p_lam, p_s=p_s,
                          q_x=q_x, q_lam=q_lam, q_s=q_s)


def ellipse_point(it: Iterate, der: ArcDerivatives, sigma: float, alpha: float):
    """Evaluate the arc at angle ``alpha`` with centering weight ``sigma``."""
    sin_a = math.sin(alpha)
    om = 1.0 - math.cos(alpha)
    x_new = it.x - der.xdot * sin_a + der.xddot(sigma) * om
    lam_new = it.lam - der.lamdot * sin_a + der.lamddot(sigma) * om
    s_new = it.s - der.sdot * sin_a + der.sddot(sigma) * om
    return x_new, lam_new, s_new


def mu_of_sigma_alpha(it: Iterate, der: ArcDerivatives,
                      sigma: float, alpha: float) -> float:
    """Closed-form duality measure of the arc point.

    ``mu(sigma, alpha) = (a_u(alpha)*sigma + b_u(alpha)) / n`` where the
    coefficients collect the scalar products of the derivative bundle;
    agrees with evaluating ``x'^T s' / n`` directly.
    """
    n = it.n
    sin_a = math.sin(alpha)
    om = 1.0 - math.cos(alpha)
    a_u = n * it.mu * om - der.cross_p * sin_a * om
    b_u = n * it.mu * (1.0 - sin_a) - (der.dot_xs * om * om
                                       + der.cross_q * sin_a * om)
    return (a_u * sigma + b_u) / n


def _checked_asin(t: float) -> float:
    if t > 1.0 or t < -1.0:
        if abs(t) - 1.0 > CLAMP_TOL:
            raise LpStructureError(f"arcsine argument {t} out of range")
        t = max(-1.0, min(1.0, t))
    return math.asin(t)


def _alpha_scalar(d: float, u: float, w: float) -> float:
    """Largest angle keeping ``d - u*sin(a) + w*(1-cos(a)) >= 0`` on [0, a].

    ``d`` is the slack above the floor at alpha = 0; a negative slack
    admits no step at all.
    """
    if d < 0.0:
        return 0.0
    if u == 0.0 and w == 0.0:
        return HALF_PI
    if u == 0.0:
        if d + w >= 0.0:
            return HALF_PI
        return math.acos(max(-1.0, min(1.0, (d + w) / w)))
    if w == 0.0:
        if u <= d:
            return HALF_PI
        return _checked_asin(d / u)
    r = math.hypot(u, w)
    if u > 0.0 and w > 0.0:
        if d + w >= r * (1.0 - _kernels.TANGENT_SNAP):
            return HALF_PI
        return _checked_asin((d + w) / r) - _checked_asin(w / r)
    if u > 0.0:
        if d + w >= r:
            return HALF_PI
        return min(HALF_PI, _checked_asin((d + w) / r) + _checked_asin(-w / r))
    if w < 0.0:
        if d + w >= 0.0:
            return HALF_PI
        return min(HALF_PI,
                   math.pi - _checked_asin(-(d + w) / r) - _checked_asin(-w / r))
    return HALF_PI


def alpha_x_case(x_i: float, phi: float, xdot_i: float, xddot_i: float) -> float:
    """Closed-form per-coordinate angle bound for the primal variable."""
    return _alpha_scalar(x_i - phi, xdot_i, xddot_i)


def alpha_s_case(s_i: float, psi: float, sdot_i: float, sddot_i: float) -> float:
    """Closed-form per-coordinate angle bound for the dual slack."""
    return _alpha_scalar(s_i - psi, sdot_i, sddot_i)


def _alpha_vectors(it, der, thr, sigma):
    ax = _kernels.alpha_bounds(it.x, der.xdot, der.xddot(sigma), thr.phi)
    asv = _kernels.alpha_bounds(it.s, der.sdot, der.sddot(sigma), thr.psi)
    return ax, asv


def max_alpha_for_sigma(it: Iterate, der: ArcDerivatives,
                        thr: StepThresholds, sigma: float) -> float:
    """Largest angle keeping ``x >= phi`` and ``s >= psi`` along the arc."""
    ax, asv = _alpha_vectors(it, der, thr, sigma)
    return float(min(ax.min(), asv.min()))


def _class_min(values: np.ndarray, mask: np.ndarray) -> float:
    # empty class imposes no constraint
    return float(values[mask].min()) if mask.any() else math.inf


@dataclass
class SigmaAlphaResult:
    sigma: float
    alpha: float
    interval_lengths: list[float] = field(default_factory=list)

    def __iter__(self):
        return iter((self.sigma, self.alpha))


def select_sigma_alpha(it: Iterate, der: ArcDerivatives, thr: StepThresholds,
                       cfg: SolverConfig) -> SigmaAlphaResult:
    """Bisection on sigma maximizing the admissible step angle.

    Each coordinate's angle bound is monotone in sigma with the sign of
    its ``p`` entry, so comparing the two sign-class minima tells which
    way the max-min optimum lies; the interval is halved exactly each
    round until it is shorter than ``cfg.bisection_tol``.
    """
    lo = cfg.sigma_min
    length = cfg.resolved_sigma_max - cfg.sigma_min
    px_neg = der.p_x < 0.0
    px_pos = der.p_x > 0.0
    ps_neg = der.p_s < 0.0
    ps_pos = der.p_s > 0.0
    lengths = []
    while length > cfg.bisection_tol:
        sigma = lo + 0.5 * length
        ax, asv = _alpha_vectors(it, der, thr, sigma)
        dec_min = min(_class_min(ax, px_neg), _class_min(asv, ps_neg))
        inc_min = min(_class_min(ax, px_pos), _class_min(asv, ps_pos))
        if dec_min > inc_min:
            lo = sigma
        length = 0.5 * length
        lengths.append(length)
    # a per-coordinate angle bound can jump (a dip detaching from the
    # floor), so the optimum may sit on either side of the bracketed
    # point; probe the ends of the final interval as well as its middle
    sigma, alpha = lo, -1.0
    for cand in (lo, lo + 0.5 * length, lo + length):
        a = max_alpha_for_sigma(it, der, thr, cand)
        if a > alpha:
            sigma, alpha = cand, a
    return SigmaAlphaResult(sigma=sigma, alpha=alpha, interval_lengths=lengths)
