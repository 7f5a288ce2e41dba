"""Core data types shared by every stage of the solver pipeline.

A problem is always held in standard form

    min c'x   subject to   A x = b,  x >= 0,

with the dual

    max b'lam subject to   A'lam + s = c,  s >= 0.

Iterates keep ``x > 0`` and ``s > 0`` but may violate the equality
constraints; the equality residuals are cached on the iterate together
with the duality measure ``mu = x's / n``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class LpStructureError(ValueError):
    """Raised when problem data is dimensionally or structurally invalid."""


def _as_vector(v, n, name):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise LpStructureError(f"{name} must have length {n}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class StandardLp:
    """A linear program in standard form with a sparse constraint matrix.

    Parameters
    ----------
    A : scipy sparse or array_like, shape (m, n)
        Equality-constraint matrix.  Kept as CSR internally.
    b : array_like, shape (m,)
    c : array_like, shape (n,)
    row_names, col_names : optional label lists, carried for reporting.
    """

    A: sp.csr_array
    b: np.ndarray
    c: np.ndarray
    row_names: tuple = ()
    col_names: tuple = ()
    name: str = ""

    def __post_init__(self):
        A = self.A
        if not sp.issparse(A):
            A = sp.csr_array(np.atleast_2d(np.asarray(A, dtype=float)))
        else:
            A = sp.csr_array(A).astype(float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise LpStructureError(f"A must be a nonempty 2-d matrix, got shape {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", _as_vector(self.b, A.shape[0], "b"))
        object.__setattr__(self, "c", _as_vector(self.c, A.shape[1], "c"))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @cached_property
    def A_csc(self) -> sp.csc_array:
        return sp.csc_array(self.A)


def compute_residuals(lp: StandardLp, x, lam, s):
    """Equality residuals ``r_b = A x - b`` and ``r_c = A'lam + s - c``."""
    x = _as_vector(x, lp.n, "x")
    lam = _as_vector(lam, lp.m, "lam")
    s = _as_vector(s, lp.n, "s")
    r_b = lp.A @ x - lp.b
    r_c = lp.A.T @ lam + s - lp.c
    return r_b, r_c


def duality_measure(x, s) -> float:
    """Average complementarity product ``x's / n``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    if x.shape != s.shape:
        raise LpStructureError(f"x and s must match, got {x.shape} vs {s.shape}")
    if x.size == 0:
        raise LpStructureError("duality measure undefined for empty vectors")
    return float(x @ s) / x.size


@dataclass(frozen=True)
class Iterate:
    """A primal-dual point with cached residuals and duality measure.

    ``nu`` is the accumulated residual-decay product of the arc steps that
    produced this point (1.0 at the start, multiplied by ``1 - sin(alpha)``
    per accepted arc step).  Instances are immutable; steppers build new
    iterates, which recomputes the residual caches from scratch.
    """

    x: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    r_b: np.ndarray
    r_c: np.ndarray
    mu: float
    nu: float = 1.0

    @classmethod
    def from_point(cls, lp: StandardLp, x, lam, s, nu=1.0) -> "Iterate":
        x = _as_vector(x, lp.n, "x")
        lam = _as_vector(lam, lp.m, "lam")
        s = _as_vector(s, lp.n, "s")
        if not (x > 0).all() or not (s > 0).all():
            raise LpStructureError("iterate requires x > 0 and s > 0 elementwise")
        if not 0.0 < nu <= 1.0:
            raise LpStructureError(f"nu must lie in (0, 1], got {nu}")
        r_b, r_c = compute_residuals(lp, x, lam, s)
        return cls(x=x, lam=lam, s=s, r_b=r_b, r_c=r_c,
                   mu=duality_measure(x, s), nu=float(nu))

    @property
    def n(self) -> int:
        return self.x.size


def composite_stop_metric(lp: StandardLp, it: Iterate) -> float:
    """Scaled sum of infeasibilities and the duality measure.

    Returns ``|r_b|/max(1,|b|) + |r_c|/max(1,|c|) + mu/max(1,|c'x|,|b'lam|)``;
    zero exactly at a KKT point of a feasible problem.
    """
    obj_p = abs(float(lp.c @ it.x))
    obj_d = abs(float(lp.b @ it.lam))
    term_b = np.linalg.norm(it.r_b) / max(1.0, np.linalg.norm(lp.b))
    term_c = np.linalg.norm(it.r_c) / max(1.0, np.linalg.norm(lp.c))
    term_mu = it.mu / max(1.0, obj_p, obj_d)
    return float(term_b + term_c + term_mu)


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    STEP_TOO_SMALL = "step_too_small"
    RESIDUAL_BLOWUP = "residual_blowup"
    MU_CONVERGED = "mu_converged"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


ALGORITHMS = ("arc1", "arc2", "mpc")

#: sigma upper bounds used when the config leaves sigma_max unset
_SIGMA_MAX_DEFAULT = {"arc1": 0.4, "arc2": 0.3, "mpc": 1.0}


@dataclass
class SolverConfig:
    """Run parameters.  Defaults follow the implementation conventions of
    the solvers; ``sigma_max`` is resolved per algorithm when left None
    (0.4 for arc1, 0.3 for arc2)."""

    algorithm: str = "arc2"
    epsilon: float = 1e-8
    sigma_min: float = 1e-6
    sigma_max: float | None = None
    rho: float = 0.01
    theta_mode: str | float = "auto"
    max_iterations: int = 150
    bisection_tol: float = 1e-6
    regularization_pivot_floor: float = 1e-12
    presolve_enabled: bool = True
    scaling_ratio_threshold: float = 1e8
    max_backtracks: int = 30
    time_limit: float = 600.0
    degenerate_handling: bool = False
    kkt_backend: str = "auto"
    dense_fallback_max_m: int = 200

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise LpStructureError(f"unknown algorithm {self.algorithm!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise LpStructureError("epsilon must lie in (0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise LpStructureError("rho must lie in (0, 1)")
        smax = self.resolved_sigma_max
        if not 0.0 < self.sigma_min < smax <= 1.0:
            raise LpStructureError(
                f"need 0 < sigma_min < sigma_max <= 1, got ({self.sigma_min}, {smax})")
        if self.bisection_tol <= 0:
            raise LpStructureError("bisection_tol must be positive")
        if self.kkt_backend not in ("auto", "sparse", "dense"):
            raise LpStructureError(f"unknown kkt backend {self.kkt_backend!r}")

    @property
    def resolved_sigma_max(self) -> float:
        if self.sigma_max is not None:
            return self.sigma_max
        return _SIGMA_MAX_DEFAULT[self.algorithm]


@dataclass
class IterationStats:
    mu: float
    r_b_norm: float
    r_c_norm: float
    alpha: float
    sigma: float
    wall_time: float
    alpha_dual: float | None = None


@dataclass
class SolveReport:
    """Outcome of one solver run on a standard-form problem."""

    status: SolveStatus
    iterations: int
    per_iteration: list[IterationStats] = field(default_factory=list)
    objective_primal: float = float("nan")
    objective_dual: float = float("nan")
    final_metric: float = float("nan")
    factorizations: int = 0
    wall_time: float = 0.0
    algorithm: str = ""
    problem_name: str = ""
    iterate: Iterate | None = None
    solution: np.ndarray | None = None

    def __post_init__(self):
        if len(self.per_iteration) != self.iterations:
            raise LpStructureError(
                f"history length {len(self.per_iteration)} != iterations {self.iterations}")
