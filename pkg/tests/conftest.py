import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).parent))

from arclp import Iterate, SolverConfig, StandardLp
from arclp.kkt import NormalEqSolver

NETLIB_DIR = Path(__file__).parent / "data" / "netlib"


def make_random_lp(m, n, seed, density=1.0, name=""):
    """Full-rank standard-form LP with nonempty primal and dual interior."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    if density < 1.0:
        A *= rng.random((m, n)) < density
    A[:, :m] += 2.0 * np.eye(m)
    x_feas = rng.uniform(0.5, 2.0, n)
    b = A @ x_feas
    lam = rng.normal(size=m)
    s_feas = rng.uniform(0.5, 2.0, n)
    c = A.T @ lam + s_feas
    return StandardLp(A=sp.csr_array(A), b=b, c=c, name=name or f"rand{m}x{n}s{seed}")


def make_interior_point(lp, seed, feasible=False):
    """A strictly positive iterate; infeasible in general."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 2.0, lp.n)
    s = rng.uniform(0.5, 2.0, lp.n)
    lam = rng.normal(size=lp.m)
    if feasible:
        lp = StandardLp(A=lp.A, b=lp.A @ x, c=lp.A.T @ lam + s, name=lp.name)
    return lp, Iterate.from_point(lp, x, lam, s)


def arc_bundle(lp, it):
    """Factor the normal equations and compute the derivative bundle."""
    from arclp.arc import derivatives

    neq = NormalEqSolver(lp.A)
    fac = neq.factor(it.x / it.s)
    return fac, derivatives(lp, it, fac)


@pytest.fixture
def trivial_lp():
    """min x subject to x = 1."""
    return StandardLp(A=[[1.0]], b=[1.0], c=[1.0], name="trivial")


@pytest.fixture
def small_lp():
    return make_random_lp(6, 10, seed=42)


def default_config(**kw):
    return SolverConfig(**kw)
