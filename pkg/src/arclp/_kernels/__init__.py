"""Kernel backend selection.

The hot loops (sparse LDL' refactorization, triangular solves, and the
per-coordinate step-length case analysis) exist twice: a compiled
Cython extension and a pure NumPy fallback with identical semantics.
The compiled one is used when importable; set ``ARCLP_FORCE_PYTHON=1``
to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

_impl = _pykernels
if not os.environ.get("ARCLP_FORCE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
HALF_PI = _pykernels.HALF_PI
TANGENT_SNAP = _pykernels.TANGENT_SNAP

ldl_numeric = _impl.ldl_numeric
ldl_solve = _impl.ldl_solve
alpha_bounds = _impl.alpha_bounds


def get_backends():
    """Return {name: module} of all importable kernel backends."""
    backends = {"python": _pykernels}
    try:
        from . import _ckernels

        backends["compiled"] = _ckernels
    except ImportError:
        pass
    return backends
