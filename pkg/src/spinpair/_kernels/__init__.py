"""Numerical kernels.

The compiled Cython extension ``_jacobi`` is used when it was built; otherwise
the numpy implementation in ``_jacobi_py`` is used. Set
``SPINPAIR_PURE_PYTHON=1`` to force the fallback. ``SPINPAIR_THREADS`` caps the
OpenMP threads of the compiled kernel (0 = runtime default).
"""

import os

from . import _jacobi_py

try:
    from . import _jacobi as _jacobi_ext
except ImportError:  # extension not built
    _jacobi_ext = None

BACKENDS = {"python": _jacobi_py.jacobi_batch}
if _jacobi_ext is not None:
    BACKENDS["compiled"] = _jacobi_ext.jacobi_batch


def _default_backend():
    if os.environ.get("SPINPAIR_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled" if "compiled" in BACKENDS else "python"


_active = _default_backend()


def backend():
    """Name of the backend currently in use."""
    return _active


def set_backend(name):
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}")
    _active = name


def thread_cap():
    try:
        return max(int(os.environ.get("SPINPAIR_THREADS", "0")), 0)
    except ValueError:
        return 0


def jacobi_batch(H, tol=1e-13, max_sweeps=64, backend=None):
    fn = BACKENDS[backend or _active]
    return fn(H, tol, max_sweeps, thread_cap())
