"""Backend selection for the dense numeric kernels.

The compiled extension (``_kernels_c``) is preferred when importable;
otherwise the numpy fallback (``_kernels_py``) is used.  The environment
variable ``LOGNORM_GRID_BACKEND`` forces a choice: ``c``, ``python``, or
``auto`` (default).  Both backends expose the same four functions with
identical contracts; :func:`available_backends` and :func:`set_backend`
exist mainly for tests and benchmarks.
"""

import os

import numpy as np

from . import _kernels_py
from .errors import NonFiniteMatrixError

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

_BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    _BACKENDS["c"] = _kernels_c


def _pick_initial():
    requested = os.environ.get("LOGNORM_GRID_BACKEND", "auto").strip().lower()
    if requested in ("", "auto"):
        return _BACKENDS.get("c", _kernels_py)
    if requested not in _BACKENDS:
        raise ImportError(
            f"LOGNORM_GRID_BACKEND={requested!r} is not available; "
            f"choices: {sorted(_BACKENDS)} or 'auto'"
        )
    return _BACKENDS[requested]


_active = _pick_initial()


def available_backends():
    return sorted(_BACKENDS)


def active_backend():
    """Name of the backend answering kernel calls ('c' or 'python')."""
    return _active.BACKEND


def set_backend(name):
    """Force a backend by name; returns the previously active name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BACKENDS)}")
    previous = _active.BACKEND
    _active = _BACKENDS[name]
    return previous


def _square(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} expects a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise NonFiniteMatrixError(f"{name}: matrix contains NaN or Inf")
    return a


def sym_eigvals(a):
    """Eigenvalues (ascending) of the symmetric part of ``a``."""
    return _active.sym_eigvals(_square(a, "sym_eigvals"))


def eigvals(a):
    """All eigenvalues of ``a`` as a complex array (unordered)."""
    return _active.eigvals(_square(a, "eigvals"))


def expm(a):
    """Matrix exponential of ``a``."""
    return _active.expm(_square(a, "expm"))


def rk4(b, k, z0, h, n_steps, limit):
    """Fixed-step RK4 for dz/dt = b z + k; see backend docstrings."""
    b = _square(b, "rk4")
    k = np.asarray(k, dtype=np.float64)
    z0 = np.asarray(z0, dtype=np.float64)
    if k.shape != (b.shape[0],) or z0.shape != (b.shape[0],):
        raise ValueError("rk4: b, k, z0 dimensions disagree")
    return _active.rk4(b, k, z0, float(h), int(n_steps), float(limit))
