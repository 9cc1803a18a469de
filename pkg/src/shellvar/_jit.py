"""Backend switch for the hot kernels.

Set ``SHELLVAR_BACKEND=numpy`` before import to run without numba.  Kernels
that have a vectorised numpy twin (fiber counting) then use it; the
quadrature kernels run as plain Python, which is slow but gives the same
numbers.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

BACKEND = os.environ.get("SHELLVAR_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ImportError(f"SHELLVAR_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and BACKEND == "numba"


def _noop_jit(f=None, **kwargs):
    if f is None:
        return lambda g: g
    return f


def njit(f=None, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or a pass-through decorator."""
    if not USE_NUMBA:
        return _noop_jit(f)
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)
    if f is None:
        return numba.njit(**opts)
    return numba.njit(**opts)(f)

