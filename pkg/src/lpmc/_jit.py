"""Numba switch.

Set ``LPMC_DISABLE_JIT=1`` to force the pure-numpy code paths, e.g. for
debugging or on platforms without numba. When numba is missing the numpy
paths are used automatically.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

JIT_DISABLED = os.environ.get("LPMC_DISABLE_JIT", "0").lower() not in ("", "0", "false", "no")
HAVE_NUMBA = numba is not None
JIT_ENABLED = HAVE_NUMBA and not JIT_DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def decorator(func):
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return decorator


def resolve_backend(backend=None):
    """Map ``None``/"numba"/"numpy" to the backend actually used."""
    if backend is None:
        return "numba" if JIT_ENABLED else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
