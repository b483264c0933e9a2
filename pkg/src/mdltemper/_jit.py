"""Numba switch for the hot kernels.

Set ``MDLTEMPER_DISABLE_JIT=1`` to force the pure-numpy fallback path (also used
automatically when numba is not importable).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

JIT_ENABLED = numba is not None and os.environ.get("MDLTEMPER_DISABLE_JIT", "0") not in ("1", "true", "yes")


def njit(f=None, **options):
    """``numba.njit(cache=True)`` when JIT is enabled, identity otherwise."""
    options.setdefault("cache", True)

    def wrap(func):
        if not JIT_ENABLED:
            return func
        return numba.njit(**options)(func)

    if f is None:
        return wrap
    return wrap(f)
