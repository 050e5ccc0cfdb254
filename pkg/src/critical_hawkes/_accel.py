"""Switch between the numba-compiled kernels and the pure-numpy fallbacks.

Setting ``CRITICAL_HAWKES_DISABLE_NUMBA=1`` in the environment (before the
package is imported) selects the numpy path everywhere.  Both paths are kept
importable at all times so that the benchmark and the tests can compare them.
"""
from __future__ import annotations

import os

_FLAG = "CRITICAL_HAWKES_DISABLE_NUMBA"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get(_FLAG, "0").lower() not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise.

    The decorated function is always compiled lazily, so importing the package
    never triggers compilation.
    """
    kwargs.setdefault("cache", True)

    def wrap(func):
        if not HAVE_NUMBA:
            return func
        return _numba.njit(**kwargs)(func)

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
