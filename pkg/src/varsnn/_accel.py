"""Numba switch for the hot kernels.

Set ``VARSNN_NO_NUMBA=1`` to run every kernel as plain Python over numpy
arrays. Both paths execute the same source, so results agree.
"""

import os

_FALSE = {"", "0", "false", "no", "off"}

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("VARSNN_NO_NUMBA", "0").strip().lower() in _FALSE


def jit(fn=None, *, nogil=False):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""

    def wrap(f):
        if USE_NUMBA:
            return numba.njit(cache=True, nogil=nogil)(f)
        return f

    if fn is None:
        return wrap
    return wrap(fn)


def backend_name():
    return "numba" if USE_NUMBA else "python"
