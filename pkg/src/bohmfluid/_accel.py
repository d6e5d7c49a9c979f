"""Numba switch.

Hot loops live in ``kernels.py`` in two flavours: an ``@njit`` loop version and a
vectorized numpy version.  Set ``BOHMFLUID_DISABLE_NUMBA=1`` to force the numpy
path (also used automatically when numba is missing).
"""
import os

_flag = os.environ.get("BOHMFLUID_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError("disabled by BOHMFLUID_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
