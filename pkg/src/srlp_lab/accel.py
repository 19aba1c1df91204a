"""Selection of the compiled (numba) or pure-numpy kernel path.

Set ``SRLP_LAB_DISABLE_NUMBA=1`` before import to force the numpy fallback.
"""

import os

_FLAG = os.environ.get("SRLP_LAB_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba; returns None when numba is unavailable."""
    if numba is None:  # pragma: no cover
        return None
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
