"""Backend switch for the compiled kernels.

Set ``PSOS_NO_NUMBA=1`` to run every hot loop through its pure-numpy
implementation. Both implementations are always importable so they can be
compared directly.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("PSOS_NO_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


def njit(fn):
    """Compile ``fn`` in nopython mode, or return it unchanged without numba."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
