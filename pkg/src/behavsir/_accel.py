"""JIT switch for the integration kernels.

Set ``BEHAVSIR_DISABLE_JIT=1`` to run the kernels as plain Python/numpy.
The numba path and the fallback execute the same source.
"""
import os

JIT_DISABLED = os.environ.get("BEHAVSIR_DISABLE_JIT", "").strip().lower() not in ("", "0", "false", "no")

if not JIT_DISABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover
        numba = None
        JIT_DISABLED = True
else:
    numba = None


def maybe_njit(func):
    """Compile ``func`` with numba unless the fallback is selected."""
    if JIT_DISABLED:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "python" if JIT_DISABLED else "numba"
