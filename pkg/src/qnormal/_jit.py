"""JIT switch for the numeric kernels.

Kernels are written once, using scalar loops and numpy slicing that both
numba and plain numpy understand.  Set ``QNORMAL_DISABLE_NUMBA=1`` to run
them uncompiled (useful for debugging and for the benchmark comparison).
"""

import os

_FLAG = os.environ.get("QNORMAL_DISABLE_NUMBA", "").strip().lower()
DISABLE_NUMBA = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLE_NUMBA

JIT_OPTS = {"cache": True, "nogil": True}


def njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged.

    The original python function stays reachable as ``func.py_func`` in both
    cases so callers can always pick the numpy path explicitly.
    """
    if not USE_NUMBA:
        func.py_func = func
        return func
    return numba.njit(**JIT_OPTS)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
