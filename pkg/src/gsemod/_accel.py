"""JIT switch for the hot kernels.

Kernels are written once as plain numpy/scalar loops. When numba is importable
and ``GSEMOD_DISABLE_JIT`` is unset (or "0"), they are compiled with
``numba.njit``; otherwise the very same source runs under CPython. Both paths
consume random draws identically, so results are bit-identical.
"""

import os

ENV_FLAG = "GSEMOD_DISABLE_JIT"


def jit_disabled(value) -> bool:
    return (value or "").strip().lower() not in ("", "0", "false", "no")


try:
    if jit_disabled(os.environ.get(ENV_FLAG)):
        raise ImportError
    import numba

    USE_NUMBA = True
except ImportError:
    numba = None
    USE_NUMBA = False


def jit(func):
    """Compile ``func`` in nopython mode if acceleration is enabled."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend_name():
    return "numba" if USE_NUMBA else "python"
