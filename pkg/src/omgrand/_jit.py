"""numba shim.

Set ``OMGRAND_DISABLE_JIT=1`` to run every kernel through its pure numpy /
pure Python fallback instead of the compiled path.
"""
import os

JIT_DISABLED = os.environ.get("OMGRAND_DISABLE_JIT", "0").lower() in ("1", "true", "yes")

try:
    import numba as nb
except ImportError:  # pragma: no cover
    nb = None

USE_NUMBA = nb is not None and not JIT_DISABLED


def njit(*args, **kwargs):
    if USE_NUMBA:
        return nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
