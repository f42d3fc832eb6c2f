"""Numba switch.

Set ``FAIRAUDIT_NUMBA=0`` to force the pure-numpy kernels.  When numba is not
importable the numpy path is used regardless of the flag.
"""
from __future__ import annotations

import os

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("FAIRAUDIT_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Kernels are always compiled if numba exists (so the benchmark can compare
    both paths); ``NUMBA_ENABLED`` only decides which one the library calls.
    """
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
