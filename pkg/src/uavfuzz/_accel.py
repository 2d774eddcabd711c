"""Kernel backend selection.

Hot loops are written once in the numba-compatible subset of Python.  By
default they are compiled with ``numba.njit``; setting ``UAVFUZZ_DISABLE_JIT=1``
(or running without numba installed) executes the same functions as plain
Python instead.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENV_FLAG = "UAVFUZZ_DISABLE_JIT"


def jit_enabled() -> bool:
    flag = os.environ.get(ENV_FLAG, "").strip().lower()
    return numba is not None and flag not in ("1", "true", "yes", "on")


class Kernel:
    """A hot function with a compiled and an interpreted backend."""

    def __init__(self, fn):
        self.py = fn
        self.__name__ = fn.__name__
        self.__doc__ = fn.__doc__
        self._jit = None

    @property
    def jit(self):
        if numba is None:
            raise RuntimeError("numba is not available")
        if self._jit is None:
            self._jit = numba.njit(cache=True, nogil=True)(self.py)
        return self._jit

    def backend(self, name: str | None = None):
        """Return the callable for ``name`` ("jit", "py") or the default."""
        if name is None:
            name = "jit" if jit_enabled() else "py"
        return self.jit if name == "jit" else self.py

    def __call__(self, *args):
        return self.backend()(*args)


def kernel(fn) -> Kernel:
    return Kernel(fn)
