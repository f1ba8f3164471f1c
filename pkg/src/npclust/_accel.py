"""Backend switch for the hot loops.

Every inner loop in the package exists twice: a numba ``@njit`` kernel and a
plain numpy implementation with the same signature. ``pick`` binds the pair
and dispatches at call time, so the backend can be flipped for a whole
process with ``NPCLUST_BACKEND=numpy`` or locally with ``use_backend``.
"""

from __future__ import annotations

import contextlib
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def _initial_backend() -> str:
    name = os.environ.get("NPCLUST_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"NPCLUST_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


_backend = _initial_backend()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def njit(fn):
    """Compile ``fn`` with numba if available, otherwise return it untouched."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def pick(numba_fn, numpy_fn):
    def dispatch(*args):
        if _backend == "numba":
            return numba_fn(*args)
        return numpy_fn(*args)

    dispatch.__name__ = numpy_fn.__name__.replace("_numpy", "")
    dispatch.numba = numba_fn
    dispatch.numpy = numpy_fn
    return dispatch
