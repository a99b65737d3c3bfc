"""Backend switch for the hot loops.

numba is used when importable unless ``DAMPWAVE_NO_NUMBA`` is set to a truthy
value, in which case every kernel falls back to its vectorised numpy twin.
"""

import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None

_state = {
    "backend": "numpy"
    if not HAVE_NUMBA or os.environ.get("DAMPWAVE_NO_NUMBA", "").lower() in ("1", "true", "yes")
    else "numba"
}


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba exists, identity otherwise."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend() -> str:
    return _state["backend"]


def set_backend(name: str):
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _state["backend"] = name


@contextlib.contextmanager
def use_backend(name: str):
    old = backend()
    set_backend(name)
    try:
        yield
    finally:
        _state["backend"] = old
