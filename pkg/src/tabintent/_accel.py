"""Switch between numba-compiled kernels and their pure-numpy fallbacks.

Set ``TABINTENT_DISABLE_NUMBA=1`` before import to force the numpy path.
Both paths are required to produce bit-identical results.
"""
import os

_DISABLED = os.environ.get("TABINTENT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _njit = None
    HAS_NUMBA = False


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


def kernel(fallback):
    """Decorator: compile ``fn`` with numba when available, else use ``fallback``.

    The decorated object keeps both implementations reachable as ``.jit`` and
    ``.py`` so benchmarks and equivalence tests can call each directly.
    """

    def wrap(fn):
        jitted = _njit(cache=True, nogil=True)(fn) if HAS_NUMBA else None
        chosen = jitted if jitted is not None else fallback
        chosen_wrapper = _Dispatch(chosen, jitted, fallback)
        return chosen_wrapper

    return wrap


class _Dispatch:
    __slots__ = ("_fn", "jit", "py")

    def __init__(self, fn, jit, py):
        self._fn = fn
        self.jit = jit
        self.py = py

    def __call__(self, *args):
        return self._fn(*args)
