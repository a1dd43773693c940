"""Backend selection for the numeric kernels.

The hot loops in :mod:`multileg._kernels` are written in plain
loop-over-scalars style so that the exact same source runs either

* compiled with ``numba.njit`` (default, fast), or
* as ordinary CPython/numpy code (slow but dependency-free), selected by
  setting the environment variable ``MULTILEG_NUMBA=0`` before import.

If numba is not importable the fallback is used automatically.
"""
import os


def _flag_enabled() -> bool:
    val = os.environ.get("MULTILEG_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _flag_enabled():
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def maybe_njit(func):
    """Apply ``numba.njit(cache=True)`` when the numba backend is active.

    With the numpy fallback selected this is the identity decorator, so the
    kernel module keeps working (slowly) without compilation.
    """
    if NUMBA_ENABLED:
        import numba

        return numba.njit(cache=True)(func)
    return func
