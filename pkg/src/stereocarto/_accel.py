"""Backend selection for the hot kernels.

Numba is used when it is importable and ``STEREOCARTO_NO_NUMBA`` is unset
(or ``0``). Setting the variable to ``1`` forces the pure-numpy path, which
is also what you get when numba is missing.
"""

import os

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("STEREOCARTO_NO_NUMBA", "").lower() in _FALSY


def thread_cap():
    """Worker count from ``STEREOCARTO_THREADS`` (default: all CPUs)."""
    raw = os.environ.get("STEREOCARTO_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)

