"""Hot inner loops, dispatched to numba or numpy.

The backend is fixed at import time by :data:`stereocarto._accel.USE_NUMBA`;
:func:`get_backend` gives explicit access to either one for tests and
benchmarks.

``varying_delay(x, delay, gain, half_width)``
    ``y[n] = gain[n] * sum_m x[m] * phi(n - delay[n] - m)`` where ``phi`` is a
    Blackman-windowed sinc of half-width ``half_width`` whose taps are
    renormalised to unit DC gain. ``delay`` is in samples.

``frame_xcorr(left, right, max_lag)``
    For each row pair, the cross-correlation ``sum_n left[n] right[n + lag]``
    over the overlap, divided by the overlap energies of both rows, for
    ``lag`` in ``[-max_lag, max_lag]``. Shape ``(n_frames, 2 * max_lag + 1)``.
"""

from types import SimpleNamespace

import numpy as np

from .._accel import HAVE_NUMBA, USE_NUMBA
from . import _numba, _numpy

BACKEND = "numba" if USE_NUMBA else "numpy"


def get_backend(name=None):
    """Return a namespace with ``varying_delay`` and ``frame_xcorr``."""
    name = name or BACKEND
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        mod = _numba
    elif name == "numpy":
        mod = _numpy
    else:
        raise ValueError(f"unknown backend {name!r}")
    return SimpleNamespace(name=name, varying_delay=mod.varying_delay, frame_xcorr=mod.frame_xcorr)


def varying_delay(x, delay, gain, half_width, backend=None):
    be = get_backend(backend)
    return be.varying_delay(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(delay, dtype=np.float64),
        np.ascontiguousarray(gain, dtype=np.float64),
        int(half_width),
    )


def frame_xcorr(left, right, max_lag, backend=None):
    be = get_backend(backend)
    return be.frame_xcorr(
        np.ascontiguousarray(left, dtype=np.float64),
        np.ascontiguousarray(right, dtype=np.float64),
        int(max_lag),
    )
