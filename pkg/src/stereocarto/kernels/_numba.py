"""Loop kernels compiled with numba (plain Python if numba is absent)."""

import math

import numpy as np

from .._accel import njit


@njit
def varying_delay(x, delay, gain, half_width):
    n_in = x.shape[0]
    n_out = delay.shape[0]
    y = np.zeros(n_out)
    hw = half_width
    n_taps = 2 * hw
    # Blackman-windowed sinc at t = frac - j. Only frac changes per sample, so
    # sin(pi t) = +-sin(pi frac) and the window cosines come from angle addition
    # against per-j tables: no trig inside the tap loop.
    c1 = np.empty(n_taps)
    s1 = np.empty(n_taps)
    c2 = np.empty(n_taps)
    s2 = np.empty(n_taps)
    sgn = np.empty(n_taps)
    for k in range(n_taps):
        j = k - hw + 1
        c1[k] = math.cos(math.pi * j / hw)
        s1[k] = math.sin(math.pi * j / hw)
        c2[k] = math.cos(2.0 * math.pi * j / hw)
        s2[k] = math.sin(2.0 * math.pi * j / hw)
        sgn[k] = 1.0 if j % 2 == 0 else -1.0
    taps = np.empty(n_taps)
    for n in range(n_out):
        pos = n - delay[n]
        base = math.floor(pos)
        frac = pos - base
        ib = int(base)
        if frac == 0.0:
            if 0 <= ib < n_in:
                y[n] = gain[n] * x[ib]
            continue
        if ib + hw < 0 or ib - hw + 1 >= n_in:
            continue
        sp = math.sin(math.pi * frac)
        a = math.pi * frac / hw
        ca, sa = math.cos(a), math.sin(a)
        ca2, sa2 = math.cos(2.0 * a), math.sin(2.0 * a)
        norm = 0.0
        for k in range(n_taps):
            t = frac - (k - hw + 1)
            w = 0.42 + 0.5 * (ca * c1[k] + sa * s1[k]) + 0.08 * (ca2 * c2[k] + sa2 * s2[k])
            v = sgn[k] * sp / (math.pi * t) * w
            taps[k] = v
            norm += v
        acc = 0.0
        lo = max(0, hw - 1 - ib)
        hi = min(n_taps, n_in - ib + hw - 1)
        for k in range(lo, hi):
            acc += taps[k] * x[ib + k - hw + 1]
        y[n] = gain[n] * acc / norm
    return y


@njit
def frame_xcorr(left, right, max_lag):
    n_frames, n = left.shape
    n_lags = 2 * max_lag + 1
    out = np.zeros((n_frames, n_lags))
    cl = np.zeros(n + 1)
    cr = np.zeros(n + 1)
    for f in range(n_frames):
        for i in range(n):
            cl[i + 1] = cl[i] + left[f, i] * left[f, i]
            cr[i + 1] = cr[i] + right[f, i] * right[f, i]
        for j in range(n_lags):
            lag = j - max_lag
            s = 0.0
            if lag >= 0:
                for i in range(n - lag):
                    s += left[f, i] * right[f, i + lag]
                el = cl[n - lag]
                er = cr[n] - cr[lag]
            else:
                for i in range(-lag, n):
                    s += left[f, i] * right[f, i + lag]
                el = cl[n] - cl[-lag]
                er = cr[n + lag]
            den = math.sqrt(el * er)
            if den > 1e-300:
                out[f, j] = s / den
    return out
