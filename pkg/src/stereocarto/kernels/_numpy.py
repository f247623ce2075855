"""Vectorised numpy versions of the loop kernels."""

import numpy as np

_CHUNK = 1 << 15


def _phi(t, half_width):
    w = 0.42 + 0.5 * np.cos(np.pi * t / half_width) + 0.08 * np.cos(2 * np.pi * t / half_width)
    out = np.sinc(t) * w
    out[np.abs(t) >= half_width] = 0.0
    return out


def varying_delay(x, delay, gain, half_width):
    x = np.asarray(x, dtype=float)
    n_in = x.shape[0]
    n_out = delay.shape[0]
    # zero guard on both sides so every gather index is valid
    padded = np.concatenate([np.zeros(half_width + 1), x, np.zeros(half_width + 1)])
    offs = np.arange(-half_width + 1, half_width + 1)
    y = np.zeros(n_out)
    for start in range(0, n_out, _CHUNK):
        stop = min(start + _CHUNK, n_out)
        pos = np.arange(start, stop) - delay[start:stop]
        base = np.floor(pos)
        frac = pos - base
        ib = base.astype(np.int64)
        taps = _phi(frac[:, None] - offs[None, :], half_width)
        taps /= taps.sum(axis=1, keepdims=True)
        exact = frac == 0.0
        if exact.any():
            taps[exact] = 0.0
            taps[exact, half_width - 1] = 1.0
        idx = ib[:, None] + offs[None, :]
        idx = np.clip(idx, -half_width - 1, n_in + half_width) + half_width + 1
        y[start:stop] = gain[start:stop] * np.einsum("ij,ij->i", taps, padded[idx])
    return y


def frame_xcorr(left, right, max_lag):
    n_frames, n = left.shape
    nfft = 1 << int(np.ceil(np.log2(n + max_lag + 1)))
    lf = np.fft.rfft(left, nfft, axis=1)
    rf = np.fft.rfft(right, nfft, axis=1)
    cc = np.fft.irfft(np.conj(lf) * rf, nfft, axis=1)
    lags = np.arange(-max_lag, max_lag + 1)
    num = cc[:, lags % nfft]

    zeros = np.zeros((n_frames, 1))
    cl = np.concatenate([zeros, np.cumsum(left * left, axis=1)], axis=1)
    cr = np.concatenate([zeros, np.cumsum(right * right, axis=1)], axis=1)
    pos = lags >= 0
    a = np.abs(lags)
    el = np.where(pos, cl[:, n - a], cl[:, [n]] - cl[:, a])
    er = np.where(pos, cr[:, [n]] - cr[:, a], cr[:, n - a])
    den = np.sqrt(np.maximum(el * er, 0.0))
    out = np.zeros_like(num)
    ok = den > 1e-300
    out[ok] = num[ok] / den[ok]
    return out
