"""Linear-phase FIR analysis bank without downsampling.

Each band is the difference of two Blackman-windowed-sinc lowpass filters
sharing one length, so the bands telescope: their sum is a unit impulse at
the common group delay and summing all band signals gives the input back.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._accel import thread_cap
from .buffers import StereoBuffer

log = logging.getLogger(__name__)

DEFAULT_TAPS = 8191
LEIPP_EDGES = (0.0, 50.0, 200.0, 400.0, 800.0, 1200.0, 1800.0, 3000.0, 6000.0, 15000.0)


@dataclass(frozen=True)
class BandSpec:
    index: int
    low_hz: float
    high_hz: float

    @property
    def label(self):
        return f"{self.low_hz:g}-{self.high_hz:g}"


def leipp_bands(sample_rate):
    """The 10-band extended Leipp mapping, last band closed at Nyquist."""
    nyq = sample_rate / 2.0
    if nyq <= LEIPP_EDGES[-1]:
        raise ValueError(f"sample rate {sample_rate} too low for the Leipp mapping (needs > 30 kHz)")
    edges = LEIPP_EDGES + (nyq,)
    return [BandSpec(i + 1, edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def design_lowpass(cutoff_hz, n_taps, sample_rate):
    """Type-I Blackman windowed-sinc lowpass with unit DC gain.

    ``cutoff_hz`` is the -6 dB point. ``cutoff_hz <= 0`` gives all zeros and
    ``cutoff_hz >= Nyquist`` gives a unit impulse at the centre tap; these are
    the telescoping end points used by :func:`build_bank`.
    """
    if n_taps < 1 or n_taps % 2 == 0:
        raise ValueError(f"n_taps must be odd and positive, got {n_taps}")
    nyq = sample_rate / 2.0
    if cutoff_hz <= 0:
        return np.zeros(n_taps)
    if cutoff_hz >= nyq:
        h = np.zeros(n_taps)
        h[n_taps // 2] = 1.0
        return h
    fc = cutoff_hz / sample_rate
    m = np.arange(n_taps) - (n_taps - 1) / 2
    h = 2 * fc * np.sinc(2 * fc * m) * np.blackman(n_taps)
    h = 0.5 * (h + h[::-1])  # exact symmetry
    return h / h.sum()


@dataclass
class FilterBank:
    bands: list[BandSpec]
    taps: np.ndarray  # (n_bands, n_taps)
    sample_rate: float

    @property
    def n_taps(self):
        return self.taps.shape[1]

    @property
    def group_delay(self):
        return (self.n_taps - 1) // 2

    def __len__(self):
        return len(self.bands)


def _check_mapping(mapping, sample_rate):
    if not mapping:
        raise ValueError("empty band mapping")
    nyq = sample_rate / 2.0
    if mapping[0].low_hz != 0:
        raise ValueError("first band must start at 0 Hz")
    if not np.isclose(mapping[-1].high_hz, nyq):
        raise ValueError(f"last band must end at Nyquist ({nyq} Hz)")
    for a, b in zip(mapping, mapping[1:]):
        if a.high_hz != b.low_hz:
            raise ValueError(f"bands {a.index} and {b.index} are not contiguous")
    for b in mapping:
        if not b.high_hz > b.low_hz:
            raise ValueError(f"band {b.index} has non-positive width")


def build_bank(mapping=None, n_taps=DEFAULT_TAPS, sample_rate=44100.0):
    """Band ``k`` taps = lowpass(high_k) - lowpass(low_k)."""
    if mapping is None:
        mapping = leipp_bands(sample_rate)
    _check_mapping(mapping, sample_rate)
    edges = [mapping[0].low_hz] + [b.high_hz for b in mapping]
    lps = [design_lowpass(f, n_taps, sample_rate) for f in edges]
    taps = np.stack([lps[i + 1] - lps[i] for i in range(len(mapping))])
    return FilterBank(list(mapping), taps, sample_rate)


def frequency_response(taps, freqs_hz, sample_rate):
    """Complex DTFT of tap vectors at the given frequencies (linear-phase
    delay removed, so a symmetric filter gives a real response)."""
    taps = np.atleast_2d(taps)
    n = taps.shape[1]
    m = np.arange(n) - (n - 1) / 2
    w = 2 * np.pi * np.asarray(freqs_hz, dtype=float) / sample_rate
    return taps @ np.exp(-1j * np.outer(m, w))


def block_size(n_taps):
    """Smallest power of two >= 4 * n_taps."""
    return 1 << int(np.ceil(np.log2(4 * n_taps)))


def ola_convolve(x, taps, nfft=None):
    """Full linear convolution of ``x`` with every row of ``taps`` by
    overlap-add; returns ``(n_rows, len(x) + n_taps - 1)``."""
    x = np.asarray(x, dtype=float)
    taps = np.atleast_2d(taps)
    n_taps = taps.shape[1]
    nfft = nfft or block_size(n_taps)
    hop = nfft - n_taps + 1
    spectra = np.fft.rfft(taps, nfft, axis=1)
    out = np.zeros((taps.shape[0], len(x) + n_taps - 1))
    for start in range(0, len(x), hop):
        blk = x[start : start + hop]
        y = np.fft.irfft(np.fft.rfft(blk, nfft)[None, :] * spectra, nfft, axis=1)
        stop = min(start + len(blk) + n_taps - 1, out.shape[1])
        out[:, start:stop] += y[:, : stop - start]
    return out


@dataclass
class SubbandStereo:
    """Band signals, ``data`` shaped ``(n_bands, 2, n_samples)``.

    When ``compensated`` the filter delay has been trimmed and every band lies
    on the input timeline. Otherwise each band is the full convolution output,
    ``group_delay`` samples late.
    """

    bands: list[BandSpec]
    data: np.ndarray
    sample_rate: float
    group_delay: int
    compensated: bool = True

    def __len__(self):
        return self.data.shape[2]

    def band(self, index):
        """StereoBuffer for 1-based band ``index``."""
        k = self._pos(index)
        return StereoBuffer(self.data[k, 0], self.data[k, 1], self.sample_rate)

    def _pos(self, index):
        for k, b in enumerate(self.bands):
            if b.index == index:
                return k
        raise KeyError(f"no band {index}")


def analyze(buf, bank, compensate=True):
    """Split a stereo buffer into the bank's subbands."""
    if buf.sample_rate != bank.sample_rate:
        raise ValueError(f"sample rate mismatch: signal {buf.sample_rate}, bank {bank.sample_rate}")
    n = len(buf)
    chans = (buf.left, buf.right)
    workers = min(thread_cap(), 2)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            full = list(ex.map(lambda ch: ola_convolve(ch, bank.taps), chans))
    else:
        full = [ola_convolve(ch, bank.taps) for ch in chans]
    data = np.stack(full, axis=1)
    gd = bank.group_delay
    if compensate:
        data = data[:, :, gd : gd + n]
    return SubbandStereo(list(bank.bands), np.ascontiguousarray(data), buf.sample_rate, gd, compensate)


def resynthesize(sub, selection=None):
    """Sum of the selected bands (1-based indices; ``None`` = all)."""
    if selection is None:
        selection = [b.index for b in sub.bands]
    selection = sorted(set(selection))
    if not selection:
        raise ValueError("empty band selection")
    idx = [sub._pos(i) for i in selection]
    total = sub.data[idx].sum(axis=0)
    return StereoBuffer(total[0], total[1], sub.sample_rate)
