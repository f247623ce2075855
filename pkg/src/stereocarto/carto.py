"""Interchannel cue estimation, temporal laws, histograms and source candidates.

Each band of a stereo subband analysis is cut into short windows over which
the scene is assumed static. Per window, the lag of the normalised
cross-correlation peak gives the interchannel delay and the RMS ratio on the
lag-aligned overlap gives the level difference. Histograms of these laws,
per band and summed over bands, expose the cues of static sources.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import maximum_filter

from . import kernels
from .geometry import InterchannelParams, LocateSearch, locate_source

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorConfig:
    max_lag_s: float = 1.0e-3
    min_rms_dbfs: float = -60.0
    min_correlation: float = 0.5
    # >1 evaluates the correlation on a lag grid this many times finer (sinc
    # interpolation of the integer-lag values) before the argmax and the
    # parabolic fit; needed for bands close to Nyquist
    upsample: int = 4


@dataclass(frozen=True)
class LawConfig:
    window_s: float = 0.050
    hop_s: float = 0.050
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)


@dataclass(frozen=True)
class HistogramConfig:
    """Uniform bins centred on integer multiples of the bin width."""

    delay_bin_s: float = 10e-6
    delay_range_s: float = 1.5e-3
    de_bin_db: float = 0.25
    de_range_db: float = 24.0

    def __post_init__(self):
        if not (self.delay_bin_s > 0 and self.de_bin_db > 0):
            raise ValueError("bin widths must be > 0")

    def axis_bins(self, axis):
        """``(bin_width, half_count)`` for ``'delay'`` or ``'attenuation'``."""
        if axis == "delay":
            w, rng = self.delay_bin_s, self.delay_range_s
        elif axis == "attenuation":
            w, rng = self.de_bin_db, self.de_range_db
        else:
            raise ValueError(f"unknown axis {axis!r}")
        return w, int(round(rng / w))


@dataclass(frozen=True)
class PeakConfig:
    min_rel_height: float = 0.1
    min_separation_bins: int = 3


@dataclass(frozen=True)
class FrameEstimate:
    frame_index: int
    time: float
    delta_t: float
    delta_e: float
    peak_correlation: float
    valid: bool


_INTERP_HALF_WIDTH = 16


@lru_cache(maxsize=32)
def _lag_interpolator(max_lag, reach, up):
    """Matrix mapping integer-lag values on ``[-max_lag-reach, max_lag+reach]``
    to a grid of step ``1/up`` on ``[-max_lag, max_lag]``."""
    fine = np.arange(-max_lag * up, max_lag * up + 1) / up
    coarse = np.arange(-max_lag - reach, max_lag + reach + 1)
    t = fine[:, None] - coarse[None, :]
    hw = max(reach, 1)
    w = 0.42 + 0.5 * np.cos(np.pi * t / hw) + 0.08 * np.cos(2 * np.pi * t / hw)
    mat = np.where(np.abs(t) < hw, np.sinc(t) * w, 0.0)
    return mat / mat.sum(axis=1, keepdims=True)


def _max_lag_samples(cfg, sample_rate):
    return int(round(cfg.max_lag_s * sample_rate))


def estimate_frames(left, right, sample_rate, cfg=EstimatorConfig(), backend=None):
    """Vectorised :func:`estimate_frame` over rows of ``(n_frames, n)`` arrays.

    Returns ``(delta_t, delta_e, corr, valid)`` arrays.
    """
    left = np.atleast_2d(np.asarray(left, dtype=float))
    right = np.atleast_2d(np.asarray(right, dtype=float))
    if left.shape != right.shape:
        raise ValueError(f"window shapes differ: {left.shape} vs {right.shape}")
    n_frames, n = left.shape
    m = _max_lag_samples(cfg, sample_rate)
    if n < 2 * m or n < 3:
        raise ValueError(f"window of {n} samples shorter than 2 * max_lag ({2 * m})")

    up = int(cfg.upsample)
    if up < 1:
        raise ValueError("upsample must be >= 1")
    if up == 1:
        cc = kernels.frame_xcorr(left, right, m, backend=backend)
    else:
        reach = min(_INTERP_HALF_WIDTH, n - 1 - m)
        cc_ext = kernels.frame_xcorr(left, right, m + reach, backend=backend)
        cc = cc_ext @ _lag_interpolator(m, reach, up).T
    rows = np.arange(n_frames)
    top = cc.shape[1] - 1
    j = np.argmax(cc, axis=1)
    corr = cc[rows, j]

    interior = (j > 0) & (j < top)
    jm = np.clip(j - 1, 0, top)
    jp = np.clip(j + 1, 0, top)
    y0, y1, y2 = cc[rows, jm], corr, cc[rows, jp]
    den = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(interior & (den < 0), 0.5 * (y0 - y2) / den, 0.0)
    off = np.clip(off, -0.5, 0.5)
    lag = (j - m * up + off) / up
    delta_t = lag / sample_rate
    lag_int = np.rint(lag).astype(np.int64)
    corr = np.minimum(corr, 1.0)

    # level difference on the integer-lag overlap
    zeros = np.zeros((n_frames, 1))
    cl = np.concatenate([zeros, np.cumsum(left * left, axis=1)], axis=1)
    cr = np.concatenate([zeros, np.cumsum(right * right, axis=1)], axis=1)
    a = np.abs(lag_int)
    pos = lag_int >= 0
    el = np.where(pos, cl[rows, n - a], cl[rows, n] - cl[rows, a])
    er = np.where(pos, cr[rows, n] - cr[rows, a], cr[rows, n - a])
    with np.errstate(divide="ignore", invalid="ignore"):
        delta_e = np.where((el > 0) & (er > 0), 10 * np.log10(el / er), np.nan)
        rms_l = 10 * np.log10(cl[:, n] / n)
        rms_r = 10 * np.log10(cr[:, n] / n)

    valid = (
        (rms_l >= cfg.min_rms_dbfs)
        & (rms_r >= cfg.min_rms_dbfs)
        & (corr >= cfg.min_correlation)
        & interior
        & np.isfinite(delta_e)
    )
    return delta_t, delta_e, corr, valid


def estimate_frame(left, right, sample_rate, cfg=EstimatorConfig(), backend=None):
    """Interchannel delay and level difference of one window pair.

    ``delta_t`` is positive when the left channel leads; it is the
    correlation-peak lag refined by a three-point parabolic fit. Windows whose
    peak sits on the edge of the lag range are marked invalid.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if left.ndim != 1 or left.shape != right.shape:
        raise ValueError("left and right must be equal-length 1-D windows")
    dt, de, c, v = estimate_frames(left[None], right[None], sample_rate, cfg, backend)
    return FrameEstimate(0, len(left) / (2 * sample_rate), float(dt[0]), float(de[0]), float(c[0]), bool(v[0]))


@dataclass
class TemporalLaw:
    """Per-window cue estimates of one band (``band=None`` for broadband)."""

    band: int | None
    window_s: float
    hop_s: float
    time: np.ndarray
    delta_t: np.ndarray
    delta_e: np.ndarray
    corr: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return len(self.time)

    @property
    def frames(self):
        return [
            FrameEstimate(i, float(t), float(dt), float(de), float(c), bool(v))
            for i, (t, dt, de, c, v) in enumerate(
                zip(self.time, self.delta_t, self.delta_e, self.corr, self.valid)
            )
        ]

    def swapped(self):
        return TemporalLaw(
            self.band, self.window_s, self.hop_s, self.time, -self.delta_t, -self.delta_e, self.corr, self.valid
        )


def stereo_law(left, right, sample_rate, cfg=LawConfig(), band=None, backend=None):
    """Temporal law of one two-channel signal; trailing partial window dropped."""
    win = int(round(cfg.window_s * sample_rate))
    hop = int(round(cfg.hop_s * sample_rate))
    if win < 1 or hop < 1:
        raise ValueError("window and hop must span at least one sample")
    n = len(left)
    if n < win:
        raise ValueError(f"signal ({n} samples) shorter than one window ({win})")
    lw = sliding_window_view(np.asarray(left, dtype=float), win)[::hop]
    rw = sliding_window_view(np.asarray(right, dtype=float), win)[::hop]
    dt, de, c, v = estimate_frames(lw, rw, sample_rate, cfg.estimator, backend)
    t = (np.arange(len(dt)) * hop + win / 2) / sample_rate
    return TemporalLaw(band, cfg.window_s, cfg.hop_s, t, dt, de, c, v)


def temporal_laws(sub, cfg=LawConfig(), backend=None):
    """One :class:`TemporalLaw` per band of a compensated subband analysis."""
    if not sub.compensated:
        log.warning("subbands carry the raw filter delay; law times are shifted by %d samples", sub.group_delay)
    return [
        stereo_law(sub.data[k, 0], sub.data[k, 1], sub.sample_rate, cfg, band=b.index, backend=backend)
        for k, b in enumerate(sub.bands)
    ]


def _valid_runs(valid):
    """``(start, stop)`` index pairs of consecutive valid frames."""
    v = np.concatenate([[False], np.asarray(valid, dtype=bool), [False]])
    d = np.diff(v.astype(np.int8))
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def smoothing_length(hop_s, cutoff_hz):
    """Odd moving-average length whose -3 dB point is near ``cutoff_hz``."""
    frame_rate = 1.0 / hop_s
    m = max(1, int(round(0.443 * frame_rate / cutoff_hz)))
    return m if m % 2 else m + 1


def _centered_mean(x, half):
    n = len(x)
    c = np.concatenate([[0.0], np.cumsum(x)])
    i = np.arange(n)
    lo = np.maximum(0, i - half)
    hi = np.minimum(n, i + half + 1)
    return (c[hi] - c[lo]) / (hi - lo)


def smooth_law(law, cutoff_hz=2.0):
    """Zero-phase moving average applied within each run of valid frames.

    Invalid frames (muted source, gated windows) stay invalid and untouched;
    nothing is filtered across a gap. Near run edges the window shrinks to
    the frames available.
    """
    half = smoothing_length(law.hop_s, cutoff_hz) // 2
    dt = law.delta_t.copy()
    de = law.delta_e.copy()
    for a, b in _valid_runs(law.valid):
        dt[a:b] = _centered_mean(law.delta_t[a:b], half)
        de[a:b] = _centered_mean(law.delta_e[a:b], half)
    return TemporalLaw(law.band, law.window_s, law.hop_s, law.time.copy(), dt, de, law.corr.copy(), law.valid.copy())


@dataclass
class Histogram:
    """Counts of valid frames; ``edges`` is one array (1-D) or a pair (joint).

    ``overflow`` counts valid frames that fell outside the range; they are
    not added to any bin, so ``counts.sum() + overflow`` is the number of
    valid frames seen.
    """

    axis: str  # "delay", "attenuation" or "joint"
    edges: np.ndarray | tuple
    counts: np.ndarray
    band: int | str | None
    overflow: int = 0

    @property
    def centers(self):
        if self.axis == "joint":
            return tuple(0.5 * (e[1:] + e[:-1]) for e in self.edges)
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def bin_widths(self):
        if self.axis == "joint":
            return tuple(float(e[1] - e[0]) for e in self.edges)
        return float(self.edges[1] - self.edges[0])

    def same_binning(self, other):
        if self.axis != other.axis:
            return False
        if self.axis == "joint":
            return all(np.array_equal(a, b) for a, b in zip(self.edges, other.edges))
        return np.array_equal(self.edges, other.edges)


def _edges(width, half):
    return (np.arange(-half, half + 2) - 0.5) * width


def _bin_index(values, width, half):
    idx = np.floor(np.asarray(values) / width + 0.5).astype(np.int64) + half
    return idx, (idx >= 0) & (idx <= 2 * half)


def _law_values(law, axis):
    vals = law.delta_t if axis == "delay" else law.delta_e
    ok = law.valid & np.isfinite(vals)
    return vals[ok]


def histogram_1d(law, axis, cfg=HistogramConfig()):
    """Histogram of one law's valid ``delay`` (s) or ``attenuation`` (dB) values."""
    width, half = cfg.axis_bins(axis)
    vals = _law_values(law, axis)
    idx, inside = _bin_index(vals, width, half)
    counts = np.bincount(idx[inside], minlength=2 * half + 1)
    return Histogram(axis, _edges(width, half), counts, law.band, int((~inside).sum()))


def band_histograms(laws, axis, cfg=HistogramConfig()):
    return [histogram_1d(law, axis, cfg) for law in laws]


def global_histogram(per_band):
    """Bin-wise sum of band histograms sharing one binning."""
    per_band = list(per_band)
    if not per_band:
        raise ValueError("no histograms to sum")
    first = per_band[0]
    for h in per_band[1:]:
        if not first.same_binning(h):
            raise ValueError("histograms have different binning")
    counts = np.sum([h.counts for h in per_band], axis=0)
    return Histogram(first.axis, first.edges, counts, "global", int(sum(h.overflow for h in per_band)))


def _joint_bins(law, cfg):
    wt, ht = cfg.axis_bins("delay")
    we, he = cfg.axis_bins("attenuation")
    ok = law.valid & np.isfinite(law.delta_t) & np.isfinite(law.delta_e)
    dt, de = law.delta_t[ok], law.delta_e[ok]
    it, in_t = _bin_index(dt, wt, ht)
    ie, in_e = _bin_index(de, we, he)
    inside = in_t & in_e
    return dt[inside], de[inside], it[inside], ie[inside], int((~inside).sum())


def joint_histogram(law, cfg=HistogramConfig()):
    """2-D (delay x attenuation) histogram of one law's valid frames.

    A frame outside the range on either axis counts as overflow.
    """
    wt, ht = cfg.axis_bins("delay")
    we, he = cfg.axis_bins("attenuation")
    _, _, it, ie, overflow = _joint_bins(law, cfg)
    counts = np.zeros((2 * ht + 1, 2 * he + 1), dtype=np.int64)
    np.add.at(counts, (it, ie), 1)
    return Histogram("joint", (_edges(wt, ht), _edges(we, he)), counts, law.band, overflow)


def _peak_indices(counts, cfg):
    counts = np.asarray(counts)
    top = counts.max(initial=0)
    if top <= 0:
        return []
    local = maximum_filter(counts, size=3, mode="constant", cval=-1) == counts
    cand = np.argwhere(local & (counts > 0) & (counts >= cfg.min_rel_height * top))
    order = sorted(range(len(cand)), key=lambda i: (-counts[tuple(cand[i])], tuple(cand[i])))
    kept = []
    for i in order:
        p = cand[i]
        if all(np.abs(p - q).max() >= cfg.min_separation_bins for q in kept):
            kept.append(p)
    return [tuple(int(v) for v in p) for p in kept]


def detect_peaks(hist, cfg=PeakConfig()):
    """Local maxima above ``min_rel_height * max``, at least
    ``min_separation_bins`` apart, tallest first.

    Returns ``(bin_center, count)`` pairs; for a joint histogram the centre is
    a ``(delay, attenuation)`` tuple.
    """
    out = []
    centers = hist.centers
    for p in _peak_indices(hist.counts, cfg):
        if hist.axis == "joint":
            c = (float(centers[0][p[0]]), float(centers[1][p[1]]))
        else:
            c = float(centers[p[0]])
        out.append((c, int(hist.counts[p])))
    return out


@dataclass
class SourceCandidate:
    delta_t: float
    delta_e: float
    support: int
    bands: frozenset
    location: tuple | None = None  # (distance_m, azimuth_deg, residual)
    distance_ambiguous: bool = False


def _band_peaks(law, hist_cfg, peak_cfg):
    """Joint-histogram peaks of one law as ``(delta_t, delta_e, mass)``.

    Mass is the number of frames in the 3x3 bin neighbourhood of the peak and
    the cue values are those frames' means.
    """
    h = joint_histogram(law, hist_cfg)
    dt, de, it, ie, _ = _joint_bins(law, hist_cfg)
    out = []
    for i, j in _peak_indices(h.counts, peak_cfg):
        near = (np.abs(it - i) <= 1) & (np.abs(ie - j) <= 1)
        out.append((float(dt[near].mean()), float(de[near].mean()), int(near.sum())))
    return out


def extract_candidates(
    laws,
    mic=None,
    hist_cfg=HistogramConfig(),
    peak_cfg=PeakConfig(),
    locate=False,
    search=LocateSearch(),
):
    """Associate delay and level peaks into source candidates.

    Peaks of every band's joint histogram are merged across bands when they
    agree within one bin on both axes. Candidates are ranked by support (the
    number of frames around the merged peaks). With ``locate`` and a ``mic``,
    each candidate gets a ``(distance, azimuth, residual)`` estimate.
    """
    wt, _ = hist_cfg.axis_bins("delay")
    we, _ = hist_cfg.axis_bins("attenuation")
    peaks = []
    for law in laws:
        for t, e, mass in _band_peaks(law, hist_cfg, peak_cfg):
            peaks.append((mass, t, e, law.band))
    peaks.sort(key=lambda p: (-p[0], p[1], p[2]))

    cands = []
    for mass, t, e, band in peaks:
        for c in cands:
            if abs(c.delta_t - t) <= wt * (1 + 1e-9) and abs(c.delta_e - e) <= we * (1 + 1e-9):
                s = c.support + mass
                c.delta_t = (c.delta_t * c.support + t * mass) / s
                c.delta_e = (c.delta_e * c.support + e * mass) / s
                c.support = s
                c.bands = c.bands | {band}
                break
        else:
            cands.append(SourceCandidate(t, e, mass, frozenset({band})))
    cands.sort(key=lambda c: (-c.support, c.delta_t, c.delta_e))

    if locate:
        if mic is None:
            raise ValueError("locate=True needs a MicPair")
        for c in cands:
            res = locate_source(InterchannelParams(c.delta_t, c.delta_e), mic, search)
            c.location = (res.position.distance, res.position.azimuth, res.residual)
            c.distance_ambiguous = res.distance_ambiguous
    return cands


@dataclass
class Cartography:
    """Everything the full pipeline produces for one recording."""

    laws: list
    delay_hists: list
    attenuation_hists: list
    global_delay: Histogram
    global_attenuation: Histogram
    candidates: list


def cartography(sub, law_cfg=LawConfig(), hist_cfg=HistogramConfig(), peak_cfg=PeakConfig(),
                mic=None, locate=False, backend=None):
    """Laws, per-band and global histograms, and candidates for a subband analysis."""
    laws = temporal_laws(sub, law_cfg, backend)
    dh = band_histograms(laws, "delay", hist_cfg)
    ah = band_histograms(laws, "attenuation", hist_cfg)
    cands = extract_candidates(laws, mic, hist_cfg, peak_cfg, locate=locate)
    return Cartography(laws, dh, ah, global_histogram(dh), global_histogram(ah), cands)
