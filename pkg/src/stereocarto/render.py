"""Free-field stereo rendering of point-source scenes.

Each capsule receives the source clip delayed by its path length over the
speed of sound and scaled by directivity over distance. Moving sources are
rendered with a time-varying fractional delay whose parameters are updated at
a control rate and linearly interpolated per sample, so Doppler shift is only
approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .buffers import StereoBuffer
from .geometry import capsule_response, trajectory_state_at, validate_scene

NORMALIZE_PEAK_DBFS = -1.0


@dataclass(frozen=True)
class RenderConfig:
    sample_rate: float = 44100.0
    control_rate: float = 1000.0
    interpolator_half_width: int = 16
    normalize: bool = True

    def __post_init__(self):
        if not 0 < self.control_rate <= self.sample_rate:
            raise ValueError("control_rate must be in (0, sample_rate]")
        if self.interpolator_half_width < 1:
            raise ValueError("interpolator_half_width must be >= 1")


def fractional_taps(frac, half_width):
    """Windowed-sinc taps ``phi(k - frac)`` for ``k = -half_width+1 .. half_width``,
    renormalised to unit sum."""
    k = np.arange(-half_width + 1, half_width + 1)
    t = k - frac
    w = 0.42 + 0.5 * np.cos(np.pi * t / half_width) + 0.08 * np.cos(2 * np.pi * t / half_width)
    h = np.sinc(t) * w
    return h / h.sum()


def apply_fractional_delay(signal, delay, cfg=RenderConfig()):
    """Delay a mono signal by ``delay`` seconds.

    The output keeps the full tail: its length is
    ``len(signal) + ceil(delay * sr) + half_width``.
    """
    if delay < 0:
        raise ValueError("delay must be >= 0; delay the other channel instead")
    x = np.asarray(signal, dtype=float)
    hw = cfg.interpolator_half_width
    d = delay * cfg.sample_rate
    n0 = math.floor(d)
    frac = d - n0
    out = np.zeros(len(x) + math.ceil(d) + hw)
    if frac == 0.0:
        out[n0 : n0 + len(x)] = x
        return out
    conv = np.convolve(x, fractional_taps(frac, hw))
    # conv[i] lands on output sample i + n0 - hw + 1
    start = n0 - hw + 1
    lo = max(0, -start)
    seg = conv[lo:]
    out[start + lo : start + lo + len(seg)] = seg[: len(out) - (start + lo)]
    return out


def _fit_clip(clip, n):
    clip = np.asarray(clip, dtype=float)
    if len(clip) >= n:
        return clip[:n]
    return np.concatenate([clip, np.zeros(n - len(clip))])


def render_source(src, mic, cfg=RenderConfig(), duration=None):
    """Render one point source to a two-channel buffer (no normalisation)."""
    sr = cfg.sample_rate
    if duration is None:
        duration = len(src.clip) / src.sample_rate
    if not duration > 0:
        raise ValueError("duration must be > 0")
    x = _fit_clip(src.clip, int(round(duration * sr)))
    hw = cfg.interpolator_half_width
    c = mic.sound_speed

    if src.trajectory.is_static:
        p = src.trajectory.position
        rl, rr, al, ar = capsule_response(p.distance, p.azimuth, mic)
        if min(float(rl), float(rr)) < 1e-9:
            raise ValueError(f"source at {p} coincides with a capsule")
        left = float(al) * src.gain * apply_fractional_delay(x, float(rl) / c, cfg)
        right = float(ar) * src.gain * apply_fractional_delay(x, float(rr) / c, cfg)
        n = max(len(left), len(right))
        return StereoBuffer(_fit_clip(left, n), _fit_clip(right, n), sr)

    def ticks_until(t_end):
        tt = np.arange(int(math.ceil(t_end * cfg.control_rate)) + 2) / cfg.control_rate
        return (tt,) + capsule_response(*trajectory_state_at(src.trajectory, tt), mic)

    t_tick, rl, rr, al, ar = ticks_until(duration)
    if min(rl.min(), rr.min()) < 1e-9:
        raise ValueError("trajectory passes through a capsule")
    # the tail carries the longest propagation delay plus the interpolator reach
    n_out = len(x) + int(math.ceil(max(rl.max(), rr.max()) / c * sr)) + hw
    t_tick, rl, rr, al, ar = ticks_until((n_out - 1) / sr)
    t = np.arange(n_out) / sr
    chans = []
    for r_i, a_i in ((rl, al), (rr, ar)):
        delay = np.interp(t, t_tick, r_i / c * sr)
        gain = np.interp(t, t_tick, a_i) * src.gain
        chans.append(kernels.varying_delay(x, delay, gain, hw))
    return StereoBuffer(chans[0], chans[1], sr)


def normalize_peak(buf, peak_dbfs=NORMALIZE_PEAK_DBFS):
    """Scale both channels by one common factor so the peak hits ``peak_dbfs``."""
    peak = max(np.abs(buf.left).max(initial=0.0), np.abs(buf.right).max(initial=0.0))
    if peak == 0:
        return buf
    return buf.scaled(10 ** (peak_dbfs / 20) / peak)


def mix_scene(scene, cfg=None):
    """Render and sum every source of a scene.

    ``cfg`` defaults to a :class:`RenderConfig` at the scene sample rate.
    """
    if cfg is None:
        cfg = RenderConfig(sample_rate=scene.sample_rate)
    if not scene.sources:
        raise ValueError("scene has no sources")
    problems = validate_scene(scene)
    if problems:
        raise ValueError("invalid scene: " + "; ".join(problems))
    if cfg.sample_rate != scene.sample_rate:
        raise ValueError("render sample rate differs from the scene sample rate")
    parts = [render_source(s, scene.mic, cfg, scene.duration) for s in scene.sources]
    n = max(len(p) for p in parts)
    left = np.zeros(n)
    right = np.zeros(n)
    for p in parts:
        left[: len(p)] += p.left
        right[: len(p)] += p.right
    out = StereoBuffer(left, right, cfg.sample_rate)
    return normalize_peak(out) if cfg.normalize else out
