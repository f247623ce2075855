"""JSON scene description -> :class:`~stereocarto.geometry.Scene`.

Example::

    {
      "sample_rate": 44100,
      "duration_s": 10.0,
      "mic": {"spacing_m": 0.17, "axis_half_angle_deg": 55,
              "directivity": "cardioid", "sound_speed_mps": 343},
      "sources": [
        {"clip": "bass.wav", "gain_db": 0,
         "trajectory": {"kind": "static", "distance_m": 1, "azimuth_deg": 45}},
        {"clip": "organ.wav",
         "trajectory": {"kind": "circle", "radius_m": 1,
                        "start_azimuth_deg": 0, "angular_speed_deg_s": 36}},
        {"clip": "voice.wav",
         "trajectory": {"kind": "waypoints", "points": [
             {"time_s": 0, "distance_m": 1, "azimuth_deg": -30},
             {"time_s": 10, "distance_m": 1, "azimuth_deg": 30}]}}
      ]
    }

Clip paths are resolved relative to the JSON file. ``mic`` is optional
(defaults to ORTF), ``duration_s`` defaults to the longest clip.
"""

from __future__ import annotations

import json
import logging
import math
from fractions import Fraction
from pathlib import Path

from scipy.signal import resample_poly

from .buffers import MonoClip
from .geometry import Directivity, MicPair, PointSource, Scene, Trajectory, validate_scene
from .wavio import WavFormatError, read_wav

log = logging.getLogger(__name__)


class SceneConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(self.diagnostics))


class _Reader:
    """Collects field-addressed diagnostics while pulling typed values."""

    def __init__(self):
        self.errors = []

    def num(self, obj, key, where, default=None, required=True):
        if key not in obj:
            if required and default is None:
                self.errors.append(f"{where}.{key}: missing")
                return math.nan
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.errors.append(f"{where}.{key}: expected a finite number, got {v!r}")
            return math.nan
        return float(v)

    def obj(self, parent, key, where, required=True):
        if key not in parent:
            if required:
                self.errors.append(f"{where}.{key}: missing")
            return None
        v = parent[key]
        if not isinstance(v, dict):
            self.errors.append(f"{where}.{key}: expected an object")
            return None
        return v


def _trajectory(r, t, where):
    kind = t.get("kind")
    if kind == "static":
        return Trajectory.static(r.num(t, "distance_m", where), r.num(t, "azimuth_deg", where))
    if kind == "circle":
        return Trajectory.circular(
            r.num(t, "radius_m", where),
            r.num(t, "start_azimuth_deg", where, default=0.0),
            r.num(t, "angular_speed_deg_s", where),
        )
    if kind == "waypoints":
        pts = t.get("points")
        if not isinstance(pts, list) or not pts:
            r.errors.append(f"{where}.points: expected a non-empty list")
            return None
        rows = []
        for i, p in enumerate(pts):
            w = f"{where}.points[{i}]"
            if not isinstance(p, dict):
                r.errors.append(f"{w}: expected an object")
                continue
            rows.append((r.num(p, "time_s", w), r.num(p, "distance_m", w), r.num(p, "azimuth_deg", w)))
        return Trajectory.through(rows)
    r.errors.append(f"{where}.kind: expected 'static', 'circle' or 'waypoints', got {kind!r}")
    return None


def _load_clip(path, sample_rate, where, errors):
    try:
        clip = read_wav(path)
    except FileNotFoundError:
        errors.append(f"{where}.clip: file not found: {path}")
        return None
    except WavFormatError as exc:
        errors.append(f"{where}.clip: {exc}")
        return None
    if not isinstance(clip, MonoClip):
        errors.append(f"{where}.clip: {path} is stereo; point sources need mono clips")
        return None
    x = clip.samples
    if clip.sample_rate != sample_rate:
        log.warning("%s: resampling %s from %g Hz to %g Hz", where, path, clip.sample_rate, sample_rate)
        ratio = Fraction(sample_rate / clip.sample_rate).limit_denominator(1000)
        x = resample_poly(x, ratio.numerator, ratio.denominator)
    return x


def scene_from_dict(doc, base_dir="."):
    """Build and validate a scene; raises :class:`SceneConfigError`."""
    r = _Reader()
    if not isinstance(doc, dict):
        raise SceneConfigError(["<root>: expected a JSON object"])
    sr = r.num(doc, "sample_rate", "<root>", default=44100.0)
    mic = MicPair()
    m = r.obj(doc, "mic", "<root>", required=False)
    if m is not None:
        directivity = m.get("directivity", "cardioid")
        if directivity not in [d.value for d in Directivity]:
            r.errors.append(f"mic.directivity: expected 'cardioid' or 'omni', got {directivity!r}")
            directivity = "cardioid"
        mic = MicPair(
            r.num(m, "spacing_m", "mic", default=0.17),
            r.num(m, "axis_half_angle_deg", "mic", default=55.0),
            directivity,
            r.num(m, "sound_speed_mps", "mic", default=343.0),
        )
    srcs_doc = doc.get("sources")
    if not isinstance(srcs_doc, list) or not srcs_doc:
        r.errors.append("<root>.sources: expected a non-empty list")
        srcs_doc = []
    sources = []
    for i, s in enumerate(srcs_doc):
        where = f"sources[{i}]"
        if not isinstance(s, dict):
            r.errors.append(f"{where}: expected an object")
            continue
        clip_path = s.get("clip")
        if not isinstance(clip_path, str):
            r.errors.append(f"{where}.clip: expected a file path")
            continue
        gain = 10 ** (r.num(s, "gain_db", where, default=0.0) / 20)
        t = r.obj(s, "trajectory", where)
        traj = _trajectory(r, t, f"{where}.trajectory") if t is not None else None
        if traj is not None:
            r.errors += traj.violations(f"{where}.trajectory")
        clip = None
        if math.isfinite(sr) and sr > 0:
            clip = _load_clip(Path(base_dir) / clip_path, sr, where, r.errors)
        if traj is None or clip is None:
            continue
        sources.append(PointSource(clip, sr, traj, gain, name=Path(clip_path).stem))
    if r.errors:
        raise SceneConfigError(r.errors)

    if "duration_s" in doc:
        dur = r.num(doc, "duration_s", "<root>")
    else:
        dur = max(len(s.clip) for s in sources) / sr
    scene = Scene(sources, dur, sr, mic)
    problems = validate_scene(scene)
    if problems:
        raise SceneConfigError(problems)
    return scene


def load_scene(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneConfigError([f"{path}: {exc.strerror}"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    return scene_from_dict(doc, base_dir=path.parent)
