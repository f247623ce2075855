"""Planar scene geometry for a two-capsule stereo couple.

Coordinates: the couple centre is the origin, ``x`` points straight ahead and
``y`` points toward the left capsule. Azimuths are in degrees, 0 ahead and
positive toward the left. Interchannel cues are signed so that positive
``delta_t`` / ``delta_e`` mean the left channel leads / is louder.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

log = logging.getLogger(__name__)


class Directivity(str, enum.Enum):
    CARDIOID = "cardioid"
    OMNI = "omni"


@dataclass(frozen=True)
class MicPair:
    """Two capsules at ``±capsule_spacing/2`` on the y axis, splayed by
    ``±axis_half_angle`` degrees (left capsule aimed left). Defaults are an
    AB ORTF couple."""

    capsule_spacing: float = 0.17
    axis_half_angle: float = 55.0
    directivity: Directivity = Directivity.CARDIOID
    sound_speed: float = 343.0

    def __post_init__(self):
        object.__setattr__(self, "directivity", Directivity(self.directivity))

    def violations(self):
        out = []
        if not self.capsule_spacing > 0:
            out.append("mic.capsule_spacing must be > 0")
        if not 0 <= self.axis_half_angle < 90:
            out.append("mic.axis_half_angle must be in [0, 90)")
        if not self.sound_speed > 0:
            out.append("mic.sound_speed must be > 0")
        return out

    @property
    def max_delay(self):
        """Largest possible ``|delta_t|`` in seconds."""
        return self.capsule_spacing / self.sound_speed


@dataclass(frozen=True)
class SourcePosition:
    distance: float
    azimuth: float

    def violations(self, where="position"):
        out = []
        if not self.distance > 0:
            out.append(f"{where}.distance must be > 0")
        if not -180 < self.azimuth <= 180:
            out.append(f"{where}.azimuth must be in (-180, 180]")
        return out


def wrap_azimuth(az):
    """Wrap degrees into (-180, 180]."""
    w = np.mod(np.asarray(az, dtype=float) + 180.0, 360.0) - 180.0
    w = np.where(w == -180.0, 180.0, w)
    return float(w) if np.ndim(w) == 0 else w


class TrajectoryKind(str, enum.Enum):
    STATIC = "static"
    CIRCLE = "circle"
    WAYPOINTS = "waypoints"


@dataclass(frozen=True)
class Circle:
    radius: float
    start_azimuth: float
    angular_speed: float  # deg/s, signed


@dataclass(frozen=True)
class Trajectory:
    kind: TrajectoryKind
    position: SourcePosition | None = None
    circle: Circle | None = None
    waypoints: tuple[tuple[float, SourcePosition], ...] = ()

    @classmethod
    def static(cls, distance, azimuth):
        return cls(TrajectoryKind.STATIC, position=SourcePosition(distance, azimuth))

    @classmethod
    def circular(cls, radius, start_azimuth, angular_speed):
        return cls(TrajectoryKind.CIRCLE, circle=Circle(radius, start_azimuth, angular_speed))

    @classmethod
    def through(cls, points):
        """Build from ``[(time_s, distance, azimuth), ...]``."""
        wps = tuple((float(t), SourcePosition(d, a)) for t, d, a in points)
        return cls(TrajectoryKind.WAYPOINTS, waypoints=wps)

    @property
    def is_static(self):
        return self.kind is TrajectoryKind.STATIC

    def violations(self, where="trajectory"):
        out = []
        if self.kind is TrajectoryKind.STATIC:
            if self.position is None:
                out.append(f"{where}: static trajectory needs exactly one position")
            else:
                out += self.position.violations(where)
        elif self.kind is TrajectoryKind.CIRCLE:
            if self.circle is None:
                out.append(f"{where}: circle parameters missing")
            else:
                if not self.circle.radius > 0:
                    out.append(f"{where}.radius must be > 0")
                if not np.isfinite(self.circle.angular_speed):
                    out.append(f"{where}.angular_speed must be finite")
        else:
            if len(self.waypoints) == 0:
                out.append(f"{where}: waypoints list is empty")
            times = [t for t, _ in self.waypoints]
            if any(b <= a for a, b in zip(times, times[1:])):
                out.append(f"{where}: waypoint times must be strictly increasing")
            for i, (_, p) in enumerate(self.waypoints):
                out += p.violations(f"{where}.waypoints[{i}]")
        return out


def trajectory_state_at(traj, t):
    """Position of a trajectory at time ``t`` (seconds, scalar or array).

    Waypoint trajectories interpolate distance and azimuth linearly between
    entries and hold the end values outside the covered time range. Scalar
    ``t`` gives a :class:`SourcePosition`; array ``t`` gives a
    ``(distance, azimuth)`` pair of arrays.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if traj.kind is TrajectoryKind.STATIC:
        d = np.full(t.shape, traj.position.distance)
        a = np.full(t.shape, traj.position.azimuth)
    elif traj.kind is TrajectoryKind.CIRCLE:
        c = traj.circle
        d = np.full(t.shape, c.radius)
        a = wrap_azimuth(c.start_azimuth + c.angular_speed * t)
    else:
        times = np.array([w[0] for w in traj.waypoints])
        ds = np.array([w[1].distance for w in traj.waypoints])
        # unwrap so a path through +-180 interpolates the short way
        az = np.degrees(np.unwrap(np.radians([w[1].azimuth for w in traj.waypoints])))
        d = np.interp(t, times, ds)
        a = wrap_azimuth(np.interp(t, times, az))
    if scalar:
        return SourcePosition(float(d), float(a))
    return np.asarray(d, dtype=float), np.asarray(a, dtype=float)


@dataclass(frozen=True)
class InterchannelParams:
    delta_t: float  # seconds, > 0 when the left capsule is reached first
    delta_e: float  # dB, > 0 when the left capsule is louder


def capsule_response(distance, azimuth, mic):
    """Per-capsule path lengths and amplitudes for source positions.

    Returns ``(r_left, r_right, amp_left, amp_right)``; arrays broadcast with
    the inputs. Amplitude is directivity gain over path length (absolute 1/r).
    """
    th = np.radians(np.asarray(azimuth, dtype=float))
    r = np.asarray(distance, dtype=float)
    sx = r * np.cos(th)
    sy = r * np.sin(th)
    half = mic.capsule_spacing / 2.0
    axis = np.radians(mic.axis_half_angle)
    out = []
    for cy, ax in ((half, axis), (-half, -axis)):
        vx, vy = sx, sy - cy
        ri = np.hypot(vx, vy)
        if mic.directivity is Directivity.CARDIOID:
            off = np.arctan2(vy, vx) - ax
            g = 0.5 * (1.0 + np.cos(off))
        else:
            g = np.ones_like(ri)
        out.append((ri, g))
    (rl, gl), (rr, gr) = out
    with np.errstate(divide="ignore", invalid="ignore"):
        return rl, rr, gl / rl, gr / rr


def _forward(distance, azimuth, mic):
    rl, rr, al, ar = capsule_response(distance, azimuth, mic)
    with np.errstate(divide="ignore"):
        de = 20.0 * np.log10(al / ar)
    return (rr - rl) / mic.sound_speed, de


def interchannel_params(pos, mic=MicPair()):
    """Free-field interchannel delay and level difference for a point source."""
    rl, rr, al, ar = capsule_response(pos.distance, pos.azimuth, mic)
    if min(float(rl), float(rr)) < 1e-9:
        raise ValueError(f"source at {pos} coincides with a capsule")
    if float(al) <= 0 or float(ar) <= 0:
        raise ValueError(f"source at {pos} lies in a directivity null")
    return InterchannelParams(float((rr - rl) / mic.sound_speed), float(20.0 * np.log10(al / ar)))


@dataclass(frozen=True)
class LocateSearch:
    """Search domain and residual weighting for :func:`locate_source`.

    The residual is ``((dt - dt_hat) / dt_scale)**2 + ((de - de_hat) / de_scale)**2``
    with ``dt_scale`` in seconds and ``de_scale`` in dB.
    """

    r_min: float = 0.2
    r_max: float = 5.0
    r_steps: int = 60
    az_steps: int = 179
    dt_scale: float = 1e-3
    de_scale: float = 1.0
    ambiguity_tol: float = 1e-2


@dataclass(frozen=True)
class LocateResult:
    position: SourcePosition
    residual: float
    # True when the cues barely depend on distance at the found azimuth
    # (e.g. a centred source); the distance is then a weak guess.
    distance_ambiguous: bool = False


def locate_source(params, mic=MicPair(), search=LocateSearch()):
    """Invert :func:`interchannel_params` over the front half-plane.

    Coarse grid search over ``[r_min, r_max] x (-90, 90)`` followed by a
    bounded least-squares refinement.
    """
    if not (np.isfinite(params.delta_t) and np.isfinite(params.delta_e)):
        raise ValueError("interchannel params must be finite")
    if not 0 < search.r_min < search.r_max or search.r_steps < 2 or search.az_steps < 2:
        raise ValueError("empty search domain")

    target = np.array([params.delta_t / search.dt_scale, params.delta_e / search.de_scale])

    def resid(x):
        dt, de = _forward(x[0], x[1], mic)
        return np.array([dt / search.dt_scale, de / search.de_scale]) - target

    rs = np.geomspace(search.r_min, search.r_max, search.r_steps)
    azs = np.linspace(-90.0, 90.0, search.az_steps + 2)[1:-1]
    R, A = np.meshgrid(rs, azs, indexing="ij")
    dt, de = _forward(R, A, mic)
    cost = (dt / search.dt_scale - target[0]) ** 2 + (de / search.de_scale - target[1]) ** 2
    cost = np.where(np.isfinite(cost), cost, np.inf)
    i, j = np.unravel_index(np.argmin(cost), cost.shape)

    sol = least_squares(
        resid,
        x0=[R[i, j], A[i, j]],
        bounds=([search.r_min, -90.0], [search.r_max, 90.0]),
        x_scale=[0.1, 1.0],
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=2000,
    )
    r_best, az_best = float(sol.x[0]), float(sol.x[1])
    residual = float(np.sum(resid(sol.x) ** 2))

    # how much the cues move across the whole distance range at this azimuth
    dt_r, de_r = _forward(rs, np.full_like(rs, az_best), mic)
    spread = np.hypot(
        (dt_r - dt_r.mean()) / search.dt_scale, (de_r - de_r.mean()) / search.de_scale
    ).max()
    ambiguous = bool(spread < search.ambiguity_tol)
    if ambiguous:
        # pick the distance where azimuth is most sharply pinned down
        h = 0.5
        curv = []
        for r in rs:
            c0 = np.sum(resid([r, az_best]) ** 2)
            cp = np.sum(resid([r, az_best + h]) ** 2)
            cm = np.sum(resid([r, az_best - h]) ** 2)
            curv.append((cp - 2 * c0 + cm) / h**2)
        r_curv = float(rs[int(np.argmax(curv))])
        res_curv = float(np.sum(resid([r_curv, az_best]) ** 2))
        # only swap in the curvature pick if it fits as well as the optimum
        if res_curv <= max(residual, 1e-20):
            r_best, residual = r_curv, res_curv
        log.debug("distance weakly determined at azimuth %.3f", az_best)

    return LocateResult(SourcePosition(r_best, az_best), residual, ambiguous)


@dataclass
class PointSource:
    """A mono clip emitted from a (possibly moving) point."""

    clip: np.ndarray
    sample_rate: float
    trajectory: Trajectory
    gain: float = 1.0
    name: str = ""


@dataclass
class Scene:
    sources: list[PointSource]
    duration: float
    sample_rate: float = 44100.0
    mic: MicPair = field(default_factory=MicPair)


def validate_scene(scene):
    """Return a list of human-readable invariant violations (empty if valid).

    Clips shorter than the scene are not violations; they get zero-padded at
    render time and only a warning is logged here.
    """
    out = list(scene.mic.violations())
    if not scene.duration > 0:
        out.append("duration must be > 0")
    if not scene.sample_rate > 0:
        out.append("sample_rate must be > 0")
    for i, src in enumerate(scene.sources):
        where = f"sources[{i}]"
        clip = np.asarray(src.clip)
        if clip.ndim != 1 or clip.size == 0:
            out.append(f"{where}.clip must be a non-empty mono sequence")
        elif not np.all(np.isfinite(clip)):
            out.append(f"{where}.clip contains non-finite samples")
        if src.sample_rate != scene.sample_rate:
            out.append(f"{where}.clip sample rate {src.sample_rate} != scene {scene.sample_rate}")
        if not (src.gain >= 0 and np.isfinite(src.gain)):
            out.append(f"{where}.gain must be finite and >= 0")
        out += src.trajectory.violations(f"{where}.trajectory")
        if clip.ndim == 1 and 0 < clip.size < round(scene.duration * scene.sample_rate):
            log.warning("%s clip shorter than the scene; it will be zero-padded", where)
    return out
