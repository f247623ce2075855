import math

import numpy as np
import pytest

from stereocarto.geometry import (
    InterchannelParams,
    LocateSearch,
    MicPair,
    PointSource,
    Scene,
    SourcePosition,
    Trajectory,
    interchannel_params,
    locate_source,
    trajectory_state_at,
    validate_scene,
    wrap_azimuth,
)

# (distance m, azimuth deg) -> (delta_t ms, delta_e dB), as published
PUBLISHED = [
    ((1.0, 45.0), (0.35, 9.2)),
    ((1.0, -10.0), (-0.086, -1.99)),
    ((1.5, -35.0), (-0.283, -6.64)),
    ((1.0, 25.0), (0.208, 5.01)),
    ((0.5, 40.0), (0.315, 9.5)),
]


def scalar_forward(r, az_deg, spacing=0.17, half_angle=55.0, c=343.0):
    """Law-of-cosines re-derivation of the cardioid pair model, one source."""
    th = math.radians(az_deg)
    out = []
    for side in (+1, -1):
        d = spacing / 2
        # capsule at angle +-90 deg, distance d from the centre
        ri = math.sqrt(r * r + d * d - 2 * r * d * math.cos(th - side * math.pi / 2))
        # direction from capsule to source vs capsule axis
        bearing = math.atan2(r * math.sin(th) - side * d, r * math.cos(th))
        g = 0.5 * (1 + math.cos(bearing - side * math.radians(half_angle)))
        out.append((ri, g / ri))
    (rl, al), (rr, ar) = out
    return (rr - rl) / c, 20 * math.log10(al / ar)


@pytest.mark.parametrize("pos,expected", PUBLISHED)
def test_published_tuples(pos, expected):
    p = interchannel_params(SourcePosition(*pos))
    assert p.delta_t * 1e3 == pytest.approx(expected[0], abs=0.005)
    assert p.delta_e == pytest.approx(expected[1], abs=0.1)


def test_centre_is_zero():
    p = interchannel_params(SourcePosition(1.0, 0.0))
    assert p.delta_t == 0.0 and abs(p.delta_e) < 1e-12


def test_matches_scalar_rederivation(rng):
    for _ in range(200):
        r, az = rng.uniform(0.2, 5), rng.uniform(-170, 170)
        p = interchannel_params(SourcePosition(r, az))
        dt, de = scalar_forward(r, az)
        assert p.delta_t == pytest.approx(dt, rel=1e-9, abs=1e-15)
        assert p.delta_e == pytest.approx(de, rel=1e-9, abs=1e-12)


def test_azimuth_antisymmetry(rng):
    for _ in range(200):
        r, az = rng.uniform(0.2, 5), rng.uniform(-120, 120)
        a = interchannel_params(SourcePosition(r, az))
        b = interchannel_params(SourcePosition(r, -az))
        assert b.delta_t == pytest.approx(-a.delta_t, rel=1e-12, abs=1e-18)
        assert b.delta_e == pytest.approx(-a.delta_e, rel=1e-12, abs=1e-12)


def test_delay_bounded_by_baseline(rng):
    mic = MicPair()
    assert mic.max_delay * 1e3 == pytest.approx(0.4956, abs=1e-4)
    for _ in range(500):
        p = interchannel_params(SourcePosition(rng.uniform(0.1, 10), rng.uniform(-179, 179)))
        assert abs(p.delta_t) <= mic.max_delay + 1e-15


@pytest.mark.parametrize("r", [0.3, 0.5, 1.0, 2.0, 5.0])
def test_delay_monotonic_in_azimuth(r):
    dts = [interchannel_params(SourcePosition(r, a)).delta_t for a in np.linspace(-89.9, 89.9, 721)]
    assert np.all(np.diff(dts) > 0)


def test_source_at_capsule_raises():
    with pytest.raises(ValueError, match="capsule"):
        interchannel_params(SourcePosition(0.085, 90.0))


def test_omni_pair_is_pure_delay():
    mic = MicPair(directivity="omni")
    p = interchannel_params(SourcePosition(20.0, 30.0), mic)
    assert abs(p.delta_e) < 0.1
    assert p.delta_t * 343 == pytest.approx(0.17 * math.sin(math.radians(30)), rel=1e-3)


def test_mic_invariants():
    assert MicPair(capsule_spacing=0).violations()
    assert MicPair(axis_half_angle=90).violations()
    assert MicPair(sound_speed=-1).violations()
    assert MicPair().violations() == []


# -- trajectories -----------------------------------------------------------

def test_circle_states():
    c = Trajectory.circular(1.0, 0.0, 36.0)
    assert trajectory_state_at(c, 0.0) == SourcePosition(1.0, 0.0)
    assert trajectory_state_at(c, 2.5) == SourcePosition(1.0, 90.0)
    assert trajectory_state_at(c, 5.0).azimuth == 180.0
    assert trajectory_state_at(c, 6.0).azimuth == pytest.approx(-144.0)


def test_waypoint_midpoint_and_clamp():
    w = Trajectory.through([(0, 1.0, -30.0), (10, 1.0, 30.0)])
    assert trajectory_state_at(w, 5.0) == SourcePosition(1.0, 0.0)
    assert trajectory_state_at(w, -1.0).azimuth == -30.0
    assert trajectory_state_at(w, 99.0).azimuth == 30.0


def test_waypoints_cross_rear_the_short_way():
    w = Trajectory.through([(0, 1.0, 170.0), (2, 1.0, -170.0)])
    assert abs(trajectory_state_at(w, 1.0).azimuth) == pytest.approx(180.0)


def test_vector_state_matches_scalar():
    c = Trajectory.circular(2.0, -45.0, -20.0)
    t = np.linspace(0, 30, 31)
    d, a = trajectory_state_at(c, t)
    for k, tk in enumerate(t):
        s = trajectory_state_at(c, tk)
        assert (d[k], a[k]) == pytest.approx((s.distance, s.azimuth))


def test_wrap_azimuth():
    assert wrap_azimuth(-180.0) == 180.0
    assert wrap_azimuth(190.0) == pytest.approx(-170.0)
    assert wrap_azimuth(720.0) == 0.0


# -- scene validation -------------------------------------------------------

def _scene(*trajs, clip_len=100):
    return Scene([PointSource(np.ones(clip_len), 44100.0, t) for t in trajs], 100 / 44100)


def test_valid_scene():
    assert validate_scene(_scene(Trajectory.static(1, 45), Trajectory.circular(1, 0, 36))) == []


def test_zero_distance_reported():
    v = validate_scene(_scene(Trajectory.static(0, 10)))
    assert any("distance must be > 0" in m for m in v)


def test_equal_waypoint_times_reported():
    v = validate_scene(_scene(Trajectory.through([(0, 1, 0), (0, 1, 10)])))
    assert any("strictly increasing" in m for m in v)


def test_short_clip_is_not_a_violation():
    s = _scene(Trajectory.static(1, 0), clip_len=10)
    assert validate_scene(s) == []


# -- inversion --------------------------------------------------------------

@pytest.mark.parametrize("pos", [p for p, _ in PUBLISHED])
def test_locate_published_positions(pos):
    res = locate_source(interchannel_params(SourcePosition(*pos)))
    assert res.position.distance == pytest.approx(pos[0], abs=0.02)
    assert res.position.azimuth == pytest.approx(pos[1], abs=1.0)
    assert res.residual < 1e-12
    assert not res.distance_ambiguous


def test_locate_centre_flags_distance():
    res = locate_source(InterchannelParams(0.0, 0.0))
    assert res.position.azimuth == pytest.approx(0.0, abs=1e-6)
    assert res.residual < 1e-12
    assert res.distance_ambiguous


def test_locate_rejects_bad_input():
    with pytest.raises(ValueError):
        locate_source(InterchannelParams(float("nan"), 0.0))
    with pytest.raises(ValueError, match="empty"):
        locate_source(InterchannelParams(0.0, 0.0), search=LocateSearch(r_min=2, r_max=1))


def test_locate_reports_poor_fit():
    # cues no front-half position can produce
    res = locate_source(InterchannelParams(0.45e-3, -12.0))
    assert res.residual > 0.1
