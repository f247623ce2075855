import numpy as np
import pytest

from stereocarto import MicPair, SourcePosition, StereoBuffer, analyze, interchannel_params
from stereocarto.carto import (
    EstimatorConfig,
    Histogram,
    HistogramConfig,
    LawConfig,
    PeakConfig,
    TemporalLaw,
    cartography,
    detect_peaks,
    estimate_frame,
    estimate_frames,
    extract_candidates,
    global_histogram,
    histogram_1d,
    joint_histogram,
    smooth_law,
    smoothing_length,
    stereo_law,
)
from stereocarto.render import RenderConfig, mix_scene
from stereocarto.geometry import PointSource, Scene, Trajectory

from _signals import SR, aligned_level_db, band_noise, brute_force_xcorr, white


def shifted_pair(shift, scale, n=2205, seed=0):
    """left = x, right = scale * x delayed by ``shift`` samples."""
    x = white(n + 200, seed=seed)
    left = x[100 : 100 + n]
    right = scale * x[100 - shift : 100 - shift + n]
    return left, right


# -- frame estimator ----------------------------------------------------------

def test_identical_windows(backend):
    x = white(2205, seed=3)
    e = estimate_frame(x, x, SR, backend=backend)
    assert e.valid and abs(e.delta_t) < 1e-15 and e.delta_e == 0.0
    assert e.peak_correlation == pytest.approx(1.0, abs=1e-12)


def test_half_amplitude_ten_sample_lag(backend):
    left, right = shifted_pair(10, 0.5)
    e = estimate_frame(left, right, SR, backend=backend)
    assert e.valid
    assert e.delta_t * 1e6 == pytest.approx(226.8, abs=2.0)
    assert e.delta_e == pytest.approx(6.02, abs=0.05)


def test_silent_windows_invalid():
    z = np.zeros(2205)
    assert not estimate_frame(z, z, SR).valid


def test_quiet_windows_gated():
    x = white(2205, seed=1, scale=1e-4)  # about -80 dBFS
    assert not estimate_frame(x, x, SR).valid


def test_uncorrelated_windows_gated():
    e = estimate_frame(white(2205, seed=1), white(2205, seed=2), SR)
    assert not e.valid and e.peak_correlation < 0.5


def test_short_window_rejected():
    with pytest.raises(ValueError, match="shorter"):
        estimate_frame(np.ones(50), np.ones(50), SR)


def test_lag_beyond_range_is_invalid():
    left, right = shifted_pair(60, 1.0)  # 1.36 ms > 1 ms max lag
    assert not estimate_frame(left, right, SR).valid


@pytest.mark.parametrize("shift,scale", [(-17, 2.0), (0, 0.1), (5, 1.0), (33, 0.7), (-44, 3.0)])
def test_matches_brute_force_oracle(shift, scale, backend):
    left, right = shifted_pair(shift, scale, seed=shift + 50)
    e = estimate_frame(left, right, SR, backend=backend)
    lag, ilag, _ = brute_force_xcorr(left, right, 44)
    assert e.delta_t * SR == pytest.approx(lag, abs=2e-6 * SR)
    assert e.delta_e == pytest.approx(aligned_level_db(left, right, ilag), abs=0.05)
    assert e.delta_t * SR == pytest.approx(shift, abs=2e-6 * SR)


def test_integer_lag_mode_within_half_sample(rng):
    cfg = EstimatorConfig(upsample=1)
    for k in range(20):
        shift = int(rng.integers(-40, 41))
        left, right = shifted_pair(shift, rng.uniform(0.2, 5), seed=k)
        e = estimate_frame(left, right, SR, cfg)
        assert abs(e.delta_t * SR - shift) <= 0.5


def test_band_limited_fractional_delay_recovered():
    # 12.3-sample delay of low-passed noise, applied in the frequency domain
    n = 8192
    x = band_noise(100, 5000, n / SR, seed=9)
    f = np.fft.rfftfreq(n, 1 / SR)
    y = np.fft.irfft(np.fft.rfft(x) * np.exp(-2j * np.pi * f * 12.3 / SR), n)
    e = estimate_frame(x[1000:3205], y[1000:3205], SR)
    assert e.delta_t * SR == pytest.approx(12.3, abs=0.05)


def test_vectorised_matches_single(rng):
    left = rng.standard_normal((5, 2205))
    right = np.roll(left, 7, axis=1) * 0.4
    dt, de, c, v = estimate_frames(left, right, SR)
    for k in range(5):
        e = estimate_frame(left[k], right[k], SR)
        assert (e.delta_t, e.delta_e, e.valid) == (dt[k], de[k], v[k])


# -- laws -------------------------------------------------------------------

def test_ten_seconds_give_200_frames():
    x = white(441_000 + 100, seed=4)
    law = stereo_law(x, x, SR)
    assert len(law) == 200
    assert np.allclose(np.diff(law.time), 0.05)
    assert law.time[0] == pytest.approx(0.025)


def test_signal_shorter_than_window():
    with pytest.raises(ValueError):
        stereo_law(np.ones(100), np.ones(100), SR)


def test_static_render_every_valid_frame_on_target(bank):
    # 20 kHz band limit keeps band 10 inside the renderer's flat region
    clip = band_noise(20, 20000, 3.0, seed=8)
    scene = Scene([PointSource(clip, SR, Trajectory.static(1.0, 45.0))], 3.0, SR)
    buf = mix_scene(scene)
    truth = interchannel_params(SourcePosition(1.0, 45.0))
    for law in cartography(analyze(buf, bank)).laws:
        v = law.valid
        assert v.sum() >= 50, law.band
        assert np.all(np.abs(law.delta_t[v] - truth.delta_t) <= 1 / SR), law.band
        assert np.all(np.abs(law.delta_e[v] - truth.delta_e) <= 0.3), law.band


# -- smoothing --------------------------------------------------------------

def _law(dt, de=None, valid=None, hop=0.05):
    dt = np.asarray(dt, dtype=float)
    de = np.zeros_like(dt) if de is None else np.asarray(de, dtype=float)
    valid = np.ones(len(dt), bool) if valid is None else np.asarray(valid, bool)
    t = hop * np.arange(len(dt)) + hop / 2
    return TemporalLaw(5, hop, hop, t, dt, de, np.ones(len(dt)), valid)


def test_smoothing_length():
    assert smoothing_length(0.05, 2.0) == 5
    assert smoothing_length(0.05, 100.0) == 1
    assert smoothing_length(0.01, 2.0) % 2 == 1


def test_constant_law_unchanged():
    law = _law(np.full(40, 0.35e-3), np.full(40, 9.2))
    s = smooth_law(law)
    np.testing.assert_allclose(s.delta_t, law.delta_t, rtol=1e-12)
    np.testing.assert_allclose(s.delta_e, law.delta_e, rtol=1e-12)


def test_gap_preserved():
    valid = np.r_[np.ones(10), np.zeros(5), np.ones(10)].astype(bool)
    dt = np.r_[np.full(10, 1e-4), np.full(5, 9.0), np.full(10, -1e-4)]
    s = smooth_law(_law(dt, valid=valid))
    assert np.array_equal(s.valid, valid)
    np.testing.assert_array_equal(s.delta_t[10:15], 9.0)
    # nothing leaks across the gap
    np.testing.assert_allclose(s.delta_t[:10], 1e-4, rtol=1e-12)
    np.testing.assert_allclose(s.delta_t[15:], -1e-4, rtol=1e-12)


def test_smoothing_reduces_noise(rng):
    sigma = 0.05e-3
    dt = 0.2e-3 + sigma * rng.standard_normal(400)
    s = smooth_law(_law(dt), cutoff_hz=2.0)
    assert np.std(s.delta_t) <= np.std(dt) / 2


# -- histograms -------------------------------------------------------------

def test_constant_law_single_bin():
    h = histogram_1d(_law(np.full(30, 0.35e-3)), "delay")
    assert np.count_nonzero(h.counts) == 1
    k = int(np.argmax(h.counts))
    assert h.edges[k] <= 0.35e-3 < h.edges[k + 1]
    assert h.centers[k] == pytest.approx(0.35e-3)


def test_default_binning():
    h = histogram_1d(_law([0.0]), "delay")
    assert len(h.counts) == 301 and h.bin_widths == pytest.approx(10e-6)
    a = histogram_1d(_law([0.0]), "attenuation")
    assert len(a.counts) == 193 and a.bin_widths == pytest.approx(0.25)


def test_invalid_law_gives_zero_histogram():
    h = histogram_1d(_law(np.full(10, 1e-4), valid=np.zeros(10)), "delay")
    assert h.counts.sum() == 0 and h.overflow == 0


def test_mass_conservation_with_overflow():
    dt = np.array([0.0, 1e-4, 2e-3, -5e-3, 0.3e-3])
    h = histogram_1d(_law(dt, valid=[1, 1, 1, 1, 0]), "delay")
    assert h.overflow == 2
    assert h.counts.sum() + h.overflow == 4


def test_global_is_bandwise_sum():
    laws = [_law(np.full(5, k * 1e-5)) for k in range(10)]
    hs = [histogram_1d(law, "delay") for law in laws]
    g = global_histogram(hs)
    np.testing.assert_array_equal(g.counts, np.sum([h.counts for h in hs], axis=0))
    assert g.band == "global"
    same = global_histogram([hs[0]] * 10)
    np.testing.assert_array_equal(same.counts, 10 * hs[0].counts)
    assert np.array_equal(global_histogram([hs[3]]).counts, hs[3].counts)


def test_global_binning_mismatch():
    a = histogram_1d(_law([0.0]), "delay")
    b = histogram_1d(_law([0.0]), "delay", HistogramConfig(delay_bin_s=20e-6))
    with pytest.raises(ValueError, match="binning"):
        global_histogram([a, b])
    with pytest.raises(ValueError):
        global_histogram([a, histogram_1d(_law([0.0]), "attenuation")])


def test_joint_constant_and_marginals(rng):
    law = _law(np.full(12, 0.2e-3), np.full(12, 5.0))
    j = joint_histogram(law)
    assert np.count_nonzero(j.counts) == 1
    law = _law(rng.uniform(-1e-3, 1e-3, 300), rng.uniform(-20, 20, 300))
    j = joint_histogram(law)
    np.testing.assert_array_equal(j.counts.sum(axis=1), histogram_1d(law, "delay").counts)
    np.testing.assert_array_equal(j.counts.sum(axis=0), histogram_1d(law, "attenuation").counts)


def test_unknown_axis():
    with pytest.raises(ValueError):
        histogram_1d(_law([0.0]), "pitch")


# -- peaks ------------------------------------------------------------------

def _hist(counts):
    counts = np.asarray(counts)
    edges = np.arange(len(counts) + 1) - 0.5
    return Histogram("delay", edges, counts, 1)


def test_single_mode_peak():
    assert detect_peaks(_hist([0, 1, 5, 1, 0])) == [(2.0, 5)]


def test_flat_zero_no_peaks():
    assert detect_peaks(_hist(np.zeros(20, int))) == []


def test_bimodal_ten_to_one():
    c = np.zeros(40, int)
    c[10], c[9], c[11] = 100, 30, 30
    c[30] = 10
    assert detect_peaks(_hist(c)) == [(10.0, 100), (30.0, 10)]


def test_peaks_below_threshold_dropped():
    c = np.zeros(40, int)
    c[10], c[30] = 100, 9
    assert detect_peaks(_hist(c)) == [(10.0, 100)]


def test_peak_separation():
    c = np.zeros(20, int)
    c[5], c[7] = 10, 8
    assert [p for p, _ in detect_peaks(_hist(c))] == [5.0]
    assert len(detect_peaks(_hist(c), PeakConfig(min_separation_bins=2))) == 2


def test_joint_peak_centres_are_pairs():
    law = _law(np.full(12, 0.2e-3), np.full(12, 5.0))
    (c, n), = detect_peaks(joint_histogram(law))
    assert c == pytest.approx((0.2e-3, 5.0)) and n == 12


# -- candidates -------------------------------------------------------------

def _static_scene(parts, seconds=3.0):
    srcs = [
        PointSource(band_noise(lo, hi, seconds, seed=i), SR, Trajectory.static(*pos))
        for i, (pos, (lo, hi)) in enumerate(parts)
    ]
    return mix_scene(Scene(srcs, seconds, SR), RenderConfig(normalize=False))


def test_two_sources_in_disjoint_bands_pair_correctly(bank):
    buf = _static_scene([((1.0, 30.0), (450, 750)), ((2.0, -60.0), (6500, 14000))])
    laws = cartography(analyze(buf, bank)).laws
    modes = [detect_peaks(joint_histogram(laws[k]))[0][0] for k in (3, 8)]
    for (pos, _), (dt, de) in zip([((1.0, 30.0), 0), ((2.0, -60.0), 0)], modes):
        truth = interchannel_params(SourcePosition(*pos))
        assert dt == pytest.approx(truth.delta_t, abs=10e-6)
        assert de == pytest.approx(truth.delta_e, abs=0.25)


def test_centred_source_candidate(bank):
    x = white(3 * 44100, seed=12)
    buf = StereoBuffer(x, x.copy(), SR)
    res = cartography(analyze(buf, bank), mic=MicPair(), locate=True)
    top = res.candidates[0]
    assert abs(top.delta_t) < 1e-9 and abs(top.delta_e) < 1e-9
    assert top.location[1] == pytest.approx(0.0, abs=1e-3)
    assert top.distance_ambiguous
    assert top.bands == frozenset(range(1, 11))


def test_candidates_merge_across_bands_and_rank():
    a = _law(np.full(20, 1e-4), np.full(20, 3.0))
    b = _law(np.full(30, 1.05e-4), np.full(30, 3.1))
    b.band = 6
    c = _law(np.full(8, -2e-4), np.full(8, -4.0))
    c.band = 2
    cands = extract_candidates([a, b, c])
    assert [x.support for x in cands] == [50, 8]
    assert cands[0].bands == frozenset({5, 6})
    assert cands[0].delta_t == pytest.approx((20 * 1e-4 + 30 * 1.05e-4) / 50)
    assert all(x.location is None for x in cands)


def test_locate_needs_mic():
    with pytest.raises(ValueError):
        extract_candidates([_law([1e-4] * 5)], locate=True)


def test_swapped_law_negates():
    law = _law([1e-4, -2e-4], [3.0, -1.0])
    s = law.swapped()
    np.testing.assert_array_equal(s.delta_t, -law.delta_t)
    np.testing.assert_array_equal(s.delta_e, -law.delta_e)


def test_law_frames_view():
    law = _law([1e-4, 2e-4], valid=[True, False])
    f = law.frames
    assert f[1].frame_index == 1 and not f[1].valid and f[0].delta_t == 1e-4


def test_hop_shorter_than_window():
    x = white(44100, seed=5)
    law = stereo_law(x, x, SR, LawConfig(window_s=0.05, hop_s=0.01))
    assert len(law) == (44100 - 2205) // 441 + 1
