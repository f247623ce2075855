"""Stereo audio scene cartography.

Simulate free-field stereo recordings of point sources through a microphone
pair, split recordings into listenable perceptive subbands, and map sources
from per-band interchannel delay and level-difference histograms.
"""

__version__ = "0.1.0"

from .buffers import MonoClip, StereoBuffer
from .geometry import (
    InterchannelParams,
    MicPair,
    PointSource,
    Scene,
    SourcePosition,
    Trajectory,
    interchannel_params,
    locate_source,
    trajectory_state_at,
    validate_scene,
)
from .render import RenderConfig, apply_fractional_delay, mix_scene, render_source
from .filterbank import analyze, build_bank, design_lowpass, leipp_bands, resynthesize
from .energy import isd, isd_profile
from .carto import (
    EstimatorConfig,
    HistogramConfig,
    LawConfig,
    PeakConfig,
    cartography,
    detect_peaks,
    estimate_frame,
    extract_candidates,
    global_histogram,
    histogram_1d,
    joint_histogram,
    smooth_law,
    temporal_laws,
)
from .wavio import read_wav, write_wav
from .scene_config import load_scene, scene_from_dict

__all__ = [
    "MonoClip", "StereoBuffer",
    "InterchannelParams", "MicPair", "PointSource", "Scene", "SourcePosition", "Trajectory",
    "interchannel_params", "locate_source", "trajectory_state_at", "validate_scene",
    "RenderConfig", "apply_fractional_delay", "mix_scene", "render_source",
    "analyze", "build_bank", "design_lowpass", "leipp_bands", "resynthesize",
    "isd", "isd_profile",
    "EstimatorConfig", "HistogramConfig", "LawConfig", "PeakConfig", "cartography",
    "detect_peaks", "estimate_frame", "extract_candidates", "global_histogram",
    "histogram_1d", "joint_histogram", "smooth_law", "temporal_laws",
    "read_wav", "write_wav", "load_scene", "scene_from_dict",
]
