"""``stereocarto`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 processing error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .buffers import StereoBuffer
from .carto import (
    EstimatorConfig,
    HistogramConfig,
    LawConfig,
    PeakConfig,
    band_histograms,
    cartography,
    global_histogram,
    smooth_law,
    temporal_laws,
)
from .energy import isd_profile
from .exports import (
    band_wav_name,
    write_candidates_csv,
    write_histogram_csv,
    write_isd_csv,
    write_law_csv,
    write_run_manifest,
)
from .filterbank import DEFAULT_TAPS, analyze, build_bank
from .geometry import MicPair
from .render import RenderConfig, mix_scene
from .scene_config import SceneConfigError, load_scene
from .wavio import read_wav, wav_bit_depth, write_wav

log = logging.getLogger("stereocarto")

EXIT_OK, EXIT_USAGE, EXIT_PROCESSING = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stereo(path):
    buf = read_wav(path)
    if not isinstance(buf, StereoBuffer):
        raise UsageError(f"{path}: expected a stereo file")
    return buf


def _analysis(args, buf):
    bank = build_bank(n_taps=args.taps, sample_rate=buf.sample_rate)
    return analyze(buf, bank, compensate=not getattr(args, "raw_delay", False))


def _law_cfg(args):
    est = EstimatorConfig(
        max_lag_s=args.max_lag_ms / 1e3,
        min_rms_dbfs=args.min_rms_dbfs,
        min_correlation=args.min_corr,
        upsample=args.upsample,
    )
    return LawConfig(args.window_ms / 1e3, args.hop_ms / 1e3, est)


def _hist_cfg(args):
    return HistogramConfig(delay_bin_s=args.delay_bin_us / 1e6, de_bin_db=args.de_bin_db)


def cmd_simulate(args):
    scene = load_scene(args.scene)
    cfg = RenderConfig(sample_rate=scene.sample_rate, normalize=not args.no_normalize)
    buf = mix_scene(scene, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_wav(buf, out, args.bit_depth)
    write_run_manifest(out.parent, "simulate", {"scene": args.scene}, cfg, [out])


def cmd_bands(args):
    buf = _stereo(args.input)
    sub = _analysis(args, buf)
    depth = wav_bit_depth(args.input)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outs = []
    for b in sub.bands:
        p = out_dir / band_wav_name(b)
        write_wav(sub.band(b.index), p, depth)
        outs.append(p)
    cfg = {"taps": args.taps, "raw_delay": args.raw_delay, "bit_depth": depth}
    write_run_manifest(out_dir, "bands", {"in": args.input}, cfg, outs)


_BAND_FILE = re.compile(r"band_(\d{2})_.*\.wav$")


def cmd_resynth(args):
    try:
        selection = sorted({int(s) for s in args.select.split(",") if s.strip()})
    except ValueError as exc:
        raise UsageError(f"--select: {exc}") from exc
    if not selection:
        raise UsageError("--select needs at least one band index")
    files = {}
    for p in sorted(Path(args.bands).glob("band_*.wav")):
        m = _BAND_FILE.search(p.name)
        if m:
            files[int(m.group(1))] = p
    missing = [k for k in selection if k not in files]
    if missing:
        raise UsageError(f"no band file for indices {missing} in {args.bands}")
    bufs = [_stereo(files[k]) for k in selection]
    total = bufs[0]
    for b in bufs[1:]:
        total = StereoBuffer(total.left + b.left, total.right + b.right, total.sample_rate)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_wav(total, out, wav_bit_depth(files[selection[0]]))
    write_run_manifest(out.parent, "resynth", {"bands": args.bands}, {"select": selection}, [out])


def cmd_isd(args):
    buf = _stereo(args.input)
    prof = isd_profile(_analysis(args, buf), buf)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_isd_csv(prof, out)
    write_run_manifest(out.parent, "isd", {"in": args.input}, {"taps": args.taps}, [out])


def cmd_laws(args):
    buf = _stereo(args.input)
    cfg = _law_cfg(args)
    laws = temporal_laws(_analysis(args, buf), cfg)
    if args.smooth_hz:
        laws = [smooth_law(law, args.smooth_hz) for law in laws]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outs = []
    for law in laws:
        p = out_dir / f"law_band_{law.band:02d}.csv"
        write_law_csv(law, p)
        outs.append(p)
    conf = {"taps": args.taps, "laws": cfg, "smooth_hz": args.smooth_hz}
    write_run_manifest(out_dir, "laws", {"in": args.input}, conf, outs)


def cmd_hist(args):
    buf = _stereo(args.input)
    law_cfg, hist_cfg = _law_cfg(args), _hist_cfg(args)
    sub = _analysis(args, buf)
    if args.band is not None and not 1 <= args.band <= len(sub.bands):
        raise UsageError(f"--band must be in 1..{len(sub.bands)}")
    laws = temporal_laws(sub, law_cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outs = []
    for axis in ("delay", "attenuation"):
        hs = band_histograms(laws, axis, hist_cfg)
        todo = []
        if args.band is not None:
            todo.append((f"band_{args.band:02d}", hs[args.band - 1]))
        elif args.global_only:
            todo.append(("global", global_histogram(hs)))
        else:
            todo += [(f"band_{h.band:02d}", h) for h in hs]
            todo.append(("global", global_histogram(hs)))
        for tag, h in todo:
            p = out_dir / f"hist_{tag}_{axis}.csv"
            write_histogram_csv(h, p)
            outs.append(p)
    conf = {"taps": args.taps, "laws": law_cfg, "histogram": hist_cfg}
    write_run_manifest(out_dir, "hist", {"in": args.input}, conf, outs)


def cmd_carto(args):
    buf = _stereo(args.input)
    law_cfg, hist_cfg = _law_cfg(args), _hist_cfg(args)
    mic = MicPair(args.spacing_m, args.axis_half_angle_deg, args.directivity, args.sound_speed_mps)
    res = cartography(_analysis(args, buf), law_cfg, hist_cfg, PeakConfig(), mic=mic, locate=args.locate)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_candidates_csv(res.candidates, out)
    outs = [out]
    if args.hist_dir:
        hd = Path(args.hist_dir)
        hd.mkdir(parents=True, exist_ok=True)
        for h in (res.global_delay, res.global_attenuation):
            p = hd / f"hist_global_{h.axis}.csv"
            write_histogram_csv(h, p)
            outs.append(p)
    conf = {"taps": args.taps, "laws": law_cfg, "histogram": hist_cfg, "mic": mic, "locate": args.locate}
    write_run_manifest(out.parent, "carto", {"in": args.input}, conf, outs)


def _add_analysis_opts(p, laws=True):
    p.add_argument("--in", dest="input", required=True, help="stereo WAV file")
    p.add_argument("--taps", type=int, default=DEFAULT_TAPS, help="FIR length per band (odd)")
    if laws:
        p.add_argument("--window-ms", type=float, default=50.0)
        p.add_argument("--hop-ms", type=float, default=50.0)
        p.add_argument("--max-lag-ms", type=float, default=1.0)
        p.add_argument("--min-rms-dbfs", type=float, default=-60.0)
        p.add_argument("--min-corr", type=float, default=0.5)
        p.add_argument("--upsample", type=int, default=4, help="lag-grid refinement factor")


def build_parser():
    ap = _Parser(prog="stereocarto", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sp = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sp.add_parser("simulate", help="render a JSON scene to a stereo WAV")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--bit-depth", type=int, choices=(16, 24, 32), default=32)
    p.set_defaults(func=cmd_simulate)

    p = sp.add_parser("bands", help="write the 10 subbands as stereo WAVs")
    _add_analysis_opts(p, laws=False)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--raw-delay", action="store_true", help="keep the filter delay instead of trimming it")
    p.set_defaults(func=cmd_bands)

    p = sp.add_parser("resynth", help="sum selected band WAVs")
    p.add_argument("--bands", required=True, help="directory written by 'bands'")
    p.add_argument("--select", required=True, help="comma-separated band indices, e.g. 1,2,5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resynth)

    p = sp.add_parser("isd", help="per-band energy ratios as CSV")
    _add_analysis_opts(p, laws=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_isd)

    p = sp.add_parser("laws", help="per-band delay/attenuation laws as CSV")
    _add_analysis_opts(p)
    p.add_argument("--smooth-hz", type=float, default=None, help="moving-average cutoff for the laws")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_laws)

    p = sp.add_parser("hist", help="delay and attenuation histograms as CSV")
    _add_analysis_opts(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--band", type=int)
    g.add_argument("--global", dest="global_only", action="store_true")
    p.add_argument("--delay-bin-us", type=float, default=10.0)
    p.add_argument("--de-bin-db", type=float, default=0.25)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_hist)

    p = sp.add_parser("carto", help="full pipeline: bands, laws, histograms, candidates")
    _add_analysis_opts(p)
    p.add_argument("--delay-bin-us", type=float, default=10.0)
    p.add_argument("--de-bin-db", type=float, default=0.25)
    p.add_argument("--out", required=True, help="candidates CSV")
    p.add_argument("--hist-dir", help="also write global histograms here")
    p.add_argument("--locate", action="store_true", help="estimate distance and azimuth per candidate")
    p.add_argument("--spacing-m", type=float, default=0.17)
    p.add_argument("--axis-half-angle-deg", type=float, default=55.0)
    p.add_argument("--directivity", choices=("cardioid", "omni"), default="cardioid")
    p.add_argument("--sound-speed-mps", type=float, default=343.0)
    p.set_defaults(func=cmd_carto)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except SceneConfigError as exc:
        print("invalid scene:", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"stereocarto {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"stereocarto {args.command}: {exc}", file=sys.stderr)
        return EXIT_PROCESSING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
