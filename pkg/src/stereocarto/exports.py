"""CSV and manifest writers. Number formatting is fixed so reruns are byte-identical."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
from pathlib import Path

import numpy as np

from . import __version__


def _f(v, digits=6):
    return f"{float(v):.{digits}f}"


def band_wav_name(band):
    return f"band_{band.index:02d}_{band.low_hz:g}-{band.high_hz:g}.wav"


def write_isd_csv(profile, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["band", "low_hz", "high_hz", "left_db", "right_db", "left_isd", "right_isd"])
        for k, b in enumerate(profile.bands):
            w.writerow(
                [b.index, f"{b.low_hz:g}", f"{b.high_hz:g}",
                 _f(profile.db[0, k]), _f(profile.db[1, k]),
                 f"{profile.band_isd[0, k]:.9e}", f"{profile.band_isd[1, k]:.9e}"]
            )


def write_law_csv(law, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "delta_t_ms", "delta_e_db", "corr", "valid"])
        for t, dt, de, c, v in zip(law.time, law.delta_t, law.delta_e, law.corr, law.valid):
            w.writerow([_f(t), _f(dt * 1e3), _f(de), _f(c), int(v)])


def write_histogram_csv(hist, path):
    """``bin_center, count``; delay centres in ms, attenuation centres in dB."""
    scale = 1e3 if hist.axis == "delay" else 1.0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_center", "count"])
        for c, n in zip(hist.centers, hist.counts):
            w.writerow([_f(c * scale), int(n)])


def write_candidates_csv(cands, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta_t_ms", "delta_e_db", "support", "bands", "dist_m", "az_deg", "residual"])
        for c in cands:
            loc = c.location or ("", "", "")
            row = [_f(c.delta_t * 1e3, 4), _f(c.delta_e, 3), c.support, " ".join(str(b) for b in sorted(c.bands))]
            if c.location:
                row += [_f(loc[0], 3), _f(loc[1], 2), f"{loc[2]:.3e}"]
            else:
                row += ["", "", ""]
            w.writerow(row)


def read_candidates_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(v):
    if dataclasses.is_dataclass(v) and not isinstance(v, type):
        return {k: _jsonable(x) for k, x in dataclasses.asdict(v).items()}
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, np.generic):
        return v.item()
    return v


def write_run_manifest(directory, command, inputs, config, outputs):
    """``run.json``: what was run on what, with which settings. No timestamps,
    so identical runs give identical manifests."""
    doc = {
        "tool": "stereocarto",
        "version": __version__,
        "command": command,
        "inputs": _jsonable(inputs),
        "config": _jsonable(config),
        "outputs": sorted(str(Path(o).name) for o in outputs),
    }
    path = Path(directory) / "run.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
