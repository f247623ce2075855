"""Integrated spectral density (ISD) and per-band relative weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def isd(signal):
    """Sum of squared samples."""
    x = np.asarray(signal, dtype=float)
    return float(np.dot(x, x))


@dataclass
class IsdProfile:
    """Per-channel band energies relative to the original channel.

    ``db[c, k] = 10 log10(band_isd[c, k] / original_isd[c])``; a silent
    original channel has ``defined[c] == False`` and NaN ratios.
    """

    bands: list
    band_isd: np.ndarray  # (2, n_bands)
    original_isd: np.ndarray  # (2,)
    db: np.ndarray  # (2, n_bands)
    defined: np.ndarray  # (2,) bool


def isd_profile(sub, original):
    if len(original) != len(sub):
        raise ValueError(
            f"original ({len(original)} samples) and subbands ({len(sub)}) are not aligned; "
            "analyse with delay compensation"
        )
    band_isd = np.einsum("kcn,kcn->ck", sub.data, sub.data)
    orig = np.array([isd(original.left), isd(original.right)])
    defined = orig > 0
    db = np.full(band_isd.shape, np.nan)
    with np.errstate(divide="ignore"):
        db[defined] = 10 * np.log10(band_isd[defined] / orig[defined, None])
    return IsdProfile(list(sub.bands), band_isd, orig, db, defined)

