"""Forehead EEG reconstruction and differential-entropy features.

The four forehead channels are stacked as ``[ch4; ch5; -ch6; ch7]`` and
unmixed with FastICA; components matching the VEO/HEO templates are zeroed
and the rest projected back through ``W^-1``. DE per band is
``0.5 * ln(2 pi e var)`` with the variance taken from the Hann STFT power.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dsp import Band, Recording, WindowSpec, bandpass, integrate_band, partition_windows, psd, resample
from .errors import NonpositiveVariance
from .tables import write_matrix
from .separation import EogPair, ForeheadQuad, combine_ica_minus, fastica

FIVE_BANDS = (
    ("delta", Band(1.0, 4.0)),
    ("theta", Band(4.0, 8.0)),
    ("alpha", Band(8.0, 14.0)),
    ("beta", Band(14.0, 31.0)),
    ("gamma", Band(31.0, 50.0)),
)
# bin k covers [1 + 2(k-1), 1 + 2k) Hz, k = 1..25
TWO_HZ_BINS = tuple((f"{1 + 2 * k}-{3 + 2 * k}Hz", Band(1.0 + 2 * k, 3.0 + 2 * k)) for k in range(25))

PREPROCESS_BAND = Band(1.0, 75.0)
EEG_RATE_HZ = 200.0

SITE_PRESETS = {
    "forehead4": ("ch4", "ch5", "ch6", "ch7"),
    "temporal6": ("FT7", "FT8", "T7", "T8", "TP7", "TP8"),
    "posterior12": ("CP1", "CPZ", "CP2", "P1", "PZ", "P2", "PO3", "POZ", "PO4", "O1", "OZ", "O2"),
}


class Banding(str, enum.Enum):
    FIVE_BAND = "5band"
    TWO_HZ = "2hz"

    @property
    def bands(self):
        return FIVE_BANDS if self is Banding.FIVE_BAND else TWO_HZ_BINS


@dataclass(frozen=True, eq=False)
class IcaDenoiseReport:
    unmixing: np.ndarray
    eog_component_indices: frozenset
    retained_indices: frozenset
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class DeFeatureVector:
    values: np.ndarray
    banding: Banding
    window_start_s: float
    channel_names: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise NonpositiveVariance("DE features must be finite")
        if self.channel_names and v.shape[0] != len(self.channel_names) * len(self.banding.bands):
            raise ValueError("DE vector length does not match channels x bands")
        object.__setattr__(self, "values", v)


def feature_names(channel_names, banding: Banding) -> list:
    """Channel-major column labels ``<chan>_<band>``."""
    return [f"{ch}_{label}" for ch in channel_names for label, _ in Banding(banding).bands]


def differential_entropy(variance):
    v = np.asarray(variance, dtype=np.float64)
    if np.any(v <= 0):
        raise NonpositiveVariance("differential entropy needs a positive variance")
    out = 0.5 * np.log(2.0 * math.pi * math.e * v)
    return float(out) if out.ndim == 0 else out


def flag_eog_components(U, templates: EogPair, threshold: float = 0.5, cap: int = 2) -> frozenset:
    """Components whose |corr| with the VEO or HEO template reaches ``threshold``;
    at most ``cap`` of them, strongest first."""
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    scores = []
    for k, u in enumerate(U):
        best = 0.0
        for tpl in (templates.veo, templates.heo):
            a = u - u.mean()
            b = np.asarray(tpl, dtype=np.float64) - np.mean(tpl)
            den = math.sqrt(float(a @ a) * float(b @ b))
            if den > 0:
                best = max(best, abs(float(a @ b) / den))
        scores.append((best, k))
    chosen = [k for s, k in sorted(scores, key=lambda t: (-t[0], t[1])) if s >= threshold][:cap]
    return frozenset(chosen)


def reconstruct_forehead_eeg(quad: ForeheadQuad, seed: int = 0, templates: EogPair | None = None,
                             flagged=None, threshold: float = 0.5, cap: int = 2):
    """Zero the EOG components of the forehead ICA and project back.

    Templates default to the ICA-MINUS pair of the same quad. ``flagged``
    overrides the template rule with an explicit index set. The returned
    channels are the rows of ``X`` (note ``-ch6``), re-centred.
    """
    X = np.vstack([quad.ch4, quad.ch5, -quad.ch6, quad.ch7])
    res = fastica(X, 4, seed=seed)
    if flagged is None:
        templates = templates if templates is not None else combine_ica_minus(quad, seed)
        flagged = flag_eog_components(res.components, templates, threshold, cap)
    flagged = frozenset(int(k) for k in flagged)
    U = res.components.copy()
    U[sorted(flagged)] = 0.0
    X_clean = res.mixing_inverse @ U
    rec = Recording(X_clean, ("ch4", "ch5", "-ch6", "ch7"), quad.sample_rate_hz)
    report = IcaDenoiseReport(res.unmixing, flagged, frozenset(range(4)) - flagged, res.iterations)
    return rec, report


def preprocess(rec: Recording, band: Band = PREPROCESS_BAND, rate_hz: float = EEG_RATE_HZ) -> Recording:
    """Band-pass 1-75 Hz, then downsample to 200 Hz."""
    if band.high_hz >= rec.sample_rate_hz / 2:
        band = Band(band.low_hz, 0.45 * rec.sample_rate_hz)
    return resample(bandpass(rec, band), min(rate_hz, rec.sample_rate_hz))


def de_window(window: Recording, banding: Banding, segment_s: float = 2.0) -> np.ndarray:
    """DE for one window, channel-major."""
    freqs, pxx = psd(window, segment_s)
    cols = [integrate_band(freqs, pxx, band) for _, band in Banding(banding).bands]
    var = np.stack(cols, axis=1)                                 # [channels x bands]
    var = np.maximum(var, np.finfo(float).tiny)
    return differential_entropy(var).reshape(-1)


def extract_de_features(rec: Recording, banding=Banding.TWO_HZ, window: WindowSpec = WindowSpec()) -> list:
    banding = Banding(banding)
    return [DeFeatureVector(de_window(w, banding), banding, w.start_s, rec.channel_names)
            for w in partition_windows(rec, window)]


def write_de_csv(vectors, path, config_hash: str = "") -> None:
    names = feature_names(vectors[0].channel_names, vectors[0].banding) if vectors else []
    write_matrix(path, [v.window_start_s for v in vectors], names,
                 np.array([v.values for v in vectors]).reshape(len(vectors), -1), config_hash)
