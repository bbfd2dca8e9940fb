"""The 36 eye-movement features computed per window from detected events.

Rates are events per second in 1 s sub-bins; a "variance sample" for sub-bin
``j`` is the population variance of the quantity over sub-bins ``j-1..j+1``
(for rates) or over the events peaking in those sub-bins (for amplitudes and
durations, 0 when fewer than two). Empty inputs give 0 for every statistic.
The column order is fixed by ``eog_feature_manifest.json``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .events import EventKind
from .tables import write_matrix

_MANIFEST = json.loads(resources.files(__package__).joinpath("eog_feature_manifest.json").read_text())
MANIFEST_VERSION = _MANIFEST["version"]
FEATURE_NAMES = tuple(_MANIFEST["features"])
N_FEATURES = len(FEATURE_NAMES)
MANIFEST_HASH = hashlib.sha256(json.dumps(_MANIFEST, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class EogFeatureVector:
    values: np.ndarray
    window_start_s: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got {v.shape}")
        object.__setattr__(self, "values", v)

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


# sums go through math.fsum: correctly rounded, so features do not depend
# on event order

def _mean(values) -> float:
    return math.fsum(values) / len(values)


def _var(values) -> float:
    m = _mean(values)
    return math.fsum((x - m) ** 2 for x in values) / len(values)


def _stats(values):
    if len(values) == 0:
        return 0.0, 0.0, 0.0
    return float(max(values)), float(min(values)), _mean(values)


def _neighbour_var(per_bin, n_bins):
    """Variance over the 3-bin neighbourhood of each sub-bin."""
    out = np.zeros(n_bins)
    for j in range(n_bins):
        pooled = [x for k in range(max(j - 1, 0), min(j + 2, n_bins)) for x in per_bin[k]]
        if len(pooled) >= 2:
            out[j] = _var(pooled)
    return out


def _group(events, t0, n_bins, bin_s):
    bins = [[] for _ in range(n_bins)]
    for ev in events:
        j = int((ev.peak_s - t0) // bin_s)
        bins[min(max(j, 0), n_bins - 1)].append(ev)
    rate = np.array([len(b) / bin_s for b in bins])
    rate_var = _neighbour_var([[r] for r in rate], n_bins)
    amp_var = _neighbour_var([[e.amplitude for e in b] for b in bins], n_bins)
    dur_var = _neighbour_var([[e.duration_s for e in b] for b in bins], n_bins)
    amps = [e.amplitude for e in events]
    durs = [e.duration_s for e in events]
    power = math.fsum(a * a for a in amps)
    return {
        "rate_max": float(rate.max()), "rate_min": float(rate.min()),
        "rate_mean": _mean(rate), "rate_sum": math.fsum(rate),
        "amp": _stats(amps), "dur": _stats(durs),
        "rate_var_mean": _mean(rate_var), "rate_var_max": float(rate_var.max()),
        "amp_var_mean": _mean(amp_var), "amp_var_max": float(amp_var.max()),
        "dur_var_mean": _mean(dur_var), "dur_var_max": float(dur_var.max()),
        "power": power, "mean_power": power / len(amps) if amps else 0.0,
        "count": float(len(events)),
    }


def extract_eog_features(events, window, bin_s: float = 1.0) -> EogFeatureVector:
    t0, t1 = window
    n_bins = max(int(round((t1 - t0) / bin_s)), 1)
    inside = [e for e in events if t0 <= e.peak_s < t1]
    b = _group([e for e in inside if e.kind is EventKind.BLINK], t0, n_bins, bin_s)
    s = _group([e for e in inside if e.kind is EventKind.SACCADE], t0, n_bins, bin_s)
    values = [
        # blink
        b["rate_max"], b["rate_mean"], b["rate_sum"],
        b["amp"][0], b["amp"][1], b["amp"][2],
        b["rate_var_mean"], b["rate_var_max"], b["amp_var_mean"], b["amp_var_max"],
        b["power"], b["mean_power"], b["count"],
        # saccade
        s["rate_max"], s["rate_min"], s["rate_mean"],
        s["amp"][0], s["amp"][1], s["amp"][2],
        s["rate_var_max"], s["rate_var_mean"], s["amp_var_max"], s["amp_var_mean"],
        s["power"], s["mean_power"], s["count"],
        # durations
        b["dur_var_mean"], b["dur_var_max"], s["dur_var_mean"], s["dur_var_max"],
        b["dur"][0], b["dur"][1], b["dur"][2],
        s["dur"][0], s["dur"][1], s["dur"][2],
    ]
    return EogFeatureVector(np.array(values), float(t0))


def extract_windows(events, n_windows: int, window_s: float = 8.0, start_s: float = 0.0) -> list:
    events = sorted(events, key=lambda e: e.peak_s)
    peaks = np.array([e.peak_s for e in events])
    out = []
    for w in range(n_windows):
        t0 = start_s + w * window_s
        lo, hi = np.searchsorted(peaks, [t0, t0 + window_s], side="left")
        out.append(extract_eog_features(events[lo:hi], (t0, t0 + window_s)))
    return out


def write_features_csv(vectors, path, config_hash: str = "") -> None:
    write_matrix(path, [v.window_start_s for v in vectors], FEATURE_NAMES,
                 np.array([v.values for v in vectors]).reshape(-1, N_FEATURES), config_hash)
