"""Independent reference computations shared by the tests."""
from __future__ import annotations

import math

import numpy as np
import scipy.signal as sps

from vigil.dsp import Recording
from vigil.eeg import Banding, extract_de_features


def band_filtered_variance(x, rate, low, high, order=8):
    """Time-domain oracle: variance of the zero-phase band-filtered stream."""
    nyq = rate / 2.0
    sos = sps.butter(order, [low / nyq, high / nyq], btype="bandpass", output="sos")
    return float(np.var(sps.sosfiltfilt(sos, x)))


def de_oracle_errors(sigma, seed, seconds=320.0, rate=200.0, banding=Banding.FIVE_BAND):
    """|mean window DE - 0.5 ln(2 pi e var_oracle)| for every band."""
    x = sigma * np.random.default_rng(seed).standard_normal(int(seconds * rate))
    vecs = extract_de_features(Recording(x, ["c"], rate), banding)
    mean_de = np.mean([v.values for v in vecs], axis=0)
    errs = []
    for (_, band), de in zip(Banding(banding).bands, mean_de):
        var = band_filtered_variance(x, rate, band.low_hz, band.high_hz)
        errs.append(abs(de - 0.5 * math.log(2 * math.pi * math.e * var)))
    return np.array(errs)


def straight_rmse(y, p):
    total = 0.0
    for a, b in zip(y, p):
        total += (a - b) * (a - b)
    return math.sqrt(total / len(y))


def straight_cor(y, p):
    n = len(y)
    my = math.fsum(y) / n
    mp = math.fsum(p) / n
    sxy = math.fsum((a - my) * (b - mp) for a, b in zip(y, p))
    sxx = math.fsum((a - my) ** 2 for a in y)
    spp = math.fsum((b - mp) ** 2 for b in p)
    return sxy / math.sqrt(sxx * spp)
