from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vigil.dsp import (Band, Recording, WindowSpec, band_variance, bandpass, partition_windows,
                       read_recording, resample, write_recording)
from vigil.eeg import FIVE_BANDS
from vigil.errors import InvalidBand, InvalidRecording, RecordingTooShort, UpsampleUnsupported


def sine(freq, rate, seconds, amp=1.0):
    t = np.arange(int(round(rate * seconds))) / rate
    return amp * np.sin(2 * np.pi * freq * t)


def rec(x, rate):
    return Recording(np.atleast_2d(x), [f"c{i}" for i in range(np.atleast_2d(x).shape[0])], rate)


def steady_amplitude(x, rate):
    core = x[int(rate):-int(rate)]
    return np.sqrt(2 * np.mean(core ** 2))


# ---- recording container

def test_recording_rejects_nan_and_bad_names():
    with pytest.raises(InvalidRecording):
        Recording(np.array([[0.0, np.nan]]), ["a"], 100)
    with pytest.raises(InvalidRecording):
        Recording(np.zeros((2, 5)), ["a"], 100)
    with pytest.raises(InvalidRecording):
        Recording(np.zeros((1, 5)), ["a"], 0)


def test_band_validation():
    with pytest.raises(InvalidBand):
        Band(5, 5)
    with pytest.raises(InvalidBand):
        bandpass(rec(np.zeros(1000), 100), Band(1, 75))


# ---- bandpass

def test_bandpass_keeps_passband_sine():
    x = sine(50, 1000, 10)
    y = bandpass(rec(x, 1000), Band(1, 75)).samples[0]
    assert abs(steady_amplitude(y, 1000) - 1.0) <= 0.01


def test_bandpass_rejects_stopband_sine():
    x = sine(100, 1000, 10)
    y = bandpass(rec(x, 1000), Band(1, 75)).samples[0]
    spec_in = np.abs(np.fft.rfft(x))
    spec_out = np.abs(np.fft.rfft(y))
    k = int(np.argmax(spec_in))
    assert spec_out[k] <= 0.05 * spec_in[k]


def test_bandpass_removes_dc():
    y = bandpass(rec(np.full(10_000, 3.0), 1000), Band(1, 75)).samples[0]
    assert abs(y.mean()) <= 0.01 * 3.0


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**31 - 1))
def test_bandpass_and_resample_are_linear(a, b, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal((2, 2000))
    for f in (lambda s: bandpass(rec(s, 500), Band(1, 75)).samples[0],
              lambda s: resample(rec(s, 500), 200).samples[0]):
        lhs = f(a * x + b * y)
        rhs = a * f(x) + b * f(y)
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.abs(rhs).max()))


# ---- resample

def test_resample_length_and_identity():
    x = np.random.default_rng(0).standard_normal(10_000)
    out = resample(rec(x, 1000), 200)
    assert abs(out.n_samples - 2000) <= 1
    assert out.sample_rate_hz == 200
    same = resample(rec(x[:2000], 200), 200)
    assert np.array_equal(same.samples[0], x[:2000])


def test_resample_tracks_analytic_sine():
    out = resample(rec(sine(10, 1000, 10), 1000), 200).samples[0]
    ref = sine(10, 200, 10)
    assert np.corrcoef(out, ref)[0, 1] >= 0.999


def test_resample_refuses_upsampling():
    with pytest.raises(UpsampleUnsupported):
        resample(rec(np.zeros(100), 100), 200)


# ---- windows

@pytest.mark.parametrize("seconds,expected", [(7080, 885), (8, 1), (15.9, 1)])
def test_partition_counts(seconds, expected):
    rate = 10.0
    r = rec(np.zeros(int(round(seconds * rate))), rate)
    assert len(partition_windows(r, WindowSpec(8.0))) == expected


def test_partition_too_short():
    with pytest.raises(RecordingTooShort):
        partition_windows(rec(np.zeros(70), 10), WindowSpec(8.0))


@given(st.integers(80, 400), st.integers(0, 2**31 - 1))
def test_partition_concatenation_reproduces_truncated_input(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    wins = partition_windows(rec(x, 10), WindowSpec(8.0))
    joined = np.concatenate([w.samples[0] for w in wins])
    assert np.array_equal(joined, x[:joined.size])
    assert joined.size == (n // 80) * 80
    assert [w.start_s for w in wins] == [8.0 * k for k in range(len(wins))]


# ---- band variance

def test_band_variance_zero_signal():
    w = rec(np.zeros(1600), 200)
    for _, band in FIVE_BANDS:
        assert band_variance(w, band)[0] == 0.0


def test_band_variance_white_noise_monte_carlo():
    r = np.random.default_rng(1)
    est = [band_variance(rec(r.standard_normal(1600), 200), Band(1, 100))[0] for _ in range(100)]
    assert abs(np.mean(est) - 1.0) <= 0.10


def test_band_variance_parseval_sine():
    A = 2.0
    w = rec(sine(10, 200, 8, A), 200)
    assert abs(band_variance(w, Band(8, 14))[0] - A * A / 2) <= 0.1 * A * A / 2
    assert band_variance(w, Band(31, 50))[0] <= 0.01 * A * A / 2


def test_band_variance_additive_over_five_bands():
    r = np.random.default_rng(2)
    w = rec(r.standard_normal(1600 * 4), 200)
    total = sum(band_variance(w, b)[0] for _, b in FIVE_BANDS)
    assert abs(total - band_variance(w, Band(1, 50))[0]) <= 0.05 * total


# ---- files

@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_recording_file_round_trip(tmp_path, suffix):
    x = np.random.default_rng(3).standard_normal((3, 250))
    r = Recording(x, ["a", "b", "c"], 250.0)
    path = tmp_path / f"rec{suffix}"
    write_recording(r, path)
    back = read_recording(path)
    assert back.channel_names == r.channel_names
    assert back.sample_rate_hz == 250.0
    tol = 1e-6 if suffix == ".bin" else 0.0
    assert np.allclose(back.samples, x, rtol=tol, atol=tol * 10)
