from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vigil.errors import DegenerateSignal, SignalTooShort
from vigil.events import (NEG, POS, EventKind, EyeEvent, PeakCode, WaveletConfig, auto_thresholds,
                          cwt_mexican_hat, detect_blinks, detect_events, detect_saccades,
                          detect_trace, encode_peaks, mexican_hat, read_events_jsonl,
                          write_events_jsonl)
from vigil.separation import separate
from vigil.synth import SynthConfig, blink_pulse, eog_trace, generate, match_events


def code(symbol, t, mag=10.0, half=5):
    return PeakCode(symbol, t, mag, t - half, t + half)


def spans(events):
    return [(e.start_idx, e.peak_idx, e.end_idx) for e in events]


# ---- wavelet

def test_mother_wavelet_at_zero():
    assert mexican_hat(0.0) == pytest.approx(2.0 / (math.sqrt(3.0) * math.pi ** 0.25), abs=1e-12)
    assert mexican_hat(0.0) == pytest.approx(0.8673, abs=1e-4)


def test_mother_wavelet_has_zero_mean():
    dt = 0.01
    t = np.arange(-8.0, 8.0 + dt / 2, dt)
    assert abs(np.sum(mexican_hat(t)) * dt) <= 1e-3


def test_cwt_kills_constant_signal():
    c = 7.5
    out = cwt_mexican_hat(np.full(500, c))
    assert out.shape == (500,)
    assert np.max(np.abs(out)) <= 1e-6 * c


def test_cwt_length_check():
    with pytest.raises(SignalTooShort):
        cwt_mexican_hat(np.zeros(80), WaveletConfig(scale=8))


def test_wavelet_config_validation():
    with pytest.raises(ValueError):
        WaveletConfig(theta_h=1.0, theta_l=2.0)
    with pytest.raises(ValueError):
        WaveletConfig(scale=0)


# ---- thresholds

def test_auto_thresholds_on_gaussian():
    c = np.random.default_rng(0).standard_normal(200_000)
    th, tl = auto_thresholds(c)
    assert abs(tl - 3.0) <= 0.2
    assert th == pytest.approx(2 * tl)


@given(st.integers(0, 2**31 - 1), st.floats(0.01, 1000))
def test_auto_thresholds_scale_equivariant(seed, k):
    c = np.random.default_rng(seed).standard_normal(500)
    th, tl = auto_thresholds(c)
    th2, tl2 = auto_thresholds(k * c)
    assert th2 == pytest.approx(k * th, rel=1e-9)
    assert tl2 == pytest.approx(k * tl, rel=1e-9)


def test_auto_thresholds_constant():
    with pytest.raises(DegenerateSignal):
        auto_thresholds(np.ones(100))


# ---- peak encoding

def test_single_positive_bump_gives_one_pos_code():
    x = np.zeros(200)
    x[90:111] = 10 - np.abs(np.arange(-10, 11))
    codes = encode_peaks(x, WaveletConfig(theta_h=5.0, theta_l=1.0))
    assert [c.symbol for c in codes] == [POS]
    assert codes[0].time_idx == 100


def test_all_zero_coefficients_give_no_codes():
    assert encode_peaks(np.zeros(200), WaveletConfig(theta_h=1.0, theta_l=0.5)) == []


def test_blink_pulse_through_cwt_gives_neg_pos_neg():
    x = np.zeros(400)
    x[150:180] = 100 * blink_pulse(30)
    x += 0.5 * np.random.default_rng(1).standard_normal(400)
    codes = encode_peaks(cwt_mexican_hat(x))
    assert [c.symbol for c in codes] == [NEG, POS, NEG]


# ---- blink and saccade rules

def test_blink_rule_instance():
    codes = [code(NEG, 100), code(POS, 120), code(NEG, 140)]
    assert len(detect_blinks(codes, rate=100.0)) == 1


def test_incomplete_blink_pattern():
    assert detect_blinks([code(NEG, 100), code(POS, 120)], rate=100.0) == []


def test_blink_rejected_when_outer_peaks_too_far_or_unbalanced():
    assert detect_blinks([code(NEG, 100), code(POS, 130), code(NEG, 160)], rate=100.0) == []
    assert detect_blinks([code(NEG, 100, 40.0), code(POS, 120), code(NEG, 140, 5.0)], rate=100.0) == []


def test_saccade_rule_instances():
    assert len(detect_saccades([code(POS, 100), code(NEG, 120)], rate=100.0)) == 1
    assert detect_saccades([code(POS, 100)], rate=100.0) == []


def test_blink_codes_are_not_reused_as_saccades():
    codes = [code(NEG, 100), code(POS, 120), code(NEG, 140)]
    assert detect_saccades(codes, rate=100.0) == []


def test_event_invariants():
    with pytest.raises(ValueError):
        EyeEvent(EventKind.BLINK, 5, 5, 9, 1.0, 0.1, 100.0)
    with pytest.raises(ValueError):
        EyeEvent(EventKind.BLINK, 1, 5, 9, 0.0, 0.1, 100.0)


# ---- synthetic suites

@pytest.mark.parametrize("kind,n", [("blink", 50), ("saccade", 30)])
def test_detector_on_canonical_suite(kind, n):
    x, truth = eog_trace(kind, n, seed=0)
    det = detect_trace(x, 1000.0, EventKind(kind))
    tp, fp, fn = match_events(det, truth)
    assert tp >= 0.9 * n and fp <= 0.1 * len(det)
    if kind == "blink":
        assert tp >= 45 and fp <= 5
    else:
        assert tp >= 27


@given(st.floats(0.1, 100.0))
def test_amplitude_scaling_keeps_indices(c):
    x, _ = eog_trace("blink", 10, duration_s=60, seed=3)
    a = detect_trace(x, 1000.0, EventKind.BLINK)
    b = detect_trace(c * x, 1000.0, EventKind.BLINK)
    assert spans(a) == spans(b)
    assert np.allclose([e.amplitude for e in b], [c * e.amplitude for e in a], rtol=1e-9)


def test_time_shift_moves_indices_by_k():
    x, _ = eog_trace("blink", 10, duration_s=60, rate=100.0, seed=4)
    k = 37
    shifted = np.concatenate([np.zeros(k), x])[:x.size]
    cfg_rate = 100.0
    a = detect_trace(x, cfg_rate, EventKind.BLINK)
    b = detect_trace(shifted, cfg_rate, EventKind.BLINK)
    inner = [s for s in spans(a) if s[2] + k < x.size - 50]
    assert [(s + k, p + k, e + k) for s, p, e in inner] == [s for s in spans(b) if s[2] < x.size - 50]


@given(st.integers(0, 50))
def test_events_ordered_disjoint_and_inside(seed):
    x, _ = eog_trace("saccade", 12, duration_s=60, rate=200.0, seed=seed)
    ev = detect_trace(x, 200.0, EventKind.SACCADE)
    n = int(x.size * 100 / 200)
    for a, b in zip(ev, ev[1:]):
        assert a.end_idx <= b.start_idx
    for e in ev:
        assert 0 <= e.start_idx < e.peak_idx < e.end_idx < n
        assert e.duration_s == pytest.approx((e.end_idx - e.start_idx) / e.sample_rate_hz)


def test_detector_against_generator_events():
    s = generate(SynthConfig(duration_s=600, seed=1))
    pair = separate(s.quad, "ica-minus", seed=1)
    blinks, saccades = detect_events(pair.veo, pair.heo, s.quad.sample_rate_hz)
    for det, kind in ((blinks, EventKind.BLINK), (saccades, EventKind.SACCADE)):
        truth = [e for e in s.events if e.kind is kind]
        tp, fp, fn = match_events(det, truth)
        assert tp / (tp + fp) >= 0.9
        assert tp / (tp + fn) >= 0.9


def test_events_jsonl_round_trip(tmp_path):
    x, _ = eog_trace("blink", 5, duration_s=30, seed=5)
    ev = detect_trace(x, 1000.0, EventKind.BLINK)
    path = tmp_path / "ev.jsonl"
    write_events_jsonl(ev, path)
    back = read_events_jsonl(path)
    assert spans(back) == spans(ev)
    assert [e.sample_rate_hz for e in back] == [e.sample_rate_hz for e in ev]
