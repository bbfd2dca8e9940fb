"""Blink and saccade detection on VEO/HEO traces.

The trace is convolved with an L2-normalised Mexican hat; runs of the
coefficients beyond the low threshold whose extremum clears the high threshold
are encoded as 1 (positive) or 0 (negative). ``0 1 0`` triples become blink
candidates and adjacent ``0 1`` / ``1 0`` pairs saccade candidates, each then
filtered by timing, balance and shape constraints.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import DegenerateSignal, SignalTooShort
from .dsp import Recording, resample

POS, NEG = 1, 0

MAD_TO_SIGMA = 0.6745


class EventKind(str, enum.Enum):
    BLINK = "blink"
    SACCADE = "saccade"


@dataclass(frozen=True)
class WaveletConfig:
    scale: float = 8.0
    sigma: float = 1.0
    theta_h: float | None = None   # None -> auto_thresholds
    theta_l: float | None = None

    def __post_init__(self):
        if self.scale <= 0 or self.sigma <= 0:
            raise ValueError("scale and sigma must be positive")
        if (self.theta_h is None) != (self.theta_l is None):
            raise ValueError("set both thresholds or neither")
        if self.theta_h is not None and not (self.theta_h > self.theta_l >= 0):
            raise ValueError("thresholds need theta_h > theta_l >= 0")


@dataclass(frozen=True)
class PeakCode:
    symbol: int
    time_idx: int
    magnitude: float
    start_idx: int
    end_idx: int


@dataclass(frozen=True)
class BlinkConstraints:
    max_blink_s: float = 0.5          # outer NEG to outer NEG
    ratio_range: tuple = (1.0 / 3.0, 3.0)
    max_segment_s: float = 1.0
    min_template_corr: float = 0.6
    min_slope: float = 0.0            # uV/s, mean |slope| between outer peaks


@dataclass(frozen=True)
class SaccadeConstraints:
    max_saccade_s: float = 0.3
    max_segment_s: float = 1.0
    min_template_corr: float = 0.6
    min_slope: float = 0.0


@dataclass(frozen=True)
class EyeEvent:
    kind: EventKind
    start_idx: int
    peak_idx: int
    end_idx: int
    amplitude: float
    duration_s: float
    sample_rate_hz: float

    def __post_init__(self):
        if not (self.start_idx < self.peak_idx < self.end_idx):
            raise ValueError("event needs start < peak < end")
        if not self.amplitude > 0:
            raise ValueError("event amplitude must be positive")

    @property
    def start_s(self) -> float:
        return self.start_idx / self.sample_rate_hz

    @property
    def peak_s(self) -> float:
        return self.peak_idx / self.sample_rate_hz

    @property
    def end_s(self) -> float:
        return self.end_idx / self.sample_rate_hz

    def shifted(self, seconds: float) -> "EyeEvent":
        k = int(round(seconds * self.sample_rate_hz))
        return EyeEvent(self.kind, self.start_idx + k, self.peak_idx + k, self.end_idx + k,
                        self.amplitude, self.duration_s, self.sample_rate_hz)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "start_s": self.start_s,
            "peak_s": self.peak_s,
            "end_s": self.end_s,
            "amplitude_uv": self.amplitude,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
        }

    @classmethod
    def from_json(cls, obj: dict, sample_rate_hz: float = 1000.0) -> "EyeEvent":
        r = float(obj.get("sample_rate_hz", sample_rate_hz))
        return cls(EventKind(obj["kind"]), int(round(obj["start_s"] * r)),
                   int(round(obj["peak_s"] * r)), int(round(obj["end_s"] * r)),
                   float(obj["amplitude_uv"]), float(obj["duration_s"]), r)


def mexican_hat(t, sigma: float = 1.0):
    """Mother wavelet with unit L2 norm."""
    t = np.asarray(t, dtype=np.float64)
    norm = 2.0 / (math.sqrt(3.0 * sigma) * math.pi ** 0.25)
    r = (t / sigma) ** 2
    return norm * (1.0 - r) * np.exp(-r / 2.0)


def wavelet_kernel(cfg: WaveletConfig) -> np.ndarray:
    half = int(math.ceil(8.0 * cfg.sigma * cfg.scale))
    k = np.arange(-half, half + 1, dtype=np.float64)
    kern = mexican_hat(k / cfg.scale, cfg.sigma) / math.sqrt(cfg.scale)
    # remove the truncation/sampling residue so DC maps exactly to zero
    return kern - kern.mean()


def cwt_mexican_hat(x, cfg: WaveletConfig = WaveletConfig()) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] <= 10 * cfg.scale:
        raise SignalTooShort(f"need more than {10 * cfg.scale:g} samples, got {x.shape[0]}")
    kern = wavelet_kernel(cfg)
    half = kern.shape[0] // 2
    padded = np.pad(x, half, mode="symmetric") if half < x.shape[0] else \
        np.pad(x, half, mode="reflect" if x.shape[0] > 1 else "edge")
    # kernel is symmetric, so correlation == convolution
    return np.convolve(padded, kern, mode="valid")


def auto_thresholds(coeffs):
    """``theta_l = 3 * MAD / 0.6745``, ``theta_h = 2 * theta_l``."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.size == 0:
        raise DegenerateSignal("no coefficients")
    mad = float(np.median(np.abs(c - np.median(c))))
    if not mad > 0:
        raise DegenerateSignal("median absolute deviation is zero")
    theta_l = 3.0 * mad / MAD_TO_SIGMA
    return 2.0 * theta_l, theta_l


def resolve_thresholds(coeffs, cfg: WaveletConfig):
    if cfg.theta_h is not None:
        return cfg.theta_h, cfg.theta_l
    return auto_thresholds(coeffs)


def encode_peaks(coeffs, cfg: WaveletConfig = WaveletConfig()) -> list:
    theta_h, theta_l = resolve_thresholds(coeffs, cfg)
    sym, peak, start, end, mag = _core.scan_peak_runs(coeffs, theta_h, theta_l)
    return [PeakCode(int(s), int(p), float(m), int(a), int(b))
            for s, p, a, b, m in zip(sym, peak, start, end, mag)]


def _corr(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    return float(np.dot(a, b) / den) if den > 0 else 0.0


def _blink_candidate(codes, i, x, rate, cons: BlinkConstraints):
    a, b, c = codes[i], codes[i + 1], codes[i + 2]
    if (a.symbol, b.symbol, c.symbol) != (NEG, POS, NEG):
        return None
    if (c.time_idx - a.time_idx) / rate > cons.max_blink_s:
        return None
    ratio = a.magnitude / c.magnitude
    lo, hi = cons.ratio_range
    if not (lo <= ratio <= hi):
        return None
    start, end = a.start_idx, c.end_idx
    if (end - start) / rate > cons.max_segment_s:
        return None
    if x is None:
        return start, b.time_idx, end, 1.0
    seg = x[a.time_idx:c.time_idx + 1]
    if seg.shape[0] < 3:
        return None
    width = (c.time_idx - a.time_idx) / (2.0 * math.sqrt(3.0))
    t = np.arange(a.time_idx, c.time_idx + 1) - b.time_idx
    if _corr(seg, np.exp(-0.5 * (t / max(width, 1e-9)) ** 2)) < cons.min_template_corr:
        return None
    if np.mean(np.abs(np.diff(seg))) * rate < cons.min_slope:
        return None
    amplitude = x[b.time_idx] - 0.5 * (x[start] + x[end])
    if not amplitude > 0:
        return None
    return start, b.time_idx, end, float(amplitude)


def _blink_triples(codes, x, rate, cons):
    found = []
    i = 0
    while i + 2 < len(codes):
        hit = _blink_candidate(codes, i, x, rate, cons)
        if hit is not None:
            found.append((i, hit))
            i += 3
        else:
            i += 1
    return found


def detect_blinks(codes, x=None, rate: float = 100.0,
                  constraints: BlinkConstraints = BlinkConstraints()) -> list:
    """Blink events from ``NEG POS NEG`` code triples.

    ``x`` is the trace the codes came from (used for amplitude and shape
    checks); without it the amplitude is reported as 1.
    """
    x = None if x is None else np.asarray(x, dtype=np.float64)
    out = []
    for _, (start, peak, end, amp) in _blink_triples(codes, x, rate, constraints):
        out.append(EyeEvent(EventKind.BLINK, start, peak, end, amp, (end - start) / rate, rate))
    return out


def detect_saccades(codes, x=None, rate: float = 100.0,
                    constraints: SaccadeConstraints = SaccadeConstraints(),
                    blink_constraints: BlinkConstraints = BlinkConstraints()) -> list:
    """Saccade events from adjacent opposite-sign code pairs.

    Codes taken by a blink triple in the same stream are skipped.
    """
    x = None if x is None else np.asarray(x, dtype=np.float64)
    used = set()
    for i, _ in _blink_triples(codes, x, rate, blink_constraints):
        used.update((i, i + 1, i + 2))
    out = []
    i = 0
    while i + 1 < len(codes):
        a, b = codes[i], codes[i + 1]
        ok = (i not in used and i + 1 not in used and a.symbol != b.symbol
              and (b.time_idx - a.time_idx) / rate <= constraints.max_saccade_s
              and (b.end_idx - a.start_idx) / rate <= constraints.max_segment_s)
        amp = 1.0
        if ok and x is not None:
            seg = x[a.time_idx:b.time_idx + 1]
            t = np.arange(a.time_idx, b.time_idx + 1) - 0.5 * (a.time_idx + b.time_idx)
            width = max((b.time_idx - a.time_idx) / 4.0, 1e-9)
            ok = (seg.shape[0] >= 3
                  and abs(_corr(seg, np.tanh(t / width))) >= constraints.min_template_corr
                  and np.mean(np.abs(np.diff(seg))) * rate >= constraints.min_slope)
            amp = abs(float(x[b.end_idx] - x[a.start_idx]))
            ok = ok and amp > 0
        peak = (a.time_idx + b.time_idx) // 2
        if ok and a.start_idx < peak < b.end_idx:
            out.append(EyeEvent(EventKind.SACCADE, a.start_idx, peak, b.end_idx, amp,
                                (b.end_idx - a.start_idx) / rate, rate))
            i += 2
        else:
            i += 1
    return out


@dataclass(frozen=True)
class DetectorConfig:
    wavelet: WaveletConfig = WaveletConfig()
    blink: BlinkConstraints = BlinkConstraints()
    saccade: SaccadeConstraints = SaccadeConstraints()
    detect_rate_hz: float = 100.0


def _at_rate(x, rate, target):
    if target is None or target >= rate:
        return np.asarray(x, dtype=np.float64), rate
    rec = resample(Recording(np.asarray(x, dtype=np.float64)[None, :], ["x"], rate), target)
    return rec.samples[0], target


def detect_trace(x, rate: float, kind: EventKind, cfg: DetectorConfig = DetectorConfig()) -> list:
    """Resample to the detection rate, transform, encode and detect one kind."""
    y, r = _at_rate(x, rate, cfg.detect_rate_hz)
    coeffs = cwt_mexican_hat(y, cfg.wavelet)
    codes = encode_peaks(coeffs, cfg.wavelet)
    if EventKind(kind) is EventKind.BLINK:
        return detect_blinks(codes, y, r, cfg.blink)
    return detect_saccades(codes, y, r, cfg.saccade, cfg.blink)


def detect_events(veo, heo, rate: float, cfg: DetectorConfig = DetectorConfig()):
    """Blinks from the vertical trace and saccades from the horizontal one."""
    return (detect_trace(veo, rate, EventKind.BLINK, cfg),
            detect_trace(heo, rate, EventKind.SACCADE, cfg))


def write_events_jsonl(events, path) -> None:
    with open(path, "w") as fh:
        for ev in sorted(events, key=lambda e: (e.peak_s, e.kind.value)):
            fh.write(json.dumps(ev.to_json()) + "\n")


def read_events_jsonl(path, sample_rate_hz: float = 1000.0) -> list:
    with open(path) as fh:
        return [EyeEvent.from_json(json.loads(line), sample_rate_hz) for line in fh if line.strip()]
