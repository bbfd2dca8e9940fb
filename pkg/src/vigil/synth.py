"""Deterministic synthetic sessions with known ground truth.

A latent PERCLOS trajectory drives everything: the gaze stream (blinks, eye
closures, saccades, fixations) is laid out window by window so that PERCLOS of
the stream equals the trajectory exactly; blinks and closures are drawn onto a
vertical EOG source and saccades onto a horizontal one; band-limited EEG has
theta/alpha gains rising and gamma falling with drowsiness.

All event times sit on a 2**-10 s grid so durations add up exactly in binary
floating point. Waveform shapes and gains are fixed documented constants,
not physiological claims.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import signal as sps

from .errors import InvalidConfig
from .events import EventKind, EyeEvent
from .labels import GazeEvent, GazeKind
from .separation import ForeheadQuad
from .dsp import Recording

TIME_QUANTUM = 1.0 / 1024.0

EEG_BANDS = {
    "delta": (1.0, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 14.0),
    "beta": (14.0, 31.0),
    "gamma": (31.0, 50.0),
}
# awake amplitude (uV) and slope of the gain per unit PERCLOS
BAND_BASE = {"delta": 6.0, "theta": 4.0, "alpha": 5.0, "beta": 3.0, "gamma": 2.0}
BAND_SLOPE = {"delta": 0.3, "theta": 0.9, "alpha": 1.4, "beta": 0.0, "gamma": -0.6}
# per-site modulation strength: posterior > temporal > forehead
SITE_STRENGTH = {"posterior": 1.0, "temporal": 0.75, "forehead": 0.45}
# overall EEG amplitude per site; forehead EEG is small next to the EOG
SITE_AMPLITUDE = {"posterior": 1.0, "temporal": 1.0, "forehead": 0.4}
SITE_CHANNELS = {
    "posterior": ("CP1", "CPZ", "CP2", "P1", "PZ", "P2", "PO3", "POZ", "PO4", "O1", "OZ", "O2"),
    "temporal": ("FT7", "FT8", "T7", "T8", "TP7", "TP8"),
}
# forehead electrode gains for the vertical and horizontal sources (ch4..ch7)
VERTICAL_GAIN = np.array([1.0, 0.85, 0.75, 0.45])
HORIZONTAL_GAIN = np.array([0.15, 0.55, -0.45, 0.05])


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float = 2400.0
    sample_rate_hz: float = 250.0
    seed: int = 0
    window_s: float = 8.0
    trajectory_smooth_windows: float = 6.0
    trajectory_mean: float = 0.0       # shifts the latent walk; raises mean PERCLOS
    blink_amplitude_uv: float = 150.0
    saccade_amplitude_uv: float = 150.0
    closure_amplitude_uv: float = 60.0
    min_gap_s: float = 0.6
    sensor_noise_uv: float = 2.0
    eeg_shared_fraction: float = 0.5

    def validate(self):
        if self.duration_s < self.window_s:
            raise InvalidConfig("duration must cover at least one window")
        if self.sample_rate_hz < 110.0:
            raise InvalidConfig("sample rate must exceed 110 Hz (EEG up to 50 Hz, filters to 75 Hz)")
        for name in ("blink_amplitude_uv", "saccade_amplitude_uv", "min_gap_s", "window_s"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")
        if self.sensor_noise_uv < 0 or not (0 <= self.eeg_shared_fraction <= 1):
            raise InvalidConfig("noise levels out of range")


@dataclass
class SynthSession:
    config: SynthConfig
    quad: ForeheadQuad
    posterior: Recording
    temporal: Recording
    gaze: list
    perclos: np.ndarray          # truth per window
    window_starts: np.ndarray
    events: list                 # truth EyeEvents at the generator rate
    vertical: np.ndarray         # clean EOG sources (traditional VEO/HEO stand-ins)
    horizontal: np.ndarray
    meta: dict = field(default_factory=dict)


def _q(t: float) -> float:
    return round(t / TIME_QUANTUM) * TIME_QUANTUM


def blink_pulse(n: int) -> np.ndarray:
    """Asymmetric raised cosine: 40 % rise, 60 % fall, peak 1."""
    n = max(int(n), 3)
    rise = max(int(round(0.4 * n)), 1)
    fall = n - rise
    up = 0.5 * (1 - np.cos(np.pi * np.arange(rise) / rise))
    down = 0.5 * (1 + np.cos(np.pi * np.arange(fall) / max(fall - 1, 1)))
    return np.concatenate([up, down])


def step_ramp(n: int) -> np.ndarray:
    """Raised-cosine ramp from 0 to 1 over ``n`` samples."""
    n = max(int(n), 2)
    return 0.5 * (1 - np.cos(np.pi * np.arange(n) / (n - 1)))


def vigilance_trajectory(n_windows: int, rng, smooth: float = 6.0, shift: float = 0.0) -> np.ndarray:
    """Smoothed random walk squashed into [0.02, 0.95]."""
    walk = np.cumsum(rng.standard_normal(n_windows + 40))
    k = np.exp(-0.5 * (np.arange(-20, 21) / smooth) ** 2)
    z = np.convolve(walk, k / k.sum(), mode="same")[20:20 + n_windows]
    z = (z - z.mean()) / (z.std() + 1e-12)
    p = 1.0 / (1.0 + np.exp(-(1.6 * z + shift - 0.2)))
    return np.clip(p, 0.02, 0.95)


def _layout_window(t0, window_s, p, rng, cfg):
    """Gaze events for one window with closure fraction exactly ``p_q``."""
    closure = _q(p * window_s)
    blink_dur = _q(0.2 + 0.25 * p)
    n_blink = rng.poisson((0.25 + 0.35 * p) * window_s)
    n_blink = min(n_blink, int(closure // blink_dur))
    n_sacc = rng.poisson((0.05 + 0.55 * (1 - p)) * window_s)
    sacc_dur = _q(0.05)

    def need(nb, ns):
        clos = closure - nb * blink_dur
        items = nb + ns + (1 if clos > 0 else 0)
        return items, clos, (items + 1) * cfg.min_gap_s

    while True:
        items, clos, gaps_needed = need(n_blink, n_sacc)
        free = window_s - closure - n_sacc * sacc_dur
        if gaps_needed <= free or items == 0:
            break
        if n_sacc > 0:
            n_sacc -= 1
        elif n_blink > 0:
            n_blink -= 1
        else:
            break
    items, clos, _ = need(n_blink, n_sacc)
    kinds = [GazeKind.BLINK] * n_blink + [GazeKind.SACCADE] * n_sacc
    if clos > 0:
        kinds.append(GazeKind.CLOS)
    order = rng.permutation(len(kinds))
    kinds = [kinds[i] for i in order]
    durs = {GazeKind.BLINK: blink_dur, GazeKind.SACCADE: sacc_dur, GazeKind.CLOS: clos}
    busy = sum(durs[k] for k in kinds)
    free = window_s - busy
    slack = max(free - (len(kinds) + 1) * cfg.min_gap_s, 0.0)
    extra = rng.dirichlet(np.ones(len(kinds) + 1)) * slack
    gaps = [_q(cfg.min_gap_s + e) if free >= (len(kinds) + 1) * cfg.min_gap_s else _q(free / (len(kinds) + 1))
            for e in extra]
    stream = []
    t = t0
    for k, gap in zip(kinds, gaps):
        if gap > 0:
            stream.append(GazeEvent(GazeKind.FIXATION, t, t + gap))
        t += gap
        stream.append(GazeEvent(k, t, t + durs[k]))
        t += durs[k]
    if t0 + window_s > t:
        stream.append(GazeEvent(GazeKind.FIXATION, t, t0 + window_s))
    return stream, closure / window_s


def _band_noise(rng, n_rows, n, rate, band, order=4):
    sos = sps.butter(order, [band[0] / (rate / 2), band[1] / (rate / 2)], btype="bandpass", output="sos")
    x = sps.sosfilt(sos, rng.standard_normal((n_rows, n + int(2 * rate))), axis=1)[:, int(2 * rate):]
    return x / x.std(axis=1, keepdims=True)


def _eeg(rng, n_ch, n, rate, p_t, site, shared):
    out = np.zeros((n_ch, n))
    for name, band in EEG_BANDS.items():
        gain = SITE_AMPLITUDE[site] * BAND_BASE[name] * (1.0 + SITE_STRENGTH[site] * BAND_SLOPE[name] * p_t)
        src = _band_noise(rng, n_ch + 1, n, rate, band)
        mix = math.sqrt(shared) * src[:1] + math.sqrt(1 - shared) * src[1:]
        out += gain[None, :] * mix
    return out


def generate(cfg: SynthConfig = SynthConfig()) -> SynthSession:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    rate = cfg.sample_rate_hz
    n_win = int(cfg.duration_s // cfg.window_s)
    n = int(round(cfg.duration_s * rate))
    target = vigilance_trajectory(n_win, rng, cfg.trajectory_smooth_windows, cfg.trajectory_mean)

    gaze, truth = [], np.empty(n_win)
    for w in range(n_win):
        stream, p = _layout_window(w * cfg.window_s, cfg.window_s, target[w], rng, cfg)
        gaze.extend(stream)
        truth[w] = p
    window_starts = np.arange(n_win) * cfg.window_s

    vertical = np.zeros(n)
    horizontal = np.zeros(n)
    events = []
    position = 0.0
    for ev in gaze:
        i0 = int(round(ev.start_s * rate))
        i1 = int(round(ev.end_s * rate))
        if ev.kind is GazeKind.BLINK:
            pw = truth[min(int(ev.start_s // cfg.window_s), n_win - 1)]
            amp = cfg.blink_amplitude_uv * (1 - 0.35 * pw) * rng.uniform(0.85, 1.15)
            pulse = blink_pulse(i1 - i0)
            vertical[i0:i0 + pulse.size] += amp * pulse[: n - i0]
            peak = i0 + int(np.argmax(pulse))
            events.append(EyeEvent(EventKind.BLINK, i0, peak, i0 + pulse.size - 1, amp,
                                   (pulse.size - 1) / rate, rate))
        elif ev.kind is GazeKind.CLOS:
            edge = max(int(0.15 * rate), 2)
            seg = np.ones(max(i1 - i0, 2 * edge))
            seg[:edge] = step_ramp(edge)
            seg[-edge:] = step_ramp(edge)[::-1]
            vertical[i0:i0 + seg.size] += cfg.closure_amplitude_uv * seg[: n - i0]
        elif ev.kind is GazeKind.SACCADE:
            new = position
            while abs(new - position) < 0.4:
                new = rng.uniform(-1.0, 1.0)
            ramp = step_ramp(max(i1 - i0, 2))
            delta = (new - position) * cfg.saccade_amplitude_uv
            horizontal[i0:i0 + ramp.size] = position * cfg.saccade_amplitude_uv + delta * ramp[: n - i0]
            horizontal[i0 + ramp.size:] = new * cfg.saccade_amplitude_uv
            events.append(EyeEvent(EventKind.SACCADE, i0, i0 + ramp.size // 2, i0 + ramp.size - 1,
                                   abs(delta), (ramp.size - 1) / rate, rate))
            position = new
    centers = (np.arange(n_win) + 0.5) * cfg.window_s
    t = np.arange(n) / rate
    p_t = np.interp(t, centers, truth)

    eeg_front = _eeg(rng, 4, n, rate, p_t, "forehead", cfg.eeg_shared_fraction)
    quad_x = (VERTICAL_GAIN[:, None] * vertical[None, :]
              + HORIZONTAL_GAIN[:, None] * horizontal[None, :]
              + eeg_front + cfg.sensor_noise_uv * rng.standard_normal((4, n)))
    quad = ForeheadQuad(*quad_x, sample_rate_hz=rate)

    sites = {}
    for site, names in SITE_CHANNELS.items():
        x = _eeg(rng, len(names), n, rate, p_t, site, cfg.eeg_shared_fraction)
        x += cfg.sensor_noise_uv * rng.standard_normal(x.shape)
        sites[site] = Recording(x, names, rate)

    return SynthSession(cfg, quad, sites["posterior"], sites["temporal"], gaze, truth,
                        window_starts, events, vertical, horizontal,
                        meta={"config": asdict(cfg)})


# --- single-trace suites for detector checks --------------------------------

def eog_trace(kind, n_events: int = 50, duration_s: float = 600.0, rate: float = 1000.0,
              snr_db: float = 10.0, seed: int = 0, amplitude_uv: float = 100.0):
    """One noisy trace with ``n_events`` canonical blinks or saccade steps.

    SNR is ``20 log10(amplitude / noise_std)`` with white noise at ``rate``.
    Events are spaced at least 1.5 s apart. Returns ``(trace, truth_events)``.
    """
    kind = EventKind(kind)
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * rate))
    slots = np.sort(rng.choice(np.arange(2, int(duration_s / 1.5) - 1), n_events, replace=False))
    onsets = slots * 1.5 + rng.uniform(0, 0.4, n_events)
    x = np.zeros(n)
    truth = []
    level = 0.0
    for k, t0 in enumerate(onsets):
        i0 = int(round(t0 * rate))
        amp = amplitude_uv * rng.uniform(0.85, 1.15)
        if kind is EventKind.BLINK:
            pulse = blink_pulse(int(rng.uniform(0.25, 0.35) * rate))
            x[i0:i0 + pulse.size] += amp * pulse
            truth.append(EyeEvent(kind, i0, i0 + int(np.argmax(pulse)), i0 + pulse.size - 1,
                                  amp, (pulse.size - 1) / rate, rate))
        else:
            direction = 1.0 if level <= 0 else -1.0
            ramp = step_ramp(int(0.05 * rate))
            x[i0:i0 + ramp.size] = level + direction * amp * ramp
            level = level + direction * amp
            x[i0 + ramp.size:] = level
            truth.append(EyeEvent(kind, i0, i0 + ramp.size // 2, i0 + ramp.size - 1,
                                  amp, (ramp.size - 1) / rate, rate))
    noise = amplitude_uv / 10 ** (snr_db / 20.0)
    x += noise * rng.standard_normal(n)
    return x, truth


def _burst_envelope(rng, n, rate, cutoff_hz):
    env = _band_noise(rng, 1, n, rate, (0.05, cutoff_hz), order=2)[0]
    return np.exp(env)


def forehead_mixture(seed: int = 0, duration_s: float = 60.0, rate: float = 200.0,
                     blink_uv: float = 100.0, saccade_uv: float = 60.0, eeg_uv: float = 10.0):
    """Four forehead channels mixing two EOG and two EEG sources with known gains.

    Sources are a blink train (vertical), saccade steps (horizontal), alpha
    (8-13 Hz) and beta (14-30 Hz) filtered noise. Returns
    ``(quad, sources, eeg_quad)`` where ``sources`` maps names to traces and
    ``eeg_quad`` holds the EEG-only part of each channel.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * rate))
    veo = np.zeros(n)
    heo = np.zeros(n)
    t = 1.0
    level = 0.0
    while t < duration_s - 2.0:
        i0 = int(t * rate)
        if rng.random() < 0.6:
            pulse = blink_pulse(int(rng.uniform(0.25, 0.35) * rate))
            veo[i0:i0 + pulse.size] += blink_uv * rng.uniform(0.8, 1.2) * pulse
        else:
            ramp = step_ramp(max(int(0.05 * rate), 2))
            step = (1.0 if level <= 0 else -1.0) * saccade_uv * rng.uniform(0.8, 1.2)
            heo[i0:i0 + ramp.size] = level + step * ramp
            level += step
            heo[i0 + ramp.size:] = level
        t += rng.uniform(0.8, 2.0)
    alpha = _band_noise(rng, 1, n, rate, (8.0, 13.0))[0]
    beta = _band_noise(rng, 1, n, rate, (14.0, 30.0))[0]
    # waxing/waning envelopes make the rhythms bursty rather than Gaussian
    alpha *= _burst_envelope(rng, n, rate, 0.3)
    beta *= _burst_envelope(rng, n, rate, 0.7)
    alpha *= eeg_uv / alpha.std()
    beta *= 0.6 * eeg_uv / beta.std()
    # neighbouring electrodes see the rhythms with similar positive gains
    eeg_gain = rng.uniform(0.6, 1.0, (4, 2))
    eeg = eeg_gain @ np.vstack([alpha, beta])
    mixed = np.outer(VERTICAL_GAIN, veo) + np.outer(HORIZONTAL_GAIN, heo) + eeg
    quad = ForeheadQuad(*mixed, sample_rate_hz=rate)
    eeg_quad = ForeheadQuad(*eeg, sample_rate_hz=rate)
    return quad, {"veo": veo, "heo": heo, "alpha": alpha, "beta": beta}, eeg_quad


def match_events(detected, truth, tol_s: float = 0.15):
    """Greedy one-to-one matching on peak time; returns (tp, fp, fn)."""
    used = set()
    tp = 0
    truth_peaks = np.array([e.peak_s for e in truth])
    for d in detected:
        if truth_peaks.size == 0:
            break
        dist = np.abs(truth_peaks - d.peak_s)
        for j in np.argsort(dist):
            if dist[j] > tol_s:
                break
            if j not in used:
                used.add(j)
                tp += 1
                break
    return tp, len(detected) - tp, len(truth) - tp
