"""Signal containers and the shared DSP primitives.

Every stage downstream works on :class:`Recording`: a ``[channels x time]``
float64 matrix in microvolts with channel labels and a sample rate.
Filtering is zero-phase so event timestamps are never shifted.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import (
    InvalidBand,
    InvalidRecording,
    RecordingTooShort,
    UpsampleUnsupported,
)

BINARY_MAGIC = b"VGLR"
_BINARY_HEADER = struct.Struct("<4sIdQ")

DEFAULT_FILTER_ORDER = 8


@dataclass(frozen=True)
class Band:
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not (0.0 <= self.low_hz < self.high_hz):
            raise InvalidBand(f"band requires 0 <= low < high, got ({self.low_hz}, {self.high_hz})")

    def check(self, sample_rate_hz: float) -> None:
        if self.high_hz > sample_rate_hz / 2.0:
            raise InvalidBand(
                f"band upper edge {self.high_hz} Hz exceeds Nyquist ({sample_rate_hz / 2.0} Hz)"
            )

    @property
    def label(self) -> str:
        return f"{self.low_hz:g}-{self.high_hz:g}Hz"


@dataclass(frozen=True)
class WindowSpec:
    length_s: float = 8.0
    overlap_s: float = 0.0

    def __post_init__(self):
        if self.length_s <= 0:
            raise ValueError("window length must be positive")
        if not (0.0 <= self.overlap_s < self.length_s):
            raise ValueError("overlap must satisfy 0 <= overlap < length")


@dataclass(frozen=True, eq=False)
class Recording:
    """Multichannel recording; ``start_s`` is the absolute time of sample 0."""

    samples: np.ndarray
    channel_names: tuple
    sample_rate_hz: float
    start_s: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2:
            raise InvalidRecording("samples must be a [channels x time] matrix")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != x.shape[0]:
            raise InvalidRecording(
                f"{len(names)} channel names for {x.shape[0]} channels"
            )
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise InvalidRecording("sample_rate_hz must be a positive finite number")
        if not np.all(np.isfinite(x)):
            raise InvalidRecording("recording contains NaN or Inf samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.samples[self.channel_names.index(name)]
        except ValueError:
            raise InvalidRecording(f"no channel named {name!r}") from None

    def select(self, names) -> "Recording":
        idx = [self.channel_names.index(n) for n in names]
        return self.replace(samples=self.samples[idx], channel_names=tuple(names))

    def replace(self, **changes) -> "Recording":
        kwargs = dict(
            samples=self.samples,
            channel_names=self.channel_names,
            sample_rate_hz=self.sample_rate_hz,
            start_s=self.start_s,
            meta=dict(self.meta),
        )
        kwargs.update(changes)
        return Recording(**kwargs)


def _as_recording(x, sample_rate_hz=None) -> Recording:
    if isinstance(x, Recording):
        return x
    arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return Recording(arr, [f"ch{i}" for i in range(arr.shape[0])], sample_rate_hz)


def bandpass(rec: Recording, band: Band, order: int = DEFAULT_FILTER_ORDER) -> Recording:
    """Zero-phase Butterworth band-pass (forward-backward, second-order sections).

    A band starting at 0 Hz degenerates to a low-pass.
    """
    band.check(rec.sample_rate_hz)
    nyq = rec.sample_rate_hz / 2.0
    if band.low_hz <= 0:
        sos = sps.butter(order, band.high_hz / nyq, btype="lowpass", output="sos")
    elif band.high_hz >= nyq:
        sos = sps.butter(order, band.low_hz / nyq, btype="highpass", output="sos")
    else:
        sos = sps.butter(order, [band.low_hz / nyq, band.high_hz / nyq],
                         btype="bandpass", output="sos")
    # pad ~3 periods of the lowest edge so start-up transients stay outside the record
    edge = band.low_hz if band.low_hz > 0 else band.high_hz
    padlen = min(rec.n_samples - 1, int(3 * rec.sample_rate_hz / edge))
    out = sps.sosfiltfilt(sos, rec.samples, axis=1, padlen=padlen)
    return rec.replace(samples=out)


def resample(rec: Recording, target_hz: float) -> Recording:
    """Polyphase decimation with the built-in anti-alias FIR."""
    if target_hz > rec.sample_rate_hz:
        raise UpsampleUnsupported(
            f"cannot resample {rec.sample_rate_hz} Hz up to {target_hz} Hz"
        )
    if target_hz == rec.sample_rate_hz:
        return rec.replace(samples=rec.samples.copy())
    ratio = Fraction(target_hz / rec.sample_rate_hz).limit_denominator(10_000)
    out = sps.resample_poly(rec.samples, ratio.numerator, ratio.denominator, axis=1)
    return rec.replace(samples=out, sample_rate_hz=float(target_hz))


def partition_windows(rec: Recording, spec: WindowSpec = WindowSpec()) -> list:
    """Cut into fixed windows; the trailing partial window is dropped."""
    win = int(round(spec.length_s * rec.sample_rate_hz))
    step = int(round((spec.length_s - spec.overlap_s) * rec.sample_rate_hz))
    if win > rec.n_samples:
        raise RecordingTooShort(
            f"recording lasts {rec.duration_s:.3f} s, shorter than one {spec.length_s} s window"
        )
    windows = []
    for start in range(0, rec.n_samples - win + 1, step):
        windows.append(rec.replace(
            samples=rec.samples[:, start:start + win],
            start_s=rec.start_s + start / rec.sample_rate_hz,
        ))
    return windows


def psd(rec: Recording, segment_s: float = 2.0):
    """One-sided Hann-windowed STFT power spectral density (averaged segments).

    Segments overlap by 75 %, where squared Hann windows sum to a constant, so
    samples away from the record edges carry equal weight.
    """
    nper = min(rec.n_samples, int(round(segment_s * rec.sample_rate_hz)))
    freqs, pxx = sps.welch(
        rec.samples, fs=rec.sample_rate_hz, window="hann", nperseg=nper,
        noverlap=(3 * nper) // 4, detrend="constant", scaling="density", axis=1,
    )
    return freqs, pxx


def integrate_band(freqs: np.ndarray, pxx: np.ndarray, band: Band) -> np.ndarray:
    """Integrate a PSD over bins whose centre lies in ``[low, high)``."""
    df = freqs[1] - freqs[0]
    mask = (freqs >= band.low_hz) & (freqs < band.high_hz)
    return pxx[..., mask].sum(axis=-1) * df


def band_variance(window: Recording, band: Band, segment_s: float = 2.0) -> np.ndarray:
    """Per-channel signal variance attributable to ``band``."""
    if window.n_samples < window.sample_rate_hz:
        raise RecordingTooShort("band variance needs at least 1 s of samples")
    band.check(window.sample_rate_hz)
    freqs, pxx = psd(window, segment_s)
    return np.maximum(integrate_band(freqs, pxx, band), 0.0)


# --- file formats -----------------------------------------------------------

def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def _write_meta(path: Path, rate: float, extra: dict | None) -> None:
    lines = [f"sample_rate_hz={rate!r}"] + [f"{k}={v}" for k, v in sorted((extra or {}).items())]
    _meta_path(path).write_text("\n".join(lines) + "\n")


def write_csv(rec: Recording, path, extra: dict | None = None) -> None:
    """CSV with a ``time_s`` column; ``extra`` items go to the sidecar."""
    path = Path(path)
    t = rec.start_s + np.arange(rec.n_samples) / rec.sample_rate_hz
    data = np.column_stack([t, rec.samples.T])
    header = ",".join(["time_s", *rec.channel_names])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
    _write_meta(path, rec.sample_rate_hz, extra)


def read_meta(path) -> dict:
    out = {}
    meta = _meta_path(Path(path))
    if meta.exists():
        for line in meta.read_text().splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def read_csv(path, sample_rate_hz: float | None = None) -> Recording:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "time_s":
        raise InvalidRecording(f"{path}: first column must be 'time_s'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if sample_rate_hz is None:
        meta = read_meta(path)
        if "sample_rate_hz" in meta:
            sample_rate_hz = float(meta["sample_rate_hz"])
        elif data.shape[0] > 1:
            sample_rate_hz = 1.0 / float(np.median(np.diff(data[:, 0])))
        else:
            raise InvalidRecording(f"{path}: sample rate unknown (missing sidecar)")
    start = float(data[0, 0]) if data.shape[0] else 0.0
    return Recording(data[:, 1:].T, header[1:], sample_rate_hz, start_s=start)


def write_binary(rec: Recording, path, extra: dict | None = None) -> None:
    """Little-endian float32 samples after a fixed header and a names block.
    A sidecar is written only when ``extra`` is given."""
    names = ",".join(rec.channel_names).encode()
    with open(path, "wb") as fh:
        fh.write(_BINARY_HEADER.pack(BINARY_MAGIC, rec.n_channels, rec.sample_rate_hz, rec.n_samples))
        fh.write(struct.pack("<I", len(names)))
        fh.write(names)
        fh.write(rec.samples.T.astype("<f4").tobytes())
    if extra:
        _write_meta(Path(path), rec.sample_rate_hz, extra)


def read_binary(path) -> Recording:
    with open(path, "rb") as fh:
        magic, n_ch, rate, n_samp = _BINARY_HEADER.unpack(fh.read(_BINARY_HEADER.size))
        if magic != BINARY_MAGIC:
            raise InvalidRecording(f"{path}: bad magic {magic!r}")
        (name_len,) = struct.unpack("<I", fh.read(4))
        names = fh.read(name_len).decode().split(",") if name_len else []
        raw = np.frombuffer(fh.read(), dtype="<f4")
    if raw.size != n_ch * n_samp:
        raise InvalidRecording(f"{path}: expected {n_ch * n_samp} values, found {raw.size}")
    return Recording(raw.reshape(n_samp, n_ch).T.astype(np.float64), names, rate)


def read_recording(path, sample_rate_hz: float | None = None) -> Recording:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BINARY_MAGIC:
        return read_binary(path)
    return read_csv(path, sample_rate_hz)


def write_recording(rec: Recording, path, extra: dict | None = None) -> None:
    if str(path).endswith((".bin", ".vglr")):
        write_binary(rec, path, extra)
    else:
        write_csv(rec, path, extra)
