"""PERCLOS labels from an eye-tracking event stream and the 3-state split."""
from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInterval, OutOfRange

AWAKE_BELOW = 0.35
DROWSY_FROM = 0.7


class GazeKind(str, enum.Enum):
    BLINK = "blink"
    FIXATION = "fixation"
    SACCADE = "saccade"
    CLOS = "clos"


class VigilanceState(str, enum.Enum):
    AWAKE = "awake"
    TIRED = "tired"
    DROWSY = "drowsy"


STATES = (VigilanceState.AWAKE, VigilanceState.TIRED, VigilanceState.DROWSY)


@dataclass(frozen=True)
class GazeEvent:
    kind: GazeKind
    start_s: float
    end_s: float

    def __post_init__(self):
        object.__setattr__(self, "kind", GazeKind(self.kind))
        if not self.end_s > self.start_s:
            raise ValueError(f"gaze event must have end > start ({self.start_s}, {self.end_s})")

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "start_s": self.start_s, "end_s": self.end_s}


@dataclass(frozen=True)
class VigilanceLabel:
    perclos: float
    state: VigilanceState
    window_start_s: float


def _overlap(ev: GazeEvent, t0: float, t1: float) -> float:
    return max(0.0, min(ev.end_s, t1) - max(ev.start_s, t0))


def perclos(stream, window, gaps_as_fixation: bool = True) -> float:
    """Closed-eye fraction of ``window = (t0, t1)``.

    ``(blink + CLOS) / (blink + fixation + saccade + CLOS)`` with events
    clipped to the window. Time not covered by any event counts as fixation
    unless ``gaps_as_fixation`` is off.
    """
    t0, t1 = window
    dur = {k: 0.0 for k in GazeKind}
    for ev in stream:
        if ev.end_s <= t0 or ev.start_s >= t1:
            continue
        dur[ev.kind] += _overlap(ev, t0, t1)
    closed = dur[GazeKind.BLINK] + dur[GazeKind.CLOS]
    total = closed + dur[GazeKind.FIXATION] + dur[GazeKind.SACCADE]
    if gaps_as_fixation:
        total = closed + dur[GazeKind.SACCADE] + max(
            dur[GazeKind.FIXATION], (t1 - t0) - closed - dur[GazeKind.SACCADE])
    if total <= 0:
        raise EmptyInterval(f"no gaze time inside window [{t0}, {t1})")
    return closed / total


def split_states(value: float) -> VigilanceState:
    if not (0.0 <= value <= 1.0):
        raise OutOfRange(f"PERCLOS {value} outside [0, 1]")
    if value < AWAKE_BELOW:
        return VigilanceState.AWAKE
    if value < DROWSY_FROM:
        return VigilanceState.TIRED
    return VigilanceState.DROWSY


def label_windows(stream, n_windows: int, window_s: float = 8.0, start_s: float = 0.0,
                  gaps_as_fixation: bool = True, smooth: int = 0) -> list:
    """PERCLOS on the feature window grid; ``smooth`` > 1 applies a centred
    moving average (off by default)."""
    stream = sorted(stream, key=lambda e: e.start_s)
    starts = start_s + np.arange(n_windows) * window_s
    values = np.array([perclos(stream, (t, t + window_s), gaps_as_fixation) for t in starts])
    if smooth and smooth > 1:
        k = np.ones(smooth) / smooth
        padded = np.pad(values, (smooth // 2, smooth - 1 - smooth // 2), mode="edge")
        values = np.convolve(padded, k, mode="valid")
    return [VigilanceLabel(float(v), split_states(float(v)), float(t)) for v, t in zip(values, starts)]


def read_gaze_jsonl(path) -> list:
    with open(path) as fh:
        return [GazeEvent(GazeKind(o["kind"]), float(o["start_s"]), float(o["end_s"]))
                for o in map(json.loads, filter(str.strip, fh))]


def write_gaze_jsonl(stream, path) -> None:
    with open(path, "w") as fh:
        for ev in stream:
            fh.write(json.dumps(ev.to_json()) + "\n")


def write_labels_csv(labels, path, stamp: str = "") -> None:
    """``stamp`` is an optional leading ``#`` provenance line."""
    with open(path, "w", newline="") as fh:
        fh.write(stamp)
        w = csv.writer(fh)
        w.writerow(["window_start_s", "perclos", "state"])
        for lab in labels:
            w.writerow([repr(lab.window_start_s), repr(lab.perclos), lab.state.value])


def read_labels_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        return [VigilanceLabel(float(r["perclos"]), VigilanceState(r["state"]), float(r["window_start_s"]))
                for r in rows]
