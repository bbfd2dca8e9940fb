"""Min-max feature scaling and feature-level fusion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AlignmentMismatch, DimensionMismatch, EmptyInput

CLIP = (-0.05, 1.05)


@dataclass(frozen=True, eq=False)
class MinMaxStats:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def constant(self) -> np.ndarray:
        return self.hi <= self.lo

    def apply(self, X, clip: bool = True) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} columns, got {X.shape[1]}")
        span = np.where(self.constant, 1.0, self.hi - self.lo)
        Z = (X - self.lo) / span
        Z[:, self.constant] = 0.5
        return np.clip(Z, *CLIP) if clip else Z

    def inverse(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        span = np.where(self.constant, 0.0, self.hi - self.lo)
        return Z * span + self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


def fit_minmax(train) -> MinMaxStats:
    X = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyInput("cannot fit scaling on an empty matrix")
    return MinMaxStats(X.min(axis=0), X.max(axis=0))


def normalize_fit_apply(train, apply=None):
    """Scale both matrices with statistics of ``train``.

    Returns ``(train_scaled, apply_scaled, stats)``; ``apply`` is clipped to
    [-0.05, 1.05], constant columns map to 0.5.
    """
    stats = fit_minmax(train)
    tr = stats.apply(train, clip=False)
    ap = None if apply is None else stats.apply(apply)
    return tr, ap, stats


def _rows(vectors):
    if isinstance(vectors, np.ndarray):
        return vectors, None
    return np.array([v.values for v in vectors]), [v.window_start_s for v in vectors]


def fuse(eeg, eog, atol: float = 1e-6) -> np.ndarray:
    """Row-wise ``[eog | eeg]``. Accepts feature-vector lists or matrices."""
    E, e_t = _rows(eeg)
    O, o_t = _rows(eog)
    if E.shape[0] != O.shape[0]:
        raise AlignmentMismatch(f"window counts differ: eeg {E.shape[0]} vs eog {O.shape[0]}")
    if e_t is not None and o_t is not None and not np.allclose(e_t, o_t, atol=atol):
        raise AlignmentMismatch("window start times differ between eeg and eog")
    return np.hstack([O, E])
