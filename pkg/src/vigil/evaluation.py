"""RMSE/COR, the five-session cross-validation and the state confusion graph.

Sessions are contiguous blocks of windows. Each fold trains on four sessions
and predicts the fifth; RMSE is reported per fold and COR once over the five
held-out segments concatenated in session order.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, LengthMismatch, UnevenSessions, ZeroVariance
from .labels import STATES, split_states

log = logging.getLogger(__name__)

N_SESSIONS = 5
ZERO_VARIANCE = "zero_variance"


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise LengthMismatch(f"lengths differ: {y.size} vs {y_hat.size}")
    if y.size == 0:
        raise LengthMismatch("empty input")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return math.sqrt(float(np.mean((y - y_hat) ** 2)))


def cor(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    a = y - y.mean()
    b = y_hat - y_hat.mean()
    saa, sbb = float(a @ a), float(b @ b)
    if saa == 0.0 or sbb == 0.0:
        raise ZeroVariance("correlation undefined for a constant series")
    return float(np.clip((a @ b) / math.sqrt(saa * sbb), -1.0, 1.0))


def session_bounds(n_rows: int, n_sessions: int = N_SESSIONS, lengths=None):
    """``[(start, end)]`` of each contiguous session."""
    if lengths is None:
        if n_rows < n_sessions:
            raise UnevenSessions(f"{n_rows} windows cannot form {n_sessions} sessions")
        edges = np.linspace(0, n_rows, n_sessions + 1).round().astype(int)
        lengths = np.diff(edges)
    lengths = [int(v) for v in lengths]
    if sum(lengths) != n_rows:
        raise UnevenSessions(f"session lengths sum to {sum(lengths)}, data has {n_rows} windows")
    spread = max(lengths) - min(lengths)
    if spread > 1:
        raise UnevenSessions(f"session lengths differ by {spread} windows")
    if spread == 1:
        log.warning("session lengths differ by one window: %s", lengths)
    edges = np.concatenate([[0], np.cumsum(lengths)])
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(eq=False)
class FoldReport:
    model: str
    modality: str
    fold_rmse: list
    cor: float | None
    cor_status: str
    predictions: np.ndarray
    truth: np.ndarray
    sessions: list
    train_sessions: list = field(default_factory=list)

    @property
    def rmse_mean(self) -> float:
        return float(np.mean(self.fold_rmse))

    @property
    def rmse_std(self) -> float:
        return float(np.std(self.fold_rmse))

    @property
    def rmse_all(self) -> float:
        return rmse(self.truth, self.predictions)

    def to_json(self) -> dict:
        return {
            "model": self.model, "modality": self.modality,
            "cor": self.cor, "cor_status": self.cor_status,
            "rmse_mean": self.rmse_mean, "rmse_std": self.rmse_std,
            "rmse_concatenated": self.rmse_all,
            "fold_rmse": list(self.fold_rmse),
            "sessions": [list(s) for s in self.sessions],
            "train_sessions": [list(t) for t in self.train_sessions],
        }


def _fit_predict(fit, X, y, sessions, k):
    a, b = sessions[k]
    train = [s for j, s in enumerate(sessions) if j != k]
    idx = np.concatenate([np.arange(s, e) for s, e in train])
    model = fit(X[idx], y[idx], [e - s for s, e in train])
    return model.predict(X[a:b], [b - a])


def five_fold(X, y, fit, n_sessions: int = N_SESSIONS, lengths=None,
              model: str = "", modality: str = "", jobs: int = 1) -> FoldReport:
    """Session cross-validation.

    ``fit(X_train, y_train, session_lengths)`` must return an object with
    ``predict(X, session_lengths)``; test data never reaches ``fit``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise LengthMismatch("feature rows and labels differ in length")
    sessions = session_bounds(len(y), n_sessions, lengths)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_fit_predict, *zip(*[(fit, X, y, sessions, k) for k in range(len(sessions))])))
    else:
        parts = [_fit_predict(fit, X, y, sessions, k) for k in range(len(sessions))]
    pred = np.concatenate(parts)
    fold_rmse = [rmse(y[a:b], p) for (a, b), p in zip(sessions, parts)]
    try:
        c, status = cor(y, pred), "ok"
    except ZeroVariance:
        c, status = None, ZERO_VARIANCE
    train_sessions = [[j for j in range(len(sessions)) if j != k] for k in range(len(sessions))]
    return FoldReport(model, modality, fold_rmse, c, status, pred, y.copy(), sessions, train_sessions)


@dataclass(frozen=True, eq=False)
class ConfusionGraph:
    matrix: np.ndarray        # rows: true state, columns: predicted state
    counts: np.ndarray
    states: tuple = tuple(s.value for s in STATES)

    def to_json(self) -> dict:
        return {"states": list(self.states),
                "matrix": [[None if math.isnan(v) else float(v) for v in row] for row in self.matrix],
                "counts": self.counts.astype(int).tolist()}


def confusion(pred, truth) -> ConfusionGraph:
    """Row-normalised state transitions; a state absent from ``truth`` gets a NaN row."""
    pred = np.clip(np.asarray(pred, dtype=np.float64).ravel(), 0.0, 1.0)
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.size == 0:
        raise EmptyInput("confusion needs at least one window")
    if pred.shape != truth.shape:
        raise LengthMismatch("prediction and truth differ in length")
    order = {s: i for i, s in enumerate(STATES)}
    counts = np.zeros((3, 3))
    for p, t in zip(pred, truth):
        counts[order[split_states(float(t))], order[split_states(float(p))]] += 1
    support = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        matrix = np.where(support > 0, counts / np.where(support > 0, support, 1), np.nan)
    return ConfusionGraph(matrix, counts)
