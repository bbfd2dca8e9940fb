"""Trainable end-to-end regressors sharing one ``fit``/``predict`` surface.

``predict(X, lengths)`` takes the window matrix of one or more sessions;
``lengths`` gives the session sizes so the CRF models never chain windows
across a session boundary.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .crf import (ALPHA_REG_GRID, BETA_REG_GRID, K1_GRID, MAX_ITER, CcnfModel, CcrfModel,
                  ccnf_infer, ccnf_train, ccrf_infer, ccrf_train)
from .scaling import MinMaxStats, fit_minmax
from .sequences import SEQ_LEN, chunk_sequences
from .svr import C_GRID, EPSILON, G_GRID, SvrModel, contiguous_folds, svr_fit, svr_train


class ModelKind(str, enum.Enum):
    SVR = "svr"
    CCRF = "ccrf"
    CCNF = "ccnf"


@dataclass(frozen=True)
class ModelConfig:
    kind: ModelKind = ModelKind.SVR
    c_grid: tuple = C_GRID
    g_grid: tuple = G_GRID
    epsilon: float = EPSILON
    svr_folds: int = 3
    k1_grid: tuple = K1_GRID
    alpha_reg_grid: tuple = ALPHA_REG_GRID
    beta_reg_grid: tuple = BETA_REG_GRID
    restarts: int = 5
    seq_len: int = SEQ_LEN
    maxiter: int = MAX_ITER
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))


def _lengths(X, lengths):
    return [len(X)] if lengths is None else list(lengths)


def _reassemble(batch, outputs, clip):
    out = batch.reassemble(outputs)
    return np.clip(out, 0.0, 1.0) if clip else out


@dataclass(frozen=True, eq=False)
class SvrEstimator:
    svr: SvrModel
    kind: ModelKind = ModelKind.SVR

    def predict(self, X, lengths=None, clip: bool = True) -> np.ndarray:
        return self.svr.predict(X) if clip else self.svr.decision(X)


@dataclass(frozen=True, eq=False)
class CcrfEstimator:
    svr: SvrModel
    crf: CcrfModel
    seq_len: int = SEQ_LEN
    kind: ModelKind = ModelKind.CCRF

    def predict(self, X, lengths=None, clip: bool = True) -> np.ndarray:
        x = self.svr.predict(X)
        batch = chunk_sequences(x, None, _lengths(x, lengths), self.seq_len)
        return _reassemble(batch, [ccrf_infer(self.crf, s) for s, _ in batch.sequences], clip)


@dataclass(frozen=True, eq=False)
class CcnfEstimator:
    scaling: MinMaxStats
    crf: CcnfModel
    seq_len: int = SEQ_LEN
    kind: ModelKind = ModelKind.CCNF
    info: dict = field(default_factory=dict)

    def predict(self, X, lengths=None, clip: bool = True) -> np.ndarray:
        Z = self.scaling.apply(X)
        batch = chunk_sequences(Z, None, _lengths(Z, lengths), self.seq_len)
        return _reassemble(batch, [ccnf_infer(self.crf, s) for s, _ in batch.sequences], clip)


def out_of_fold_svr(X, y, lengths, svr: SvrModel) -> np.ndarray:
    """SVR predictions for every training window from models that did not
    see its session (contiguous thirds when there is a single session)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(lengths) >= 2:
        edges = np.concatenate([[0], np.cumsum(lengths)])
        splits = [(np.concatenate([np.arange(0, a), np.arange(b, len(y))]), np.arange(a, b))
                  for a, b in zip(edges[:-1], edges[1:])]
    else:
        splits = list(contiguous_folds(len(y), 3))
    out = np.empty(len(y))
    for tr, va in splits:
        out[va] = svr_fit(X[tr], y[tr], svr.params).predict(X[va])
    return out


def train_model(cfg: ModelConfig, X, y, lengths=None):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    lengths = _lengths(X, lengths)
    if cfg.kind is ModelKind.CCNF:
        stats = fit_minmax(X)
        batch = chunk_sequences(stats.apply(X, clip=False), y, lengths, cfg.seq_len)
        crf = ccnf_train(batch, cfg.k1_grid, cfg.alpha_reg_grid, cfg.beta_reg_grid,
                         cfg.restarts, cfg.seed, maxiter=cfg.maxiter)
        return CcnfEstimator(stats, crf, cfg.seq_len)
    svr = svr_train(X, y, cfg.c_grid, cfg.g_grid, cfg.svr_folds, cfg.epsilon, cfg.seed)
    if cfg.kind is ModelKind.SVR:
        return SvrEstimator(svr)
    x_cv = out_of_fold_svr(X, y, lengths, svr)
    batch = chunk_sequences(x_cv, y, lengths, cfg.seq_len)
    crf = ccrf_train(batch, cfg.alpha_reg_grid, cfg.beta_reg_grid, maxiter=cfg.maxiter)
    return CcrfEstimator(svr, crf, cfg.seq_len)
