"""epsilon-SVR with an RBF kernel and a contiguous-fold grid search.

The dual is solved by the SMO kernel in ``vigil._core``; features are
min-max scaled with training statistics kept inside the model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._core import smo_svr
from ..errors import DegenerateLabels, DimensionMismatch
from .scaling import MinMaxStats, fit_minmax

C_GRID = tuple(2.0 ** k for k in range(-2, 9))
G_GRID = tuple(2.0 ** k for k in range(-8, 3))
EPSILON = 0.01
KKT_TOL = 1e-3


@dataclass(frozen=True)
class SvrHyperParams:
    c: float
    g: float
    epsilon: float = EPSILON

    def __post_init__(self):
        if not (self.c > 0 and self.g > 0 and self.epsilon >= 0):
            raise ValueError(f"invalid SVR hyper-parameters {self}")


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray   # scaled feature rows
    dual_coef: np.ndarray         # alpha - alpha*, one per support vector
    rho: float
    params: SvrHyperParams
    scaling: MinMaxStats | None = None
    clip_output: bool = True
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def decision(self, X) -> np.ndarray:
        """Raw regression output, before clipping."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"model expects {self.dim} features, got {X.shape[1]}")
        Z = self.scaling.apply(X) if self.scaling is not None else X
        if self.support_vectors.shape[0] == 0:
            return np.full(Z.shape[0], -self.rho)
        return rbf_kernel(Z, self.support_vectors, self.params.g) @ self.dual_coef - self.rho

    def predict(self, X, lengths=None) -> np.ndarray:
        out = self.decision(X)
        return np.clip(out, 0.0, 1.0) if self.clip_output else out


def sq_dists(A, B) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def rbf_kernel(A, B, g: float) -> np.ndarray:
    return np.exp(-g * sq_dists(A, B))


def _solve(D, y, params: SvrHyperParams):
    K = np.exp(-params.g * D)
    coef, rho, n_iter = smo_svr(K, y, params.c, params.epsilon, KKT_TOL)
    return np.asarray(coef), float(rho), int(n_iter)


def svr_fit(X, y, params: SvrHyperParams, scale: bool = True, clip_output: bool = True) -> SvrModel:
    """One SVR at fixed ``(c, g)``. A constant ``y`` gives the bias-only model."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("rows of X and length of y differ")
    scaling = fit_minmax(X) if scale else None
    Z = scaling.apply(X, clip=False) if scale else X
    coef, rho, n_iter = _solve(sq_dists(Z, Z), y, params)
    sv = np.abs(coef) > 0
    return SvrModel(Z[sv].copy(), coef[sv].copy(), rho, params, scaling, clip_output,
                    {"n_iter": n_iter, "n_sv": int(sv.sum())})


def contiguous_folds(n: int, k: int):
    """``k`` contiguous (train_idx, val_idx) splits of ``range(n)``."""
    edges = np.linspace(0, n, k + 1).round().astype(int)
    idx = np.arange(n)
    for a, b in zip(edges[:-1], edges[1:]):
        yield np.concatenate([idx[:a], idx[b:]]), idx[a:b]


def grid_search(X, y, c_grid=C_GRID, g_grid=G_GRID, folds: int = 3, epsilon: float = EPSILON):
    """Inner contiguous-fold CV RMSE for every ``(c, g)``; returns
    ``(best_params, table)`` with ties broken towards the first grid entry."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    splits = []
    for tr, va in contiguous_folds(len(y), folds):
        stats = fit_minmax(X[tr])
        Ztr, Zva = stats.apply(X[tr], clip=False), stats.apply(X[va])
        splits.append((tr, va, sq_dists(Ztr, Ztr), sq_dists(Zva, Ztr)))
    table = np.zeros((len(c_grid), len(g_grid)))
    for j, g in enumerate(g_grid):
        for i, c in enumerate(c_grid):
            params = SvrHyperParams(c, g, epsilon)
            sse = 0.0
            for tr, va, Dtr, Dva in splits:
                coef, rho, _ = _solve(Dtr, y[tr], params)
                pred = np.clip(np.exp(-g * Dva) @ coef - rho, 0.0, 1.0)
                sse += float(np.sum((pred - y[va]) ** 2))
            table[i, j] = np.sqrt(sse / len(y))
    i, j = np.unravel_index(np.argmin(table), table.shape)
    return SvrHyperParams(c_grid[i], g_grid[j], epsilon), table


def svr_train(X, y, c_grid=C_GRID, g_grid=G_GRID, folds: int = 3, epsilon: float = EPSILON,
              seed: int = 0) -> SvrModel:
    """Grid-searched SVR. ``seed`` is accepted for interface symmetry; the
    solver and the contiguous folds are deterministic."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch("rows of X and length of y differ")
    if len(y) < 10:
        raise DegenerateLabels(f"need at least 10 training rows, got {len(y)}")
    if np.ptp(y) == 0:
        raise DegenerateLabels("training labels have zero variance")
    if len(c_grid) * len(g_grid) == 1:
        best, table = SvrHyperParams(c_grid[0], g_grid[0], epsilon), None
    else:
        best, table = grid_search(X, y, c_grid, g_grid, folds, epsilon)
    model = svr_fit(X, y, best)
    assert model.support_vectors.shape[0] > 0, "trained SVR has no support vectors"
    if table is not None:
        model.info["grid_rmse_min"] = float(table.min())
    return model


def svr_predict(model: SvrModel, X) -> np.ndarray:
    return model.predict(X)
