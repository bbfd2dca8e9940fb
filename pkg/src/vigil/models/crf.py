"""Continuous conditional random/neural fields on short chains.

For one sequence with vertex outputs ``H`` ``[n x K]`` the potential is

    Psi(y) = -sum_k alpha_k |y - h_k|^2 - beta * y' L y

with ``L`` the chain Laplacian, so ``P(y | x)`` is Gaussian with precision
``2A``, ``A = (sum alpha) I + beta L`` and mean ``mu = A^-1 H alpha``. CCRF
uses the inputs themselves as ``H``; CCNF uses ``K1`` sigmoid units
``h_k = 1 / (1 + exp(-theta_k' [x, 1]))``.

Training minimises the negative log-likelihood plus L2 penalties over
``(log alpha, log beta, theta)`` with L-BFGS and analytic gradients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..errors import NonConvergence, SingularPrecision
from .sequences import SequenceBatch, chain_laplacian

ALPHA_REG_GRID = (1.0, 10.0, 100.0)
BETA_REG_GRID = (1e-3, 1e-2, 1e-1, 1.0)
K1_GRID = (10, 20, 30)
GTOL = 1e-7
MAX_ITER = 1000
LOG_BOUND = 25.0       # box on log alpha and log beta; keeps A finite and positive definite


@dataclass(frozen=True)
class CrfRegularization:
    lambda_alpha: float = 1.0
    lambda_beta: float = 1e-2
    lambda_theta: float | None = None    # None: same as lambda_beta

    @property
    def theta(self) -> float:
        return self.lambda_beta if self.lambda_theta is None else self.lambda_theta


@dataclass(frozen=True, eq=False)
class CcrfModel:
    alpha: np.ndarray
    beta: float
    reg: CrfRegularization = CrfRegularization()
    info: dict = field(default_factory=dict)

    def vertex(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64).reshape(len(X), -1)


@dataclass(frozen=True, eq=False)
class CcnfModel:
    alpha: np.ndarray
    beta: float
    theta: np.ndarray                    # [(d + 1) x K1], last row is the bias
    reg: CrfRegularization = CrfRegularization()
    info: dict = field(default_factory=dict)

    @property
    def k1(self) -> int:
        return self.theta.shape[1]

    def vertex(self, X) -> np.ndarray:
        return _sigmoid(_with_bias(np.atleast_2d(X)) @ self.theta)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _with_bias(X):
    X = np.asarray(X, dtype=np.float64)
    return np.concatenate([X, np.ones(X.shape[:-1] + (1,))], axis=-1)


def precision(alpha, beta: float, n: int) -> np.ndarray:
    return float(np.sum(alpha)) * np.eye(n) + beta * chain_laplacian(n)


def gaussian_mean(alpha, beta: float, H) -> np.ndarray:
    """Mean of the induced Gaussian for one sequence's vertex outputs."""
    H = np.asarray(H, dtype=np.float64)
    A = precision(alpha, beta, H.shape[0])
    try:
        c = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularPrecision("precision matrix is not positive definite") from exc
    b = H @ np.asarray(alpha, dtype=np.float64)
    return np.linalg.solve(c.T, np.linalg.solve(c, b))


def potential(y, H, alpha, beta: float) -> float:
    """Psi(y) for one sequence (used by the brute-force check)."""
    y = np.asarray(y, dtype=np.float64)
    L = chain_laplacian(len(y))
    return float(-np.sum(alpha * (y[:, None] - H) ** 2) - beta * y @ L @ y)


def _group(batch: SequenceBatch, vertex_input):
    """Stack sequences of equal length: {n: (seq ids, inputs [m x n x .], Y [m x n])}."""
    groups = {}
    for k, (X, y) in enumerate(batch.sequences):
        groups.setdefault(len(X), []).append(k)
    out = {}
    for n, ids in groups.items():
        Xs = np.stack([vertex_input(batch.sequences[k][0]) for k in ids])
        Ys = None if batch.sequences[ids[0]][1] is None else np.stack([batch.sequences[k][1] for k in ids])
        out[n] = (ids, Xs, Ys)
    return out


def log_likelihood(alpha, beta, groups_H, groups_Y, grad: bool = True):
    """Total log-likelihood and its gradients w.r.t. alpha, beta and every H.

    ``groups_H[n]`` is ``[m x n x K]``, ``groups_Y[n]`` is ``[m x n]``.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    ll = 0.0
    d_alpha = np.zeros_like(alpha)
    d_beta = 0.0
    d_H = {}
    for n, H in groups_H.items():
        Y = groups_Y[n]
        m = H.shape[0]
        L = chain_laplacian(n)
        A = float(alpha.sum()) * np.eye(n) + beta * L
        sign, logdet = np.linalg.slogdet(A)
        if sign <= 0:
            raise SingularPrecision("precision matrix is not positive definite")
        Ainv = np.linalg.inv(A)
        B = H @ alpha                       # [m x n]
        Mu = B @ Ainv                       # A symmetric
        ll += float(-np.sum((Y @ A) * Y) + 2.0 * np.sum(B * Y) - np.sum(B * Mu)
                    + m * (0.5 * logdet - 0.5 * n * math.log(math.pi)))
        if not grad:
            continue
        R = Y - Mu
        d_alpha += (-np.sum(Y * Y) + np.sum(Mu * Mu) + 0.5 * m * np.trace(Ainv)
                    + 2.0 * np.einsum("mik,mi->k", H, R))
        d_beta += float(-np.sum((Y @ L) * Y) + np.sum((Mu @ L) * Mu) + 0.5 * m * np.sum(Ainv * L))
        d_H[n] = 2.0 * R[:, :, None] * alpha[None, None, :]
    return ll, d_alpha, d_beta, d_H


class _Objective:
    """Penalised negative log-likelihood over a packed parameter vector
    ``[log alpha (K), log beta, theta (ravelled, CCNF only)]``."""

    def __init__(self, batch: SequenceBatch, reg: CrfRegularization, k: int, neural: bool):
        self.reg = reg
        self.k = k
        self.neural = neural
        if neural:
            g = _group(batch, _with_bias)
            self.dim_in = next(iter(g.values()))[1].shape[-1]
        else:
            g = _group(batch, lambda X: np.asarray(X, dtype=np.float64).reshape(len(X), -1))
            self.dim_in = 0
        self.inputs = {n: v[1] for n, v in g.items()}
        self.Y = {n: v[2] for n, v in g.items()}
        self.n_nodes = sum(Y.size for Y in self.Y.values())

    def unpack(self, vec):
        alpha = np.exp(vec[:self.k])
        beta = float(np.exp(vec[self.k]))
        theta = vec[self.k + 1:].reshape(self.dim_in, self.k) if self.neural else None
        return alpha, beta, theta

    def vertex(self, theta):
        if not self.neural:
            return self.inputs
        return {n: _sigmoid(X @ theta) for n, X in self.inputs.items()}

    def __call__(self, vec):
        alpha, beta, theta = self.unpack(vec)
        H = self.vertex(theta)
        ll, da, db, dH = log_likelihood(alpha, beta, H, self.Y)
        r = self.reg
        f = -ll + r.lambda_alpha * float(alpha @ alpha) + r.lambda_beta * beta * beta
        g_alpha = (-da + 2.0 * r.lambda_alpha * alpha) * alpha
        g_beta = (-db + 2.0 * r.lambda_beta * beta) * beta
        parts = [g_alpha, [g_beta]]
        if self.neural:
            f += r.theta * float(np.sum(theta * theta))
            g_theta = 2.0 * r.theta * theta
            for n, X in self.inputs.items():
                Hn = H[n]
                g_theta -= np.einsum("mid,mik->dk", X, dH[n] * Hn * (1.0 - Hn))
            parts.append(g_theta.ravel())
        return f, np.concatenate([np.ravel(p) for p in parts])


def _optimise(obj: _Objective, x0, maxiter: int = MAX_ITER, gtol: float = GTOL):
    bounds = [(-LOG_BOUND, LOG_BOUND)] * (obj.k + 1) + [(None, None)] * (len(x0) - obj.k - 1)
    res = minimize(obj, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": maxiter, "gtol": gtol, "maxcor": 20})
    g = obj(res.x)[1]
    gnorm = float(np.max(np.abs(g)))
    if not np.isfinite(res.fun) or not np.all(np.isfinite(res.x)):
        raise NonConvergence("optimiser left the finite domain", grad_norm=gnorm)
    # maxiter hit with a large projected gradient is a genuine failure; an
    # early line-search stop at a flat point is accepted
    if res.status == 1 and gnorm > 1e-3 * max(1.0, abs(res.fun)):
        raise NonConvergence(f"no convergence in {maxiter} iterations (|grad|={gnorm:.3g})",
                             grad_norm=gnorm)
    return res.x, {"nll": float(res.fun), "grad_norm": gnorm, "n_iter": int(res.nit),
                   "status": int(res.status)}


def _split(batch: SequenceBatch, val_frac: float):
    n_val = int(round(len(batch) * val_frac))
    if n_val < 1 or len(batch) - n_val < 1:
        return batch, None
    cut = len(batch) - n_val
    return batch.subset(range(cut)), batch.subset(range(cut, len(batch)))


def _val_rmse(model, batch: SequenceBatch, infer) -> float:
    err = [infer(model, X) - y for X, y in batch.sequences]
    return float(np.sqrt(np.mean(np.concatenate(err) ** 2)))


def _val_nll(obj_factory, vec, batch) -> float:
    return obj_factory(batch)(vec)[0]


# -------------------------------------------------------------------- CCRF

def _ccrf_fit(batch, reg, x0=None, maxiter=MAX_ITER):
    k = np.asarray(batch.sequences[0][0]).reshape(len(batch.sequences[0][0]), -1).shape[1]
    obj = _Objective(batch, reg, k, neural=False)
    x0 = np.zeros(k + 1) if x0 is None else x0
    vec, info = _optimise(obj, x0, maxiter)
    alpha, beta, _ = obj.unpack(vec)
    return CcrfModel(alpha, beta, reg, info), vec


def ccrf_train(batch: SequenceBatch, alpha_reg_grid=ALPHA_REG_GRID, beta_reg_grid=BETA_REG_GRID,
               val_frac: float = 0.25, maxiter: int = MAX_ITER) -> CcrfModel:
    """Fit alpha, beta on (input predictions, labels) sequences.

    The regularisation pair is chosen by RMSE on the last quarter of the
    sequences, then the model is refitted on all of them.
    """
    grid = [CrfRegularization(a, b) for a in alpha_reg_grid for b in beta_reg_grid]
    train, val = _split(batch, val_frac)
    best = (grid[0], None)
    if len(grid) > 1 and val is not None:
        scores = []
        for reg in grid:
            model, vec = _ccrf_fit(train, reg, maxiter=maxiter)
            scores.append((_val_rmse(model, val, ccrf_infer), reg, vec))
        _, reg, vec = min(scores, key=lambda t: t[0])
        best = (reg, vec)
    model, _ = _ccrf_fit(batch, best[0], best[1], maxiter)
    return model


def ccrf_infer(model: CcrfModel, x) -> np.ndarray:
    return gaussian_mean(model.alpha, model.beta, model.vertex(x))


# -------------------------------------------------------------------- CCNF

def _ccnf_x0(d_in: int, k1: int, rng) -> np.ndarray:
    r = 1.0 / math.sqrt(d_in)
    theta = rng.uniform(-r, r, (d_in, k1))
    return np.concatenate([np.full(k1, -math.log(k1)), [0.0], theta.ravel()])


def _ccnf_model(obj, vec, reg, info):
    alpha, beta, theta = obj.unpack(vec)
    return CcnfModel(alpha, beta, theta, reg, info)


def _ccnf_fit(batch, k1, reg, x0=None, rng=None, maxiter=MAX_ITER):
    obj = _Objective(batch, reg, k1, neural=True)
    if x0 is None:
        x0 = _ccnf_x0(obj.dim_in, k1, rng)
    vec, info = _optimise(obj, x0, maxiter)
    return _ccnf_model(obj, vec, reg, info), vec


def ccnf_train(batch: SequenceBatch, k1_grid=K1_GRID, alpha_reg_grid=ALPHA_REG_GRID,
               beta_reg_grid=BETA_REG_GRID, restarts: int = 5, seed: int = 0,
               val_frac: float = 0.25, maxiter: int = MAX_ITER) -> CcnfModel:
    """Fit CCNF on (normalised features, labels) sequences.

    Each (K1, regularisation) candidate is trained from ``restarts`` random
    starts on the first three quarters of the sequences; the restart with the
    best validation likelihood represents the candidate, candidates compete
    on validation RMSE, and the winner is refitted on all sequences starting
    from its parameters.
    """
    rng = np.random.default_rng(seed)
    train, val = _split(batch, val_frac)
    candidates = [(k1, CrfRegularization(a, b)) for k1 in k1_grid
                  for a in alpha_reg_grid for b in beta_reg_grid]
    if val is None:
        train = batch
    scored = []
    for k1, reg in candidates:
        best = None
        for _ in range(max(restarts, 1)):
            model, vec = _ccnf_fit(train, k1, reg, rng=rng, maxiter=maxiter)
            nll = _Objective(val, reg, k1, True)(vec)[0] if val is not None else model.info["nll"]
            if best is None or nll < best[0]:
                best = (nll, model, vec)
        rmse = _val_rmse(best[1], val, ccnf_infer) if val is not None else best[0]
        scored.append((rmse, k1, reg, best[1], best[2]))
    _, k1, reg, model, vec = min(scored, key=lambda t: t[0])
    if val is None:
        return model            # already fitted on every sequence
    model, _ = _ccnf_fit(batch, k1, reg, x0=vec, maxiter=maxiter)
    return model


def ccnf_infer(model: CcnfModel, X) -> np.ndarray:
    return gaussian_mean(model.alpha, model.beta, model.vertex(X))
