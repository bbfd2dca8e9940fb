"""Vertical/horizontal EOG from the four forehead electrodes.

Two routes are offered: the minus rule (channel differences) and FastICA on
electrode pairs, where the component kept is the one best matching the
minus-rule template of the same pair. ``combine_ica_minus`` takes the ICA
vertical trace and the minus-rule horizontal trace.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, LengthMismatch, RankDeficient, ZeroVariance
from .dsp import Recording

FOREHEAD_CHANNELS = ("ch4", "ch5", "ch6", "ch7")


class Method(str, enum.Enum):
    MINUS = "minus"
    ICA = "ica"
    ICA_MINUS = "ica-minus"


@dataclass(frozen=True, eq=False)
class ForeheadQuad:
    ch4: np.ndarray
    ch5: np.ndarray
    ch6: np.ndarray
    ch7: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        chans = [np.asarray(getattr(self, n), dtype=np.float64) for n in FOREHEAD_CHANNELS]
        if len({c.shape for c in chans}) != 1 or chans[0].ndim != 1:
            raise LengthMismatch("forehead channels must be 1-D and equally long")
        for name, c in zip(FOREHEAD_CHANNELS, chans):
            object.__setattr__(self, name, c)

    def __getitem__(self, number: int) -> np.ndarray:
        """Electrode by its forehead number (4..7)."""
        return getattr(self, f"ch{number}")

    @property
    def n_samples(self) -> int:
        return self.ch4.shape[0]

    @classmethod
    def from_recording(cls, rec: Recording, names=FOREHEAD_CHANNELS) -> "ForeheadQuad":
        return cls(*(rec.channel(n) for n in names), sample_rate_hz=rec.sample_rate_hz)

    def to_recording(self) -> Recording:
        return Recording(np.vstack([self.ch4, self.ch5, self.ch6, self.ch7]),
                         FOREHEAD_CHANNELS, self.sample_rate_hz)

    def map(self, fn) -> "ForeheadQuad":
        return ForeheadQuad(*(fn(self[k]) for k in (4, 5, 6, 7)), sample_rate_hz=self.sample_rate_hz)


@dataclass(frozen=True, eq=False)
class EogPair:
    veo: np.ndarray
    heo: np.ndarray
    method: Method
    sample_rate_hz: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.shape(self.veo) != np.shape(self.heo):
            raise LengthMismatch("veo and heo must be the same length")


@dataclass(frozen=True, eq=False)
class UnmixingResult:
    unmixing: np.ndarray         # W, maps centred data to components
    mixing_inverse: np.ndarray   # W^-1 (pseudo-inverse when n_components < m)
    components: np.ndarray       # U = W @ (X - mean)
    mean: np.ndarray
    iterations: int
    delta: float
    algorithm: str = "symmetric"


@dataclass(frozen=True)
class SeparationConfig:
    """Electrode numbers used by each rule; the defaults follow the two
    source sentences literally (ICA on 4/7, minus on 5-7)."""

    veo_minus: tuple = (5, 7)
    heo_minus: tuple = (5, 6)
    veo_ica: tuple = (4, 7)
    heo_ica: tuple = (5, 6)


DEFAULT_SEPARATION = SeparationConfig()


def similarity(estimated, reference) -> float:
    """Pearson correlation between two equally long traces."""
    a = np.asarray(estimated, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape} vs {b.shape}")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0.0:
        raise ZeroVariance("correlation undefined for a constant trace")
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


def separate_minus(quad: ForeheadQuad, cfg: SeparationConfig = DEFAULT_SEPARATION) -> EogPair:
    a, b = cfg.veo_minus
    c, d = cfg.heo_minus
    return EogPair(quad[a] - quad[b], quad[c] - quad[d], Method.MINUS, quad.sample_rate_hz)


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    # W <- (W W^T)^{-1/2} W
    s, u = np.linalg.eigh(W @ W.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ W


def _symmetric(Z, W, tol, max_iter):
    """All rows updated together, then jointly decorrelated."""
    T = Z.shape[1]
    delta = np.inf
    for it in range(1, max_iter + 1):
        gwz = np.tanh(W @ Z)
        g_prime = 1.0 - gwz ** 2
        W_new = _sym_decorrelate(gwz @ Z.T / T - g_prime.mean(axis=1)[:, None] * W)
        delta = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0)))
        W = W_new
        if delta < tol:
            return W, it, delta
    return None, max_iter, delta


def _deflation(Z, W0, tol, max_iter):
    """One row at a time, each kept orthogonal to the rows already found."""
    n = Z.shape[0]
    W = np.zeros((n, n))
    total, worst = 0, 0.0
    for p in range(n):
        w = W0[p] - W[:p].T @ (W[:p] @ W0[p])
        w /= np.linalg.norm(w)
        for it in range(1, max_iter + 1):
            g = np.tanh(w @ Z)
            w_new = (Z * g).mean(axis=1) - (1.0 - g ** 2).mean() * w
            w_new -= W[:p].T @ (W[:p] @ w_new)
            w_new /= np.linalg.norm(w_new)
            delta = abs(abs(float(w_new @ w)) - 1.0)
            w = w_new
            if delta < tol:
                break
        else:
            return None, total + max_iter, delta
        W[p] = w
        total += it
        worst = max(worst, delta)
    return W, total, worst


def fastica(X, n_components: int | None = None, seed: int = 0,
            tol: float = 1e-6, max_iter: int = 500) -> UnmixingResult:
    """FastICA with the log-cosh contrast.

    Centres and PCA-whitens ``X`` ``[m x time]``, then runs the symmetric
    fixed-point iteration from a seeded Gaussian start. Convergence is
    measured as ``max |1 - |diag(W_new W_old^T)||``. When a nearly Gaussian
    direction keeps the symmetric update rotating, the deflation update is
    run from the same start; ``result.algorithm`` records which one finished.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("fastica needs at least two input rows")
    m, T = X.shape
    if T < 10 * m:
        raise ValueError(f"fastica needs >= {10 * m} samples, got {T}")
    n = m if n_components is None else int(n_components)
    if not (1 <= n <= m):
        raise ValueError("n_components must be in [1, m]")

    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    cov = Xc @ Xc.T / T
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[n - 1] <= 1e-12 * max(evals[0], np.finfo(float).tiny):
        raise RankDeficient("input is rank deficient after centring")
    # deterministic eigenvector signs: largest-magnitude loading positive
    flip = np.sign(evecs[np.argmax(np.abs(evecs), axis=0), np.arange(m)])
    evecs = evecs * flip
    whitening = (evecs[:, :n] / np.sqrt(evals[:n])).T       # [n x m]
    Z = whitening @ Xc

    W0 = np.random.default_rng(seed).standard_normal((n, n))
    W, it, delta = _symmetric(Z, _sym_decorrelate(W0), tol, max_iter)
    algorithm = "symmetric"
    if W is None:
        W, extra, delta = _deflation(Z, W0, tol, max_iter)
        it += extra
        algorithm = "deflation"
    if W is None:
        raise ConvergenceFailure(
            f"FastICA did not converge in {max_iter} iterations (delta={delta:.3g})",
            iterations=it, delta=delta,
        )

    unmixing = W @ whitening
    if n == m:
        mixing_inverse = np.linalg.inv(unmixing)
    else:
        mixing_inverse = np.linalg.pinv(unmixing)
    return UnmixingResult(unmixing, mixing_inverse, unmixing @ Xc, mean, it, delta, algorithm)


def select_component(components: np.ndarray, template: np.ndarray):
    """Pick the component with the largest |corr| to ``template``.

    Ties go to the lowest index. The component is returned rescaled by its
    least-squares projection onto the template, which fixes the sign
    (positive correlation) and restores microvolt units.
    """
    comps = np.atleast_2d(components)
    corrs = np.array([similarity(c, template) for c in comps])
    k = int(np.argmax(np.abs(corrs)))
    u = comps[k] - comps[k].mean()
    t = template - template.mean()
    scale = float(np.dot(u, t) / np.dot(u, u))
    return scale * u, k, float(corrs[k])


def _ica_pair(quad, pair, template, seed):
    X = np.vstack([quad[pair[0]], quad[pair[1]]])
    res = fastica(X, 2, seed=seed)
    trace, k, corr = select_component(res.components, template)
    return trace, {"component": k, "corr": corr,
                   "iterations": res.iterations, "delta": res.delta,
                   "algorithm": res.algorithm}


def separate_ica(quad: ForeheadQuad, seed: int = 0,
                 cfg: SeparationConfig = DEFAULT_SEPARATION) -> EogPair:
    minus = separate_minus(quad, cfg)
    veo, vinfo = _ica_pair(quad, cfg.veo_ica, minus.veo, seed)
    heo, hinfo = _ica_pair(quad, cfg.heo_ica, minus.heo, seed)
    return EogPair(veo, heo, Method.ICA, quad.sample_rate_hz,
                   {"seed": seed, "veo": vinfo, "heo": hinfo})


def combine_ica_minus(quad: ForeheadQuad, seed: int = 0,
                      cfg: SeparationConfig = DEFAULT_SEPARATION) -> EogPair:
    minus = separate_minus(quad, cfg)
    veo, vinfo = _ica_pair(quad, cfg.veo_ica, minus.veo, seed)
    return EogPair(veo, minus.heo, Method.ICA_MINUS, quad.sample_rate_hz,
                   {"seed": seed, "veo": vinfo})


def separate(quad: ForeheadQuad, method, seed: int = 0,
             cfg: SeparationConfig = DEFAULT_SEPARATION) -> EogPair:
    method = Method(method)
    if method is Method.MINUS:
        return separate_minus(quad, cfg)
    if method is Method.ICA:
        return separate_ica(quad, seed, cfg)
    return combine_ica_minus(quad, seed, cfg)
