from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vigil.errors import AlignmentMismatch, DataError, DegenerateLabels, DimensionMismatch, SessionTooShort
from vigil.models.bundle import from_bundle, load_bundle, save_bundle, to_bundle
from vigil.models.crf import (CcnfModel, CcrfModel, CrfRegularization, _ccnf_x0, _Objective,
                              _sigmoid, ccnf_infer, ccnf_train, ccrf_infer, ccrf_train,
                              gaussian_mean, log_likelihood, potential, precision)
from vigil.models.estimators import ModelConfig, ModelKind, train_model
from vigil.models.scaling import fit_minmax, fuse, normalize_fit_apply
from vigil.models.sequences import chain_laplacian, chunk_sequences, neighbour_matrix
from vigil.models.svr import SvrHyperParams, svr_fit, svr_train

LIGHT = dict(c_grid=(1.0, 16.0, 128.0), g_grid=(0.5, 2.0))


# ---- scaling and fusion

def test_minmax_train_in_unit_interval_and_constant_column():
    r = np.random.default_rng(0)
    X = r.normal(size=(50, 4))
    X[:, 2] = 3.0
    tr, ap, stats = normalize_fit_apply(X, X + 100.0)
    assert tr.min() >= 0.0 and tr.max() <= 1.0
    assert np.all(tr[:, 2] == 0.5) and np.all(ap[:, 2] == 0.5)
    assert ap.max() <= 1.05 and ap.min() >= -0.05
    nonconst = [0, 1, 3]
    assert np.allclose(stats.inverse(tr)[:, nonconst], X[:, nonconst], atol=1e-9)


def test_minmax_dimension_mismatch():
    stats = fit_minmax(np.zeros((3, 2)))
    with pytest.raises(DimensionMismatch):
        stats.apply(np.zeros((3, 5)))


def test_fuse_columns_and_alignment():
    eeg, eog = np.ones((885, 100)), np.zeros((885, 36))
    F = fuse(eeg, eog)
    assert F.shape == (885, 136)
    assert np.all(F[:, :36] == 0.0) and np.all(F[:, 36:] == 1.0)
    with pytest.raises(AlignmentMismatch):
        fuse(np.ones((10, 100)), np.ones((9, 36)))


# ---- SVR

def test_svr_constant_target_bias_only():
    X = np.random.default_rng(1).normal(size=(40, 3))
    m = svr_fit(X, np.full(40, 0.5), SvrHyperParams(1.0, 1.0))
    assert np.all(np.abs(m.predict(X) - 0.5) <= 1e-3)
    with pytest.raises(DegenerateLabels):
        svr_train(X, np.full(40, 0.5))


def test_svr_linear_target():
    x = np.linspace(0, 1, 100)[:, None]
    y = 0.2 + 0.6 * x[:, 0]
    m = svr_train(x, y, **LIGHT)
    assert np.sqrt(np.mean((m.predict(x) - y) ** 2)) <= 0.02
    assert np.all(np.abs(m.dual_coef) <= m.params.c + 1e-9)
    assert m.support_vectors.shape[0] > 0


def test_svr_reproducible_and_checks_dims():
    r = np.random.default_rng(2)
    X = r.normal(size=(60, 5))
    y = np.clip(0.5 + 0.2 * X[:, 0], 0, 1)
    a = svr_train(X, y, **LIGHT)
    b = svr_train(X, y, **LIGHT)
    assert a.predict(X).tobytes() == b.predict(X).tobytes()
    with pytest.raises(DimensionMismatch):
        a.predict(np.zeros((2, 4)))
    with pytest.raises(DimensionMismatch):
        svr_fit(X, y[:-1], SvrHyperParams(1.0, 1.0))


# ---- sequences

def test_chunking_counts_and_remainder():
    batch = chunk_sequences(np.arange(177.0), np.zeros(177))
    lens = [len(ix) for ix in batch.index]
    assert lens == [7] * 25 + [2]
    assert np.array_equal(np.concatenate(batch.index), np.arange(177))
    with pytest.raises(SessionTooShort):
        chunk_sequences(np.zeros(6))


def test_chunks_never_cross_sessions():
    batch = chunk_sequences(np.arange(30.0), None, [10, 20])
    for ix in batch.index:
        assert ix.max() < 10 or ix.min() >= 10
    assert np.array_equal(batch.reassemble([X[:, 0] for X, _ in batch.sequences]), np.arange(30.0))


def test_neighbour_matrix_and_laplacian():
    S = neighbour_matrix(5)
    assert np.array_equal(S, S.T) and np.all(np.diag(S) == 0) and S.sum() == 8
    assert np.allclose(chain_laplacian(5) @ np.ones(5), 0.0)


# ---- CRF objective

def random_batch(rng, n_seq=5, n=4, d=3, y=None):
    X = rng.uniform(0, 1, (n_seq * n, d))
    y = rng.uniform(0, 1, n_seq * n) if y is None else y
    return chunk_sequences(X, y, n=n)


def fd_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12))


@pytest.mark.parametrize("neural", [False, True])
def test_objective_gradient_matches_finite_differences(neural):
    rng = np.random.default_rng(3)
    batch = random_batch(rng)
    k = 4 if neural else 3
    obj = _Objective(batch, CrfRegularization(1.0, 0.1), k, neural)
    x = _ccnf_x0(obj.dim_in, k, rng) if neural else rng.normal(0, 0.5, k + 1)
    assert rel_err(obj(x)[1], fd_grad(lambda v: obj(v)[0], x)) <= 1e-4


def test_likelihood_gradient_in_natural_parameters():
    rng = np.random.default_rng(4)
    H = {5: rng.uniform(0, 1, (3, 5, 2))}
    Y = {5: rng.uniform(0, 1, (3, 5))}
    alpha, beta = np.array([0.7, 1.3]), 0.4
    _, da, db, dH = log_likelihood(alpha, beta, H, Y)
    vec = np.array([*alpha, beta])
    fd = fd_grad(lambda v: log_likelihood(v[:2], v[2], H, Y, grad=False)[0], vec)
    assert rel_err(np.array([*da, db]), fd) <= 1e-4
    flat = H[5].ravel()
    fdH = fd_grad(lambda v: log_likelihood(alpha, beta, {5: v.reshape(3, 5, 2)}, Y, grad=False)[0], flat)
    assert rel_err(dH[5].ravel(), fdH) <= 1e-4


def test_mean_maximises_potential_by_brute_force():
    H = np.array([[0.2], [0.8], [0.5]])
    alpha, beta = np.array([1.0]), 10.0
    mu = gaussian_mean(alpha, beta, H)
    # coarse grid then a fine grid around the coarse winner
    coarse = np.arange(0.0, 1.0001, 0.02)
    best = max(itertools.product(coarse, repeat=3), key=lambda y: potential(y, H, alpha, beta))
    axes = [np.arange(b - 0.03, b + 0.0301, 0.001) for b in best]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    L = chain_laplacian(3)
    psi = -np.sum(alpha * (grid - H[:, 0]) ** 2, axis=1) - beta * np.einsum("mi,ij,mj->m", grid, L, grid)
    assert np.max(np.abs(grid[np.argmax(psi)] - mu)) <= 2e-3


def test_limits_of_beta():
    x = np.array([[0.1], [0.9], [0.4], [0.6]])
    assert np.allclose(gaussian_mean([1.0], 1e6, x), x.mean(), atol=1e-3)
    assert np.allclose(gaussian_mean([1.0], 0.0, x), x[:, 0], atol=1e-12)
    H = np.random.default_rng(5).uniform(0, 1, (6, 3))
    a = np.array([0.5, 2.0, 1.5])
    assert np.allclose(gaussian_mean(a, 1e-9, H), H @ a / a.sum(), atol=1e-8)


def test_constant_input_stays_constant_and_equal_rows_agree():
    assert np.allclose(gaussian_mean([2.0], 3.0, np.full((7, 1), 0.3)), 0.3, atol=1e-12)
    theta = np.random.default_rng(6).normal(size=(4, 5))
    m = CcnfModel(np.ones(5), 2.0, theta)
    X = np.tile([0.1, 0.2, 0.3], (7, 1))
    out = ccnf_infer(m, X)
    assert np.allclose(out, out[0], atol=1e-12)


def test_zero_theta_gives_one_half():
    m = CcnfModel(np.ones(3), 1.0, np.zeros((3, 3)))
    assert np.allclose(ccnf_infer(m, np.random.default_rng(7).normal(size=(7, 2))), 0.5)
    assert _sigmoid(np.array(0.0)) == 0.5


def test_single_node_sequences_reproduce_input():
    rng = np.random.default_rng(8)
    x = rng.uniform(0, 1, 40)
    batch = chunk_sequences(x, x, [1] * 40, n=1)
    model = ccrf_train(batch, (1.0,), (1e-2,))
    pred = np.array([ccrf_infer(model, X)[0] for X, _ in batch.sequences])
    assert np.mean((pred - x) ** 2) <= 1e-8


@given(st.lists(st.floats(1e-3, 50.0), min_size=1, max_size=4), st.floats(1e-3, 100.0),
       st.integers(1, 9))
def test_precision_is_spd(alpha, beta, n):
    A = precision(np.array(alpha), beta, n)
    assert np.allclose(A, A.T)
    assert np.linalg.eigvalsh(A).min() > 0


def test_larger_beta_smooths():
    H = np.random.default_rng(9).uniform(0, 1, (7, 1))
    v = [np.var(gaussian_mean([1.0], b, H)) for b in (0.0, 0.5, 2.0, 10.0)]
    assert all(a >= b for a, b in zip(v, v[1:]))


def test_sequences_are_independent():
    rng = np.random.default_rng(10)
    m = CcrfModel(np.array([1.0]), 2.0)
    a, b = rng.uniform(0, 1, (7, 1)), rng.uniform(0, 1, (7, 1))
    first = ccrf_infer(m, a)
    ccrf_infer(m, b)
    assert np.array_equal(first, ccrf_infer(m, a))


def ccnf_generator(rng, theta, n_seq, n=7):
    d = theta.shape[0] - 1
    X = rng.uniform(-1, 1, (n_seq * n, d))
    h = _sigmoid(np.hstack([X, np.ones((len(X), 1))]) @ theta)
    y = np.concatenate([gaussian_mean([1.0], 1.0, h[k * n:(k + 1) * n]) for k in range(n_seq)])
    y += rng.normal(0, 0.01, y.size)
    return X, y


def test_ccnf_recovers_generator():
    rng = np.random.default_rng(11)
    theta = np.vstack([rng.normal(0, 2, (5, 1)), [[0.0]]])
    Xtr, ytr = ccnf_generator(rng, theta, 200)
    Xte, yte = ccnf_generator(rng, theta, 100)
    model = ccnf_train(chunk_sequences(Xtr, ytr), (10,), (1.0,), (1e-2,), restarts=1)
    test = chunk_sequences(Xte, yte)
    pred = test.reassemble([ccnf_infer(model, X) for X, _ in test.sequences])
    assert np.corrcoef(pred, yte)[0, 1] >= 0.9


# ---- estimators and bundles

@pytest.mark.parametrize("kind", list(ModelKind))
def test_bundle_round_trip(kind, tmp_path):
    rng = np.random.default_rng(13)
    X = rng.uniform(0, 1, (70, 4))
    y = np.clip(0.3 + 0.4 * X[:, 0] + 0.05 * rng.normal(size=70), 0, 1)
    cfg = ModelConfig(kind, c_grid=(4.0,), g_grid=(1.0,), k1_grid=(5,), alpha_reg_grid=(1.0,),
                      beta_reg_grid=(1e-2,), restarts=1)
    est = train_model(cfg, X, y)
    names = [f"f{i}" for i in range(4)]
    save_bundle(to_bundle(est, names), tmp_path / "m.json")
    back = from_bundle(load_bundle(tmp_path / "m.json"))
    assert back.kind is kind
    assert np.array_equal(back.predict(X), est.predict(X))
    assert np.all((0 <= est.predict(X)) & (est.predict(X) <= 1))


def test_malformed_bundle():
    with pytest.raises(DataError):
        from_bundle({"model_type": "ccnf"})


def test_train_model_reproducible():
    rng = np.random.default_rng(14)
    X = rng.uniform(0, 1, (42, 3))
    y = np.clip(X[:, 1] + 0.05 * rng.normal(size=42), 0, 1)
    cfg = ModelConfig(ModelKind.CCNF, k1_grid=(5,), alpha_reg_grid=(1.0,), beta_reg_grid=(1e-2,),
                      restarts=2, seed=3)
    a = train_model(cfg, X, y).predict(X)
    b = train_model(cfg, X, y).predict(X)
    assert a.tobytes() == b.tobytes()
