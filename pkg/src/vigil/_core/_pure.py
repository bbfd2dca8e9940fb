"""Reference implementations of the hot kernels in NumPy/Python.

These mirror ``_ckernels.pyx`` line for line in behaviour and are used when
the compiled extension is unavailable (or ``VIGIL_PURE=1``).
"""
from __future__ import annotations

import numpy as np

TAU = 1e-12


def scan_peak_runs(coeffs, theta_h, theta_l):
    """Split ``coeffs`` into same-sign runs with ``|c| >= theta_l``.

    Returns ``(symbol, peak, start, end, magnitude)`` arrays for the runs whose
    extremum reaches ``theta_h``; ``symbol`` is 1 for positive runs and 0 for
    negative ones, ``end`` is inclusive.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.shape[0]
    sym, peak, start, end, mag = [], [], [], [], []
    i = 0
    while i < n:
        v = c[i]
        if v != 0.0 and abs(v) >= theta_l:
            positive = v > 0.0
            best_i, best_v = i, abs(v)
            j = i + 1
            while j < n:
                w = c[j]
                if w == 0.0 or abs(w) < theta_l or (w > 0.0) != positive:
                    break
                if abs(w) > best_v:
                    best_i, best_v = j, abs(w)
                j += 1
            if best_v >= theta_h:
                sym.append(1 if positive else 0)
                peak.append(best_i)
                start.append(i)
                end.append(j - 1)
                mag.append(best_v)
            i = j
        else:
            i += 1
    return (
        np.asarray(sym, dtype=np.int8),
        np.asarray(peak, dtype=np.int64),
        np.asarray(start, dtype=np.int64),
        np.asarray(end, dtype=np.int64),
        np.asarray(mag, dtype=np.float64),
    )


def smo_svr(K, y, C, epsilon, tol=1e-3, max_iter=10_000_000):
    """Solve the epsilon-SVR dual with second-order working-set selection.

    ``K`` is the precomputed ``[l x l]`` kernel matrix. Returns
    ``(coef, rho, n_iter)`` with predictions ``K_test @ coef - rho``.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    l = y.shape[0]
    n = 2 * l
    idx = np.concatenate([np.arange(l), np.arange(l)])
    sign = np.concatenate([np.ones(l), -np.ones(l)])
    p = np.concatenate([epsilon - y, epsilon + y])
    alpha = np.zeros(n)
    G = p.copy()
    diag = np.diag(K)[idx]

    it = 0
    while it < max_iter:
        up = ((sign > 0) & (alpha < C)) | ((sign < 0) & (alpha > 0))
        low = ((sign > 0) & (alpha > 0)) | ((sign < 0) & (alpha < C))
        minus_yg = -sign * G
        if not up.any() or not low.any():
            break
        cand = np.where(up, minus_yg, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        gmin = np.min(np.where(low, minus_yg, np.inf))
        if gmax - gmin < tol:
            break
        b = gmax + sign * G
        a = diag[i] + diag - 2.0 * K[idx[i]][idx]
        a = np.where(a > 0, a, TAU)
        ok = low & (minus_yg < gmax)
        obj = np.where(ok, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            break
        it += 1
        _update_pair(i, j, alpha, G, sign, K, idx, diag, C)
    return alpha[:l] - alpha[l:], _rho(alpha, G, sign, C), it


def _update_pair(i, j, alpha, G, sign, K, idx, diag, C):
    kij = K[idx[i], idx[j]]
    qii, qjj = diag[i], diag[j]
    qij = sign[i] * sign[j] * kij
    old_ai, old_aj = alpha[i], alpha[j]
    if sign[i] != sign[j]:
        quad = qii + qjj + 2.0 * qij
        if quad <= 0:
            quad = TAU
        delta = (-G[i] - G[j]) / quad
        diff = alpha[i] - alpha[j]
        alpha[i] += delta
        alpha[j] += delta
        if diff > 0:
            if alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = diff
        else:
            if alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
        if diff > 0:
            if alpha[i] > C:
                alpha[i] = C
                alpha[j] = C - diff
        else:
            if alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
    else:
        quad = qii + qjj - 2.0 * qij
        if quad <= 0:
            quad = TAU
        delta = (G[i] - G[j]) / quad
        total = alpha[i] + alpha[j]
        alpha[i] -= delta
        alpha[j] += delta
        if total > C:
            if alpha[i] > C:
                alpha[i] = C
                alpha[j] = total - C
        else:
            if alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
        if total > C:
            if alpha[j] > C:
                alpha[j] = C
                alpha[i] = total - C
        else:
            if alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
    d_ai = alpha[i] - old_ai
    d_aj = alpha[j] - old_aj
    G += sign * (sign[i] * K[idx[i]][idx] * d_ai + sign[j] * K[idx[j]][idx] * d_aj)


def _rho(alpha, G, sign, C):
    yg = sign * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yg[free].mean())
    ub, lb = np.inf, -np.inf
    sel = (at_upper & (sign < 0)) | (at_lower & (sign > 0))
    if sel.any():
        ub = float(yg[sel].min())
    sel = (at_upper & (sign > 0)) | (at_lower & (sign < 0))
    if sel.any():
        lb = float(yg[sel].max())
    return (ub + lb) / 2.0
