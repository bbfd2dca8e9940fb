# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; semantics match ``_pure.py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

cdef double TAU = 1e-12


def scan_peak_runs(coeffs, double theta_h, double theta_l):
    cdef const double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i = 0, j, best_i, k = 0
    cdef double v, w, best_v
    cdef bint positive
    sym = np.empty(n // 2 + 1, dtype=np.int8)
    peak = np.empty(n // 2 + 1, dtype=np.int64)
    start = np.empty(n // 2 + 1, dtype=np.int64)
    end = np.empty(n // 2 + 1, dtype=np.int64)
    mag = np.empty(n // 2 + 1, dtype=np.float64)
    cdef signed char[::1] sym_v = sym
    cdef long long[::1] peak_v = peak, start_v = start, end_v = end
    cdef double[::1] mag_v = mag
    while i < n:
        v = c[i]
        if v != 0.0 and fabs(v) >= theta_l:
            positive = v > 0.0
            best_i = i
            best_v = fabs(v)
            j = i + 1
            while j < n:
                w = c[j]
                if w == 0.0 or fabs(w) < theta_l or (w > 0.0) != positive:
                    break
                if fabs(w) > best_v:
                    best_i = j
                    best_v = fabs(w)
                j += 1
            if best_v >= theta_h:
                sym_v[k] = 1 if positive else 0
                peak_v[k] = best_i
                start_v[k] = i
                end_v[k] = j - 1
                mag_v[k] = best_v
                k += 1
            i = j
        else:
            i += 1
    return sym[:k].copy(), peak[:k].copy(), start[:k].copy(), end[:k].copy(), mag[:k].copy()


def smo_svr(K, y, double C, double epsilon, double tol=1e-3, long long max_iter=10_000_000):
    cdef const double[:, ::1] Km = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t l = yv.shape[0]
    cdef Py_ssize_t n = 2 * l
    cdef double[::1] alpha = np.zeros(n)
    cdef double[::1] G = np.empty(n)
    cdef double[::1] sign = np.empty(n)
    cdef double[::1] diag = np.empty(n)
    cdef Py_ssize_t[::1] idx = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t t, i, j, ii, jj
    cdef double gmax, gmin, myg, b, a, obj, best_obj
    cdef double qij, quad, delta, diff, total, old_ai, old_aj, d_ai, d_aj, si, sj
    cdef long long it = 0
    cdef bint up, low

    for t in range(l):
        idx[t] = t
        idx[t + l] = t
        sign[t] = 1.0
        sign[t + l] = -1.0
        G[t] = epsilon - yv[t]
        G[t + l] = epsilon + yv[t]
        diag[t] = Km[t, t]
        diag[t + l] = Km[t, t]

    while it < max_iter:
        gmax = -INFINITY
        gmin = INFINITY
        i = -1
        for t in range(n):
            myg = -sign[t] * G[t]
            if sign[t] > 0:
                up = alpha[t] < C
                low = alpha[t] > 0
            else:
                up = alpha[t] > 0
                low = alpha[t] < C
            if up and myg > gmax:
                gmax = myg
                i = t
            if low and myg < gmin:
                gmin = myg
        if i < 0 or gmin == INFINITY:
            break
        if gmax - gmin < tol:
            break
        ii = idx[i]
        j = -1
        best_obj = INFINITY
        for t in range(n):
            if sign[t] > 0:
                low = alpha[t] > 0
            else:
                low = alpha[t] < C
            myg = -sign[t] * G[t]
            if low and myg < gmax:
                b = gmax + sign[t] * G[t]
                a = diag[i] + diag[t] - 2.0 * Km[ii, idx[t]]
                if a <= 0:
                    a = TAU
                obj = -(b * b) / a
                if obj < best_obj:
                    best_obj = obj
                    j = t
        if j < 0:
            break
        it += 1

        jj = idx[j]
        si = sign[i]
        sj = sign[j]
        qij = si * sj * Km[ii, jj]
        old_ai = alpha[i]
        old_aj = alpha[j]
        if si != sj:
            quad = diag[i] + diag[j] + 2.0 * qij
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
            quad = diag[i] + diag[j] - 2.0 * qij
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
        d_ai = (alpha[i] - old_ai) * si
        d_aj = (alpha[j] - old_aj) * sj
        for t in range(n):
            G[t] += sign[t] * (Km[ii, idx[t]] * d_ai + Km[jj, idx[t]] * d_aj)

    coef = np.asarray(alpha[:l]) - np.asarray(alpha[l:])
    return coef, _rho(alpha, G, sign, C), it


cdef double _rho(double[::1] alpha, double[::1] G, double[::1] sign, double C):
    cdef Py_ssize_t t, n = alpha.shape[0], nr_free = 0
    cdef double yg, ub = INFINITY, lb = -INFINITY, sum_free = 0.0
    for t in range(n):
        yg = sign[t] * G[t]
        if alpha[t] >= C:
            if sign[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if sign[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nr_free += 1
            sum_free += yg
    if nr_free > 0:
        return sum_free / nr_free
    return (ub + lb) / 2.0
