"""Compiled O(N^2) pair sums over the active grid nodes.

Every routine skips the diagonal a = b; the lattice correction for the
singular diagonal is added by the callers. The symmetric variants visit each
unordered pair once (single thread); the ``_rows`` variants give each output
row to one worker (parallel, and deterministic for any thread count).
"""
import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _phi6(p1, p2, p3, p0, q1, q2, q3, q0, c2, classical):
    d1 = q1 - p1
    d2 = q2 - p2
    d3 = q3 - p3
    dd = d1 * d1 + d2 * d2 + d3 * d3
    if classical:
        r = np.sqrt(dd)
        k = 1.0 / (dd * r)
        return (k * (dd - d1 * d1), -k * d1 * d2, -k * d1 * d3,
                k * (dd - d2 * d2), -k * d2 * d3, k * (dd - d3 * d3))
    pq = p1 * q1 + p2 * q2 + p3 * q3
    x1 = p2 * q3 - p3 * q2
    x2 = p3 * q1 - p1 * q3
    x3 = p1 * q2 - p2 * q1
    g2 = 2.0 * (c2 * dd + x1 * x1 + x2 * x2 + x3 * x3) / (p0 * q0 + pq + c2)
    P = c2 + 0.5 * g2
    B = g2 * (g2 + 4.0 * c2) / (4.0 * c2)
    pref = c2 / (p0 * q0) * (P / c2) ** 2 / (B * np.sqrt(B))
    e = g2 / (2.0 * c2)
    return (pref * (B - d1 * d1 + 2.0 * e * p1 * q1),
            pref * (-d1 * d2 + e * (p1 * q2 + p2 * q1)),
            pref * (-d1 * d3 + e * (p1 * q3 + p3 * q1)),
            pref * (B - d2 * d2 + 2.0 * e * p2 * q2),
            pref * (-d2 * d3 + e * (p2 * q3 + p3 * q2)),
            pref * (B - d3 * d3 + 2.0 * e * p3 * q3))


@njit(cache=True)
def _energies(P, c2, classical):
    n = P.shape[0]
    e = np.empty(n)
    for a in range(n):
        if classical:
            e[a] = 1.0
        else:
            e[a] = np.sqrt(c2 + P[a, 0] ** 2 + P[a, 1] ** 2 + P[a, 2] ** 2)
    return e


@njit(cache=True)
def pair_apply_sym(P, c2, classical, X, U, outM, outV):
    """outM[f,a] += sum_b Phi(a,b) X[f,b] (6 packed entries); outV[f,a] += sum_b Phi(a,b) U[f,b]."""
    n = P.shape[0]
    fx = X.shape[0]
    fu = U.shape[0]
    E = _energies(P, c2, classical)
    for a in range(n):
        p1 = P[a, 0]
        p2 = P[a, 1]
        p3 = P[a, 2]
        p0 = E[a]
        for b in range(a + 1, n):
            m00, m01, m02, m11, m12, m22 = _phi6(p1, p2, p3, p0, P[b, 0], P[b, 1], P[b, 2],
                                                 E[b], c2, classical)
            for f in range(fx):
                xb = X[f, b]
                xa = X[f, a]
                outM[f, a, 0] += m00 * xb
                outM[f, a, 1] += m01 * xb
                outM[f, a, 2] += m02 * xb
                outM[f, a, 3] += m11 * xb
                outM[f, a, 4] += m12 * xb
                outM[f, a, 5] += m22 * xb
                outM[f, b, 0] += m00 * xa
                outM[f, b, 1] += m01 * xa
                outM[f, b, 2] += m02 * xa
                outM[f, b, 3] += m11 * xa
                outM[f, b, 4] += m12 * xa
                outM[f, b, 5] += m22 * xa
            for f in range(fu):
                u0 = U[f, b, 0]
                u1 = U[f, b, 1]
                u2 = U[f, b, 2]
                outV[f, a, 0] += m00 * u0 + m01 * u1 + m02 * u2
                outV[f, a, 1] += m01 * u0 + m11 * u1 + m12 * u2
                outV[f, a, 2] += m02 * u0 + m12 * u1 + m22 * u2
                u0 = U[f, a, 0]
                u1 = U[f, a, 1]
                u2 = U[f, a, 2]
                outV[f, b, 0] += m00 * u0 + m01 * u1 + m02 * u2
                outV[f, b, 1] += m01 * u0 + m11 * u1 + m12 * u2
                outV[f, b, 2] += m02 * u0 + m12 * u1 + m22 * u2


@njit(cache=True, parallel=True)
def pair_apply_rows(P, c2, classical, X, U, outM, outV):
    """Row-parallel version of pair_apply_sym (same sums, different rounding)."""
    n = P.shape[0]
    fx = X.shape[0]
    fu = U.shape[0]
    E = _energies(P, c2, classical)
    for a in prange(n):
        p1 = P[a, 0]
        p2 = P[a, 1]
        p3 = P[a, 2]
        p0 = E[a]
        for b in range(n):
            if b == a:
                continue
            m00, m01, m02, m11, m12, m22 = _phi6(p1, p2, p3, p0, P[b, 0], P[b, 1], P[b, 2],
                                                 E[b], c2, classical)
            for f in range(fx):
                xb = X[f, b]
                outM[f, a, 0] += m00 * xb
                outM[f, a, 1] += m01 * xb
                outM[f, a, 2] += m02 * xb
                outM[f, a, 3] += m11 * xb
                outM[f, a, 4] += m12 * xb
                outM[f, a, 5] += m22 * xb
            for f in range(fu):
                u0 = U[f, b, 0]
                u1 = U[f, b, 1]
                u2 = U[f, b, 2]
                outV[f, a, 0] += m00 * u0 + m01 * u1 + m02 * u2
                outV[f, a, 1] += m01 * u0 + m11 * u1 + m12 * u2
                outV[f, a, 2] += m02 * u0 + m12 * u1 + m22 * u2


@njit(cache=True, inline="always")
def _quad6(m00, m01, m02, m11, m12, m22, x0, x1, x2, y0, y1, y2):
    return (x0 * (m00 * y0 + m01 * y1 + m02 * y2)
            + x1 * (m01 * y0 + m11 * y1 + m12 * y2)
            + x2 * (m02 * y0 + m12 * y1 + m22 * y2))


@njit(cache=True, parallel=True)
def pair_form(P, c2, classical, sq, Z1, Z2, out):
    """Off-diagonal part of the symmetric two-species form, evaluated pair by pair.

    out[f] = 1/2 sum_{a != b} sum_{s,s'} [sq_b Z1_s(a) - sq_a Z1_s'(b)] Phi(a,b)
                                        [sq_b Z2_s(a) - sq_a Z2_s'(b)]
    with Z shapes (F, 2, N, 3). The (a, b) and (b, a) terms are equal after
    swapping s and s', so each unordered pair is visited once. Rows are summed
    in parallel, then reduced in order.
    """
    n = P.shape[0]
    nf = Z1.shape[0]
    E = _energies(P, c2, classical)
    rows = np.zeros((n, nf))
    for a in prange(n):
        p1 = P[a, 0]
        p2 = P[a, 1]
        p3 = P[a, 2]
        p0 = E[a]
        for b in range(a + 1, n):
            m00, m01, m02, m11, m12, m22 = _phi6(p1, p2, p3, p0, P[b, 0], P[b, 1], P[b, 2],
                                                 E[b], c2, classical)
            for f in range(nf):
                acc = 0.0
                for s in range(2):
                    for t in range(2):
                        x0 = sq[b] * Z1[f, s, a, 0] - sq[a] * Z1[f, t, b, 0]
                        x1 = sq[b] * Z1[f, s, a, 1] - sq[a] * Z1[f, t, b, 1]
                        x2 = sq[b] * Z1[f, s, a, 2] - sq[a] * Z1[f, t, b, 2]
                        y0 = sq[b] * Z2[f, s, a, 0] - sq[a] * Z2[f, t, b, 0]
                        y1 = sq[b] * Z2[f, s, a, 1] - sq[a] * Z2[f, t, b, 1]
                        y2 = sq[b] * Z2[f, s, a, 2] - sq[a] * Z2[f, t, b, 2]
                        acc += _quad6(m00, m01, m02, m11, m12, m22, x0, x1, x2, y0, y1, y2)
                rows[a, f] += acc
    for f in range(nf):
        tot = 0.0
        for a in range(n):
            tot += rows[a, f]
        out[f] = tot


@njit(cache=True, parallel=True)
def pair_gamma_weak(P, c2, classical, sq, hY, ZmY, ht, Zmt, W, out):
    """Off-diagonal part of the weak nonlinear pairing, pair by pair.

    out[f] = - sum_s sum_{a != b} W_s(a) . Phi(a,b) [sq_b hY(b) Zm(ht_s)(a) - sq_b ZmY(b) ht_s(a)]
    hY (F,N), ZmY (F,N,3), ht (F,2,N), Zmt (F,2,N,3), W (F,2,N,3).
    """
    n = P.shape[0]
    nf = hY.shape[0]
    E = _energies(P, c2, classical)
    rows = np.zeros((n, nf))
    for a in prange(n):
        p1 = P[a, 0]
        p2 = P[a, 1]
        p3 = P[a, 2]
        p0 = E[a]
        for b in range(n):
            if b == a:
                continue
            m00, m01, m02, m11, m12, m22 = _phi6(p1, p2, p3, p0, P[b, 0], P[b, 1], P[b, 2],
                                                 E[b], c2, classical)
            for f in range(nf):
                acc = 0.0
                for s in range(2):
                    y0 = sq[b] * (hY[f, b] * Zmt[f, s, a, 0] - ZmY[f, b, 0] * ht[f, s, a])
                    y1 = sq[b] * (hY[f, b] * Zmt[f, s, a, 1] - ZmY[f, b, 1] * ht[f, s, a])
                    y2 = sq[b] * (hY[f, b] * Zmt[f, s, a, 2] - ZmY[f, b, 2] * ht[f, s, a])
                    acc += _quad6(m00, m01, m02, m11, m12, m22,
                                  W[f, s, a, 0], W[f, s, a, 1], W[f, s, a, 2], y0, y1, y2)
                rows[a, f] -= acc
    for f in range(nf):
        tot = 0.0
        for a in range(n):
            tot += rows[a, f]
        out[f] = tot
