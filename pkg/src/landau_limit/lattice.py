r"""Lattice correction for the |p - q|^{-1} diagonal singularity of pair sums.

Near q = p the relativistic kernel behaves like

    s_p(d) = (c^2/p0^2) [ g^2 (I + p p^T/c^2) - d d^T ] / g^3,   g^2 = d^T M d,
    M = I - p p^T / p0^2,

(classically M = I and the bracket is g^2 I - d d^T). On the lattice p + hZ^3
the punctured sum h^3 sum' s(h n) f(p + h n) misses

    h^2 (c^2/p0^2) [ (I + p p^T/c^2) E(M) - E2(M) ] f(p) + O(h^4),

where E(M) and E2(M) are the regularized differences (integral minus punctured
lattice sum) of 1/g and n n^T/g^3 over Z^3. Both are evaluated by Ewald
summation; E2 = -2 dE/dM. For M = I, E = 2.8372974794806...
"""
import math

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _inv3(M):
    a, b, c = M[0, 0], M[0, 1], M[0, 2]
    d, e, f = M[1, 0], M[1, 1], M[1, 2]
    g, h, i = M[2, 0], M[2, 1], M[2, 2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    inv = np.empty((3, 3))
    inv[0, 0] = (e * i - f * h) / det
    inv[0, 1] = (c * h - b * i) / det
    inv[0, 2] = (b * f - c * e) / det
    inv[1, 0] = (f * g - d * i) / det
    inv[1, 1] = (a * i - c * g) / det
    inv[1, 2] = (c * d - a * f) / det
    inv[2, 0] = (d * h - e * g) / det
    inv[2, 1] = (b * g - a * h) / det
    inv[2, 2] = (a * e - b * d) / det
    return inv, det


@njit(cache=True)
def ewald_pair(M, lam_min, lam_max):
    """Return E(M) and E2(M) (3x3) for a symmetric positive definite metric M."""
    alpha = math.pi / math.sqrt(lam_min * lam_max)
    nr = int(math.ceil(math.sqrt(40.0 / (alpha * lam_min)))) + 1
    nk = int(math.ceil(math.sqrt(160.0 * alpha * lam_max) / (2.0 * math.pi))) + 1
    Minv, det = _inv3(M)
    sd = math.sqrt(det)
    sa = math.sqrt(alpha)
    real = 0.0
    realM = np.zeros((3, 3))
    for i in range(-nr, nr + 1):
        for j in range(-nr, nr + 1):
            for k in range(-nr, nr + 1):
                if i == 0 and j == 0 and k == 0:
                    continue
                n0, n1, n2 = float(i), float(j), float(k)
                g2 = (n0 * (M[0, 0] * n0 + M[0, 1] * n1 + M[0, 2] * n2)
                      + n1 * (M[1, 0] * n0 + M[1, 1] * n1 + M[1, 2] * n2)
                      + n2 * (M[2, 0] * n0 + M[2, 1] * n1 + M[2, 2] * n2))
                if alpha * g2 > 60.0:
                    continue
                g = math.sqrt(g2)
                ec = math.erfc(sa * g)
                real += ec / g
                dr = -(ec / g2 + 2.0 * math.sqrt(alpha / math.pi) * math.exp(-alpha * g2) / g) / (2.0 * g)
                nn = (n0, n1, n2)
                for a in range(3):
                    for b in range(3):
                        realM[a, b] += dr * nn[a] * nn[b]
    recip = 0.0
    recM = np.zeros((3, 3))
    for i in range(-nk, nk + 1):
        for j in range(-nk, nk + 1):
            for k in range(-nk, nk + 1):
                if i == 0 and j == 0 and k == 0:
                    continue
                K0 = 2.0 * math.pi * i
                K1 = 2.0 * math.pi * j
                K2 = 2.0 * math.pi * k
                y0 = Minv[0, 0] * K0 + Minv[0, 1] * K1 + Minv[0, 2] * K2
                y1 = Minv[1, 0] * K0 + Minv[1, 1] * K1 + Minv[1, 2] * K2
                y2 = Minv[2, 0] * K0 + Minv[2, 1] * K1 + Minv[2, 2] * K2
                kap = K0 * y0 + K1 * y1 + K2 * y2
                if kap / (4.0 * alpha) > 60.0:
                    continue
                T = 4.0 * math.pi / (sd * kap) * math.exp(-kap / (4.0 * alpha))
                recip += T
                wgt = T * (1.0 / kap + 1.0 / (4.0 * alpha))
                yy = (y0, y1, y2)
                for a in range(3):
                    for b in range(3):
                        recM[a, b] += wgt * yy[a] * yy[b]
    bracket = real - math.pi / (alpha * sd) + recip - 2.0 * math.sqrt(alpha / math.pi)
    E2 = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            bM = realM[a, b] + 0.5 * math.pi / (alpha * sd) * Minv[a, b] - 0.5 * recip * Minv[a, b] + recM[a, b]
            E2[a, b] = 2.0 * bM
    return -bracket, E2


@njit(cache=True, parallel=True)
def _corrections(P, c2, classical, out):
    n = P.shape[0]
    for a in prange(n):
        if classical:
            M = np.eye(3)
            E, E2 = ewald_pair(M, 1.0, 1.0)
            for i in range(3):
                for j in range(3):
                    out[a, i, j] = (E if i == j else 0.0) - E2[i, j]
            continue
        pp = P[a, 0] ** 2 + P[a, 1] ** 2 + P[a, 2] ** 2
        p02 = c2 + pp
        M = np.eye(3)
        for i in range(3):
            for j in range(3):
                M[i, j] -= P[a, i] * P[a, j] / p02
        E, E2 = ewald_pair(M, c2 / p02, 1.0)
        for i in range(3):
            for j in range(3):
                A = (1.0 if i == j else 0.0) + P[a, i] * P[a, j] / c2
                out[a, i, j] = c2 / p02 * (A * E - E2[i, j])


def singular_correction(points, c, spacing):
    """Per-node 3x3 correction K(p) with  integral ~ punctured sum + K(p) f(p).

    Parameters
    ----------
    points : (N, 3) node coordinates
    c : light speed (math.inf for the classical kernel)
    spacing : lattice spacing h
    """
    pts = np.ascontiguousarray(points, dtype=float)
    out = np.empty((pts.shape[0], 3, 3))
    classical = math.isinf(c)
    if classical:
        # identical for every node: compute once
        E, E2 = ewald_pair(np.eye(3), 1.0, 1.0)
        K = E * np.eye(3) - E2
        out[:] = K
    else:
        _corrections(pts, float(c) ** 2, False, out)
    return spacing ** 2 * out
