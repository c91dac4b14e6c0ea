r"""Relativistic and classical Landau collision kernels.

With masses and the Coulomb factor normalized to one,

    Phi^c(p, q) = (c/q0)(c/p0) Lambda^c S^c,
    Lambda^c   = (P/c^2)^2 B^{-3/2},        P = p0 q0 - p.q,
    S^c        = B I - d d^T + (g^2/(2c^2)) (q p^T + p q^T),   d = q - p,
    B          = P^2/c^2 - c^2 = g^2 s / (4 c^2),

where g is the relative momentum and s = g^2 + 4c^2. Everything that would
cancel for large c is routed through

    g^2 = 2 (c^2 |p - q|^2 + |p x q|^2) / (p0 q0 + p.q + c^2),   P = c^2 + g^2/2.

The classical kernel is Phi^inf = (|d|^2 I - d d^T)/|d|^3.
All functions broadcast over leading axes; the last axis holds the 3 components.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import SingularPairError, DomainError
from .rates import fit_rate, check_abscissae

SINGULAR_EPS = 1e-10


@dataclass
class PairGeometry:
    g: np.ndarray
    s: np.ndarray
    lorentz_inner: np.ndarray     # q^mu p_mu = p.q - p0 q0


def _prep(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p, q = np.broadcast_arrays(p, q)
    if p.shape[-1] != 3:
        raise DomainError("momenta must have 3 components")
    return p, q


def _g2(p, q, c):
    c2 = c * c
    p0 = np.sqrt(c2 + np.sum(p * p, -1))
    q0 = np.sqrt(c2 + np.sum(q * q, -1))
    pq = np.sum(p * q, -1)
    d = q - p
    dd = np.sum(d * d, -1)
    cr = np.cross(p, q)
    g2 = 2.0 * (c2 * dd + np.sum(cr * cr, -1)) / (p0 * q0 + pq + c2)
    return g2, p0, q0, d


def pair_geometry(p, q, c):
    """Relative momentum g, centre-of-momentum energy s = g^2 + 4c^2, and q^mu p_mu."""
    p, q = _prep(p, q)
    c = float(c)
    g2, p0, q0, _ = _g2(p, q, c)
    return PairGeometry(np.sqrt(g2), g2 + 4 * c * c, -(c * c + 0.5 * g2))


def _check_singular(g, p):
    tol = SINGULAR_EPS * (1.0 + np.sqrt(np.sum(p * p, -1)))
    if np.any(g < tol):
        raise SingularPairError("kernel evaluated at coincident momenta (g below tolerance)")


def kernel_parts(p, q, c):
    """Return (Lambda^c, S^c, prefactor c^2/(p0 q0)) so that Phi = prefactor * Lambda * S."""
    p, q = _prep(p, q)
    c = float(c)
    c2 = c * c
    g2, p0, q0, d = _g2(p, q, c)
    _check_singular(np.sqrt(g2), p)
    P = c2 + 0.5 * g2
    B = g2 * (g2 + 4 * c2) / (4 * c2)
    lam = (P / c2) ** 2 / (B * np.sqrt(B))
    e = g2 / (2 * c2)
    eye = np.eye(3)
    S = (B[..., None, None] * eye - d[..., :, None] * d[..., None, :]
         + e[..., None, None] * (q[..., :, None] * p[..., None, :] + p[..., :, None] * q[..., None, :]))
    return lam, S, c2 / (p0 * q0)


def phi_relativistic(p, q, c):
    """Phi^c(p, q) as a (..., 3, 3) array; SingularPairError when g < 1e-10 (1 + |p|)."""
    lam, S, pref = kernel_parts(p, q, c)
    return (pref * lam)[..., None, None] * S


def phi_classical(p, q):
    """Phi^inf(p, q) = (|d|^2 I - d d^T) / |d|^3."""
    p, q = _prep(p, q)
    d = q - p
    r2 = np.sum(d * d, -1)
    r = np.sqrt(r2)
    _check_singular(r, p)
    return (r2[..., None, None] * np.eye(3) - d[..., :, None] * d[..., None, :]) / (r2 * r)[..., None, None]


def phi(p, q, c):
    """Relativistic kernel for finite c, classical kernel for c = inf."""
    if math.isinf(c):
        return phi_classical(p, q)
    return phi_relativistic(p, q, c)


def japanese(p):
    """<p> = sqrt(1 + |p|^2)."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(1.0 + np.sum(p * p, -1))


def normalized_difference(p, q, c):
    """|Phi^c - Phi^inf| (max entry) * |p - q| * <p>^-5 <q>^-5 per pair."""
    p, q = _prep(p, q)
    diff = np.abs(phi_relativistic(p, q, c) - phi_classical(p, q)).max(axis=(-2, -1))
    return diff * np.linalg.norm(p - q, axis=-1) * japanese(p) ** -5 * japanese(q) ** -5


def phi_difference_rate(sample, c_list):
    """Log-log rate of M(c) = max over the sample of the normalized kernel difference.

    Parameters
    ----------
    sample : array (N, 2, 3) or pair of arrays (p, q) each (N, 3)
    c_list : increasing light speeds (at least 2)
    """
    if isinstance(sample, (tuple, list)) and len(sample) == 2:
        p, q = (np.asarray(a, dtype=float) for a in sample)
    else:
        arr = np.asarray(sample, dtype=float)
        p, q = arr[:, 0], arr[:, 1]
    cs = check_abscissae(c_list)
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise ValueError("c_list must be increasing")
    try:
        _check_singular(np.linalg.norm(p - q, axis=-1), p)
    except SingularPairError as exc:
        raise SingularPairError("degenerate sample: " + str(exc)) from None
    m = [float(np.max(normalized_difference(p, q, c))) for c in cs]
    return fit_rate(cs, m)


def random_pairs(rng, n, radius=3.0):
    """n pairs (p, q) drawn uniformly from the ball of the given radius."""
    def ball(k):
        v = rng.standard_normal((k, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * radius * rng.random((k, 1)) ** (1.0 / 3.0)
    return ball(n), ball(n)


# closed derivative expressions (cross-checks of finite differences)

def _lambda_parts(p, q, c):
    c2 = c * c
    g2, p0, q0, d = _g2(p, q, c)
    P = c2 + 0.5 * g2
    B = g2 * (g2 + 4 * c2) / (4 * c2)
    return P, B, p0, q0


def divergence_p(p, q, c):
    """sum_i d/dp_i Phi^{c,ij} = -2/(p0 q0) Lambda [c^2 p_j + (q^mu p_mu) q_j]."""
    p, q = _prep(p, q)
    c = float(c)
    P, B, p0, q0 = _lambda_parts(p, q, c)
    lam = (P / c ** 2) ** 2 / (B * np.sqrt(B))
    return (-2.0 * lam / (p0 * q0))[..., None] * (c * c * p - P[..., None] * q)


def mixed_divergence(p, q, c):
    """sum_ij d/dp_i d/dq_j Phi^{c,ij} = -4 (q^mu p_mu)/(c^2 p0 q0) B^{-1/2}."""
    p, q = _prep(p, q)
    c = float(c)
    P, B, p0, q0 = _lambda_parts(p, q, c)
    return 4.0 * P / (c * c * p0 * q0 * np.sqrt(B))
