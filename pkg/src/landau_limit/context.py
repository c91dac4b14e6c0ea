"""Per-(c, grid) precomputation shared by the grid operators.

An OperatorContext holds the equilibrium sampled on the grid, the singular
lattice correction and the collision-frequency cache

    sigma_h(a) = w sum_{b != a} Phi(a, b) mu_b + K(a) mu_a

over the active (ball) nodes. It is built once and read-only afterwards.
"""
import math
from functools import lru_cache

import numpy as np
import numba

from .grid import MomentumGrid
from .lattice import singular_correction
from .maxwellian import Equilibrium, parse_light_speed
from . import _pairs


def psd_clip(K):
    """Project symmetric 3x3 blocks onto the positive semidefinite cone."""
    w, V = np.linalg.eigh(K)
    w = np.maximum(w, 0.0)
    return np.einsum("...ik,...k,...jk->...ij", V, w, V)


def pack6(S):
    """(..., 3, 3) symmetric -> (..., 6) as 00, 01, 02, 11, 12, 22."""
    return np.stack([S[..., 0, 0], S[..., 0, 1], S[..., 0, 2],
                     S[..., 1, 1], S[..., 1, 2], S[..., 2, 2]], axis=-1)


def unpack6(m):
    """(..., 6) -> (..., 3, 3)."""
    out = np.empty(m.shape[:-1] + (3, 3))
    idx = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    for k, (i, j) in enumerate(idx):
        out[..., i, j] = m[..., k]
        out[..., j, i] = m[..., k]
    return out


def pair_apply(P, c, X=None, U=None):
    """sum_{b != a} Phi(a, b) X_b (packed 6) and Phi(a, b) U_b over active nodes.

    X : (F, N) scalar fields or None; U : (F, N, 3) vector fields or None.
    Chooses the symmetric single-thread kernel or the row-parallel one.
    """
    n = P.shape[0]
    X = np.zeros((0, n)) if X is None else np.ascontiguousarray(X, dtype=float)
    U = np.zeros((0, n, 3)) if U is None else np.ascontiguousarray(U, dtype=float)
    outM = np.zeros((X.shape[0], n, 6))
    outV = np.zeros((U.shape[0], n, 3))
    classical = math.isinf(c)
    c2 = 1.0 if classical else float(c) ** 2
    if numba.get_num_threads() > 1:
        _pairs.pair_apply_rows(P, c2, classical, X, U, outM, outV)
    else:
        _pairs.pair_apply_sym(P, c2, classical, X, U, outM, outV)
    return outM, outV


class OperatorContext:
    """Equilibrium, lattice correction and sigma cache for one (c, grid)."""

    def __init__(self, c, grid):
        self.c = parse_light_speed(c)
        self.grid = grid
        self.eq = Equilibrium(self.c)
        self.classical = self.eq.classical
        pts = grid.points
        self.sqrt_mu = self.eq.sqrt_mu(pts)               # (n, n, n)
        self.mu = self.sqrt_mu ** 2
        self.velocity = self.eq.velocity(pts)             # (n, n, n, 3)
        self.active = grid.active
        self.P = np.ascontiguousarray(grid.active_points)
        self.sq_a = self.sqrt_mu.ravel()[self.active]
        self._K = None
        self._sigma = None

    @property
    def c2(self):
        return 1.0 if self.classical else self.c ** 2

    @property
    def correction(self):
        """PSD-clipped singular lattice correction K(a), shape (N, 3, 3)."""
        if self._K is None:
            self._K = psd_clip(singular_correction(self.P, self.c, self.grid.spacing))
        return self._K

    @property
    def sigma(self):
        """Collision-frequency cache on the active nodes, shape (N, 3, 3)."""
        if self._sigma is None:
            mu_a = self.sq_a ** 2
            M, _ = pair_apply(self.P, self.c, X=mu_a[None, :])
            self._sigma = self.grid.weight * unpack6(M[0]) + mu_a[:, None, None] * self.correction
        return self._sigma

    def to_active(self, f):
        """Restrict a (..., n, n, n) array to active nodes: (..., N)."""
        lead = f.shape[:-3]
        return f.reshape(lead + (-1,))[..., self.active]

    def vec_to_active(self, v):
        """(..., n, n, n, 3) -> (..., N, 3)."""
        lead = v.shape[:-4]
        return v.reshape(lead + (-1, 3))[..., self.active, :]

    def from_active(self, fa, fill=0.0):
        """(..., N) -> (..., n, n, n) with ``fill`` outside the ball."""
        lead = fa.shape[:-1]
        out = np.full(lead + (self.grid.n ** 3,), fill, dtype=float)
        out[..., self.active] = fa
        return out.reshape(lead + self.grid.shape)

    def vec_from_active(self, va):
        lead = va.shape[:-2]
        out = np.zeros(lead + (self.grid.n ** 3, 3))
        out[..., self.active, :] = va
        return out.reshape(lead + self.grid.shape + (3,))


@lru_cache(maxsize=8)
def _cached(c, n, radius):
    return OperatorContext(c, MomentumGrid(n, radius))


def get_context(c, grid):
    """Shared (memoized) context for light speed c on the given grid."""
    return _cached(parse_light_speed(c), grid.n, grid.radius)
