r"""Collision frequency sigma^c(p) = int Phi^c(p, q) mu^c(q) dq, its spectrum,
the dissipation norms and the time-dependent momentum weight.

Pointwise sigma uses p-centred spherical coordinates q = p + rho w: the
Jacobian rho^2 cancels the rho^{-1} kernel singularity, so Gauss-Legendre in
rho and cos(theta) converges quickly. The full 3x3 matrix integrates over the
azimuth as well; the eigenvalues use only the (rho, theta) integral of the
rotation-invariant scalars p^ Phi p^ and tr Phi (independent route).

Grid-level quantities (norms) use the cached, lattice-corrected sigma of
the operator context.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import AccuracyError, DomainError
from .grid import quadrature_radius
from .kernel import phi, japanese
from .maxwellian import Equilibrium, parse_light_speed
from .context import get_context

REFINE_TOL = 1e-4


@dataclass(frozen=True)
class SphericalRule:
    """Tensor rule in (rho, cos theta, phi) around p."""
    panel_width: float = 0.5
    radial_nodes: int = 10
    polar_nodes: int = 64
    azimuth_nodes: int = 32

    def coarse(self):
        return SphericalRule(self.panel_width, max(4, self.radial_nodes - 2),
                             (3 * self.polar_nodes) // 4, (3 * self.azimuth_nodes) // 4)


DEFAULT_RULE = SphericalRule()


@lru_cache(maxsize=None)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def _frame(p):
    r = np.linalg.norm(p)
    e1 = p / r if r > 0 else np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(e1[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e2 = np.cross(e1, helper)
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(e1, e2)
    return e1, e2, e3


def _radial(rule, pmag, c):
    rmax = pmag + quadrature_radius(c)
    npan = int(math.ceil(rmax / rule.panel_width))
    x, w = _leggauss(rule.radial_nodes)
    edges = np.linspace(0.0, rmax, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    rho = (mid[:, None] + half[:, None] * x).ravel()
    wr = (half[:, None] * w).ravel()
    return rho, wr


def _sigma_full(c, p, rule):
    eq = Equilibrium(c)
    e1, e2, e3 = _frame(p)
    rho, wr = _radial(rule, np.linalg.norm(p), eq.c)
    ct, wt = _leggauss(rule.polar_nodes)
    st = np.sqrt(1.0 - ct ** 2)
    nphi = rule.azimuth_nodes
    ph = 2.0 * np.pi * np.arange(nphi) / nphi
    total = np.zeros((3, 3))
    for it in range(rule.polar_nodes):
        omega = (ct[it] * e1[None, :] + st[it] * (np.cos(ph)[:, None] * e2 + np.sin(ph)[:, None] * e3))
        q = p + rho[:, None, None] * omega[None, :, :]                # (nr, nphi, 3)
        K = phi(np.broadcast_to(p, q.shape), q, eq.c)
        f = (wr * rho ** 2)[:, None] * eq.mu(q)
        total += wt[it] * (2.0 * np.pi / nphi) * np.einsum("ab,abij->ij", f, K)
    return 0.5 * (total + total.T)


def sigma_matrix(c, p, rule=DEFAULT_RULE, check=True):
    """sigma^{c,ij}(p) by p-centred spherical quadrature.

    Raises AccuracyError if the rule and its coarsened version differ by more
    than 1e-4 relative (max entry).
    """
    c = parse_light_speed(c)
    p = np.asarray(p, dtype=float).reshape(3)
    S = _sigma_full(c, p, rule)
    if check:
        Sc = _sigma_full(c, p, rule.coarse())
        err = np.abs(S - Sc).max() / np.abs(S).max()
        if err > REFINE_TOL:
            raise AccuracyError(f"sigma quadrature refinements differ by {err:.2e}")
    return S


@dataclass(frozen=True)
class SigmaSpectrum:
    lambda1: float
    lambda2: float
    p: tuple


def _invariants(c, p, rule):
    # (rho, theta) integral of p^ Phi p^ and tr Phi, azimuth factor 2 pi
    eq = Equilibrium(c)
    e1, e2, _ = _frame(p)
    rho, wr = _radial(rule, np.linalg.norm(p), eq.c)
    ct, wt = _leggauss(rule.polar_nodes)
    st = np.sqrt(1.0 - ct ** 2)
    omega = ct[:, None] * e1 + st[:, None] * e2                         # (nt, 3)
    q = p + rho[:, None, None] * omega[None, :, :]
    K = phi(np.broadcast_to(p, q.shape), q, eq.c)
    f = 2.0 * np.pi * (wr * rho ** 2)[:, None] * wt[None, :] * eq.mu(q)
    par = float(np.sum(f * np.einsum("i,abij,j->ab", e1, K, e1)))
    tr = float(np.sum(f * np.trace(K, axis1=-2, axis2=-1)))
    return par, tr


def sigma_eigenvalues(c, p, rule=DEFAULT_RULE, check=True):
    """lambda1 (along p) and lambda2 (on p-perp) from rotation-invariant integrals."""
    c = parse_light_speed(c)
    p = np.asarray(p, dtype=float).reshape(3)
    if not np.linalg.norm(p) > 0:
        raise DomainError("sigma_eigenvalues needs |p| > 0")
    par, tr = _invariants(c, p, rule)
    if check:
        par2, tr2 = _invariants(c, p, rule.coarse())
        err = max(abs(par - par2) / abs(par), abs(tr - tr2) / abs(tr))
        if err > REFINE_TOL:
            raise AccuracyError(f"sigma quadrature refinements differ by {err:.2e}")
    return SigmaSpectrum(par, 0.5 * (tr - par), tuple(float(x) for x in p))


def lambda2_along(c, p, pbar, rule=DEFAULT_RULE):
    """pbar^T sigma pbar / |pbar|^2 from the full matrix, for a chosen pbar perpendicular to p."""
    S = sigma_matrix(c, p, rule)
    pbar = np.asarray(pbar, dtype=float)
    return float(pbar @ S @ pbar / (pbar @ pbar))


def band_scalings(c, p):
    """Reference scalings (p0/(c<p>))^3 for lambda1 and p0/(c<p>) for lambda2."""
    p = np.asarray(p, dtype=float)
    jp = japanese(p)
    if math.isinf(c):
        return jp ** -3.0, jp ** -1.0
    ratio = math.sqrt(c * c + float(p @ p)) / (c * jp)
    return ratio ** 3, ratio


def spectrum_scan(c_list, pmags, rule=DEFAULT_RULE):
    """Rows (c, |p|, lambda1, lambda2, lambda1/scale1, lambda2/scale2)."""
    rows = []
    for c in c_list:
        c = parse_light_speed(c)
        for r in pmags:
            p = np.array([0.0, 0.0, float(r)])
            sp = sigma_eigenvalues(c, p, rule)
            s1, s2 = band_scalings(c, p)
            rows.append((c, float(r), sp.lambda1, sp.lambda2, sp.lambda1 / s1, sp.lambda2 / s2))
    return rows


# weight ------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """w_l(p) = <p>^{5l/2} exp(theta <p> / ln(e + t))."""
    ell: float = 0.0
    theta: float = 1.0 / 32.0
    t: float = 0.0

    def __post_init__(self):
        if self.ell < 0:
            raise DomainError("ell must be >= 0")
        if not 0.0 <= self.theta <= 1.0 / 32.0:
            raise DomainError("theta must lie in [0, 1/32]")
        if self.t < 0:
            raise DomainError("t must be >= 0")


def weight(spec, p):
    """Exact weight value(s) at p."""
    jp = japanese(p)
    return jp ** (2.5 * spec.ell) * np.exp(spec.theta * jp / math.log(math.e + spec.t))


def weight_log_gradient(spec, p):
    """grad w / w = (5 l / (2<p>^2) + theta / (<p> ln(e + t))) p."""
    p = np.asarray(p, dtype=float)
    jp = japanese(p)
    coef = 2.5 * spec.ell / jp ** 2 + spec.theta / (jp * math.log(math.e + spec.t))
    return coef[..., None] * p


# norms on the operator grid -----------------------------------------------

def _field_values(h):
    return h.values if hasattr(h, "values") else np.asarray(h, dtype=float)


def sigma_norm_sq(c, h, grid, weight_spec=None):
    """|h|^2_sigma = sum_s int sigma^{ij}[2 d_i h d_j h + 1/2 v_i v_j h^2] (w^2) dp on the grid."""
    ctx = get_context(c, grid)
    vals = _field_values(h)
    if vals.shape[-3:] != grid.shape:
        raise DomainError("field does not live on this grid")
    lead = vals.shape[:-3]
    vals = vals.reshape((-1,) + grid.shape)
    grad = ctx.vec_to_active(grid.gradient(vals))                  # (F, N, 3)
    ha = ctx.to_active(vals)                                        # (F, N)
    v = ctx.vec_to_active(ctx.velocity)                             # (N, 3)
    S = ctx.sigma
    dens = (2.0 * np.einsum("fni,nij,fnj->fn", grad, S, grad)
            + 0.5 * np.einsum("ni,nij,nj->n", v, S, v)[None, :] * ha ** 2)
    if weight_spec is not None:
        dens = dens * weight(weight_spec, ctx.P)[None, :] ** 2
    out = dens.sum(axis=1) * grid.weight
    return out.reshape(lead).sum(axis=-1) if lead else float(out[0])


def sigma_norm(c, h, grid=None, weight_spec=None):
    """|h|_sigma of a two-species field (SpeciesField or array (2, n, n, n))."""
    grid = grid or h.grid
    vals = _field_values(h)
    return math.sqrt(float(np.sum(sigma_norm_sq(c, vals, grid, weight_spec))))


def equivalent_norm_sq(c, h, grid):
    """Explicit parallel/perpendicular-gradient form equivalent to |h|^2_sigma."""
    vals = _field_values(h)
    pts = grid.points
    jp = japanese(pts)
    r = np.linalg.norm(pts, axis=-1)
    if math.isinf(parse_light_speed(c)):
        ratio = 1.0 / jp
    else:
        ratio = np.sqrt(c * c + r ** 2) / (c * jp)
    phat = pts / r[..., None]
    grad = grid.gradient(vals)
    par = np.einsum("...i,...i->...", grad, phat)
    perp = np.cross(phat, grad)
    dens = ratio * vals ** 2 + ratio ** 3 * par ** 2 + ratio * np.sum(perp ** 2, axis=-1)
    return float(np.sum(dens)) * grid.weight
