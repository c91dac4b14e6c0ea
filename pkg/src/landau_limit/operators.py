r"""Linearized and nonlinear Landau operators on the momentum grid.

Notation (fields are mu^{1/2}-normalized, h = (h_+, h_-)):

    Z h    = grad h + v h / 2     (= sqrt(mu) grad(h / sqrt(mu)))
    Z^- h  = grad h - v h / 2,    v = c p / p0   (v = p classically)
    h_Y    = h_+ + h_-

The gradient is the Fourier derivative on the cube, so Z^T F = -div F + v.F/2
is its exact discrete adjoint. Pair sums run over the active ball nodes with
the lattice correction K(a) standing in for the singular diagonal:

    Phi_h(a, b) = Phi(a, b) (a != b),    w Phi_h(a, a) = K(a).

With sigma_h(a) = w sum_b Phi_h(a, b) mu_b the operators read

    (L h)_s = Z^T [ 2 sigma_h Z h_s - sqrt(mu_a) w sum_b Phi_h(a, b) sqrt(mu_b) Z h_Y(b) ]
    Gamma(h, ht)_s = Z^T [ -M Z^- ht_s + V ht_s ],
        M(a) = w sum_b Phi_h(a, b) sqrt(mu_b) h_Y(b),
        V(a) = w sum_b Phi_h(a, b) sqrt(mu_b) Z^- h_Y(b).

The first term of L is the diffusion part A (it contains the sigma v v / 2 and
div(sigma v) pieces after expanding Z^T sigma Z); the second is K. The
quadratic form of L equals the symmetric pair sum

    1/2 sum_{a, b} w^2 sum_{s, s'} |sqrt(mu_b) Z h_s(a) - sqrt(mu_a) Z h_s'(b)|^2_{Phi_h},

which is evaluated independently pair by pair in ``quadratic_form_L``.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import _pairs
from .context import get_context, pair_apply, unpack6
from .errors import DomainError, GridResolutionError
from .fields import SpeciesField
from .kernel import japanese
from .maxwellian import Equilibrium, parse_light_speed, projection_constants
from .rates import fit_rate, check_abscissae
from .sigma import sigma_norm_sq, weight, WeightSpec

GRAM_TOL = 1e-4
COARSE_GRAM_TOL = 0.05


def _vals(h):
    return h.values if isinstance(h, SpeciesField) else np.asarray(h, dtype=float)


def _context(h, c):
    c = h.c if c is None else parse_light_speed(c)
    return get_context(c, h.grid), c


def twisted_gradient(ctx, vals, sign=1.0):
    """Z h (sign=+1) or Z^- h (sign=-1) on the full grid, shape vals.shape + (3,)."""
    return ctx.grid.gradient(vals) + sign * 0.5 * ctx.velocity * vals[..., None]


def twisted_adjoint(ctx, flux):
    """Z^T F = -div F + v.F / 2 for F with trailing component axis."""
    return -ctx.grid.divergence(flux) + 0.5 * np.einsum("...i,...i->...", ctx.velocity, flux)


# linear operator ------------------------------------------------------------

def _fluxes_L(ctx, vals):
    """Fluxes of A and K on the active nodes for a batch vals (F, 2, n, n, n)."""
    Za = ctx.vec_to_active(twisted_gradient(ctx, vals))            # (F, 2, N, 3)
    ZY = Za.sum(axis=1)
    sq = ctx.sq_a[None, :, None]
    U = sq * ZY
    _, pv = pair_apply(ctx.P, ctx.c, U=U)
    near = np.einsum("nij,fnj->fni", ctx.correction, U)
    fa = 2.0 * np.einsum("nij,fsnj->fsni", ctx.sigma, Za)
    fk = -(sq * (ctx.grid.weight * pv + near))[:, None]
    return fa, np.broadcast_to(fk, fa.shape)


def apply_L_batch(ctx, vals, parts=False):
    """L applied to a stack of fields (F, 2, n, n, n); parts=True returns (A h, K h)."""
    fa, fk = _fluxes_L(ctx, vals)
    A = twisted_adjoint(ctx, ctx.vec_from_active(fa))
    K = twisted_adjoint(ctx, ctx.vec_from_active(np.ascontiguousarray(fk)))
    return (A, K) if parts else A + K


def apply_L(h, c=None):
    """Linearized operator L h (relativistic for finite c, classical L for c = inf)."""
    ctx, c = _context(h, c)
    out = apply_L_batch(ctx, _vals(h)[None])[0]
    return SpeciesField(out, h.grid, c)


def apply_A(h, c=None):
    ctx, c = _context(h, c)
    return SpeciesField(apply_L_batch(ctx, _vals(h)[None], parts=True)[0][0], h.grid, c)


def apply_K(h, c=None):
    ctx, c = _context(h, c)
    return SpeciesField(apply_L_batch(ctx, _vals(h)[None], parts=True)[1][0], h.grid, c)


def quadratic_form_batch(ctx, v1, v2):
    """Symmetric pair-sum form for stacks v1, v2 of shape (F, 2, n, n, n)."""
    Z1 = np.ascontiguousarray(ctx.vec_to_active(twisted_gradient(ctx, v1)))
    Z2 = np.ascontiguousarray(ctx.vec_to_active(twisted_gradient(ctx, v2)))
    out = np.zeros(Z1.shape[0])
    _pairs.pair_form(ctx.P, ctx.c2, ctx.classical, np.ascontiguousarray(ctx.sq_a), Z1, Z2, out)
    w = ctx.grid.weight
    D1 = Z1[:, 0] - Z1[:, 1]
    D2 = Z2[:, 0] - Z2[:, 1]
    diag = np.einsum("n,fni,nij,fnj->f", ctx.sq_a ** 2, D1, ctx.correction, D2)
    return w * w * out + w * diag


def quadratic_form_L(h, ht, c=None):
    """(L h, ht) from the symmetric pair representation (oracle for apply_L)."""
    if isinstance(ht, SpeciesField):
        h.compatible(ht)
    ctx, c = _context(h, c)
    return float(quadratic_form_batch(ctx, _vals(h)[None], _vals(ht)[None])[0])


# nonlinear operator -----------------------------------------------------------

def _gamma_fluxes(ctx, hv, htv):
    """Fluxes F_s of Gamma(h, ht) on the active nodes; hv, htv (F, 2, n, n, n)."""
    w = ctx.grid.weight
    sq = ctx.sq_a
    hY = ctx.to_active(hv.sum(axis=1))                                # (F, N)
    ZmY = ctx.vec_to_active(twisted_gradient(ctx, hv.sum(axis=1), -1.0))
    X = sq * hY
    U = sq[None, :, None] * ZmY
    pm, pv = pair_apply(ctx.P, ctx.c, X=X, U=U)
    M = w * unpack6(pm) + X[:, :, None, None] * ctx.correction[None]
    V = w * pv + np.einsum("nij,fnj->fni", ctx.correction, U)
    ht = ctx.to_active(htv)                                           # (F, 2, N)
    Zmt = ctx.vec_to_active(twisted_gradient(ctx, htv, -1.0))         # (F, 2, N, 3)
    return -np.einsum("fnij,fsnj->fsni", M, Zmt) + V[:, None] * ht[..., None]


def apply_Gamma_batch(ctx, hv, htv):
    return twisted_adjoint(ctx, ctx.vec_from_active(_gamma_fluxes(ctx, hv, htv)))


def apply_Gamma(h, ht, c=None):
    """Nonlinear operator Gamma(h, ht) (strong form)."""
    h.compatible(ht)
    ctx, c = _context(h, c)
    return SpeciesField(apply_Gamma_batch(ctx, _vals(h)[None], _vals(ht)[None])[0], h.grid, c)


def weight_test_gradient(ctx, hb, spec=None):
    """Weak-form test vector of the nonlinear pairing.

    (5 l p0/(c<p>^2) + theta p0/(c <p> ln(e+t)) + 1/2)(c p/p0) w^2 hb + w^2 grad hb,
    which for spec=None (w = 1) is Z hb.
    """
    base = twisted_gradient(ctx, hb)
    if spec is None:
        return base
    pts = ctx.grid.points
    jp = japanese(pts)
    coef = 5.0 * spec.ell / jp ** 2 + spec.theta / (jp * math.log(math.e + spec.t))
    w2 = weight(spec, pts) ** 2
    return w2[..., None] * (base + (coef[..., None] * pts) * hb[..., None])


def gamma_pairing(h, ht, hb, weight_spec=None, c=None):
    """(Gamma(h, ht), w^2 hb) from the pair-by-pair weak form (oracle for apply_Gamma)."""
    h.compatible(ht)
    h.compatible(hb)
    ctx, c = _context(h, c)
    return float(gamma_pairing_batch(ctx, _vals(h)[None], _vals(ht)[None], _vals(hb)[None],
                                     weight_spec)[0])


def gamma_pairing_batch(ctx, hv, htv, hbv, weight_spec=None):
    hY_full = hv.sum(axis=1)
    hY = np.ascontiguousarray(ctx.to_active(hY_full))
    ZmY = np.ascontiguousarray(ctx.vec_to_active(twisted_gradient(ctx, hY_full, -1.0)))
    ht = np.ascontiguousarray(ctx.to_active(htv))
    Zmt = np.ascontiguousarray(ctx.vec_to_active(twisted_gradient(ctx, htv, -1.0)))
    W = np.ascontiguousarray(ctx.vec_to_active(weight_test_gradient(ctx, hbv, weight_spec)))
    out = np.zeros(hv.shape[0])
    sq = np.ascontiguousarray(ctx.sq_a)
    _pairs.pair_gamma_weak(ctx.P, ctx.c2, ctx.classical, sq, hY, ZmY, ht, Zmt, W, out)
    w = ctx.grid.weight
    Y = (sq * hY)[:, None, :, None] * Zmt - (sq[None, :, None] * ZmY)[:, None] * ht[..., None]
    diag = -np.einsum("fsni,nij,fsnj->f", W, ctx.correction, Y)
    return w * w * out + w * diag


# macroscopic projection ------------------------------------------------------

@dataclass(frozen=True)
class MacroCoefficients:
    a_plus: float
    a_minus: float
    b: tuple
    c_coef: float

    def as_dict(self):
        return {"a_plus": self.a_plus, "a_minus": self.a_minus, "b": list(self.b), "c": self.c_coef}


def macro_basis(grid, c):
    """Six basis fields with unit continuum norm: e_+ sqrt(mu), e_- sqrt(mu),
    (p_i/Cb) sqrt(mu) (1,1)/sqrt2, energy (1,1)/sqrt2."""
    c = parse_light_speed(c)
    eq = Equilibrium(c)
    pts = grid.points
    sq = eq.sqrt_mu(pts)
    if eq.classical:
        Cb = 1.0
        en = (np.sum(pts ** 2, -1) - 3.0) / math.sqrt(6.0)
    else:
        k = projection_constants(c)
        Cb = k.Cb
        # p0 - C0 = (kinetic - (c C0 - c^2)) / c with c C0 - c^2 = c^2 d + 5 ... evaluated stably
        en = (eq.kinetic(pts) / c - (k.C0 - c)) / k.Cc
    zero = np.zeros_like(sq)
    r2 = 1.0 / math.sqrt(2.0)
    basis = [np.stack([sq, zero]), np.stack([zero, sq])]
    for i in range(3):
        basis.append(np.stack([pts[..., i] * sq / Cb] * 2) * r2)
    basis.append(np.stack([en * sq] * 2) * r2)
    return np.stack(basis)                                             # (6, 2, n, n, n)


def _gram(grid, basis):
    B = basis.reshape(6, -1)
    return B @ B.T * grid.weight


def gram_tolerance(grid):
    """Gram deviation allowed on a grid; smoke-test grids (n < 16) get the coarse value."""
    return GRAM_TOL if grid.n >= 16 else COARSE_GRAM_TOL


def project(h, c=None):
    """Macro-micro decomposition h = P h + (I - P) h.

    Returns (MacroCoefficients, P h, (I - P) h). The coefficients are those of
    P_s h = a_s sqrt(mu) + b.p/Cb sqrt(mu) + c (p0 - C0)/Cc sqrt(mu).
    Raises GridResolutionError if the discrete Gram matrix of the basis
    differs from the identity by more than gram_tolerance(grid).
    """
    c = h.c if c is None else parse_light_speed(c)
    basis = _basis_cached(h.grid, c)
    G = _gram(h.grid, basis)
    dev = float(np.abs(G - np.eye(6)).max())
    if dev > gram_tolerance(h.grid):
        raise GridResolutionError(f"macroscopic basis Gram matrix deviates by {dev:.2e} on {h.grid!r}")
    rhs = basis.reshape(6, -1) @ h.values.ravel() * h.grid.weight
    x = np.linalg.solve(G, rhs)
    Ph = np.tensordot(x, basis, axes=1)
    r2 = 1.0 / math.sqrt(2.0)
    coef = MacroCoefficients(float(x[0]), float(x[1]), tuple(float(v) * r2 for v in x[2:5]),
                             float(x[5]) * r2)
    return coef, SpeciesField(Ph, h.grid, c), SpeciesField(h.values - Ph, h.grid, c)


_BASIS = {}


def _basis_cached(grid, c):
    key = (grid.key(), c)
    if key not in _BASIS:
        if len(_BASIS) > 8:
            _BASIS.clear()
        _BASIS[key] = macro_basis(grid, c)
    return _BASIS[key]


def micro_l2(h, c=None):
    return project(h, c)[2].l2()


# norms and diagnostics ---------------------------------------------------------

def h1_weighted_norm(h, ell):
    """|h|_{H^1_{p,l}} = (sum_{i<=1} sum_s |<p>^l grad^i h_s|^2_{L^2})^{1/2}."""
    g = h.grid
    wl = japanese(g.points) ** ell
    vals = _vals(h)
    grad = g.gradient(vals)
    tot = np.sum((wl * vals) ** 2) + np.sum((wl[..., None] * grad) ** 2)
    return math.sqrt(float(tot) * g.weight)


def operator_difference(h, ht, c):
    """|(L^c h - L^inf h, ht)| and the normalizing |h|_{H^1_8} |ht|_{H^1_-2}."""
    g = h.grid
    diff = apply_L(h, c).values - apply_L(h, math.inf).values
    val = abs(float(np.sum(diff * ht.values)) * g.weight)
    return val, h1_weighted_norm(h, 8) * h1_weighted_norm(ht, -2)


def gamma_difference(h, ht, hb, c):
    """|(Gamma^c(h, ht) - Gamma^inf(h, ht), hb)| and |h|_{H^1} |ht|_{H^1_8} |hb|_{H^1_-2}."""
    g = h.grid
    diff = apply_Gamma(h, ht, c).values - apply_Gamma(h, ht, math.inf).values
    val = abs(float(np.sum(diff * hb.values)) * g.weight)
    return val, h1_weighted_norm(h, 0) * h1_weighted_norm(ht, 8) * h1_weighted_norm(hb, -2)


def operator_difference_rate(fields, c_list, kind="linear"):
    """Log-log rate of the normalized operator difference over c_list.

    fields: (h, ht) for kind='linear' or (h, ht, hb) for kind='nonlinear';
    they must be c-independent profiles on a common grid.
    """
    cs = check_abscissae(c_list, minimum=2)
    ys = []
    for c in cs:
        if kind == "linear":
            val, norm = operator_difference(fields[0], fields[1], c)
        elif kind == "nonlinear":
            val, norm = gamma_difference(fields[0], fields[1], fields[2], c)
        else:
            raise DomainError(f"unknown difference kind {kind!r}")
        if not norm > 0:
            raise DomainError("degenerate difference study: reference norms vanish")
        ys.append(val / norm)
    return fit_rate(cs, ys, extra={"kind": kind})


def sigma_norm_field(h, c=None, weight_spec=None):
    c = h.c if c is None else parse_light_speed(c)
    return math.sqrt(float(np.sum(sigma_norm_sq(c, h.values, h.grid, weight_spec))))


def coercivity_ratios(fields, c=None):
    """(L h, h) / |(I - P) h|^2_sigma for each field."""
    out = []
    for h in fields:
        cc = h.c if c is None else parse_light_speed(c)
        Lh = apply_L(h, cc)
        num = h.inner(Lh)
        micro = project(h, cc)[2]
        den = float(np.sum(sigma_norm_sq(cc, micro.values, h.grid)))
        out.append(num / den)
    return np.array(out)


def gamma_moment_residuals(h, c=None):
    """<Gamma(h, h), phi> / (|h|_{L^2} |h|_sigma) for the six collision invariants."""
    from .fields import null_space_fields
    c = h.c if c is None else parse_light_speed(c)
    G = apply_Gamma(h, h, c)
    scale = h.l2() * sigma_norm_field(h, c)
    return np.array([G.inner(phi) / (scale * phi.l2()) for phi in null_space_fields(h.grid, c)])
