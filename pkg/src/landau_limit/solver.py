"""Spatially homogeneous relaxation: linear (d_t f = -L f) and nonlinear
(d_t h = -L h + Gamma(h, h)) runs with explicit RK4, conservation traces and
the classical-limit rate study.

Config files are plain ``key = value`` lines ('#' starts a comment):

    grid.n = 24            even, >= 4
    grid.radius = 8.0
    dt = auto              or a positive float
    T = 1.0
    init.profile = anisotropic   (equilibrium | anisotropic | two-species | random | null)
    init.amplitude = 0.05
    seed = 0
"""
from dataclasses import dataclass, field, replace
import math
import warnings

import numpy as np

from .context import get_context, pair_apply, unpack6
from .errors import DomainError, InstabilityError
from .fields import SpeciesField, null_space_fields, random_field
from .grid import MomentumGrid
from .maxwellian import Equilibrium, parse_light_speed, CLASSICAL
from .operators import (apply_L_batch, twisted_gradient, twisted_adjoint, project)
from .rates import fit_rate, check_abscissae
from .sigma import sigma_norm_sq

PROFILES = ("equilibrium", "anisotropic", "two-species", "random", "null")
TRACE_COLUMNS = ("t", "mass", "momx", "momy", "momz", "energy", "micro_l2", "sigma_norm")
GROWTH_LIMIT = 10.0
POSITIVITY_TOL = 1e-12


class PositivityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RelaxationConfig:
    n: int = 24
    radius: float = 8.0
    dt: float = None              # None: automatic
    T: float = 1.0
    profile: str = "anisotropic"
    amplitude: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise DomainError(f"unknown init.profile {self.profile!r}; choose from {', '.join(PROFILES)}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.T >= 0:
            raise DomainError("T must be >= 0")
        MomentumGrid(self.n, self.radius)

    @property
    def grid(self):
        return MomentumGrid(self.n, self.radius)

    def as_dict(self):
        return {"grid.n": self.n, "grid.radius": self.radius,
                "dt": "auto" if self.dt is None else self.dt, "T": self.T,
                "init.profile": self.profile, "init.amplitude": self.amplitude, "seed": self.seed}


_KEYS = {
    "grid.n": ("n", int),
    "grid.radius": ("radius", float),
    "dt": ("dt", lambda s: None if s.strip().lower() == "auto" else float(s)),
    "T": ("T", float),
    "init.profile": ("profile", str.strip),
    "init.amplitude": ("amplitude", float),
    "seed": ("seed", int),
}


def parse_config_text(text):
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise DomainError(f"config line {lineno}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            kw[name] = conv(val)
        except ValueError:
            raise DomainError(f"config line {lineno}: bad value {val!r} for {key}") from None
    return RelaxationConfig(**kw)


def load_config(path):
    """Read a key = value config file (FileNotFoundError if missing)."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


# initial data --------------------------------------------------------------------

def _profile_shape(pts, profile):
    # c-independent perturbation g(p) of F, in units of sqrt(mu_inf)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    r2 = x * x + y * y + z * z
    aniso = (x * x - z * z) / math.sqrt(2.0) + 0.5 * x + 0.3 * (r2 - 3.0) / math.sqrt(6.0)
    if profile == "anisotropic":
        return aniso, aniso
    if profile == "two-species":
        return aniso + 0.4, aniso - 0.4 - 0.3 * y
    raise AssertionError(profile)


def initial_field(config, c):
    """f(0) for light speed c; F = mu^c + sqrt(mu^c) f.

    The deterministic profiles perturb F by the c-independent amount
    amplitude * sqrt(mu_inf) e^{-|p|^2/2} g(p) with a quadratic polynomial g, so
    f^c(0) = sqrt(mu_inf / mu^c) e^{-|p|^2/2} g. The extra envelope keeps the
    perturbation at |p| < c, where the c^-2 expansion of mu^c is accurate.
    """
    c = parse_light_speed(c)
    grid = config.grid
    A = config.amplitude
    if config.profile == "equilibrium":
        return SpeciesField(np.zeros((2,) + grid.shape), grid, c)
    if config.profile == "random":
        rng = np.random.Generator(np.random.Philox(config.seed))
        h = random_field(grid, rng, c)
        return h * (A / max(np.abs(h.values).max(), 1e-300))
    if config.profile == "null":
        phis = null_space_fields(grid, c)
        coef = np.array([1.0, -0.5, 0.3, 0.0, -0.2, 0.1])
        return SpeciesField(A * sum(a * p.values for a, p in zip(coef, phis)), grid, c)
    pts = grid.points
    gp, gm = _profile_shape(pts, config.profile)
    ratio = np.exp(Equilibrium(CLASSICAL).log_mu(pts) / 2.0 - Equilibrium(c).log_mu(pts) / 2.0)
    sq_inf = Equilibrium(CLASSICAL).sqrt_mu(pts) * np.exp(-0.5 * np.sum(pts ** 2, -1))
    return SpeciesField(A * ratio * sq_inf * np.stack([gp, gm]), grid, c)


# observables -----------------------------------------------------------------------

def observables(ctx, vals):
    """(mass, mom_x, mom_y, mom_z, energy) of F_s = mu + sqrt(mu) h_s summed over species.

    Energy is int p0 F (relativistic) or int |p|^2/2 F (classical).
    """
    g = ctx.grid
    F = ctx.mu[None] + ctx.sqrt_mu[None] * vals
    Ft = F.sum(axis=0)
    pts = g.points
    mass = float(np.sum(Ft)) * g.weight
    mom = [float(np.sum(Ft * pts[..., i])) * g.weight for i in range(3)]
    if ctx.classical:
        en = 0.5 * np.sum(pts ** 2, -1)
    else:
        en = ctx.eq.energy(pts)
    energy = float(np.sum(Ft * en)) * g.weight
    return (mass, mom[0], mom[1], mom[2], energy)


def min_distribution(ctx, vals):
    return float((ctx.mu[None] + ctx.sqrt_mu[None] * vals).min())


# time stepping -----------------------------------------------------------------------

def _power_lambda_max(ctx, iters=30):
    if getattr(ctx, "_lam_max", None) is None:
        rng = np.random.Generator(np.random.Philox(0))
        x = rng.standard_normal((1, 2) + ctx.grid.shape)
        lam = 0.0
        for _ in range(iters):
            y = apply_L_batch(ctx, x)
            lam = float(np.sum(x * y) / np.sum(x * x))
            x = y / np.linalg.norm(y)
        ctx._lam_max = lam
    return ctx._lam_max


def default_time_step(c, grid):
    """min(0.1 h^2 / max eig sigma, 2.5 / lambda_max(L)); the second bound keeps RK4
    inside its real stability interval for the spectral discretization."""
    ctx = get_context(c, grid)
    lam_sigma = float(np.linalg.eigvalsh(ctx.sigma).max())
    parabolic = 0.1 * grid.spacing ** 2 / lam_sigma
    return min(parabolic, 2.5 / (1.05 * _power_lambda_max(ctx)))


def nonlinear_rhs(ctx, vals):
    """-L h + Gamma(h, h) for a single field (2, n, n, n) with one pair pass."""
    w = ctx.grid.weight
    sq = ctx.sq_a
    Za = ctx.vec_to_active(twisted_gradient(ctx, vals))               # (2, N, 3)
    hY_full = vals.sum(axis=0)
    ZY = Za.sum(axis=0)
    hY = ctx.to_active(hY_full)
    ZmY = ctx.vec_to_active(twisted_gradient(ctx, hY_full, -1.0))
    X = (sq * hY)[None]
    U = np.stack([sq[:, None] * ZY, sq[:, None] * ZmY])
    pm, pv = pair_apply(ctx.P, ctx.c, X=X, U=U)
    K = ctx.correction
    cross = sq[:, None] * (w * pv[0] + np.einsum("nij,nj->ni", K, U[0]))
    fl = 2.0 * np.einsum("nij,snj->sni", ctx.sigma, Za) - cross[None]
    M = w * unpack6(pm[0]) + X[0][:, None, None] * K
    V = w * pv[1] + np.einsum("nij,nj->ni", K, U[1])
    ht = ctx.to_active(vals)
    Zm = ctx.vec_to_active(twisted_gradient(ctx, vals, -1.0))
    fg = -np.einsum("nij,snj->sni", M, Zm) + V[None] * ht[..., None]
    return twisted_adjoint(ctx, ctx.vec_from_active(fg - fl))


def linear_rhs(ctx, vals):
    return -apply_L_batch(ctx, vals[None])[0]


def rk4_step(rhs, y, dt):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class RelaxationRun:
    config: RelaxationConfig
    c: float
    mode: str
    dt: float
    initial: SpeciesField
    final: SpeciesField = None
    trace: list = field(default_factory=list)
    energy_identity: list = field(default_factory=list)
    positivity_violations: int = 0

    def column(self, name):
        k = TRACE_COLUMNS.index(name)
        return np.array([row[k] for row in self.trace])

    def drift(self, name):
        """max_t |X(t) - X(0)| / max(|X(0)|, 1) for a conserved column."""
        x = self.column(name)
        return float(np.abs(x - x[0]).max() / max(abs(x[0]), 1.0))


def _trace_row(ctx, t, vals):
    h = SpeciesField(vals, ctx.grid, ctx.c)
    micro = project(h)[2].l2()
    sn = math.sqrt(max(float(np.sum(sigma_norm_sq(ctx.c, vals, ctx.grid))), 0.0))
    return (t,) + observables(ctx, vals) + (micro, sn)


def _run(config, c, mode, dt=None, initial=None):
    c = parse_light_speed(c)
    grid = config.grid
    ctx = get_context(c, grid)
    if dt is None:
        dt = config.dt if config.dt is not None else default_time_step(c, grid)
    h0 = initial if initial is not None else initial_field(config, c)
    run = RelaxationRun(config, c, mode, float(dt), h0)
    rhs = (lambda y: linear_rhs(ctx, y)) if mode == "linear" else (lambda y: nonlinear_rhs(ctx, y))
    nsteps = int(math.ceil(config.T / dt - 1e-9)) if config.T > 0 else 0
    step = config.T / nsteps if nsteps else 0.0
    run.dt = step if nsteps else float(dt)
    y = h0.values.copy()
    norm0 = max(float(np.linalg.norm(y)), 1e-300)
    run.trace.append(_trace_row(ctx, 0.0, y))
    for k in range(nsteps):
        if mode == "linear":
            run.energy_identity.append(float(np.sum(y * rhs(y))) * grid.weight)
        y = rk4_step(rhs, y, step)
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > GROWTH_LIMIT * norm0:
            raise InstabilityError(f"solution norm grew more than {GROWTH_LIMIT:g}x at step {k + 1}; "
                                   f"reduce dt (currently {step:.3g})")
        if mode == "nonlinear" and min_distribution(ctx, y) < -POSITIVITY_TOL:
            run.positivity_violations += 1
            warnings.warn(f"distribution became negative at t={(k + 1) * step:.4g}", PositivityWarning)
        run.trace.append(_trace_row(ctx, (k + 1) * step, y))
    run.final = SpeciesField(y, grid, c)
    return run


def relax_linear(config, c=CLASSICAL, dt=None, initial=None):
    """Linear relaxation d_t f = -L f with RK4."""
    return _run(config, c, "linear", dt, initial)


def relax_nonlinear(config, c=CLASSICAL, dt=None, initial=None):
    """Nonlinear relaxation d_t h = -L h + Gamma(h, h), i.e. d_t F = C(F, F)."""
    return _run(config, c, "nonlinear", dt, initial)


def classical_limit_rate(config, c_list, T=None):
    """Slope of ||f^c(T) - f^inf(T)||_{L^2} against c on a common grid and time step."""
    cs = check_abscissae(c_list, minimum=3)
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise DomainError("c_list must be strictly increasing")
    if T is not None:
        config = replace(config, T=float(T))
    grid = config.grid
    dt = config.dt
    if dt is None:
        dt = min(default_time_step(c, grid) for c in list(cs) + [CLASSICAL])
    ref = relax_nonlinear(config, CLASSICAL, dt=dt).final
    diffs = []
    for c in cs:
        fc = relax_nonlinear(config, c, dt=dt).final
        diffs.append(math.sqrt(float(np.sum((fc.values - ref.values) ** 2)) * grid.weight))
    return fit_rate(cs, diffs, extra={"T": config.T, "dt": dt})
