r"""Relativistic and classical Maxwellians, moments and projection constants.

mu^c(p) = exp(-c p0) / (4 pi c K_2(c^2)),  p0 = sqrt(c^2 + |p|^2)
mu^inf(p) = (2 pi)^{-3/2} exp(-|p|^2 / 2)

All evaluations go through log mu with the scaled Bessel value
e^{c^2} K_2(c^2) and c p0 - c^2 = c|p|^2/(c + p0), so nothing overflows and
the large-c limit is free of cancellation.
"""
from dataclasses import dataclass
import math

import numpy as np

from .bessel import bessel_k_scaled, bessel_ratio, ratio_excess
from .errors import DomainError

CLASSICAL = math.inf


def parse_light_speed(c):
    """Accept a number or one of 'inf', 'classical'."""
    if isinstance(c, str):
        if c.strip().lower() in ("inf", "classical", "infinity"):
            return CLASSICAL
        c = float(c)
    c = float(c)
    if math.isnan(c) or c < 1.0:
        raise DomainError(f"light speed must be >= 1 or 'classical', got {c}")
    return c


class Equilibrium:
    """Normalized equilibrium for light speed c (c = inf is the classical one)."""

    def __init__(self, c):
        self.c = parse_light_speed(c)
        if self.classical:
            self.k2_scaled = None
            self._log_norm = -1.5 * math.log(2.0 * math.pi)
        else:
            self.k2_scaled = bessel_k_scaled(2, self.c ** 2)
            self._log_norm = -math.log(4.0 * math.pi * self.c * self.k2_scaled)

    @property
    def classical(self):
        return math.isinf(self.c)

    def __repr__(self):
        return "Equilibrium(classical)" if self.classical else f"Equilibrium(c={self.c})"

    def energy(self, p):
        """p0 = sqrt(c^2 + |p|^2) (relativistic only)."""
        if self.classical:
            raise DomainError("p0 is not defined in the classical limit")
        p = np.asarray(p, dtype=float)
        return np.sqrt(self.c ** 2 + np.sum(p * p, axis=-1))

    def kinetic(self, p):
        """c p0 - c^2 (relativistic) or |p|^2/2 (classical)."""
        p = np.asarray(p, dtype=float)
        r2 = np.sum(p * p, axis=-1)
        if self.classical:
            return 0.5 * r2
        c = self.c
        return c * r2 / (c + np.sqrt(c * c + r2))

    def velocity(self, p):
        """Gradient of the kinetic energy: c p / p0 (or p classically)."""
        p = np.asarray(p, dtype=float)
        if self.classical:
            return p.copy()
        return self.c * p / self.energy(p)[..., None]

    def log_mu(self, p):
        return self._log_norm - self.kinetic(p)

    def mu(self, p):
        return np.exp(self.log_mu(p))

    def sqrt_mu(self, p):
        return np.exp(0.5 * self.log_mu(p))


def mu(eq, p):
    """Maxwellian value at p (any leading shape, last axis of length 3)."""
    return eq.mu(p)


def mu_difference(c, p):
    """mu^c(p) - mu^inf(p)."""
    return Equilibrium(c).mu(p) - Equilibrium(CLASSICAL).mu(p)


def sqrt_mu_difference(c, p):
    """sqrt(mu^c(p)) - sqrt(mu^inf(p))."""
    return Equilibrium(c).sqrt_mu(p) - Equilibrium(CLASSICAL).sqrt_mu(p)


def _double_fact_coef(n):
    # (2n)! / (2^n n!) = (2n-1)!!
    return math.factorial(2 * n) / (2 ** n * math.factorial(n))


def moment(c, m, k=None):
    """Closed-form moments of mu^c.

    ``moment(c, m)`` is int |p|^{2m} mu^c dp = (2m+1)!! K_{m+2}/K_2;
    ``moment(c, m, k)`` is int |p|^{2m} (p0)^{2k-1} mu^c dp
    = sum_i binom(k, i) (2(m+i+1))!/(2^{m+i+1}(m+i+1)!) c^{2(k-i)-1} K_{m+i+1}/K_2.
    Supported for m + k <= 4. Classically only the pure |p|^{2m} moment exists.
    """
    c = parse_light_speed(c)
    m = int(m)
    if m < 0 or (k is not None and (int(k) < 0 or m + int(k) > 4)) or m > 4:
        raise DomainError("moments supported for m, k >= 0 with m + k <= 4")
    if math.isinf(c):
        if k is not None:
            raise DomainError("p0 moments need a finite light speed")
        return _double_fact_coef(m + 1)
    gamma = c * c
    if k is None:
        return _double_fact_coef(m + 1) * bessel_ratio(m + 2, 2, gamma)
    k = int(k)
    total = 0.0
    for i in range(k + 1):
        n = m + i + 1
        total += (math.comb(k, i) * _double_fact_coef(n) * c ** (2 * (k - i) - 1)
                  * bessel_ratio(n, 2, gamma))
    return total


@dataclass(frozen=True)
class ProjectionConstants:
    c: float
    C0: float
    Cb: float
    Cc: float
    rho_c: float
    rho_a: float
    Ca: float

    def as_dict(self):
        return {"c": self.c, "C0": self.C0, "Cb": self.Cb, "Cc": self.Cc,
                "rho_c": self.rho_c, "rho_a": self.rho_a, "Ca": self.Ca}


def projection_constants(c):
    """Constants of the macroscopic projection.

    With t = K_3(c^2)/K_2(c^2) = 1 + d (d computed without cancellation):
      C0 = c t - 1/c,  Cb^2 = t,  Cc^2 = c^2 + 5t - c^2 t^2 - 1/c^2,
      rho_c = (Cc^2 + 1/c^2)/Cc^2,  Ca = c(-c^2 t^2 + 6t + c^2),
      rho_a = -c(c t - Ca).
    """
    c = parse_light_speed(c)
    if math.isinf(c):
        raise DomainError("projection constants need a finite light speed")
    c2 = c * c
    d = ratio_excess(2, c2)
    t = 1.0 + d
    C0 = c * t - 1.0 / c
    Cb = math.sqrt(t)
    cc2 = 5.0 + 5.0 * d - c2 * d * (2.0 + d) - 1.0 / c2
    if cc2 <= 0:
        raise DomainError(f"non-positive energy variance at c={c}")
    Ca = c * (6.0 + 6.0 * d - c2 * d * (2.0 + d))
    rho_a = -c2 * (-5.0 - 5.0 * d + c2 * d * (2.0 + d))
    rho_c = (cc2 + 1.0 / c2) / cc2
    return ProjectionConstants(c, C0, Cb, math.sqrt(cc2), rho_c, rho_a, Ca)


def envelope_lower(c, p):
    """(1 - 4/c^2)(2 pi)^{-3/2} exp(-|p|^2/2)."""
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1)
    return (1.0 - 4.0 / c ** 2) * (2 * math.pi) ** -1.5 * np.exp(-0.5 * r2)


def envelope_upper_shape(c, p, rate=3.0 / 8.0):
    """exp(-rate |p| min(|p|, 4c/3)); the upper envelope is C times this."""
    p = np.asarray(p, dtype=float)
    r = np.sqrt(np.sum(p * p, axis=-1))
    return np.exp(-rate * r * np.minimum(r, 4.0 * c / 3.0))


def normalization(c, grid=None):
    """Grid quadrature of int mu^c dp (default grid from the grid module)."""
    from .grid import default_quadrature_grid
    eq = Equilibrium(c)
    grid = grid or default_quadrature_grid(eq.c)
    return sum(float(np.sum(eq.mu(s))) for s in grid.slabs()) * grid.weight


def moment_table(c):
    """Rows (m, k, value) for every supported moment; k = -1 marks the pure |p|^{2m} moment."""
    rows = []
    for m in range(5):
        rows.append((m, -1, moment(c, m)))
    for m in range(5):
        for k in range(0, 5 - m):
            rows.append((m, k, moment(c, m, k)))
    return rows


# difference and envelope studies -------------------------------------------

def _radial_line(c, rmax=None, points=4001):
    """Radial sample p = (0, 0, r) for isotropic quantities."""
    rmax = 3.0 * c if rmax is None else rmax
    r = np.linspace(0.0, rmax, points)
    return r, np.stack([np.zeros_like(r), np.zeros_like(r), r], axis=-1)


def mu_difference_sup(c, root=False, rmax=12.0):
    """sup_p |mu^c - mu^inf| (or of the square roots) on a radial sample."""
    r, p = _radial_line(c, rmax)
    d = sqrt_mu_difference(c, p) if root else mu_difference(c, p)
    return float(np.abs(d).max())


def weighted_difference_constant(c, root=False):
    """c^2 sup_p |mu^c - mu^inf| e^{(|p|/3) min(|p|, 4c/3)} (|p|/6 for square roots)."""
    r, p = _radial_line(c, rmax=3.0 * c)
    rate = 1.0 / 6.0 if root else 1.0 / 3.0
    d = sqrt_mu_difference(c, p) if root else mu_difference(c, p)
    with np.errstate(divide="ignore"):
        logd = np.log(np.abs(d)) + rate * r * np.minimum(r, 4.0 * c / 3.0)
    return float(c * c * np.exp(np.max(logd)))


def mu_difference_rate(c_list, root=False):
    """Log-log rate of sup_p |mu^c - mu^inf| against c."""
    from .rates import fit_rate
    cs = [parse_light_speed(c) for c in c_list]
    return fit_rate(cs, [mu_difference_sup(c, root) for c in cs], extra={"root": bool(root)})


def envelope_constant(c, samples=10000, rng=None):
    """Smallest C with mu^c <= C exp(-(3/8)|p| min(|p|, 4c/3)) on random |p| <= 3c,
    and the minimum of mu^c / lower envelope (>= 1 when the lower bound holds)."""
    rng = np.random.default_rng(0) if rng is None else rng
    v = rng.standard_normal((samples, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    p = v * (3.0 * c * rng.random((samples, 1)) ** (1.0 / 3.0))
    eq = Equilibrium(c)
    logm = eq.log_mu(p)
    r = np.linalg.norm(p, axis=1)
    upper = float(np.exp(np.max(logm + 0.375 * r * np.minimum(r, 4.0 * c / 3.0))))
    lo = envelope_lower(c, p)
    mask = lo > 0
    lower_ratio = float(np.min(np.exp(logm[mask] - np.log(lo[mask])))) if np.any(mask) else math.inf
    return upper, lower_ratio
