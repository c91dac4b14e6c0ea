"""Two-species perturbation fields h = (h_+, h_-) on a momentum grid."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError
from .grid import MomentumGrid
from .maxwellian import Equilibrium, parse_light_speed


@dataclass
class SpeciesField:
    """values has shape (2, n, n, n); c is the light speed of the context (inf = classical)."""
    values: np.ndarray
    grid: MomentumGrid
    c: float = math.inf

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (2,) + self.grid.shape:
            raise DomainError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field has non-finite entries")
        self.c = parse_light_speed(self.c)

    @property
    def plus(self):
        return self.values[0]

    @property
    def minus(self):
        return self.values[1]

    def compatible(self, other):
        if self.grid.key() != other.grid.key():
            raise DomainError("fields live on different grids")

    def like(self, values):
        return SpeciesField(values, self.grid, self.c)

    def __add__(self, other):
        self.compatible(other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        self.compatible(other)
        return self.like(self.values - other.values)

    def __mul__(self, a):
        return self.like(a * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)

    def inner(self, other):
        """Discrete L^2 inner product summed over species."""
        self.compatible(other)
        return float(np.sum(self.values * other.values)) * self.grid.weight

    def l2(self):
        return math.sqrt(self.inner(self))


def zeros(grid, c=math.inf):
    return SpeciesField(np.zeros((2,) + grid.shape), grid, c)


def from_functions(grid, c, fplus, fminus=None):
    """Sample h_+ = fplus(p), h_- = fminus(p) (defaults to fplus) on the grid points."""
    pts = grid.points
    hp = np.asarray(fplus(pts), dtype=float)
    hm = hp if fminus is None else np.asarray(fminus(pts), dtype=float)
    return SpeciesField(np.stack([hp, hm]), grid, c)


def null_space_fields(grid, c):
    """The six collision invariants times sqrt(mu): e_+, e_-, p_i (both), energy (both).

    The energy invariant uses the kinetic energy c p0 - c^2 (|p|^2/2 classically),
    which spans the same space as p0 together with the mass invariants.
    """
    eq = Equilibrium(parse_light_speed(c))
    pts = grid.points
    sq = eq.sqrt_mu(pts)
    one = np.ones_like(sq)
    zero = np.zeros_like(sq)
    energy = eq.kinetic(pts)
    out = [np.stack([sq, zero]), np.stack([zero, sq])]
    for i in range(3):
        out.append(np.stack([pts[..., i] * sq] * 2))
    out.append(np.stack([energy * sq] * 2))
    return [SpeciesField(v * one, grid, c) for v in out]


def _monomials(pts, degree):
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    terms = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            for k in range(degree + 1 - i - j):
                terms.append(x ** i * y ** j * z ** k)
    return terms


def random_field(grid, rng, c=math.inf, degree=2, decay=0.25, scale=1.0):
    """Smooth c-independent random field exp(-decay |p|^2) * polynomial of given degree."""
    pts = grid.points
    env = np.exp(-decay * np.sum(pts ** 2, -1))
    terms = _monomials(pts, degree)
    vals = np.empty((2,) + grid.shape)
    for s in range(2):
        coef = rng.standard_normal(len(terms))
        vals[s] = env * sum(a * t for a, t in zip(coef, terms))
    return SpeciesField(scale * vals, grid, c)
