"""Uniform cell-centred momentum grids and spectral differentiation."""
import math

import numpy as np

DEFAULT_N = 24
DEFAULT_RADIUS = 8.0


class MomentumGrid:
    """Cube [-R, R]^3 with n cell-centred nodes per axis and weight h^3.

    Pair sums over (p, q) are restricted to the nodes inside the ball |p| <= R
    (the ``active`` nodes); this keeps the pair structure symmetric.
    """

    def __init__(self, n=DEFAULT_N, radius=DEFAULT_RADIUS):
        n = int(n)
        if n < 4 or n % 2:
            raise ValueError(f"grid size must be an even integer >= 4, got {n}")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.n = n
        self.radius = float(radius)
        self.spacing = 2.0 * self.radius / n
        self.weight = self.spacing ** 3
        self.axis = -self.radius + self.spacing * (np.arange(n) + 0.5)
        self._points = None
        self._active = None

    def __repr__(self):
        return f"MomentumGrid(n={self.n}, radius={self.radius})"

    def key(self):
        return (self.n, self.radius)

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def points(self):
        """Node coordinates, shape (n, n, n, 3)."""
        if self._points is None:
            x = self.axis
            self._points = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
        return self._points

    @property
    def active(self):
        """Flat indices of the nodes with |p| <= R."""
        if self._active is None:
            r2 = np.sum(self.points ** 2, axis=-1).ravel()
            self._active = np.flatnonzero(r2 <= self.radius ** 2)
        return self._active

    @property
    def active_points(self):
        return self.points.reshape(-1, 3)[self.active]

    def integrate(self, f):
        """Trapezoid (= midpoint) sum over the cube of the trailing 3 axes."""
        return np.sum(f, axis=(-3, -2, -1)) * self.weight

    def slabs(self, rows=8):
        """Yield node coordinates in x-slabs of shape (k, n, n, 3) (low memory)."""
        x = self.axis
        for i0 in range(0, self.n, rows):
            xs = x[i0:i0 + rows]
            yield np.stack(np.meshgrid(xs, x, x, indexing="ij"), axis=-1)

    # spectral differentiation ------------------------------------------------
    def _wavenumbers(self):
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        k[self.n // 2] = 0.0          # drop the Nyquist mode: keeps D antisymmetric
        return k

    def derivative(self, f, axis):
        """Fourier derivative of f along momentum axis 0, 1 or 2 (last 3 axes of f)."""
        ax = f.ndim - 3 + axis
        k = self._wavenumbers()
        shape = [1] * f.ndim
        shape[ax] = self.n
        fk = np.fft.fft(f, axis=ax)
        return np.real(np.fft.ifft(1j * k.reshape(shape) * fk, axis=ax))

    def gradient(self, f):
        """Fourier gradient; returns shape f.shape + (3,)."""
        return np.stack([self.derivative(f, a) for a in range(3)], axis=-1)

    def divergence(self, v):
        """Fourier divergence of a vector field with trailing component axis."""
        return sum(self.derivative(v[..., a], a) for a in range(3))


def quadrature_radius(c):
    """Radius beyond which mu^c is negligible for 1e-6-level integrals.

    Chosen so that c (p0 - c) = c|p|^2/(c + p0) >= 24 + 2 ln(1 + R), i.e. the
    tail of mu^c (including the R^2 surface growth) is below ~1e-10.
    """
    if math.isinf(c):
        f = lambda r: 0.5 * r * r
    else:
        f = lambda r: c * r * r / (c + math.sqrt(c * c + r * r))
    r = 1.0
    while f(r) < 24.0 + 2.0 * math.log1p(r):
        r += 0.25
    return r


def quadrature_spacing(c):
    """Node spacing resolving mu^c: the trapezoid error decays like exp(-2 pi c / h)."""
    if math.isinf(c):
        return 0.5
    return min(0.5, 2.0 * math.pi * c / 20.0)


def default_quadrature_grid(c):
    """Grid on which one-dimensional-style moment integrals of mu^c reach 1e-6."""
    r = quadrature_radius(c)
    h = quadrature_spacing(c)
    n = int(math.ceil(2.0 * r / h))
    n += n % 2
    return MomentumGrid(n, 0.5 * n * h)


def default_operator_grid(n=DEFAULT_N, radius=DEFAULT_RADIUS):
    """Common grid used by all operator studies (same grid for every c)."""
    return MomentumGrid(n, radius)
