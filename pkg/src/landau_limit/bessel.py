r"""Modified Bessel functions of the second kind, K_j(gamma), j <= 8, gamma >= 1.

Two evaluation routes are implemented:

* integral quadrature of

  .. math:: K_j(\gamma) = \frac{2^j j!}{(2j)!}\,\gamma^j
            \int_0^\infty e^{-\gamma\cosh u}\sinh^{2j}u\,du ,

  which is the integral representation in :math:`\lambda = \gamma\cosh u`
  variables (no endpoint singularity), with composite Gauss-Legendre on a
  truncated interval;

* the large-argument asymptotic series

  .. math:: e^{\gamma}K_j(\gamma) = \sqrt{\frac{\pi}{2\gamma}}
            \Big(\sum_{m<n} A_{j,m}\gamma^{-m} + \gamma_{j,n}\gamma^{-n}\Big),
            \quad |\gamma_{j,n}| \le 2 e^{(j^2-1/4)/\gamma}|A_{j,n}| ,

  used only when the remainder bound certifies the target accuracy.

Everything is computed for the scaled value e^gamma K_j(gamma), so large
arguments never overflow.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError

MAX_ORDER = 8
MIN_ARGUMENT = 1.0
MAX_UNSCALED_ARGUMENT = 700.0

QUADRATURE = "integral-quadrature"
SERIES = "asymptotic-series"

# series accepted when its certified relative remainder is below this
SERIES_TOL = 1e-11
SERIES_MAX_TERMS = 40

# quadrature: truncate where the integrand is 1e-18 of its peak
_LOG_CUT = math.log(1e18)
_PANELS = 12
_NODES = 24


@dataclass(frozen=True)
class BesselEval:
    """Result of one K_j(gamma) evaluation.

    ``scaled`` is e^gamma K_j(gamma); ``value`` is K_j(gamma) itself and is
    only available for gamma <= 700.
    """
    order: int
    argument: float
    scaled: float
    method: str
    est_rel_err: float

    @property
    def value(self):
        if self.argument > MAX_UNSCALED_ARGUMENT:
            raise DomainError(
                f"unscaled K_{self.order}({self.argument}) underflows; use .scaled")
        return self.scaled * math.exp(-self.argument)


def _check(j, gamma):
    if isinstance(j, bool) or int(j) != j or j < 0 or j > MAX_ORDER:
        raise DomainError(f"order must be an integer in [0, {MAX_ORDER}], got {j}")
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma < MIN_ARGUMENT:
        raise DomainError(f"argument must be finite and >= {MIN_ARGUMENT}, got {gamma}")
    return int(j), gamma


@lru_cache(maxsize=None)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def _log_integrand(u, j, gamma):
    # log of e^{-gamma (cosh u - 1)} sinh^{2j} u, with cosh u - 1 = 2 sinh^2(u/2)
    u = np.asarray(u, dtype=float)
    out = -2.0 * gamma * np.sinh(0.5 * u) ** 2
    if j > 0:
        with np.errstate(divide="ignore"):
            out = out + 2 * j * np.log(np.sinh(u))
    return out


def _quadrature_scaled(j, gamma, panels=_PANELS, nodes=_NODES):
    # peak of the integrand: sinh(u) tanh(u) = 2j/gamma
    if j == 0:
        upeak = 0.0
    else:
        target = 2.0 * j / gamma
        upeak = brentq(lambda u: math.sinh(u) * math.tanh(u) - target, 1e-12, 50.0,
                       xtol=1e-14)
    lpeak = float(_log_integrand(upeak, j, gamma)) if j > 0 else 0.0
    hi = max(2.0 * upeak, 1.0)
    while _log_integrand(hi, j, gamma) - lpeak > -_LOG_CUT:
        hi *= 2.0
    lo = upeak
    ucut = brentq(lambda u: float(_log_integrand(u, j, gamma)) - lpeak + _LOG_CUT,
                  lo if lo > 0 else 1e-300, hi, xtol=1e-12)

    def rule(npan):
        x, w = _leggauss(nodes)
        edges = np.linspace(0.0, ucut, npan + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ww = (half[:, None] * w[None, :]).ravel()
        return float(np.sum(ww * np.exp(_log_integrand(u, j, gamma) - lpeak)))

    fine = rule(panels)
    coarse = rule(panels // 2)
    # log of 2^j j!/(2j)! gamma^j
    lpref = j * math.log(2.0) + math.lgamma(j + 1) - math.lgamma(2 * j + 1) + j * math.log(gamma)
    scaled = math.exp(lpref + lpeak) * fine
    err = abs(fine - coarse) / fine + 4e-16 * panels
    return scaled, err


def series_coefficient(j, m):
    """A_{j,m} = prod_{k=1..m} (4j^2 - (2k-1)^2) / (m! 8^m)."""
    a = 1.0
    for k in range(1, m + 1):
        a *= (4.0 * j * j - (2 * k - 1) ** 2) / (8.0 * k)
    return a


def _series_scaled(j, gamma):
    """Best certified series value: (scaled value, relative remainder bound)."""
    pref = math.sqrt(math.pi / (2.0 * gamma))
    growth = 2.0 * math.exp((j * j - 0.25) / gamma)
    partial = 0.0
    best = None
    term = 1.0
    for n in range(1, SERIES_MAX_TERMS + 1):
        partial += term                       # sum_{m<n}
        term = series_coefficient(j, n) * gamma ** (-n)
        bound = growth * abs(term) / abs(partial)
        if best is None or bound < best[1]:
            best = (pref * partial, bound)
        if bound <= SERIES_TOL:
            break
    return best


def bessel_k(j, gamma, method=None):
    """Evaluate K_j(gamma).

    Parameters
    ----------
    j : int
        Order, 0 <= j <= 8.
    gamma : float
        Argument, gamma >= 1.
    method : {None, "integral-quadrature", "asymptotic-series"}
        Force one route. By default the series is used only when its
        remainder bound certifies SERIES_TOL relative accuracy.

    Returns
    -------
    BesselEval
    """
    j, gamma = _check(j, gamma)
    if method not in (None, QUADRATURE, SERIES):
        raise DomainError(f"unknown method {method!r}")
    if method != QUADRATURE:
        s, bound = _series_scaled(j, gamma)
        if method == SERIES or bound <= SERIES_TOL:
            return BesselEval(j, gamma, s, SERIES, bound)
    s, err = _quadrature_scaled(j, gamma)
    return BesselEval(j, gamma, s, QUADRATURE, err)


def bessel_k_scaled(j, gamma):
    """e^gamma K_j(gamma)."""
    return bessel_k(j, gamma).scaled


def bessel_k_value(j, gamma):
    """K_j(gamma); raises DomainError for gamma > 700."""
    return bessel_k(j, gamma).value


def bessel_ratio(j_num, j_den, gamma):
    """K_{j_num}(gamma) / K_{j_den}(gamma), formed from scaled values.

    Adjacent orders go through ratio_excess, which keeps full relative
    accuracy in the small quantity ratio - 1.
    """
    j_num, gamma = _check(j_num, gamma)
    j_den, gamma = _check(j_den, gamma)
    if j_num == j_den:
        return 1.0
    if j_num == j_den + 1:
        return 1.0 + ratio_excess(j_den, gamma)
    if j_den == j_num + 1:
        return 1.0 / (1.0 + ratio_excess(j_num, gamma))
    num = bessel_k(j_num, gamma).scaled
    den = bessel_k(j_den, gamma).scaled
    return num / den


def recurrence_residual(j, gamma):
    """|K_{j+1} - 2j K_j/gamma - K_{j-1}| / K_{j+1} for 1 <= j <= 7."""
    if j < 1 or j > MAX_ORDER - 1:
        raise DomainError("recurrence residual needs 1 <= j <= 7")
    km, k0, kp = (bessel_k(i, gamma).scaled for i in (j - 1, j, j + 1))
    return abs(kp - 2.0 * j * k0 / gamma - km) / kp


def k0_k1_bracket(gamma):
    """Coarse bracket for K_0/K_1, valid for gamma > sqrt(2)."""
    g = float(gamma)
    if g <= math.sqrt(2.0):
        raise DomainError("bracket needs gamma > sqrt(2)")
    lo = 1 - 1 / (2 * g)
    hi = 1 - 1 / (2 * g) + 3 / (8 * g ** 2) + 3 / (16 * g ** 3)
    return lo, hi


def k0_k1_tight_bracket(gamma):
    """Fifth-order bracket for K_0/K_1, valid for gamma > 2."""
    g = float(gamma)
    if g <= 2.0:
        raise DomainError("tight bracket needs gamma > 2")
    base = 1 - 1 / (2 * g) + 3 / (8 * g ** 2) - 3 / (8 * g ** 3) + 63 / (128 * g ** 4)
    return base - 31 / (20 * g ** 5), base + 7 / (8 * g ** 5)


def ratio_excess(j, gamma, nodes=48, panels=16):
    """K_{j+1}(gamma)/K_j(gamma) - 1 without cancellation.

    Uses K_nu(gamma) = int_0^inf e^{-gamma cosh t} cosh(nu t) dt and
    cosh((j+1)t) - cosh(jt) = 2 sinh((2j+1)t/2) sinh(t/2).
    """
    j, gamma = _check(j, gamma)
    if j >= MAX_ORDER:
        raise DomainError("ratio_excess needs j + 1 <= 8")
    # exponent -2 gamma sinh^2(t/2) + (j+1) t; cut 45 e-folds below the peak
    expo = lambda t: -2.0 * gamma * math.sinh(0.5 * t) ** 2 + (j + 1) * t
    tpk = brentq(lambda t: -gamma * math.sinh(t) + (j + 1), 0.0, 60.0, xtol=1e-14)
    epk = expo(tpk)
    hi = max(2 * tpk, 1.0)
    while expo(hi) - epk > -45.0:
        hi *= 1.5
    tcut = brentq(lambda t: expo(t) - epk + 45.0, tpk, hi, xtol=1e-12)
    x, w = _leggauss(nodes)
    edges = np.linspace(0.0, tcut, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    damp = np.exp(-2.0 * gamma * np.sinh(0.5 * t) ** 2 - epk)
    num = np.sum(ww * damp * 2.0 * np.sinh((2 * j + 1) * 0.5 * t) * np.sinh(0.5 * t))
    den = np.sum(ww * damp * np.cosh(j * t))
    return float(num / den)
