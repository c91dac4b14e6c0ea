import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landau_limit import sigma as sg
from landau_limit.errors import DomainError
from landau_limit.fields import random_field
from landau_limit.grid import MomentumGrid

mpmath.mp.dps = 30


def rosenbluth(r):
    # g(r) = int |p - q| mu^inf(q) dq for the unit Gaussian
    r = mpmath.mpf(r)
    return (r + 1 / r) * mpmath.erf(r / mpmath.sqrt(2)) + mpmath.sqrt(2 / mpmath.pi) * mpmath.exp(-r * r / 2)


def classical_eigs(r):
    """sigma^inf = Hessian of the potential: lambda1 = g'', lambda2 = g'/r."""
    return float(mpmath.diff(rosenbluth, r, 2)), float(mpmath.diff(rosenbluth, r) / r)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0, 7.0])
def test_classical_matches_closed_potential(r):
    l1, l2 = classical_eigs(r)
    sp = sg.sigma_eigenvalues(math.inf, np.array([0.0, 0.0, r]))
    assert sp.lambda1 == pytest.approx(l1, rel=1e-6)
    assert sp.lambda2 == pytest.approx(l2, rel=1e-6)


@pytest.mark.parametrize("c", [1.0, 4.0, math.inf])
def test_matrix_structure(c, rng):
    p = rng.standard_normal(3) * 2
    S = sg.sigma_matrix(c, p)
    assert np.allclose(S, S.T)
    sp = sg.sigma_eigenvalues(c, p)
    ph = p / np.linalg.norm(p)
    expected = sp.lambda1 * np.outer(ph, ph) + sp.lambda2 * (np.eye(3) - np.outer(ph, ph))
    assert np.allclose(S, expected, rtol=1e-6, atol=1e-9)
    assert np.all(np.linalg.eigvalsh(S) > 0)


def test_pbar_independence(rng):
    p = np.array([0.4, -1.3, 2.0])
    b1 = np.cross(p, [1.0, 0, 0])
    b2 = np.cross(p, b1)
    a = sg.lambda2_along(3.0, p, b1)
    b = sg.lambda2_along(3.0, p, b2)
    assert a == pytest.approx(b, rel=1e-6)


def test_isotropic_at_origin():
    S = sg.sigma_matrix(2.0, np.zeros(3))
    assert np.allclose(S, S[0, 0] * np.eye(3), rtol=1e-8)


def test_large_c_approaches_classical():
    p = np.array([1.0, 0.5, -0.3])
    ref = sg.sigma_matrix(math.inf, p)
    d = [np.abs(sg.sigma_matrix(c, p) - ref).max() for c in (10.0, 20.0, 40.0)]
    assert d[1] < 0.35 * d[0] and d[2] < 0.35 * d[1]


@pytest.mark.parametrize("c", [1.0, 4.0, 16.0])
def test_calibrated_bands_are_bounded(c):
    rows = sg.spectrum_scan([c], [0.5, 2.0, 8.0])
    ratios = np.array([[r[4], r[5]] for r in rows])
    assert np.all(ratios > 0.4) and np.all(ratios < 2.5)


def test_band_scalings_classical():
    p = np.array([3.0, 0.0, 4.0])
    s1, s2 = sg.band_scalings(math.inf, p)
    assert s1 == pytest.approx(26.0 ** -1.5)
    assert s2 == pytest.approx(26.0 ** -0.5)


def test_eigenvalues_need_nonzero_momentum():
    with pytest.raises(DomainError):
        sg.sigma_eigenvalues(2.0, np.zeros(3))


@settings(max_examples=20, deadline=None)
@given(ell=st.integers(0, 4), theta=st.floats(0.0, 1 / 32), t=st.floats(0.0, 100.0))
def test_weight_log_gradient(ell, theta, t):
    spec = sg.WeightSpec(ell, theta, t)
    p = np.array([[0.7, -1.2, 2.1]])
    h = 1e-6
    num = np.array([(np.log(sg.weight(spec, p + h * e)) - np.log(sg.weight(spec, p - h * e))) / (2 * h)
                    for e in np.eye(3)]).T
    assert np.allclose(sg.weight_log_gradient(spec, p), num, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("bad", [dict(theta=-0.1), dict(theta=0.5), dict(t=-1.0), dict(ell=-1)])
def test_weight_spec_validation(bad):
    with pytest.raises(DomainError):
        sg.WeightSpec(**bad)


@pytest.mark.parametrize("c", [4.0, math.inf])
def test_sigma_norm_equivalent_to_explicit_form(small_grid, rng, c):
    ratios = []
    for _ in range(6):
        h = random_field(small_grid, rng, c, degree=3)
        a = float(np.sum(sg.sigma_norm_sq(c, h.values, small_grid)))
        ratios.append(a / sg.equivalent_norm_sq(c, h.values, small_grid))
    assert 0.2 < min(ratios) and max(ratios) < 5.0


def test_sigma_norm_is_a_seminorm(small_grid, rng):
    h = random_field(small_grid, rng, 4.0)
    k = random_field(small_grid, rng, 4.0)
    n = lambda f: sg.sigma_norm(4.0, f)
    assert n(2.5 * h) == pytest.approx(2.5 * n(h))
    assert n(h + k) <= n(h) + n(k) + 1e-12


def test_sigma_norm_of_equilibrium_is_stable_under_refinement():
    vals = []
    for n, R in ((24, 8.0), (32, 8.0 * math.sqrt(32 / 24))):
        g = MomentumGrid(n, R)
        from landau_limit.maxwellian import Equilibrium
        sq = Equilibrium(8.0).sqrt_mu(g.points)
        vals.append(sg.sigma_norm(8.0, np.stack([sq, sq]), g))
    assert vals[1] == pytest.approx(vals[0], rel=5e-4)
