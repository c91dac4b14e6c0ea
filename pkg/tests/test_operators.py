import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landau_limit import operators as op
from landau_limit.errors import GridResolutionError
from landau_limit.fields import random_field, null_space_fields, SpeciesField, from_functions
from landau_limit.grid import MomentumGrid
from landau_limit.maxwellian import Equilibrium
from landau_limit.sigma import WeightSpec

SPEEDS = [4.0, math.inf]


def fields(grid, seed, count, c=math.inf):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return [random_field(grid, rng, c) for _ in range(count)]


@pytest.mark.parametrize("c", SPEEDS)
def test_L_is_symmetric(small_grid, c):
    h, k = fields(small_grid, 1, 2, c)
    a = op.apply_L(h, c).inner(k)
    b = h.inner(op.apply_L(k, c))
    assert a == pytest.approx(b, rel=1e-11)


@pytest.mark.parametrize("c", SPEEDS)
def test_L_matches_pair_form(small_grid, c):
    h, k = fields(small_grid, 2, 2, c)
    assert op.apply_L(h, c).inner(k) == pytest.approx(op.quadratic_form_L(h, k, c), rel=1e-10)


@pytest.mark.parametrize("c", SPEEDS)
def test_L_splits_into_A_and_K(small_grid, c):
    (h,) = fields(small_grid, 3, 1, c)
    whole = op.apply_L(h, c).values
    parts = op.apply_A(h, c).values + op.apply_K(h, c).values
    assert np.allclose(whole, parts, atol=1e-13 * np.abs(whole).max())


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.sampled_from(SPEEDS))
def test_L_is_nonnegative(seed, c):
    grid = MomentumGrid(8, 5.0)
    (h,) = fields(grid, seed, 1, c)
    assert op.apply_L(h, c).inner(h) >= -1e-12 * h.inner(h)


@pytest.mark.parametrize("c", SPEEDS)
def test_L_annihilates_collision_invariants_approximately(small_grid, c):
    (h,) = fields(small_grid, 4, 1, c)
    scale = op.sigma_norm_field(h, c)
    for phi in null_space_fields(small_grid, c):
        r = op.apply_L(phi, c).l2() / op.sigma_norm_field(phi, c)
        assert r < 0.1
        # and L h is orthogonal to the invariant up to the same discretization error
        assert abs(op.apply_L(h, c).inner(phi)) <= 0.1 * scale * op.sigma_norm_field(phi, c)


@pytest.mark.parametrize("c", SPEEDS)
def test_gamma_strong_and_weak_forms_agree(small_grid, c):
    h, ht, hb = fields(small_grid, 5, 3, c)
    strong = op.apply_Gamma(h, ht, c).inner(hb)
    weak = op.gamma_pairing(h, ht, hb, None, c)
    assert strong == pytest.approx(weak, rel=1e-10)


def test_weighted_pairing_reduces_to_plain_for_trivial_weight(small_grid):
    h, ht, hb = fields(small_grid, 6, 3, 4.0)
    plain = op.gamma_pairing(h, ht, hb, None, 4.0)
    trivial = op.gamma_pairing(h, ht, hb, WeightSpec(0, 0.0, 0.0), 4.0)
    assert trivial == pytest.approx(plain, rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_gamma_is_bilinear(a, b):
    grid = MomentumGrid(8, 5.0)
    h, k, ht = fields(grid, 7, 3, 4.0)
    lhs = op.apply_Gamma(a * h + b * k, ht, 4.0).values
    rhs = a * op.apply_Gamma(h, ht, 4.0).values + b * op.apply_Gamma(k, ht, 4.0).values
    assert np.allclose(lhs, rhs, atol=1e-11 * (1 + np.abs(rhs).max()))
    lhs = op.apply_Gamma(ht, a * h + b * k, 4.0).values
    rhs = a * op.apply_Gamma(ht, h, 4.0).values + b * op.apply_Gamma(ht, k, 4.0).values
    assert np.allclose(lhs, rhs, atol=1e-11 * (1 + np.abs(rhs).max()))


@pytest.mark.parametrize("c", SPEEDS)
def test_gamma_pairs_to_small_values_with_invariants(small_grid, c):
    (h,) = fields(small_grid, 8, 1, c)
    assert np.max(np.abs(op.gamma_moment_residuals(h, c))) < 1e-3


def test_linearization_of_collision_operator(small_grid):
    # Gamma(h, h) is the quadratic part: L(h) = -(Gamma(sqrt mu, h) + Gamma(h, sqrt mu));
    # on the grid this holds up to the derivative error of sqrt(mu)
    c = 4.0
    sq = Equilibrium(c).sqrt_mu(small_grid.points)
    m = SpeciesField(np.stack([sq, sq]), small_grid, c)
    (h,) = fields(small_grid, 9, 1, c)
    lin = -(op.apply_Gamma(m, h, c) + op.apply_Gamma(h, m, c))
    ref = op.apply_L(h, c)
    assert np.abs(lin.values - ref.values).max() <= 2e-3 * np.abs(ref.values).max()


# projection -------------------------------------------------------------------

@pytest.fixture(scope="module")
def proj_grid():
    return MomentumGrid(24, 8.0)


@pytest.mark.parametrize("c", [4.0, 8.0, math.inf])
def test_projection_is_idempotent_and_orthogonal(proj_grid, c):
    (h,) = fields(proj_grid, 10, 1, c)
    coef, Ph, micro = op.project(h, c)
    _, PPh, rest = op.project(Ph, c)
    assert np.allclose(PPh.values, Ph.values, atol=1e-12)
    assert rest.l2() < 1e-10
    for phi in null_space_fields(proj_grid, c):
        assert abs(micro.inner(phi)) < 1e-12 * h.l2() * phi.l2()


def test_projection_recovers_coefficients(proj_grid):
    c = 8.0
    basis = op.macro_basis(proj_grid, c)
    weights = np.array([0.3, -0.2, 0.1, 0.05, -0.4, 0.7])
    h = SpeciesField(np.tensordot(weights, basis, axes=1), proj_grid, c)
    coef, _, micro = op.project(h, c)
    assert coef.a_plus == pytest.approx(0.3, abs=1e-12)
    assert coef.a_minus == pytest.approx(-0.2, abs=1e-12)
    r2 = 1 / math.sqrt(2)
    assert np.allclose(coef.b, weights[2:5] * r2, atol=1e-12)
    assert coef.c_coef == pytest.approx(0.7 * r2, abs=1e-12)
    assert micro.l2() < 1e-12


def test_energy_basis_approaches_classical(proj_grid):
    cl = op.macro_basis(proj_grid, math.inf)[5]
    d = [np.abs(op.macro_basis(proj_grid, c)[5] - cl).max() for c in (8.0, 16.0, 32.0)]
    assert d[1] < 0.3 * d[0] and d[2] < 0.3 * d[1]


def test_unresolved_grid_is_rejected():
    g = MomentumGrid(24, 3.0)
    (h,) = fields(g, 11, 1)
    with pytest.raises(GridResolutionError):
        op.project(h, math.inf)


# norms and studies ----------------------------------------------------------------

def test_weighted_h1_norm(small_grid):
    (h,) = fields(small_grid, 12, 1)
    assert op.h1_weighted_norm(2 * h, 3) == pytest.approx(2 * op.h1_weighted_norm(h, 3))
    assert op.h1_weighted_norm(h, 2) > op.h1_weighted_norm(h, -2)
    z = from_functions(small_grid, math.inf, lambda p: np.zeros(p.shape[:-1]))
    assert op.h1_weighted_norm(z, 0) == 0.0


@pytest.mark.parametrize("kind", ["linear", "nonlinear"])
def test_operator_difference_rate(small_grid, kind):
    fs = tuple(fields(small_grid, 13, 3 if kind == "nonlinear" else 2))
    fit = op.operator_difference_rate(fs, [4, 8, 16, 32], kind)
    assert -2.3 <= fit.slope <= -1.7
    assert fit.r2 >= 0.95


def test_coercivity_ratios_positive(small_grid):
    r = op.coercivity_ratios(fields(small_grid, 14, 4, 4.0), 4.0)
    assert np.all(r > 0.1)
