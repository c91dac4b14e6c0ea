import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, assume, strategies as st

from landau_limit import kernel
from landau_limit.acceptance import kernel_identity_residuals
from landau_limit.errors import SingularPairError

mpmath.mp.dps = 50

# products of momenta must stay in the normal double range
coord = st.floats(-4.0, 4.0, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-100)
vec = st.tuples(coord, coord, coord).map(np.array)
speeds = st.sampled_from([1.0, 1.7, 3.0, 10.0, 40.0])


def mp_phi(p, q, c):
    """Direct high-precision evaluation of the defining formulas (unit masses)."""
    p = [mpmath.mpf(float(x)) for x in p]
    q = [mpmath.mpf(float(x)) for x in q]
    c = mpmath.mpf(c)
    p0 = mpmath.sqrt(c * c + sum(x * x for x in p))
    q0 = mpmath.sqrt(c * c + sum(x * x for x in q))
    qp = sum(a * b for a, b in zip(p, q)) - p0 * q0
    A = qp ** 2 / c ** 2 - c ** 2
    lam = qp ** 2 / c ** 4 * A ** mpmath.mpf(-1.5)
    coef = qp / c ** 2 + 1
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            s = (A if i == j else 0) - (q[i] - p[i]) * (q[j] - p[j]) - coef * (q[i] * p[j] + p[i] * q[j])
            out[i, j] = float(c / q0 * c / p0 * lam * s)
    return out


@pytest.mark.parametrize("c", [1.0, 2.0, 10.0, 100.0])
def test_matches_high_precision_definition(c, rng):
    p, q = kernel.random_pairs(rng, 20, radius=3.0)
    got = kernel.phi_relativistic(p, q, c)
    for k in range(20):
        ref = mp_phi(p[k], q[k], c)
        assert np.allclose(got[k], ref, rtol=1e-11, atol=1e-13 * np.abs(ref).max())


@pytest.mark.parametrize("c", [1.0, 10.0, 40.0])
@pytest.mark.parametrize("gap", [1e-3, 1e-2, 1e-1])
def test_near_diagonal_matches_high_precision(c, gap, rng):
    p = rng.uniform(-4, 4, (5, 3))
    d = rng.standard_normal((5, 3))
    q = p + gap * d / np.linalg.norm(d, axis=1, keepdims=True)
    got = kernel.phi_relativistic(p, q, c)
    for k in range(5):
        ref = mp_phi(p[k], q[k], c)
        assert np.allclose(got[k], ref, rtol=1e-9, atol=1e-12 * np.abs(ref).max())


def test_large_c_no_cancellation():
    # naive evaluation would lose everything at c = 1e4
    p, q = np.array([0.3, -0.2, 1.1]), np.array([-0.5, 0.9, 0.1])
    ref = mp_phi(p, q, 1e4)
    assert np.allclose(kernel.phi_relativistic(p, q, 1e4), ref, rtol=1e-10)


@settings(max_examples=200, deadline=None)
@given(p=vec, q=vec, c=speeds)
def test_identities_hold_pointwise(p, q, c):
    # the closed right-hand sides cancel like c^4 / g^2 as q -> p, even in extended
    # precision; near the diagonal the kernel is checked against mpmath instead
    assume(np.linalg.norm(p - q) > 0.1)
    orth, contr, psd = kernel_identity_residuals(p[None], q[None], c)
    assert orth <= 1e-12
    assert max(contr) <= 1e-10
    assert psd >= -1e-12


@settings(max_examples=100, deadline=None)
@given(p=vec, q=vec, c=speeds)
def test_symmetries(p, q, c):
    assume(np.linalg.norm(p - q) > 1e-3)
    a = kernel.phi(p, q, c)
    assert np.allclose(a, a.T, atol=1e-14 * np.abs(a).max())
    assert np.allclose(kernel.phi(q, p, c), a, rtol=1e-12, atol=1e-14 * np.abs(a).max())


@settings(max_examples=100, deadline=None)
@given(p=vec, q=vec)
def test_classical_kernel_is_projector(p, q):
    d = q - p
    assume(np.linalg.norm(d) > 1e-3)
    a = kernel.phi_classical(p, q)
    assert np.allclose(a @ d, 0, atol=1e-12 * np.abs(a).max() * np.linalg.norm(d))
    assert np.trace(a) == pytest.approx(2 / np.linalg.norm(d), rel=1e-12)


def test_geometry_identities(rng):
    p, q = kernel.random_pairs(rng, 200)
    for c in (1.0, 5.0):
        geo = kernel.pair_geometry(p, q, c)
        p0 = np.sqrt(c * c + np.sum(p * p, 1))
        q0 = np.sqrt(c * c + np.sum(q * q, 1))
        # g^2 = 2 (p0 q0 - p.q - c^2), bounded by |p - q|^2
        direct = 2 * (p0 * q0 - np.sum(p * q, 1) - c * c)
        assert np.allclose(geo.g ** 2, direct, rtol=1e-9)
        assert np.all(geo.g <= np.linalg.norm(p - q, axis=1) * (1 + 1e-12))
        assert np.allclose(geo.s, geo.g ** 2 + 4 * c * c)


def test_singular_pair_rejected():
    p = np.array([1.0, 2.0, 3.0])
    with pytest.raises(SingularPairError):
        kernel.phi(p, p, 3.0)
    with pytest.raises(SingularPairError):
        kernel.phi(p, p, math.inf)


def test_pointwise_bounds(rng):
    p, q = kernel.random_pairs(rng, 2000, radius=4.0)
    jp, jq = kernel.japanese(p), kernel.japanese(q)
    r = np.linalg.norm(p - q, axis=1)
    for c in (1.0, 3.0, 10.0):
        a = np.abs(kernel.phi(p, q, c)).max(axis=(1, 2))
        p0 = np.sqrt(c * c + np.sum(p * p, 1))
        q0 = np.sqrt(c * c + np.sum(q * q, 1))
        bound = np.minimum(p0 / c * jq ** 4, q0 / c * jp ** 4) / r
        assert np.max(a / bound) < 4.0
        pp = np.einsum("ni,nij,nj->n", p, kernel.phi(p, q, c), p)
        assert np.max(pp / ((p0 / c) ** 3 * jq ** 6 / r)) < 4.0


def test_difference_rate(rng):
    fit = kernel.phi_difference_rate(kernel.random_pairs(rng, 500), [4, 8, 16, 32])
    assert -2.3 <= fit.slope <= -1.7
    assert fit.r2 >= 0.98


def test_difference_rate_rejects_bad_lists(rng):
    pairs = kernel.random_pairs(rng, 10)
    with pytest.raises(ValueError):
        kernel.phi_difference_rate(pairs, [8, 4])
    with pytest.raises(ValueError):
        kernel.phi_difference_rate(pairs, [4, 4, 8])


def fd_divergence(p, q, c, h=1e-5):
    out = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out += (kernel.phi(p + e, q, c)[i] - kernel.phi(p - e, q, c)[i]) / (2 * h)
    return out


def fd_mixed(p, q, c, h=1e-4):
    tot = 0.0
    for i in range(3):
        for j in range(3):
            ei, ej = np.zeros(3), np.zeros(3)
            ei[i], ej[j] = h, h
            tot += (kernel.phi(p + ei, q + ej, c)[i, j] - kernel.phi(p + ei, q - ej, c)[i, j]
                    - kernel.phi(p - ei, q + ej, c)[i, j] + kernel.phi(p - ei, q - ej, c)[i, j]) / (4 * h * h)
    return tot


@pytest.mark.parametrize("c", [1.0, 4.0])
def test_closed_derivatives_match_finite_differences(c, rng):
    p, q = kernel.random_pairs(rng, 5, radius=2.0)
    for k in range(5):
        div = kernel.divergence_p(p[k], q[k], c)
        assert np.allclose(div, fd_divergence(p[k], q[k], c), rtol=1e-6, atol=1e-8)
        mix = kernel.mixed_divergence(p[k], q[k], c)
        assert mix == pytest.approx(fd_mixed(p[k], q[k], c), rel=1e-4)
