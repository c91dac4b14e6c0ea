import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from landau_limit import solver
from landau_limit.context import get_context
from landau_limit.errors import DomainError
from landau_limit.operators import apply_L, apply_Gamma

FAST = solver.RelaxationConfig(n=8, radius=5.0, T=0.5, profile="two-species", amplitude=0.05)


def test_config_parsing(tmp_path):
    text = """
    # comment
    grid.n = 12
    grid.radius = 6.5   # trailing comment
    dt = auto
    T = 0.25
    init.profile = random
    init.amplitude = 0.02
    seed = 9
    """
    cfg = solver.parse_config_text(text)
    assert (cfg.n, cfg.radius, cfg.dt, cfg.T, cfg.profile, cfg.amplitude, cfg.seed) == \
        (12, 6.5, None, 0.25, "random", 0.02, 9)
    path = tmp_path / "run.cfg"
    path.write_text("dt = 0.01\n")
    assert solver.load_config(path).dt == 0.01


@pytest.mark.parametrize("text", ["grid.m = 3", "T = soon", "just words", "init.profile = spiral",
                                  "dt = -1", "grid.n = 7"])
def test_config_errors(text):
    with pytest.raises((DomainError, ValueError)):
        solver.parse_config_text(text)


def test_missing_config(tmp_path):
    with pytest.raises(FileNotFoundError):
        solver.load_config(tmp_path / "absent.cfg")


def test_config_round_trip():
    cfg = solver.RelaxationConfig(n=10, radius=5.5, dt=0.02, T=0.3, profile="null", amplitude=0.1, seed=3)
    text = "\n".join(f"{k} = {v}" for k, v in cfg.as_dict().items())
    assert solver.parse_config_text(text) == cfg


@pytest.mark.parametrize("profile", solver.PROFILES)
def test_initial_fields(profile):
    cfg = replace(FAST, profile=profile)
    h = solver.initial_field(cfg, 4.0)
    assert h.values.shape == (2, 8, 8, 8)
    if profile == "equilibrium":
        assert not np.any(h.values)


def test_initial_perturbation_of_F_is_c_independent():
    pts = FAST.grid.points
    from landau_limit.maxwellian import Equilibrium
    dF = [Equilibrium(c).sqrt_mu(pts) * solver.initial_field(FAST, c).values for c in (4.0, 16.0, math.inf)]
    assert np.allclose(dF[0], dF[2], atol=1e-15)
    assert np.allclose(dF[1], dF[2], atol=1e-15)


def test_random_profile_is_seeded():
    a = solver.initial_field(replace(FAST, profile="random", seed=5), 4.0).values
    b = solver.initial_field(replace(FAST, profile="random", seed=5), 4.0).values
    c = solver.initial_field(replace(FAST, profile="random", seed=6), 4.0).values
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("c", [4.0, math.inf])
def test_nonlinear_rhs_is_minus_L_plus_gamma(small_grid, c):
    cfg = replace(FAST, n=small_grid.n, radius=small_grid.radius)
    h = solver.initial_field(cfg, c)
    ctx = get_context(c, small_grid)
    ref = -apply_L(h, c).values + apply_Gamma(h, h, c).values
    got = solver.nonlinear_rhs(ctx, h.values)
    assert np.allclose(got, ref, atol=1e-12 * np.abs(ref).max())


def test_rk4_is_fourth_order():
    rhs = lambda y: -y
    errs = []
    for dt in (0.2, 0.1):
        y = np.array([1.0])
        for _ in range(int(round(1 / dt))):
            y = solver.rk4_step(rhs, y, dt)
        errs.append(abs(y[0] - math.exp(-1)))
    assert 14 < errs[0] / errs[1] < 18


@pytest.mark.parametrize("mode", ["linear", "nonlinear"])
@pytest.mark.parametrize("c", [8.0, math.inf])
def test_conservation_and_dissipation(mode, c):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", solver.PositivityWarning)
        run = (solver.relax_linear if mode == "linear" else solver.relax_nonlinear)(FAST, c)
    for name in ("mass", "momx", "momy", "momz", "energy"):
        assert run.drift(name) <= 1e-4
    if mode == "linear":
        micro = run.column("micro_l2")
        assert np.all(np.diff(micro) <= 1e-14)
        assert all(e <= 1e-14 for e in np.array(run.energy_identity) / run.initial.inner(run.initial))
    assert run.trace[-1][0] == pytest.approx(FAST.T)


def test_equilibrium_is_fixed():
    run = solver.relax_nonlinear(replace(FAST, profile="equilibrium"), 8.0)
    assert np.abs(run.final.values).max() <= 1e-12


def test_trace_columns():
    run = solver.relax_linear(replace(FAST, T=0.0), 4.0)
    assert len(run.trace) == 1 and len(run.trace[0]) == len(solver.TRACE_COLUMNS)


def test_explicit_dt_is_respected():
    run = solver.relax_linear(replace(FAST, dt=0.05, T=0.2), 4.0)
    assert run.dt == pytest.approx(0.05)
    assert len(run.trace) == 5


def test_blow_up_is_reported():
    from landau_limit.errors import InstabilityError
    with pytest.raises(InstabilityError):
        solver.relax_linear(replace(FAST, dt=50.0, T=500.0), 4.0)


def test_classical_limit_rate_fast_grid():
    fit = solver.classical_limit_rate(FAST, [4, 8, 16], T=0.25)
    assert -2.4 <= fit.slope <= -1.6


@pytest.mark.parametrize("bad", [[4, 8], [8, 4, 16], [4, 4, 8]])
def test_classical_limit_rate_validation(bad):
    with pytest.raises(ValueError):
        solver.classical_limit_rate(FAST, bad, T=0.1)
