"""Command-line entry point ``landau-limit``.

Exit codes: 0 success, 1 usage or domain error, 2 a built-in assertion failed.
Random draws use numpy's Philox generator keyed by --seed; the seed is echoed
in every JSON output.
"""
import argparse
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import DomainError, AccuracyError, InstabilityError, SingularPairError
from .serialize import dumps_json, dumps_csv

EXIT_OK, EXIT_USAGE, EXIT_ASSERT = 0, 1, 2
THREADS_ENV = "LANDAU_LIMIT_THREADS"
RATE_BAND = (-2.3, -1.7)
LIMIT_BAND = (-2.4, -1.6)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n")


def philox(seed):
    return np.random.Generator(np.random.Philox(key=int(seed)))


# argument types ---------------------------------------------------------------

def light_speed(text):
    from .maxwellian import parse_light_speed
    try:
        return parse_light_speed(text)
    except (DomainError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def finite_light_speed(text):
    c = light_speed(text)
    if math.isinf(c):
        raise argparse.ArgumentTypeError("a finite light speed is required here")
    return c


def float_list(text):
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def vector3(text):
    vals = float_list(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected px,py,pz")
    return np.array(vals)


def positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# helpers ------------------------------------------------------------------------

def _emit(args, text):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rate_verdict(args, fit, band):
    """Attach the band check to a RateFit; returns the exit code."""
    out = fit.as_dict()
    ok = band[0] <= fit.slope <= band[1]
    out["expected_slope"] = list(band)
    out["passed"] = bool(ok)
    out["seed"] = getattr(args, "seed", None)
    _emit(args, dumps_json(out))
    return EXIT_OK if ok or args.no_check else EXIT_ASSERT


def _operator_grid(args):
    from .grid import MomentumGrid
    return MomentumGrid(args.n, args.radius)


# subcommands --------------------------------------------------------------------

def cmd_bessel(args):
    from .bessel import bessel_k
    r = bessel_k(args.order, args.gamma)
    out = {"order": r.order, "gamma": r.argument, "method": r.method, "est_rel_err": r.est_rel_err}
    if args.scaled:
        out["scaled"] = r.scaled
    else:
        out["value"] = r.value
    _emit(args, dumps_json(out))
    return EXIT_OK


def cmd_moments(args):
    from .maxwellian import projection_constants, moment_table
    pc = projection_constants(args.c)
    rows = [("constant", name, "", getattr(pc, name)) for name in ("C0", "Cb", "Cc", "rho_c", "rho_a", "Ca")]
    for m, k, val in moment_table(args.c):
        rows.append(("moment", m, "" if k < 0 else k, val))
    _emit(args, dumps_csv(["kind", "name_or_m", "k", "value"], rows))
    return EXIT_OK


def cmd_mu_diff_rate(args):
    from .maxwellian import mu_difference_rate
    return _rate_verdict(args, mu_difference_rate(args.c_list, root=args.root), RATE_BAND)


def _read_pairs(path):
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float, encoding="utf-8")
    need = ("px", "py", "pz", "qx", "qy", "qz")
    if data.dtype.names is None or any(k not in data.dtype.names for k in need):
        raise DomainError(f"{path}: header must contain {','.join(need)}")
    data = np.atleast_1d(data)
    p = np.stack([data[k] for k in need[:3]], -1)
    q = np.stack([data[k] for k in need[3:]], -1)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise DomainError(f"{path}: non-finite momentum entries")
    return p, q


def cmd_kernel_table(args):
    from .kernel import phi_relativistic, phi_classical, pair_geometry
    p, q = _read_pairs(args.pairs)
    iu = np.triu_indices(3)
    Pc = phi_relativistic(p, q, args.c)[:, iu[0], iu[1]]
    Pi = phi_classical(p, q)[:, iu[0], iu[1]]
    geo = pair_geometry(p, q, args.c)
    idx = [f"{i + 1}{j + 1}" for i, j in zip(*iu)]
    header = (["px", "py", "pz", "qx", "qy", "qz"] + [f"phic_{s}" for s in idx]
              + [f"phiinf_{s}" for s in idx] + ["g", "s"])
    rows = [list(p[r]) + list(q[r]) + list(Pc[r]) + list(Pi[r]) + [geo.g[r], geo.s[r]]
            for r in range(len(p))]
    _emit(args, dumps_csv(header, rows))
    return EXIT_OK


def cmd_kernel_rate(args):
    from .kernel import phi_difference_rate, random_pairs
    sample = random_pairs(philox(args.seed), args.pairs, radius=args.radius)
    return _rate_verdict(args, phi_difference_rate(sample, args.c_list), RATE_BAND)


def cmd_sigma(args):
    from .sigma import sigma_matrix, sigma_eigenvalues
    S = sigma_matrix(args.c, args.p)
    out = {"c": args.c, "p": args.p, "matrix": S}
    if np.linalg.norm(args.p) > 0:
        sp = sigma_eigenvalues(args.c, args.p)
        out["lambda1"], out["lambda2"] = sp.lambda1, sp.lambda2
    else:
        ev = np.linalg.eigvalsh(S)
        out["lambda1"], out["lambda2"] = float(ev.mean()), float(ev.mean())
    _emit(args, dumps_json(out))
    return EXIT_OK


def cmd_sigma_spectrum_scan(args):
    from .sigma import spectrum_scan
    if not args.pmax > 0:
        raise DomainError("--pmax must be positive")
    pm = np.geomspace(min(args.pmin, args.pmax), args.pmax, args.npoints)
    rows = spectrum_scan(args.c_list, pm)
    _emit(args, dumps_csv(["c", "p", "lambda1", "lambda2", "lambda1_scaled", "lambda2_scaled"], rows))
    return EXIT_OK


def cmd_coercivity(args):
    from .fields import random_field
    from .operators import coercivity_ratios
    grid = _operator_grid(args)
    rng = philox(args.seed)
    fields = [random_field(grid, rng, args.c) for _ in range(args.trials)]
    r = coercivity_ratios(fields, args.c)
    out = {"c": args.c, "grid": {"n": grid.n, "radius": grid.radius}, "trials": args.trials,
           "seed": args.seed, "min": float(r.min()), "median": float(np.median(r)),
           "ratios": r, "passed": bool(r.min() > 0)}
    _emit(args, dumps_json(out))
    return EXIT_OK if out["passed"] or args.no_check else EXIT_ASSERT


def cmd_op_diff_rate(args):
    from .fields import random_field
    from .operators import operator_difference_rate
    grid = _operator_grid(args)
    rng = philox(args.seed)
    count = 2 if args.kind == "linear" else 3
    fields = tuple(random_field(grid, rng) for _ in range(count))
    return _rate_verdict(args, operator_difference_rate(fields, args.c_list, args.kind), RATE_BAND)


def cmd_gamma_moments(args):
    from .fields import random_field
    from .operators import gamma_moment_residuals
    grid = _operator_grid(args)
    h = random_field(grid, philox(args.seed), args.c)
    res = gamma_moment_residuals(h, args.c)
    names = ["mass_plus", "mass_minus", "momentum_x", "momentum_y", "momentum_z", "energy"]
    rows = [(nm, r, abs(r) <= args.tol) for nm, r in zip(names, res)]
    _emit(args, dumps_csv(["invariant", "residual", "passed"], rows))
    ok = all(r[2] for r in rows)
    return EXIT_OK if ok or args.no_check else EXIT_ASSERT


def _config(args):
    from .solver import load_config, RelaxationConfig
    if args.config is None:
        return RelaxationConfig()
    if not os.path.isfile(args.config):
        raise FileNotFoundError(f"config file not found: {args.config}")
    return load_config(args.config)


def cmd_relax(args):
    from .solver import relax_linear, relax_nonlinear, TRACE_COLUMNS
    cfg = _config(args)
    run = (relax_linear if args.mode == "linear" else relax_nonlinear)(cfg, args.c)
    _emit(args, dumps_csv(TRACE_COLUMNS, run.trace))
    return EXIT_OK


def cmd_limit_rate(args):
    from .solver import classical_limit_rate
    cfg = _config(args)
    fit = classical_limit_rate(cfg, args.c_list, T=args.T)
    args.seed = cfg.seed
    return _rate_verdict(args, fit, LIMIT_BAND)


def cmd_verify_all(args):
    from .acceptance import verify_all, report_record, profile_for_grid
    from .solver import load_config
    if args.config is not None:
        if not os.path.isfile(args.config):
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
        profile = profile_for_grid(cfg.n, cfg.radius)
        seed = cfg.seed if args.seed is None else args.seed
        inputs = {"config": cfg.as_dict()}
    else:
        profile = "fast" if args.fast else "default"
        seed = 0 if args.seed is None else args.seed
        inputs = {"profile": profile}
    only = None
    if args.only:
        only = sorted({int(k) for k in args.only})
        if any(k < 1 or k > 11 for k in only):
            raise DomainError("--only takes criterion numbers 1..11")
    log = (lambda s: print(s, file=sys.stderr)) if not args.quiet else None
    results = verify_all(profile, seed, log=log, only=only)
    rec = report_record(results, profile, seed, inputs)
    _emit(args, dumps_json(rec))
    return EXIT_OK if rec["passed"] else EXIT_ASSERT


# parser -------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=positive_int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or all cores)")
    common.add_argument("--output", "-o", default=None, help="write the result here instead of stdout")

    check = argparse.ArgumentParser(add_help=False)
    check.add_argument("--no-check", action="store_true", help="report but do not fail on the built-in assertion")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--n", type=positive_int, default=24, help="operator grid nodes per axis (default 24)")
    grid.add_argument("--radius", type=float, default=8.0, help="operator grid half-width (default 8)")
    grid.add_argument("--seed", type=int, default=0, help="Philox seed (default 0)")

    p = _Parser(prog="landau-limit",
                description="Relativistic Landau collision operators and their classical limit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("bessel", parents=[common], help="evaluate K_j(gamma)")
    s.add_argument("--order", type=int, required=True, help="order j, 0..8")
    s.add_argument("--gamma", type=float, required=True, help="argument gamma >= 1")
    s.add_argument("--scaled", action="store_true", help="report e^gamma K_j(gamma)")
    s.set_defaults(func=cmd_bessel)

    s = sub.add_parser("moments", parents=[common], help="projection constants and moment table (CSV)")
    s.add_argument("--c", type=finite_light_speed, required=True, help="light speed")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("mu-diff-rate", parents=[common, check], help="rate of the Maxwellian difference (JSON)")
    s.add_argument("--c-list", type=float_list, required=True, help="comma-separated light speeds")
    s.add_argument("--root", action="store_true", help="use square-root Maxwellians")
    s.set_defaults(func=cmd_mu_diff_rate)

    s = sub.add_parser("kernel-table", parents=[common], help="kernel entries for listed pairs (CSV)")
    s.add_argument("--c", type=finite_light_speed, required=True, help="light speed")
    s.add_argument("--pairs", required=True, help="CSV file with columns px,py,pz,qx,qy,qz")
    s.set_defaults(func=cmd_kernel_table)

    s = sub.add_parser("kernel-rate", parents=[common, check], help="rate of the kernel difference (JSON)")
    s.add_argument("--c-list", type=float_list, required=True, help="comma-separated light speeds")
    s.add_argument("--pairs", type=positive_int, default=500, help="number of random pairs (default 500)")
    s.add_argument("--radius", type=float, default=3.0, help="sampling ball radius (default 3)")
    s.add_argument("--seed", type=int, default=0, help="Philox seed (default 0)")
    s.set_defaults(func=cmd_kernel_rate)

    s = sub.add_parser("sigma", parents=[common], help="collision frequency matrix at one momentum (JSON)")
    s.add_argument("--c", type=light_speed, required=True, help="light speed or inf")
    s.add_argument("--p", type=vector3, required=True, help="momentum px,py,pz")
    s.set_defaults(func=cmd_sigma)

    s = sub.add_parser("sigma-spectrum-scan", parents=[common], help="scaled eigenvalue bands (CSV)")
    s.add_argument("--c-list", type=float_list, required=True, help="comma-separated light speeds")
    s.add_argument("--pmax", type=float, required=True, help="largest |p|")
    s.add_argument("--pmin", type=float, default=0.5, help="smallest |p| (default 0.5)")
    s.add_argument("--npoints", type=positive_int, default=3, help="log-spaced |p| values (default 3)")
    s.set_defaults(func=cmd_sigma_spectrum_scan)

    s = sub.add_parser("coercivity", parents=[common, check, grid], help="coercivity ratios (JSON)")
    s.add_argument("--c", type=light_speed, required=True, help="light speed or inf")
    s.add_argument("--trials", type=positive_int, default=20, help="random fields (default 20)")
    s.set_defaults(func=cmd_coercivity)

    s = sub.add_parser("op-diff-rate", parents=[common, check, grid], help="operator-difference rate (JSON)")
    s.add_argument("--c-list", type=float_list, required=True, help="comma-separated light speeds")
    s.add_argument("--kind", choices=("linear", "nonlinear"), default="linear", help="operator (default linear)")
    s.set_defaults(func=cmd_op_diff_rate)

    s = sub.add_parser("gamma-moments", parents=[common, check, grid], help="invariant pairings of Gamma (CSV)")
    s.add_argument("--c", type=light_speed, required=True, help="light speed or inf")
    s.add_argument("--tol", type=float, default=1e-4, help="assertion threshold (default 1e-4)")
    s.set_defaults(func=cmd_gamma_moments)

    s = sub.add_parser("relax", parents=[common], help="homogeneous relaxation trace (CSV)")
    s.add_argument("--mode", choices=("linear", "nonlinear"), required=True, help="equation")
    s.add_argument("--c", type=light_speed, required=True, help="light speed or inf")
    s.add_argument("--config", default=None, help="key = value config file")
    s.set_defaults(func=cmd_relax)

    s = sub.add_parser("limit-rate", parents=[common, check], help="classical-limit rate (JSON)")
    s.add_argument("--c-list", type=float_list, required=True, help="comma-separated light speeds")
    s.add_argument("--T", type=float, default=0.5, help="final time (default 0.5)")
    s.add_argument("--config", default=None, help="key = value config file")
    s.set_defaults(func=cmd_limit_rate)

    s = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite (JSON report)")
    s.add_argument("--config", default=None, help="config file; grid.n < 16 selects the fast tolerance table")
    s.add_argument("--seed", type=int, default=None, help="Philox seed (default: config seed or 0)")
    s.add_argument("--fast", action="store_true", help="use the fast tolerance table without a config")
    s.add_argument("--only", type=int, nargs="+", default=None, metavar="K", help="run only these criteria")
    s.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    s.set_defaults(func=cmd_verify_all)
    return p


def _set_threads(requested):
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        if env is None:
            return
        try:
            requested = positive_int(env)
        except argparse.ArgumentTypeError:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}\n") from None
    import numba
    numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))


def run(argv=None):
    """Parse argv and run one subcommand; returns the exit code."""
    parser = build_parser()
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    try:
        args = parser.parse_args(argv)
        _set_threads(args.threads)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:            # --help and --version
        return int(exc.code or 0)
    except (DomainError, SingularPairError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"landau-limit: error: {exc}\n")
        return EXIT_USAGE
    except (AccuracyError, InstabilityError) as exc:
        sys.stderr.write(f"landau-limit: check failed: {exc}\n")
        return EXIT_ASSERT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
