"""Short nonlinear relaxation on a coarse grid, then the classical-limit rate."""
import math
import warnings

from landau_limit import RelaxationConfig, relax_nonlinear, classical_limit_rate
from landau_limit.solver import PositivityWarning

cfg = RelaxationConfig(n=8, radius=5.0, T=0.5, profile="two-species", amplitude=0.05, seed=1)

with warnings.catch_warnings():
    warnings.simplefilter("ignore", PositivityWarning)
    run = relax_nonlinear(cfg, 8.0)
    print(f"dt {run.dt:.4f}, steps {len(run.trace) - 1}")
    for name in ("mass", "energy"):
        print(f"{name} drift {run.drift(name):.2e}")
    micro = run.column("micro_l2")
    print(f"micro part {micro[0]:.4e} -> {micro[-1]:.4e}")

    fit = classical_limit_rate(cfg, [4, 8, 16], T=0.25)
print("c      |F^c - F^inf|")
for c, d in zip(fit.abscissae, fit.ordinates):
    print(f"{c:<6g} {d:.3e}")
print(f"slope {fit.slope:.3f}")
