"""Log-log rate fits shared by every convergence study."""
from dataclasses import dataclass, field
import math

import numpy as np


@dataclass
class RateFit:
    """Least-squares fit log(ordinate) = slope * log(abscissa) + intercept."""
    abscissae: list
    ordinates: list
    slope: float
    intercept: float
    r2: float
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"abscissae": [float(a) for a in self.abscissae],
             "ordinates": [float(o) for o in self.ordinates],
             "slope": float(self.slope), "intercept": float(self.intercept),
             "r2": float(self.r2)}
        if self.extra:
            d["extra"] = self.extra
        return d


def check_abscissae(xs, minimum=2):
    xs = [float(x) for x in xs]
    if len(xs) < minimum:
        raise ValueError(f"need at least {minimum} abscissae, got {len(xs)}")
    if len(set(xs)) != len(xs):
        raise ValueError(f"repeated abscissa in {xs}")
    if any(not (x > 0 and math.isfinite(x)) for x in xs):
        raise ValueError("abscissae must be positive and finite")
    return xs


def fit_rate(xs, ys, extra=None):
    """Fit the log-log slope of ys against xs."""
    xs = check_abscissae(xs)
    ys = [float(y) for y in ys]
    if len(ys) != len(xs):
        raise ValueError("abscissae and ordinates differ in length")
    if any(not (y > 0 and math.isfinite(y)) for y in ys):
        raise ValueError(f"ordinates must be positive and finite: {ys}")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(xs, ys, float(slope), float(intercept), r2, dict(extra or {}))
