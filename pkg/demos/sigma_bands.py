"""Eigenvalues of the collision frequency matrix against their calibrated scalings."""
import math

from landau_limit import sigma

rows = sigma.spectrum_scan([1.0, 4.0, math.inf], [0.5, 2.0, 8.0])
print("c      |p|    lambda1       lambda2       ratio1  ratio2")
for c, p, l1, l2, r1, r2 in rows:
    print(f"{c:<6g} {p:<6g} {l1:.6e}  {l2:.6e}  {r1:.3f}   {r2:.3f}")
