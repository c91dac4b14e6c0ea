"""Distance between the relativistic and classical kernels as c grows."""
import numpy as np

from landau_limit import kernel

rng = np.random.Generator(np.random.Philox(key=7))
pairs = kernel.random_pairs(rng, 500)
fit = kernel.phi_difference_rate(pairs, [4, 8, 16, 32])

print("c        max normalized difference")
for c, d in zip(fit.abscissae, fit.ordinates):
    print(f"{c:<8g} {d:.3e}")
print(f"slope {fit.slope:.3f}  r2 {fit.r2:.5f}")
