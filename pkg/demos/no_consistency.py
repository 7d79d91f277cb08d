"""
A family too rich for the estimator
===================================

Central law: uniform on [0, 2].  Family: every density that equals 1 on k
of the 2k cells of width 1/k.  For any sample of size n some member vanishes
at every sample point, so the importance-sampling objective at that member
is exactly zero, while the true lower expectation of f = 2 is 2.
"""

import numpy as np

from imprecise_mc.distributions import BinaryDensitySpec, make_binary_density
from imprecise_mc.experiments import finite_subfamily_check, run_no_consistency_example
from imprecise_mc.experiments.no_consistency import CENTRAL
from imprecise_mc.sampling import draw_uniform_stream, inverse_transform_sample

res = run_no_consistency_example(n_list=(1, 10, 100, 1000), seed=0)
for r in res.rows:
    print(f"n={r.n:5d}  objective {r.objective}  ({r.occupied_cells} of {2 * r.n} cells hold samples)")
print("true lower expectation is at least", res.envelope_lower_bound)

# %%
# Look at the n = 10 case: the chosen density is zero wherever a sample landed.
row = res.rows[1]
x = np.sort(inverse_transform_sample(CENTRAL, draw_uniform_stream(row.seed, row.n)))
d = make_binary_density(BinaryDensitySpec(row.n, row.bits))
print("\nsamples:", np.round(x, 3))
print("density at samples:", d.pdf(x))

# %%
# Restricted to five fixed members the estimator behaves again.
chk = finite_subfamily_check(n=10_000, seed=0)
print(f"\nfive members: estimate {chk.estimate:.4f} +- {chk.stderr:.4f}, exact {chk.exact_min:.4f}")
