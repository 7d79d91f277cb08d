"""
Upper failure probability of a beam on an uncertain spring
==========================================================

The spring stiffness is normal with mean and standard deviation only known
to lie in a box.  We want the largest failure probability over that box,
which is one minus the lower envelope of the probability of staying safe.

Run with ``python demos/beam_reliability.py``.
"""

import numpy as np

from imprecise_mc.consistency import certify
from imprecise_mc.estimator import SolverConfig
from imprecise_mc.experiments import (
    BeamParams,
    beam_certification_setup,
    beam_convergence,
    beam_limit_state,
    beam_oracle,
    failure_threshold,
    run_beam_example,
)

params = BeamParams()
print(params)

# The beam fails when the limit state g drops to zero.  With the default
# parameters that happens for every stiffness below one threshold.
xs = failure_threshold(params)
print(f"failure for stiffness <= {xs:.4f}")
for x in (0.0, xs, 48.0):
    print(f"  g({x:7.3f}) = {float(beam_limit_state(x, params)):+.5f}")

# %%
# One shared sample from the wide central normal, reweighted to every
# (mu, sigma) on a 21 x 21 grid and then refined.
res = run_beam_example(params, n=100_000, seed=0, routes=())
mu, sigma = res.estimate.argmin_t
print(f"\nupper failure probability {res.upper_failure_prob:.5f} at mu={mu:.2f}, sigma={sigma:.3f}")

# The quadrature oracle integrates each normal over the safe set; no sampling.
orc = beam_oracle(params)
print(f"oracle                    {orc.upper_failure_prob:.5f} at mu={orc.argmin[0]:.2f}, "
      f"sigma={orc.argmin[1]:.3f}")

# %%
# Why trust the estimate?  Three sufficient conditions for strong
# consistency, each checked numerically on a grid.
setup = beam_certification_setup(params)
for route in ("gradient_box", "is_gradient_density", "is_compact_bounded_f"):
    c = certify(setup, route)
    print(f"{route:22s} issued={c.issued}  max_violation={c.max_violation:+.3g}")

# %%
# Convergence: replication means against the oracle as n grows.
conv = beam_convergence(params, (1_000, 10_000), replications=10,
                        solver=SolverConfig(refine=False), oracle=orc.envelope)
for n, m, se in zip(conv.n_list, conv.means, conv.stderrs):
    print(f"n={n:6d}  mean envelope {m:.5f} +- {se:.5f}   (oracle {orc.envelope:.5f})")
