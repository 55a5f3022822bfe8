"""
Commutator ratios and the Stein square function
===============================================

The first part measures || R_1(a d^alpha f) - a R_1 d^alpha f - corrections ||
against sup|d^alpha a| ||f||.  The constant is not known in closed form, so we
record it.  The second part compares Stein's pointwise square function with
the spectral D^(1/2) on a small Gaussian family.
"""
import numpy as np

from hbolab import make_grid
from hbolab.experiments import commutator_sweep, stein_family_study

for n in (64, 128):
    sweep = commutator_sweep(make_grid(2, n, np.pi), pairs=10, bandwidth=6, seed=1)
    print(f"n = {n:3d}  " + "  ".join(f"alpha={a}: max {max(r):.3f}" for a, r in sweep.items()))

study = stein_family_study(64)
print("two-route norm ratios:", np.round(study["ratios"], 4))
print("Leibniz lhs/rhs:      ", np.round(study["leibniz_ratios"], 4))
