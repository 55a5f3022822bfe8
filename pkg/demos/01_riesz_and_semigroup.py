"""
Riesz transforms and the dispersive group on a periodic box
============================================================

The box [-L, L)^d stands in for R^d.  Fourier multipliers act on the
sampled coefficients, so R_l and exp(t R_1 Lap) are exact on the grid.
"""
import numpy as np

from hbolab import make_grid, riesz, semigroup
from hbolab.probes import random_bandlimited
from hbolab.spectral import inner, l2_norm

rng = np.random.default_rng(0)
grid = make_grid(2, 64, 2 * np.pi)
f = random_bandlimited(grid, 8, rng)   # zero mean, so |grad|^-1 makes sense
g = random_bandlimited(grid, 8, rng)

# R_1^2 + R_2^2 = -Id on zero-mean fields
s = riesz(riesz(f, 1), 1) + riesz(riesz(f, 2), 2)
print("|| R1^2 f + R2^2 f + f || / ||f|| =", l2_norm(s + f) / l2_norm(f))

# R_1 is skew-adjoint
print("<R1 f, g> + <f, R1 g> =", inner(riesz(f, 1), g) + inner(f, riesz(g, 1)))

# the linear flow is unitary and a group, for either sign of t
for t in (0.5, -3.0, 20.0):
    print(f"t = {t:5.1f}   ||S(t) f|| / ||f|| - 1 = {l2_norm(semigroup(f, t)) / l2_norm(f) - 1:+.2e}")
back = semigroup(semigroup(f, 2.0), -2.0)
print("S(-2) S(2) f - f:", l2_norm(back - f))
