"""
The one-dimensional soliton
===========================

For d = 1 the equation is Benjamin-Ono, and 4c / (1 + c^2 x^2) travels
at speed c.  The profile only decays like x^-2, so the box edge is never
quiet; the run below still recovers the translate to about 4e-5.
"""
import math
import warnings

from hbolab import SolverConfig, bo1d_soliton, evolve, make_grid
from hbolab.solver import soliton_residual, soliton_shape_error
from hbolab.spectral import BoundaryDecayWarning

grid = make_grid(1, 2048, 64 * math.pi)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", BoundaryDecayWarning)
    u0 = bo1d_soliton(1.0, 0.0, grid)

traj = evolve(u0, SolverConfig(dt=1e-3, T=5.0))
err, shift = soliton_shape_error(traj.states[-1], u0, expected_shift=5.0)
print(f"shape error after T = 5: {err:.2e}   (fitted shift {shift:.6f})")
print(f"mass drift: {max(abs(r.I - traj.records[0].I) for r in traj.records):.1e}")

# The traveling-wave residual measures how far the sampled profile is from
# an exact periodic solution.  It is set by the algebraic tail, so it falls
# only as the box grows.
for n, L in ((2048, 64 * math.pi), (8192, 128 * math.pi), (16384, 256 * math.pi)):
    print(f"n = {n:5d}, L = {L / math.pi:5.0f} pi   residual {soliton_residual(1.0, make_grid(1, n, L)):.2e}")
