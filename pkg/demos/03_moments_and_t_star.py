"""
Moments, C_1 and the critical time
==================================

int x_1 u(t) grows linearly with slope ||u0||^2 / 2 while int x_2 u stays
put.  Integrating once more in time gives a quadratic that vanishes again at
t* = -4 int x_1 u0 / ||u0||^2.
"""
import numpy as np

from hbolab import SolverConfig, evolve, make_grid, moment, t_star
from hbolab.diagnostics import c_functional, first_zero_crossing, moment_slope

grid = make_grid(2, 128, 16.0)
# zero-mean datum: the periodic box then carries no spurious flux
u0 = grid.field(lambda x, y: -2 * x * np.exp(-x * x - y * y))
traj = evolve(u0, SolverConfig(dt=1e-3, T=0.5, snapshot_every=10))

M0 = traj.records[0].M
slope, _ = moment_slope(traj, 1)
print(f"slope of int x1 u: {slope:.6f}   expected M/2 = {M0 / 2:.6f}")
print(f"spread of int x2 u: {np.ptp([r.moments[(0, 1)] for r in traj.records]):.1e}")

c = c_functional(traj)
print(f"C1 by Duhamel vs by parts: {c.relative_discrepancy:.1e} relative")

# a datum pushed to negative x_1 has t* > 0; watch the time integral recross 0
grid1 = make_grid(1, 8192, 250.0)
v0 = grid1.field(lambda x: 2 * np.exp(-(x + 0.5) ** 2))
ts = t_star(v0)
run = evolve(v0, SolverConfig(dt=2e-3, T=1.3 * ts, snapshot_every=5))
cf = c_functional(run)
print(f"int x1 v0 = {moment(v0, (1,)):.4f}, t* = {ts:.4f}, "
      f"zero of int_0^t int x1 v = {first_zero_crossing(cf.times, cf.ibp):.4f}")
