"""Integrating-factor RK4 for  u_t - R_1 Lap u + u u_{x_1} = 0  on the periodic box."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy.optimize import minimize_scalar

from .spectral import (BoundaryDecayWarning, Grid, RealField, boundary_max,
                       forward_transform, inverse_transform, l2_norm)

__all__ = [
    "SolverConfig", "Trajectory", "BlowUpError", "nonlinearity", "step_ifrk4",
    "evolve", "bo1d_soliton", "soliton_residual", "soliton_shape_error",
]


class BlowUpError(RuntimeError):
    """Raised when the state stops being finite.  ``partial`` holds the snapshots so far."""

    def __init__(self, t: float, partial: "Trajectory | None" = None):
        super().__init__(f"numerical blow-up at t = {t:.6g}")
        self.t = t
        self.partial = partial


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    T: float
    dealias_fraction: float = 2.0 / 3.0
    snapshot_every: int | None = None
    nonlinear: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.T >= self.dt and math.isfinite(self.T)):
            raise ValueError(f"T must satisfy T >= dt, got T={self.T}, dt={self.dt}")
        if not (0 < self.dealias_fraction <= 1):
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        if self.snapshot_every is None:
            object.__setattr__(self, "snapshot_every", max(1, math.ceil(self.T / self.dt / 200)))
        elif int(self.snapshot_every) < 1:
            raise ValueError(f"snapshot_every must be >= 1, got {self.snapshot_every}")

    @property
    def n_steps(self) -> int:
        ratio = self.T / self.dt
        k = round(ratio)
        return max(1, k if abs(ratio - k) < 1e-9 * max(1.0, ratio) else math.ceil(ratio))

    @property
    def step(self) -> float:
        """Time step actually used: ``T / n_steps`` (equals ``dt`` when it divides ``T``)."""
        return self.T / self.n_steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: tuple
    states: tuple
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "records", tuple(self.records))
        if not (len(self.times) == len(self.states) == len(self.records)):
            raise ValueError("times, states and records must have equal length")
        if self.times and self.times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def __len__(self):
        return len(self.times)


def _rfft_xi(grid: Grid):
    """Open frequency arrays in rfftn layout, Nyquist xi_1 read as 0."""
    n = grid.n
    k_full = np.fft.fftfreq(n, 1.0 / n)
    k_half = np.fft.rfftfreq(n, 1.0 / n)
    ks = [k_full] * (grid.d - 1) + [k_half]
    K = np.meshgrid(*ks, indexing="ij", sparse=True)
    xi = [grid.xi_step * k for k in K]
    nyq = np.abs(K[0]) == n // 2
    xi[0] = np.where(nyq, 0.0, xi[0])
    return K, xi


class _Stepper:
    """Precomputed IFRK4 factors for one grid and step size (rfftn layout)."""

    def __init__(self, grid: Grid, dt: float, dealias_fraction: float, nonlinear: bool = True):
        self.grid = grid
        self.dt = dt
        K, xi = _rfft_xi(grid)
        r = np.sqrt(sum(c * c for c in xi))
        lin = 1j * xi[0] * r
        self.E = np.exp(0.5 * dt * lin)
        self.E2 = self.E * self.E
        cut = dealias_fraction * grid.n / 2
        keep = np.ones(np.broadcast_shapes(*(k.shape for k in K)), dtype=bool)
        for k in K:
            keep = keep & (np.abs(k) <= cut)
        self.D = (-0.5j * xi[0] * keep) if nonlinear else None

    def to_hat(self, values):
        return sfft.rfftn(values)

    def to_phys(self, uh):
        return sfft.irfftn(uh, s=self.grid.shape)

    def N(self, uh):
        if self.D is None:
            return np.zeros_like(uh)
        u = self.to_phys(uh)
        with np.errstate(over="ignore", invalid="ignore"):
            return self.D * sfft.rfftn(u * u)

    def step(self, uh):
        dt, E, E2 = self.dt, self.E, self.E2
        k1 = self.N(uh)
        Eu = E * uh
        k2 = self.N(Eu + 0.5 * dt * E * k1)
        k3 = self.N(Eu + 0.5 * dt * k2)
        k4 = self.N(E2 * uh + dt * E * k3)
        return E2 * uh + (dt / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)


def nonlinearity(u: RealField, dealias_fraction: float = 2.0 / 3.0) -> RealField:
    """``-1/2 d_{x_1}(u^2)`` with the quadratic product dealiased."""
    st = _Stepper(u.grid, 1.0, dealias_fraction)
    return RealField(u.grid, st.to_phys(st.N(st.to_hat(u.values))))


def step_ifrk4(u: RealField, dt: float, config: SolverConfig | None = None,
               t: float = 0.0) -> RealField:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    frac = config.dealias_fraction if config else 2.0 / 3.0
    nonlinear = config.nonlinear if config else True
    st = _Stepper(u.grid, dt, frac, nonlinear)
    uh = st.step(st.to_hat(u.values))
    if not np.all(np.isfinite(uh)):
        raise BlowUpError(t + dt)
    return RealField(u.grid, st.to_phys(uh))


def evolve(u0: RealField, config: SolverConfig,
           decay_exponents: Sequence[float] = (0.0, 1.0, 2.0)) -> Trajectory:
    """Integrate to ``config.T``; snapshots every ``snapshot_every`` steps plus the final time."""
    from .diagnostics import diagnostics_record

    grid = u0.grid
    nsteps, dt = config.n_steps, config.step
    st = _Stepper(grid, dt, config.dealias_fraction, config.nonlinear)
    times, states, records = [0.0], [u0], [diagnostics_record(u0, 0.0, decay_exponents)]
    uh = st.to_hat(u0.values)
    for j in range(1, nsteps + 1):
        uh = st.step(uh)
        if not np.isfinite(uh.sum()):
            raise BlowUpError(j * dt, Trajectory(times, states, records))
        if j % config.snapshot_every == 0 or j == nsteps:
            u = RealField(grid, st.to_phys(uh))
            times.append(j * dt)
            states.append(u)
            records.append(diagnostics_record(u, j * dt, decay_exponents))
    return Trajectory(times, states, records)


def bo1d_soliton(c: float, x0: float, grid: Grid, strict: bool = False) -> RealField:
    """Algebraic traveling wave ``4c / (1 + c^2 (x - x0)^2)`` moving at speed ``c``.

    The profile decays like ``x^-2``, so on any practical box its boundary value
    exceeds ``1e-8 * max``.  That is reported as a ``BoundaryDecayWarning``;
    ``strict=True`` turns it into a ``ValueError``.
    """
    if grid.d != 1:
        raise ValueError("the soliton profile is one-dimensional")
    if not c > 0:
        raise ValueError(f"speed must be positive, got {c}")
    u = grid.field(lambda x: 4 * c / (1 + (c * (x - x0)) ** 2))
    ratio = boundary_max(u) / (4 * c)
    if ratio > 1e-8:
        msg = f"soliton boundary value is {ratio:.2e} of its peak (guard 1e-8)"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, BoundaryDecayWarning, stacklevel=2)
    return u


def _padded_square(values: np.ndarray, pad: int) -> np.ndarray:
    """Alias-free square of the trigonometric interpolant, returned on the original grid."""
    n = values.size
    m = pad * n
    c = np.fft.rfft(values)
    big = np.zeros(m // 2 + 1, dtype=complex)
    big[: n // 2 + 1] = c
    big[n // 2] *= 0.5
    v = np.fft.irfft(big, m) * pad
    sq = np.fft.rfft(v * v) / pad
    out = sq[: n // 2 + 1].copy()
    out[n // 2] *= 2.0
    return np.fft.irfft(out, n)


def soliton_residual(c: float, grid: Grid, x0: float = 0.0, pad: int = 2) -> float:
    """L2 norm of ``-c u' - R_1 u'' + u u'`` for the sampled soliton profile."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryDecayWarning)
        u = bo1d_soliton(c, x0, grid)
    k = grid.xi1d
    uh = np.fft.fft(u.values)
    ux = np.fft.ifft(1j * k * uh).real
    disp = np.fft.ifft(1j * k * np.abs(k) * uh).real
    sq = _padded_square(u.values, pad)
    adv = 0.5 * np.fft.ifft(1j * k * np.fft.fft(sq)).real
    res = -c * ux - disp + adv
    return float(np.sqrt(np.sum(res * res) * grid.dx))


def soliton_shape_error(u: RealField, u0: RealField, expected_shift: float,
                        window: float = 1.0) -> tuple[float, float]:
    """Relative L2 distance between ``u`` and the best translate of ``u0``.

    Translation is spectral (exact on the torus).  Returns ``(error, shift)``.
    """
    F0 = forward_transform(u0)
    xi = u0.grid.xi()[0]
    norm0 = l2_norm(u0)

    def dist(s):
        shifted = inverse_transform(type(F0)(u0.grid, F0.coeffs * np.exp(-1j * xi * s)))
        return l2_norm(u - shifted) / norm0

    res = minimize_scalar(dist, bounds=(expected_shift - window, expected_shift + window),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.fun), float(res.x)
