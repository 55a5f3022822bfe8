"""Weighted norms, truncated weights, conserved quantities, moments and the C_1 functional."""
from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .spectral import (Grid, RealField, boundary_max, check_boundary_decay,
                       forward_transform, fractional, multiply_x)

__all__ = [
    "TruncatedWeight", "truncated_weight", "weight_profile", "DiagnosticsRecord",
    "diagnostics_record", "records_to_csv", "csv_columns", "weighted_l2", "conserved",
    "hamiltonian_physical", "moment", "moment_identity_residual", "moment_slope",
    "CFunctional", "c_functional", "t_star", "first_zero_crossing", "weight_bound_ratio",
    "japanese",
]


def japanese(r):
    return np.sqrt(1.0 + np.asarray(r, dtype=float) ** 2)


def _blend_coeffs(N: float):
    """Quintic Hermite on [N, 3N] matching value, slope and curvature of <r> at N and 2N at 3N."""
    a = math.sqrt(1 + N * N)
    h = 2.0 * N
    y0, s0, c0 = a, N / a, 1.0 / a ** 3
    y1, s1, c1 = 2.0 * N, 0.0, 0.0
    # p(s) = sum_k q_k s^k, s = (r - N)/h
    A = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, 1, 1, 1, 1, 1],
        [0, 1, 2, 3, 4, 5],
        [0, 0, 2, 6, 12, 20],
    ], dtype=float)
    b = np.array([y0, s0 * h, c0 * h * h, y1, s1 * h, c1 * h * h])
    return np.linalg.solve(A, b)


def weight_profile(r, N: float, order: int = 0):
    """Radial profile ``w~_N(r)`` (``order`` = 0, 1, 2 gives value or derivatives)."""
    r = np.asarray(r, dtype=float)
    if N <= 0:
        raise ValueError(f"truncation scale must be positive, got {N}")
    q = _blend_coeffs(N)
    h = 2.0 * N
    s = np.clip((r - N) / h, 0.0, 1.0)
    poly = np.polynomial.polynomial
    dq = poly.polyder(q, order) / h ** order if order else q
    blend = poly.polyval(s, dq)
    a = japanese(r)
    inner = (a, r / a, 1.0 / a ** 3)[order]
    outer = 2.0 * N if order == 0 else 0.0
    return np.where(r <= N, inner, np.where(r >= 3 * N, outer, blend))


@dataclass(frozen=True, eq=False)
class TruncatedWeight:
    grid: Grid
    N: float
    values: RealField


# below this scale the curvature-matched quintic dips on [N, 3N] (measured by bisection)
MONOTONE_MIN_N = 1.15


def truncated_weight(grid: Grid, N: float) -> TruncatedWeight:
    if not N > 0:
        raise ValueError(f"truncation scale must be positive, got {N}")
    if N < MONOTONE_MIN_N:
        warnings.warn(f"N = {N:g} < {MONOTONE_MIN_N}: the blend is not monotone at this scale",
                      stacklevel=2)
    if 2 * N < japanese(N):
        warnings.warn(f"N = {N:g} < 1/sqrt(3): the profile cannot be monotone "
                      "(2N lies below <N>)", stacklevel=2)
    if 3 * N >= grid.L:
        warnings.warn(f"3N = {3 * N:g} is not inside the box half-length {grid.L:g}",
                      stacklevel=2)
    return TruncatedWeight(grid, float(N), RealField(grid, weight_profile(grid.radius, N)))


def weight_bound_ratio(N: float, theta: float, alpha: Sequence[int], beta: Sequence[int],
                       extent: float = 4.0, samples: int = 401, h: float = 1e-3) -> float:
    """sup |d^alpha(w_N^theta) x^beta| / w_N^(theta + |beta| - |alpha|) on a 2D sample box.

    Derivatives are central finite differences of the continuous profile.
    """
    alpha = tuple(alpha)
    beta = tuple(beta)
    s = np.linspace(-extent * N, extent * N, samples)
    X, Y = np.meshgrid(s, s, indexing="ij")

    def wt(x, y):
        return weight_profile(np.hypot(x, y), N) ** theta

    def deriv(ax, ay):
        # nested central differences, stencil per axis
        out = 0.0
        stencil = {0: [(0, 1.0)], 1: [(1, 0.5), (-1, -0.5)], 2: [(1, 1.0), (0, -2.0), (-1, 1.0)]}
        for (i, ci), (j, cj) in itertools.product(stencil[ax], stencil[ay]):
            out = out + ci * cj * wt(X + i * h, Y + j * h)
        return out / h ** (ax + ay)

    num = np.abs(deriv(*alpha) * X ** beta[0] * Y ** beta[1])
    den = weight_profile(np.hypot(X, Y), N) ** (theta + sum(beta) - sum(alpha))
    return float((num / den).max())


def _weight_values(weight, grid: Grid) -> np.ndarray:
    if isinstance(weight, TruncatedWeight):
        weight = weight.values
    if isinstance(weight, RealField):
        return weight.values
    return np.broadcast_to(np.asarray(weight, dtype=float), grid.shape)


def weighted_l2(u: RealField, weight: Union[RealField, TruncatedWeight, float], r: float) -> float:
    w = _weight_values(weight, u.grid)
    if np.any(w <= 0):
        raise ValueError("weight must be positive")
    return float(np.sqrt(np.sum(w ** (2 * r) * u.values ** 2) * u.grid.cell_volume))


def conserved(u: RealField) -> tuple[float, float, float]:
    """(I, M, H); the quadratic part of H via Parseval with ``|xi|^(1/2)``."""
    g = u.grid
    I = float(u.values.sum() * g.cell_volume)
    M = float(np.sum(u.values ** 2) * g.cell_volume)
    F = forward_transform(u)
    kinetic = float(np.sum(g.xi_abs * np.abs(F.coeffs) ** 2) / (2 * g.L) ** g.d)
    H = kinetic - float(np.sum(u.values ** 3) * g.cell_volume) / 3.0
    return I, M, H


def hamiltonian_physical(u: RealField) -> float:
    """Physical-space quadrature of ``(|grad|^(1/2) u)^2 - u^3/3``."""
    v = fractional(u, 0.5).values
    return float(np.sum(v * v - u.values ** 3 / 3.0) * u.grid.cell_volume)


def moment(u: RealField, beta: Sequence[int], guard: bool = True) -> float:
    if sum(beta) > 3:
        raise ValueError("moments are supported up to order 3")
    if guard:
        check_boundary_decay(u, stacklevel=3)
    return float(multiply_x(u, beta).values.sum() * u.grid.cell_volume)


def _multi_indices(d: int, max_order: int = 3):
    out = []
    for order in range(max_order + 1):
        for b in itertools.product(range(order + 1), repeat=d):
            if sum(b) == order:
                out.append(b)
    return sorted(out, key=lambda b: (sum(b), tuple(-v for v in b)))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    I: float
    M: float
    H: float
    moments: dict = field(default_factory=dict)
    weighted_norms: dict = field(default_factory=dict)
    boundary_max: float = 0.0
    boundary_ok: bool = True

    def row(self) -> list[float]:
        return ([self.t, self.I, self.M, self.H]
                + [self.moments[b] for b in sorted(self.moments, key=_beta_key)]
                + [self.weighted_norms[r] for r in sorted(self.weighted_norms)]
                + [self.boundary_max])


def _beta_key(b):
    return (sum(b), tuple(-v for v in b))


def csv_columns(d: int, decay_exponents: Sequence[float]) -> list[str]:
    cols = ["t", "I", "M", "H"]
    cols += ["m_" + "".join(str(v) for v in b) for b in _multi_indices(d)]
    cols += [f"wnorm_{r:g}" for r in sorted(decay_exponents)]
    cols.append("boundary_max")
    return cols


def diagnostics_record(u: RealField, t: float,
                       decay_exponents: Sequence[float] = (0.0, 1.0, 2.0)) -> DiagnosticsRecord:
    g = u.grid
    I, M, H = conserved(u)
    moments = {b: moment(u, b, guard=False) for b in _multi_indices(g.d)}
    bracket = japanese(g.radius)
    wn = {float(r): weighted_l2(u, bracket, r) for r in decay_exponents}
    bmax = boundary_max(u)
    ok = bmax <= 1e-8 * float(np.abs(u.values).max()) if np.any(u.values) else True
    return DiagnosticsRecord(float(t), I, M, H, moments, wn, bmax, bool(ok))


def records_to_csv(records: Sequence[DiagnosticsRecord], d: int,
                   decay_exponents: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns(d, decay_exponents))
    for rec in records:
        w.writerow([repr(float(v)) for v in rec.row()])
    return buf.getvalue()


def _moments_along(traj, beta) -> np.ndarray:
    return np.array([moment(u, beta, guard=False) for u in traj.states])


def _e(l: int, d: int):
    b = [0] * d
    b[l - 1] = 1
    return tuple(b)


def moment_identity_residual(traj, l: int) -> float:
    if len(traj.times) < 3:
        raise ValueError("need at least three snapshots")
    d = traj.grid.d
    m = _moments_along(traj, _e(l, d))
    M0 = conserved(traj.states[0])[1]
    t = np.asarray(traj.times)
    law = m[0] + (t / 2 * M0 if l == 1 else 0.0)
    return float(np.abs(m - law).max())


def moment_slope(traj, l: int) -> tuple[float, float]:
    """Least-squares slope of ``t -> int x_l u`` and the max deviation from the fitted line."""
    m = _moments_along(traj, _e(l, traj.grid.d))
    t = np.asarray(traj.times)
    slope, icpt = np.polyfit(t, m, 1)
    return float(slope), float(np.abs(m - (slope * t + icpt)).max())


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


@dataclass(frozen=True)
class CFunctional:
    """C_1(t) = -i c(t); the arrays hold the real factor c(t)."""

    times: np.ndarray
    duhamel: np.ndarray
    ibp: np.ndarray
    closed_form: np.ndarray
    discrepancy: float
    relative_discrepancy: float
    closed_form_error: float


def c_functional(traj) -> CFunctional:
    """Two quadratures of the C_1 functional.

    Duhamel route: ``t m_0 + 1/2 int_0^t (t - s) G(s) ds`` where
    ``G = -int x_1 d_1(u^2)`` is read off the frequency derivative at 0.
    Integration-by-parts route: ``int_0^t int x_1 u dx ds``.
    """
    from .probes import freq_derivative
    from .spectral import derivative

    g = traj.grid
    d = g.d
    e1 = _e(1, d)
    t = np.asarray(traj.times)
    u0 = traj.states[0]
    m0 = (1j * freq_derivative(u0, e1, guard=False).at(*(0,) * d)).real
    G = np.empty_like(t)
    for j, u in enumerate(traj.states):
        sq = RealField(g, u.values ** 2)
        dsq = derivative(sq, e1)
        # xi_1 \hat{u^2} = -i FT(d_1 u^2); its xi_1-derivative at 0
        G[j] = (-1j * freq_derivative(dsq, e1, guard=False).at(*(0,) * d)).real
    tg = t * G
    duh = t * m0 + 0.5 * (t * _cumtrapz(G, t) - _cumtrapz(tg, t))
    ibp = _cumtrapz(_moments_along(traj, e1), t)
    M0 = conserved(u0)[1]
    closed = t * m0 + t ** 2 * M0 / 4
    disc = float(np.abs(duh - ibp).max())
    scale = max(float(np.abs(ibp).max()), float(np.abs(duh).max()), np.finfo(float).tiny)
    cscale = max(float(np.abs(closed).max()), np.finfo(float).tiny)
    return CFunctional(t, duh, ibp, closed, disc, disc / scale,
                       float(np.abs(ibp - closed).max()) / cscale)


def t_star(u0: RealField) -> float:
    M = conserved(u0)[1]
    if not M > 0:
        raise ValueError("t* is undefined for the zero datum")
    return -4.0 * moment(u0, _e(1, u0.grid.d), guard=False) / M


def first_zero_crossing(t: np.ndarray, y: np.ndarray) -> float | None:
    """First sign change of ``y`` for t > 0, located by linear interpolation."""
    t = np.asarray(t)
    y = np.asarray(y)
    for j in range(1, len(t) - 1):
        if y[j] == 0.0:
            return float(t[j])
        if y[j] * y[j + 1] < 0:
            return float(t[j] - y[j] * (t[j + 1] - t[j]) / (y[j + 1] - y[j]))
    return None
