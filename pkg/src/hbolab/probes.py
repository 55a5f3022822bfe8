"""Probes of the operator calculus: symbol derivatives, F_j^k, the cone fit,
the Riesz commutator ratio, the Stein square function and an identity suite."""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .spectral import (Grid, RealField, SpectralField, check_boundary_decay, d_riesz_beta,
                       derivative, dispersion_phase, forward_transform, fractional,
                       l2_norm, make_grid,
                       multiply_x, riesz, semigroup)

__all__ = [
    "symbol_derivative", "f_operator", "freq_derivative", "ConeParams", "ConeProbeReport",
    "cone_probe", "CommutatorReport", "commutator_probe", "random_bandlimited",
    "stein_derivative", "IdentityResult", "IdentityReport", "identity_suite",
    "wave_packets", "moment_free", "InsufficientConeSamples",
]


# -- symbol derivatives of xi_1 |xi| -------------------------------------------------

def _sd(j: int, k: int, xi) -> np.ndarray:
    r = np.sqrt(sum(np.asarray(c, dtype=float) ** 2 for c in xi))
    x1 = np.asarray(xi[0], dtype=float)
    xk = np.asarray(xi[k - 1], dtype=float)
    dl = 1.0 if k == 1 else 0.0
    if j == 1:
        return dl * r + x1 * xk / r
    if j == 2:
        return 2 * dl * xk / r + x1 / r - x1 * xk ** 2 / r ** 3
    if j == 3:
        return 3 * dl / r - 3 * dl * xk ** 2 / r ** 3 - 3 * x1 * xk / r ** 3 + 3 * x1 * xk ** 3 / r ** 5
    if j == 4:
        return (-12 * dl * xk / r ** 3 + 12 * dl * xk ** 3 / r ** 5 - 3 * x1 / r ** 3
                + 18 * x1 * xk ** 2 / r ** 5 - 15 * x1 * xk ** 4 / r ** 7)
    raise ValueError(f"order must be 1..4, got {j}")


def symbol_derivative(j: int, k: int, xi):
    """``d^j/d xi_k^j (xi_1 |xi|)`` at a point (or componentwise arrays) ``xi``."""
    xi = tuple(np.asarray(c, dtype=float) for c in xi)
    if not 1 <= k <= len(xi):
        raise ValueError(f"axis must be in 1..{len(xi)}, got {k}")
    r2 = sum(c * c for c in xi)
    if np.any(r2 == 0):
        raise ValueError("symbol derivatives are singular at xi = 0")
    out = _sd(j, k, xi)
    return float(out) if np.ndim(out) == 0 else out


def f_operator(j: int, k: int, t: float, derivs: Sequence[SpectralField]) -> SpectralField:
    """``F_j^k(t, xi, f) = d^j/d xi_k^j (exp(i t xi_1 |xi|) f^)``.

    ``derivs[m]`` holds ``d^m/d xi_k^m f^`` for m = 0..j.  Built recursively:
    ``F_j(f) = phi_j E f + sum_{0<i<j} C(j-1, i) phi_{j-i} F_i(f) + F_{j-1}(d f)``
    with ``phi_m = i t d^m(xi_1|xi|)`` and ``E`` the dispersive phase.
    The origin is assigned ``F = d^j f^`` there (the phase derivatives are singular).
    """
    if not 1 <= j <= 4:
        raise ValueError(f"order must be 1..4, got {j}")
    if len(derivs) < j + 1:
        raise ValueError(f"F_{j} needs f and its first {j} derivatives, got {len(derivs)} arrays")
    grid = derivs[0].grid
    xi = grid.xi()
    origin = (0,) * grid.d
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = {m: np.broadcast_to(1j * t * _sd(m, k, xi), grid.shape).copy() for m in range(1, j + 1)}
    for p in phi.values():
        p[origin] = 0.0
    E = np.asarray(dispersion_phase(grid, t))
    data = [np.asarray(D.coeffs) for D in derivs]

    @lru_cache(maxsize=None)
    def F(order: int, shift: int):
        if order == 0:
            return E * data[shift]
        acc = phi[order] * E * data[shift]
        for i in range(1, order):
            acc = acc + comb(order - 1, i) * phi[order - i] * F(i, shift)
        return acc + F(order - 1, shift + 1)

    return SpectralField(grid, F(j, 0))


def freq_derivative(u: RealField, beta: Sequence[int], guard: bool = True) -> SpectralField:
    """``d^beta_xi u^`` as the transform of ``(-i x)^beta u``."""
    order = sum(beta)
    if order > 4:
        raise ValueError("frequency derivatives are supported up to order 4")
    if guard:
        check_boundary_decay(u, stacklevel=3)
    F = forward_transform(multiply_x(u, beta))
    return SpectralField(u.grid, (-1j) ** order * F.coeffs)


# -- cone probe -------------------------------------------------------------------------

class InsufficientConeSamples(ValueError):
    pass


@dataclass(frozen=True)
class ConeParams:
    """Cone ``|xi| <= ratio |xi~|`` with radius cap ``min(cap_fraction * xi_max, cap)``."""

    ratio: float = 2 ** 0.25
    cap: float | None = None
    cap_fraction: float = 1.0 / 16.0
    min_samples: int = 10

    def radius(self, grid: Grid) -> float:
        r = self.cap_fraction * grid.xi_max
        return r if self.cap is None else min(r, self.cap)


@dataclass(frozen=True)
class ConeProbeReport:
    t: float
    fitted_exponent: float
    sample_count: int
    cone_params: tuple
    fit_residual: float
    method: str
    log_xi: np.ndarray = field(repr=False, default=None)
    log_mag: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"probe": "cone", "t": self.t, "fitted_exponent": self.fitted_exponent,
                "sample_count": self.sample_count, "cone_ratio": self.cone_params[0],
                "cone_radius": self.cone_params[1], "fit_residual": self.fit_residual,
                "method": self.method}

    def series(self) -> list[tuple[float, float]]:
        return list(zip(self.log_xi.tolist(), self.log_mag.tolist()))


def third_xi1_derivative(u_t: RealField, t: float, method: str = "pullback") -> SpectralField:
    """``d^3/d xi_1^3 u^(t)``.

    ``pullback`` writes ``u^(t) = E(t) v^`` with ``v = exp(-t R_1 Lap) u_t`` and
    differentiates through the phase with ``f_operator``; ``v`` stays localized
    where ``u_t`` has radiated across the box.  ``direct`` transforms ``(-i x_1)^3 u_t``.
    """
    e = lambda m: (m,) + (0,) * (u_t.grid.d - 1)
    if method == "direct":
        return freq_derivative(u_t, e(3))
    if method != "pullback":
        raise ValueError(f"unknown method {method!r}")
    v = semigroup(u_t, -t)
    derivs = [freq_derivative(v, e(m), guard=False) for m in range(4)]
    return f_operator(3, 1, t, derivs)


def cone_probe(u_t: RealField, t: float, cone: ConeParams = ConeParams(),
               method: str = "pullback") -> ConeProbeReport:
    g = u_t.grid
    if g.d < 2:
        raise ValueError("the cone needs d >= 2")
    if t < 0:
        raise ValueError("t must be nonnegative")
    F3 = third_xi1_derivative(u_t, t, method) if t > 0 else freq_derivative(
        u_t, (3,) + (0,) * (g.d - 1), guard=False)
    xi = g.xi()
    r = g.xi_abs
    rt = np.sqrt(sum(np.broadcast_to(c, g.shape) ** 2 for c in xi[1:]))
    cap = cone.radius(g)
    mag = np.abs(F3.coeffs)
    mask = (r > 0) & (r <= cap) & (r <= cone.ratio * rt) & (mag > 0)
    count = int(mask.sum())
    if count < cone.min_samples:
        raise InsufficientConeSamples(
            f"only {count} lattice points in the cone (need {cone.min_samples}); "
            f"radius {cap:.4g}, lattice step {g.xi_step:.4g}")
    lx = np.log(r[mask])
    lm = np.log(mag[mask])
    order = np.argsort(lx, kind="stable")
    lx, lm = lx[order], lm[order]
    slope, icpt = np.polyfit(lx, lm, 1)
    resid = float(np.sqrt(np.mean((lm - (slope * lx + icpt)) ** 2)))
    return ConeProbeReport(float(t), float(slope), count, (float(cone.ratio), float(cap)),
                           resid, method if t > 0 else "t=0", lx, lm)


# -- commutator estimate ------------------------------------------------------------------

@dataclass(frozen=True)
class CommutatorReport:
    alpha: tuple
    p: int
    lhs_norm: float
    rhs_factor: float
    ratio: float
    grid: Grid
    degenerate: bool = False
    l: int = 1

    def to_dict(self) -> dict:
        return {"probe": "commutator", "alpha": list(self.alpha), "p": self.p, "l": self.l,
                "lhs_norm": self.lhs_norm, "rhs_factor": self.rhs_factor, "ratio": self.ratio,
                "degenerate": self.degenerate,
                "grid": {"d": self.grid.d, "n": self.grid.n, "L": self.grid.L}}


def _multi_indices_of_order(d: int, order: int):
    return [b for b in itertools.product(range(order + 1), repeat=d) if sum(b) == order]


def commutator_lhs(a: RealField, f: RealField, alpha: Sequence[int], l: int = 1) -> RealField:
    """``R_l(a d^alpha f) - a R_l d^alpha f - sum_{1<=|b|<|alpha|} d^b a D^b_{R_l} d^alpha f / b!``."""
    d = a.grid.d
    df = derivative(f, alpha)
    out = riesz(a * df, l) - a * riesz(df, l)
    for order in range(1, sum(alpha)):
        for b in _multi_indices_of_order(d, order):
            coef = 1.0 / math.prod(factorial(v) for v in b)
            out = out - coef * (derivative(a, b) * d_riesz_beta(df, l, b))
    return out


def commutator_probe(a: RealField, f: RealField, alpha: Sequence[int], l: int = 1) -> CommutatorReport:
    d = a.grid.d
    alpha = tuple(int(v) for v in alpha)
    order = sum(alpha)
    if len(alpha) != d or order < 1 or order > 3:
        raise ValueError(f"unsupported multi-index {alpha}")
    if order == 3 and max(alpha) != 3:
        raise ValueError("third-order multi-indices must be pure-axis")
    lhs = l2_norm(commutator_lhs(a, f, alpha, l))
    amax = sum(float(np.abs(derivative(a, b).values).max())
               for b in _multi_indices_of_order(d, order))
    rhs = amax * l2_norm(f)
    tiny = 1e-13 * max(1.0, float(np.abs(a.values).max())) * max(l2_norm(f), 1e-300)
    if rhs <= tiny:
        return CommutatorReport(alpha, 2, lhs, rhs, 0.0, a.grid, True, l)
    return CommutatorReport(alpha, 2, lhs, rhs, lhs / rhs, a.grid, False, l)


def random_bandlimited(grid: Grid, kmax: int, rng: np.random.Generator,
                       zero_mean: bool = True, decay: float = 1.0) -> RealField:
    """Real trigonometric polynomial with modes ``|k_j| <= kmax``, defined by integer wavenumbers.

    The same ``rng`` state produces the same continuous function on any grid with ``n > 2 kmax``.
    """
    size = 2 * kmax + 1
    ks = np.arange(-kmax, kmax + 1)
    K = np.meshgrid(*([ks] * grid.d), indexing="ij", sparse=True)
    amp = (1.0 + sum(k * k for k in K)) ** (-decay / 2)
    c = (rng.standard_normal((size,) * grid.d) + 1j * rng.standard_normal((size,) * grid.d)) * amp
    c = 0.5 * (c + np.conj(np.flip(c)))
    if zero_mean:
        c[(kmax,) * grid.d] = 0.0
    if grid.n <= 2 * kmax:
        raise ValueError(f"grid with n = {grid.n} cannot carry modes up to {kmax}")
    # place c_k on the FFT lattice; the box starts at -L, hence the (-1)^k factor
    full = np.zeros(grid.shape, dtype=complex)
    idx = np.ix_(*([ks % grid.n] * grid.d))
    sign = (-1.0) ** np.abs(sum(np.meshgrid(*([ks] * grid.d), indexing="ij")))
    full[idx] = c * sign
    vals = np.fft.ifftn(full) * grid.n ** grid.d
    return RealField(grid, vals.real)


# -- Stein square function -----------------------------------------------------------------

def _cell_integral(dx: float, d: int, b: float) -> float:
    """``(1/d) int_cell |z|^(2-d-2b) dz`` over the cube of side dx centred at 0."""
    p = 2.0 - d - 2.0 * b
    h = dx / 2
    if d == 1:
        return 2 * h ** (p + 1) / (p + 1)
    # polar integration over the square, 8 symmetric triangles
    val, _ = quad(lambda th: (h / math.cos(th)) ** (p + 2) / (p + 2), 0.0, math.pi / 4)
    return 8 * val / d


def _exterior_integral(points: np.ndarray, lo: float, hi: float, d: int, b: float,
                       n_angles: int = 512):
    """``int_{y outside [lo, hi)^d} |x - y|^(-d-2b) dy`` for each row of ``points``."""
    if d == 1:
        x = points[:, 0]
        return ((hi - x) ** (-2 * b) + (x - lo) ** (-2 * b)) / (2 * b)
    th = (np.arange(n_angles) + 0.5) * 2 * math.pi / n_angles
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    dist = np.full((points.shape[0], n_angles), np.inf)
    for ax in range(2):
        comp = u[:, ax][None, :]
        p = points[:, ax:ax + 1]
        with np.errstate(divide="ignore"):
            hit = np.where(comp > 0, (hi - p) / comp, np.where(comp < 0, (lo - p) / comp, np.inf))
        dist = np.minimum(dist, hit)
    return (dist ** (-2 * b) / (2 * b)).mean(axis=1) * 2 * math.pi


def stein_derivative(f: RealField, b: float, exterior: bool = True) -> RealField:
    """``(int |f(x) - f(y)|^2 / |x - y|^(d + 2b) dy)^(1/2)`` by direct summation.

    The self-cell uses the first-order Taylor value ``|grad f(x)|^2 (1/d) int |z|^(2-d-2b)``;
    ``exterior`` adds the part of the integral outside the box where ``f`` is taken as 0.
    """
    g = f.grid
    if g.d > 2 or g.n > (1024 if g.d == 1 else 64):
        raise ValueError("grid too large for direct summation: d <= 2, n <= 64 in 2D, n <= 1024 in 1D")
    if not 0 < b < 1:
        raise ValueError("order must lie in (0, 1)")
    pts = np.stack([np.broadcast_to(c, g.shape).ravel() for c in g.coords()], axis=1)
    v = f.values.ravel()
    out = np.empty_like(v)
    vol = g.cell_volume
    expo = -(g.d + 2 * b) / 2
    for i in range(v.size):
        d2 = np.sum((pts - pts[i]) ** 2, axis=1)
        d2[i] = np.inf
        out[i] = np.sum((v - v[i]) ** 2 * d2 ** expo) * vol
    grad2 = sum(derivative(f, tuple(int(a == ax) for a in range(g.d))).values.ravel() ** 2
                for ax in range(g.d))
    out += grad2 * _cell_integral(g.dx, g.d, b)
    if exterior:
        # the cells tile [-L - dx/2, L - dx/2)
        out += v ** 2 * _exterior_integral(pts, -g.L - g.dx / 2, g.L - g.dx / 2, g.d, b)
    return RealField(g, np.sqrt(out))


# -- identity suite ------------------------------------------------------------------------

def wave_packets(grid: Grid, rng: np.random.Generator, count: int = 3, width: float = 1.0,
                 min_freq: float = 9.0) -> RealField:
    """Sum of Gaussian wave packets whose spectra sit at ``|xi| >= min_freq / width``.

    Content near ``xi = 0`` is below ``exp(-min_freq^2 / 2)``, so every moment is negligible.
    """
    x = grid.coords()
    vals = np.zeros(grid.shape)
    span = 0.35 * grid.L
    for _ in range(count):
        c = rng.uniform(-span, span, grid.d)
        direction = rng.standard_normal(grid.d)
        direction /= np.linalg.norm(direction)
        kvec = direction * (min_freq / width) * rng.uniform(1.0, 1.3)
        r2 = sum((xc - cc) ** 2 for xc, cc in zip(x, c))
        ph = sum(kk * (xc - cc) for kk, xc, cc in zip(kvec, x, c)) + rng.uniform(0, 2 * np.pi)
        vals = vals + rng.normal() * np.exp(-r2 / (2 * width ** 2)) * np.cos(ph)
    return RealField(grid, vals)


def moment_free(g: RealField, order: int, width: float = 1.5) -> RealField:
    """Subtract Gaussian-derivative components so that ``int x^b f = 0`` for ``|b| <= order``.

    Equivalently, kills ``d^b f^(0)`` for ``|b| <= order``.
    """
    grid = g.grid
    d = grid.d
    betas = [b for o in range(order + 1) for b in _multi_indices_of_order(d, o)]
    base = grid.field(lambda *x: np.exp(-sum(c * c for c in x) / (2 * width ** 2)))
    basis = [derivative(base, b) if sum(b) else base for b in betas]
    vol = grid.cell_volume
    A = np.array([[np.sum(multiply_x(phi, b).values) * vol for phi in basis] for b in betas])
    rhs = np.array([np.sum(multiply_x(g, b).values) * vol for b in betas])
    coef = np.linalg.solve(A, rhs)
    vals = g.values - sum(c * phi.values for c, phi in zip(coef, basis))
    return RealField(grid, vals)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.threshold)


@dataclass(frozen=True)
class IdentityReport:
    grid: Grid
    seed: int
    results: tuple
    elapsed: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"probe": "identity_suite", "seed": self.seed,
                "grid": {"d": self.grid.d, "n": self.grid.n, "L": self.grid.L},
                "elapsed_s": self.elapsed, "passed": self.passed,
                "identities": [{"name": r.name, "residual": r.residual,
                                "threshold": r.threshold, "passed": r.passed}
                               for r in self.results]}


def _rel(a: RealField, b: RealField) -> float:
    den = max(l2_norm(a), l2_norm(b), np.finfo(float).tiny)
    return l2_norm(a - b) / den


def identity_suite(grid: Grid | None = None, seed: int = 0) -> IdentityReport:
    """Residuals of the Riesz decomposition and commutator identities on ``grid`` (default 2D, n=128)."""
    grid = grid or make_grid(2, 128, 12.0)
    rng = np.random.default_rng(seed)
    d = grid.d
    t0 = time.perf_counter()
    res = []
    e = lambda k: tuple(int(a == k - 1) for a in range(d))
    R = riesz

    f = random_bandlimited(grid, max(2, grid.n // 8), rng)
    inv = fractional(f, -1.0)
    for k in range(1, d + 1):
        lhs = d_riesz_beta(f, 1, e(k))
        rhs = -R(R(inv, k), 1)
        if k == 1:
            rhs = rhs - inv
        res.append(IdentityResult(f"riesz_beta_order1_k{k}", _rel(lhs, rhs), 1e-12))
    for k, j in itertools.product(range(1, d + 1), repeat=2):
        lhs = d_riesz_beta(derivative(f, e(j)), 1, e(k))
        rhs = R(R(R(f, j), k), 1)
        if k == 1:
            rhs = rhs + R(f, j)
        res.append(IdentityResult(f"riesz_beta_derivative_k{k}_j{j}", _rel(lhs, rhs), 1e-12))
    grad = fractional(f, 1.0)
    for k, i, j in itertools.product(range(1, d + 1), repeat=3):
        lhs = d_riesz_beta(derivative(f, tuple(np.add(e(i), e(j)))), 1, e(k))
        rhs = -R(R(R(R(grad, j), i), k), 1)
        if k == 1:
            rhs = rhs - R(R(grad, j), i)
        res.append(IdentityResult(f"riesz_beta_hessian_k{k}_i{i}_j{j}", _rel(lhs, rhs), 1e-12))

    w = wave_packets(grid, rng, width=grid.L / 12.0)
    for k, j in itertools.product(range(1, d + 1), repeat=2):
        dj = derivative(w, e(j))
        lhs = R(multiply_x(dj, e(k)), 1) - multiply_x(R(dj, 1), e(k))
        rhs = R(R(R(w, j), k), 1)
        if k == 1:
            rhs = rhs + R(w, j)
        res.append(IdentityResult(f"commutator_x_k{k}_j{j}", _rel(lhs, rhs), 1e-12))

    # moment-free datum; the box is 24 data widths across so the tails of R_1 h stay inside
    s = grid.L / 24.0
    shift = [0.3 * s * (i + 1) for i in range(d)]
    h = moment_free(grid.field(lambda *x: np.exp(-sum((c - a) ** 2 for c, a in zip(x, shift))
                                                 / (2 * s * s)) * (1.0 + 0.5 * x[0] / s)),
                    order=7, width=1.5 * s)
    for k in range(1, d + 1):
        lhs = R(multiply_x(h, e(k)), 1) - multiply_x(R(h, 1), e(k))
        rhs = d_riesz_beta(h, 1, e(k))
        res.append(IdentityResult(f"commutator_poly_gamma_e{k}", _rel(lhs, rhs), 1e-6))
        g2 = tuple(2 * v for v in e(k))
        lhs = R(multiply_x(h, g2), 1) - multiply_x(R(h, 1), g2)
        rhs = 2.0 * d_riesz_beta(multiply_x(h, e(k)), 1, e(k)) - d_riesz_beta(h, 1, g2)
        res.append(IdentityResult(f"commutator_poly_gamma_2e{k}", _rel(lhs, rhs), 1e-6))
    return IdentityReport(grid, seed, tuple(res), time.perf_counter() - t0)


def inputs_hash(*fields: RealField) -> str:
    h = hashlib.sha256()
    for f in fields:
        h.update(np.ascontiguousarray(f.values).tobytes())
    return h.hexdigest()[:16]


def report_json(obj) -> str:
    return json.dumps(obj.to_dict() if hasattr(obj, "to_dict") else obj, indent=2, sort_keys=True)
