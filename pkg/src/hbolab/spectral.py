"""Periodic grids, scaled discrete Fourier transforms and Fourier multipliers.

The box ``[-L, L)^d`` stands in for the whole space.  Coefficients are scaled
by ``dx**d`` and a checkerboard phase so that ``coeffs[k]`` approximates
``int exp(-i x.xi_k) f(x) dx`` with ``xi_k = (pi/L) k``.

Nyquist planes
--------------
On an even grid the mode ``k_j = -n/2`` represents the ambiguous pair of
frequencies ``+-pi n / (2L)``.  Every symbol is Hermitian-projected before it
is applied, ``m <- (m(k) + conj(m(-k))) / 2``, which leaves real-kernel symbols
untouched away from the Nyquist planes and keeps outputs of real inputs
exactly real.  The dispersive phase treats the ambiguous ``xi_1`` as 0 so that
it stays unimodular and invertible there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid", "RealField", "SpectralField", "Multiplier",
    "make_grid", "forward_transform", "inverse_transform", "apply_multiplier",
    "riesz", "fractional", "bessel", "d_riesz_beta", "semigroup",
    "derivative", "multiply_x", "inner", "l2_norm", "mean", "realness_defect",
    "boundary_max", "check_boundary_decay", "BoundaryDecayWarning",
    "riesz_beta_symbol", "ZERO_MEAN_TOL",
]

ZERO_MEAN_TOL = 1e-10
BOUNDARY_TOL = 1e-8


class BoundaryDecayWarning(UserWarning):
    """Field is not small on the box boundary, so periodization may matter."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)^d`` with ``n`` points per axis."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"points per axis must be a power of two >= 8, got {n}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"half-length must be positive, got {self.L}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.d

    @property
    def xi_step(self) -> float:
        return math.pi / self.L

    @property
    def xi_max(self) -> float:
        """Nyquist frequency magnitude ``pi n / (2L)``."""
        return self.xi_step * self.n / 2

    @cached_property
    def x1d(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers in FFT storage order."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)

    @cached_property
    def xi1d(self) -> np.ndarray:
        return self.xi_step * self.k1d

    def coords(self) -> tuple[np.ndarray, ...]:
        """Open (broadcastable) coordinate arrays ``x_1, ..., x_d``."""
        return tuple(np.meshgrid(*([self.x1d] * self.d), indexing="ij", sparse=True))

    def xi(self) -> tuple[np.ndarray, ...]:
        """Open frequency arrays in FFT storage order."""
        return tuple(np.meshgrid(*([self.xi1d] * self.d), indexing="ij", sparse=True))

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k1d] * self.d), indexing="ij", sparse=True))

    @cached_property
    def xi_abs(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for c in self.xi():
            r2 = r2 + c * c
        return np.sqrt(r2)

    @cached_property
    def radius(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for c in self.coords():
            r2 = r2 + c * c
        return np.sqrt(r2)

    @cached_property
    def _phase(self) -> np.ndarray:
        # (-1)^(sum k) accounts for the box starting at -L instead of 0
        s = np.zeros(self.shape, dtype=np.int64)
        for k in self.wavenumbers():
            s = s + k
        return np.where(s % 2 == 0, 1.0, -1.0)

    def nyquist_axis(self, axis: int) -> np.ndarray:
        """Boolean open array marking the Nyquist plane of ``axis`` (0-based)."""
        k = self.wavenumbers()[axis]
        return k == -self.n // 2

    def zero_field(self) -> "RealField":
        return RealField(self, np.zeros(self.shape))

    def field(self, fn: Callable[..., np.ndarray]) -> "RealField":
        """Sample ``fn(x_1, ..., x_d)`` on the grid."""
        vals = np.broadcast_to(fn(*self.coords()), self.shape)
        return RealField(self, np.array(vals, dtype=float))


def make_grid(d: int, n: int, L: float) -> Grid:
    return Grid(d, n, L)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("RealField values must be real")
        v = np.array(v, dtype=float)
        if v.shape != self.grid.shape:
            if v.size != self.grid.n ** self.grid.d:
                raise ValueError(
                    f"size mismatch: {v.size} values for grid of shape {self.grid.shape}")
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    def __add__(self, other):
        return RealField(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return RealField(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, other):
        return RealField(self.grid, self.values * _vals(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.values)


def _vals(other, grid: Grid):
    if isinstance(other, RealField):
        if other.grid != grid:
            raise ValueError("fields live on different grids")
        return other.values
    return other


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            if c.size != self.grid.n ** self.grid.d:
                raise ValueError(
                    f"size mismatch: {c.size} coefficients for grid of shape {self.grid.shape}")
            c = c.reshape(self.grid.shape)
        object.__setattr__(self, "coeffs", _frozen(c))

    def at(self, *k: int) -> complex:
        """Coefficient at signed lattice index ``k``."""
        n = self.grid.n
        return complex(self.coeffs[tuple(int(kk) % n for kk in k)])

    def hermitian_defect(self) -> float:
        c = self.coeffs
        flipped = _reflect(c)
        scale = max(np.abs(c).max(), np.finfo(float).tiny)
        return float(np.abs(c - np.conj(flipped)).max() / scale)


def _reflect(a: np.ndarray) -> np.ndarray:
    """``a[-k mod n]`` on every axis."""
    out = a
    for ax in range(a.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def forward_transform(f: RealField) -> SpectralField:
    g = f.grid
    c = sfft.fftn(f.values) * (g.cell_volume * g._phase)
    return SpectralField(g, c)


def _inverse_complex(F: SpectralField) -> np.ndarray:
    g = F.grid
    return sfft.ifftn(F.coeffs * g._phase) / g.cell_volume


def inverse_transform(F: SpectralField) -> RealField:
    """Real part of the inverse transform (exact for Hermitian coefficients)."""
    return RealField(F.grid, _inverse_complex(F).real)


def realness_defect(F: SpectralField) -> float:
    """max|Im| / max|Re| of the inverse transform."""
    v = _inverse_complex(F)
    return float(np.abs(v.imag).max() / max(np.abs(v.real).max(), np.finfo(float).tiny))


@dataclass(frozen=True)
class Multiplier:
    """Symbol ``m(xi)`` plus the value used at ``xi = 0``.

    ``symbol`` receives the tuple of open frequency arrays and must broadcast
    to the grid shape.  Singular symbols may produce inf/nan at the origin;
    that entry is overwritten by ``zero_mode`` before the finiteness check.
    """

    symbol: Callable[[tuple[np.ndarray, ...]], np.ndarray]
    zero_mode: complex = 0.0

    def evaluate(self, grid: Grid) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.array(np.broadcast_to(self.symbol(grid.xi()), grid.shape), dtype=complex)
        m[(0,) * grid.d] = self.zero_mode
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite symbol value on the frequency lattice")
        return 0.5 * (m + np.conj(_reflect(m)))


def apply_multiplier(F: SpectralField, m: Multiplier) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * m.evaluate(F.grid))


def _apply(f: RealField, m: Multiplier) -> RealField:
    return inverse_transform(apply_multiplier(forward_transform(f), m))


def _check_axis(l: int, d: int):
    if not (isinstance(l, (int, np.integer)) and 1 <= l <= d):
        raise ValueError(f"axis must be in 1..{d}, got {l}")


def mean(f: RealField) -> float:
    return float(f.values.mean())


def _require_zero_mean(f: RealField):
    rms = math.sqrt(float(np.mean(f.values ** 2)))
    if abs(mean(f)) > ZERO_MEAN_TOL * rms:
        raise ValueError("negative-order operator on non-zero-mean field")


def _abs(xi):
    return np.sqrt(sum(c * c for c in xi))


def riesz(f: RealField, l: int) -> RealField:
    _check_axis(l, f.grid.d)
    return _apply(f, Multiplier(lambda xi: -1j * xi[l - 1] / _abs(xi), 0.0))


def fractional(f: RealField, s: float) -> RealField:
    """``|grad|^s``, i.e. the multiplier ``|xi|^s`` with the zero mode removed."""
    if s < 0:
        _require_zero_mean(f)
    return _apply(f, Multiplier(lambda xi: _abs(xi) ** s, 0.0))


def bessel(f: RealField, s: float) -> RealField:
    return _apply(f, Multiplier(lambda xi: (1.0 + sum(c * c for c in xi)) ** (s / 2), 1.0))


def _normalize_beta(beta: Sequence[int], d: int) -> tuple[int, ...]:
    b = tuple(int(v) for v in beta)
    if len(b) != d or any(v < 0 for v in b):
        raise ValueError(f"multi-index must have {d} nonnegative entries, got {beta}")
    return b


def _d_xi_over_r(xi, l: int, axes: Sequence[int]):
    """Closed-form ``d^axes (xi_l / |xi|)`` for up to three derivatives (0-based)."""
    r = _abs(xi)
    dl = lambda a: 1.0 if a == l else 0.0
    X = lambda a: xi[a]
    m = len(axes)
    if m == 0:
        return xi[l] / r
    if m == 1:
        (a,) = axes
        return dl(a) / r - X(l) * X(a) / r ** 3
    if m == 2:
        a, b = axes
        first = dl(a) * X(b) + dl(b) * X(a) + (a == b) * X(l)
        return -first / r ** 3 + 3 * X(l) * X(a) * X(b) / r ** 5
    if m == 3:
        a, b, c = axes
        const = dl(a) * (b == c) + dl(b) * (a == c) + dl(c) * (a == b)
        mid = (dl(a) * X(b) * X(c) + dl(b) * X(a) * X(c) + dl(c) * X(a) * X(b)
               + (a == b) * X(l) * X(c) + (a == c) * X(l) * X(b) + (b == c) * X(l) * X(a))
        return -const / r ** 3 + 3 * mid / r ** 5 - 15 * X(l) * X(a) * X(b) * X(c) / r ** 7
    raise ValueError("derivatives of order > 3 are not supported")


def riesz_beta_symbol(l: int, beta: Sequence[int], xi) -> np.ndarray:
    """Symbol of ``D_{R_l}^beta``: ``-i^(1-|beta|) d^beta(xi_l/|xi|)``."""
    axes = [a for a, b in enumerate(beta) for _ in range(b)]
    order = len(axes)
    return -(1j ** (1 - order)) * _d_xi_over_r(xi, l - 1, axes)


def d_riesz_beta(f: RealField, l: int, beta: Sequence[int]) -> RealField:
    d = f.grid.d
    _check_axis(l, d)
    b = _normalize_beta(beta, d)
    if sum(b) > 3:
        raise ValueError(f"unsupported multi-index {beta}: order must be <= 3")
    _require_zero_mean(f)
    return _apply(f, Multiplier(lambda xi: riesz_beta_symbol(l, b, xi), 0.0))


def dispersion_phase(grid: Grid, t: float) -> np.ndarray:
    """``exp(i t xi_1 |xi|)`` with the ambiguous Nyquist ``xi_1`` read as 0."""
    xi = grid.xi()
    xi1 = np.where(grid.nyquist_axis(0), 0.0, xi[0])
    return np.broadcast_to(np.exp(1j * t * xi1 * grid.xi_abs), grid.shape)


def semigroup(f: RealField, t: float) -> RealField:
    g = f.grid
    phase = dispersion_phase(g, t)
    return _apply(f, Multiplier(lambda xi: phase, 1.0))


def derivative(f: RealField, alpha: Sequence[int]) -> RealField:
    a = _normalize_beta(alpha, f.grid.d)

    def sym(xi):
        out = 1.0 + 0j
        for c, p in zip(xi, a):
            out = out * (1j * c) ** p
        return out

    return _apply(f, Multiplier(sym, 1.0 if sum(a) == 0 else 0.0))


def multiply_x(f: RealField, beta: Sequence[int]) -> RealField:
    """``x^beta f`` sampled pointwise."""
    b = _normalize_beta(beta, f.grid.d)
    w = np.ones(f.grid.shape)
    for c, p in zip(f.grid.coords(), b):
        if p:
            w = w * c ** p
    return RealField(f.grid, w * f.values)


def inner(f: RealField, g: RealField) -> float:
    return float(np.sum(f.values * _vals(g, f.grid)) * f.grid.cell_volume)


def l2_norm(f: RealField) -> float:
    return math.sqrt(inner(f, f))


def boundary_max(f: RealField) -> float:
    """max|f| over the faces ``x_j = -L`` (identified with ``x_j = L``)."""
    v = np.abs(f.values)
    return float(max(np.take(v, 0, axis=a).max() for a in range(v.ndim)))


def check_boundary_decay(f: RealField, tol: float = BOUNDARY_TOL, stacklevel: int = 2) -> bool:
    """Warn if ``|f|`` on the boundary exceeds ``tol * max|f|``; return whether it is fine."""
    peak = float(np.abs(f.values).max())
    ok = boundary_max(f) <= tol * peak
    if not ok:
        import warnings
        warnings.warn(
            f"boundary value {boundary_max(f):.3e} exceeds {tol:g} * max|u| = {tol * peak:.3e}",
            BoundaryDecayWarning, stacklevel=stacklevel + 1)
    return ok
