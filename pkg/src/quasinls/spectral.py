"""Periodic spectral discretisation of the real line.

A field ``u`` on the box ``[-P/2, P/2)`` is stored by its Fourier-series
coefficients ``c_j`` (numpy FFT ordering), ``u(x) = sum_j c_j exp(i k_j x)``.
Norms carry the lattice weight so they converge to the continuum norms with
the unitary transform as ``P`` grows; in particular ``sobolev_norm(u, 0)`` is
the physical L2 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .symbols import DispersionSymbol

DEFAULT_MAX_POINTS = 2**20

# envelope half-width multipliers that push the profile below 1e-12
ENVELOPE_CUTOFF = {"sech": 30.0, "gaussian": 9.0}


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralGrid:
    n_points: int
    period: float
    k0_index: Optional[int] = None

    def __post_init__(self):
        if self.n_points < 2 or self.n_points & (self.n_points - 1):
            raise GridError(f"n_points must be a power of two, got {self.n_points}")
        if not self.period > 0:
            raise GridError("period must be positive")

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.period / self.n_points)

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.period + self.period * np.arange(self.n_points) / self.n_points

    @property
    def index(self) -> np.ndarray:
        """Integer lattice index ``j`` of each coefficient (k = j * dk)."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(int)

    @property
    def k_nyquist(self) -> float:
        return 0.5 * self.n_points * self.dk

    @property
    def k0(self) -> Optional[float]:
        return None if self.k0_index is None else self.k0_index * self.dk

    @property
    def dealias_cutoff(self) -> float:
        return 2.0 / 3.0 * self.k_nyquist

    def scaled(self, eps: float) -> "SpectralGrid":
        """The slow-variable grid ``X = eps x`` (same points, period eps*P)."""
        return SpectralGrid(self.n_points, self.period * eps, None)

    def slot(self, j: int) -> int:
        """Array position holding lattice index ``j``."""
        if not -self.n_points // 2 <= j < self.n_points // 2:
            raise GridError(f"lattice index {j} outside the grid")
        return j % self.n_points

    def to_dict(self) -> dict:
        return {"n_points": self.n_points, "period": self.period, "k0_index": self.k0_index}


def make_grid(
    k0: float,
    eps: float,
    envelope_width: float = 1.0,
    oversample: float = 4.0,
    envelope: str = "sech",
    max_points: int = DEFAULT_MAX_POINTS,
) -> SpectralGrid:
    """Choose a periodic box and resolution for a wave packet at carrier ``k0``.

    The period is the smallest multiple of ``2 pi / k0`` with room for the
    envelope to decay below 1e-12, and ``n_points`` is the smallest power of
    two whose Nyquist wavenumber reaches ``oversample * 5 k0``.
    """
    if not 0.0 < eps < 1.0:
        raise GridError(f"eps must lie in (0, 1), got {eps}")
    if envelope_width <= 0:
        raise GridError("envelope_width must be positive")
    if oversample < 2:
        raise GridError("oversample must be at least 2")
    if k0 <= 0:
        raise GridError("k0 must be positive")
    w_cut = ENVELOPE_CUTOFF.get(envelope)
    if w_cut is None:
        raise GridError(f"unknown envelope kind {envelope!r}")
    p_min = 2.0 * envelope_width * w_cut / eps
    k0_index = math.ceil(p_min * k0 / (2.0 * math.pi) - 1e-9)
    period = 2.0 * math.pi * k0_index / k0
    dk = 2.0 * math.pi / period
    n_needed = 2.0 * oversample * 5.0 * k0 / dk
    n_points = 1 << max(4, math.ceil(math.log2(n_needed) - 1e-12))
    if n_points > max_points:
        raise GridError(f"grid needs {n_points} points, above the configured maximum {max_points}")
    return SpectralGrid(n_points, period, k0_index)


@dataclass
class SpectralField:
    grid: SpectralGrid
    coefficients: np.ndarray
    is_real: bool = False

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (self.grid.n_points,):
            raise GridError("coefficient array does not match the grid")

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, grid: SpectralGrid, is_real: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.n_points, dtype=complex), is_real)

    @classmethod
    def from_physical(cls, grid: SpectralGrid, values) -> "SpectralField":
        values = np.asarray(values)
        is_real = not np.iscomplexobj(values)
        return cls(grid, to_spectral(grid, values), is_real)

    @classmethod
    def mode(cls, grid: SpectralGrid, j: int, amplitude: complex = 1.0) -> "SpectralField":
        c = np.zeros(grid.n_points, dtype=complex)
        c[grid.slot(j)] = amplitude
        return cls(grid, c, False)

    # views ----------------------------------------------------------------
    def physical(self) -> np.ndarray:
        u = to_physical(self.grid, self.coefficients)
        return u.real if self.is_real else u

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients.copy(), self.is_real)

    def with_coefficients(self, c, is_real: Optional[bool] = None) -> "SpectralField":
        return SpectralField(self.grid, c, self.is_real if is_real is None else is_real)

    def hermitian_defect(self) -> float:
        c = self.coefficients
        scale = max(np.max(np.abs(c)), 1e-300)
        return float(np.max(np.abs(c - reflect_conj(c))) / scale)

    def symmetrized(self) -> "SpectralField":
        c = 0.5 * (self.coefficients + reflect_conj(self.coefficients))
        return SpectralField(self.grid, c, True)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField(self.grid, self.coefficients + other.coefficients, self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField(self.grid, self.coefficients - other.coefficients, self.is_real and other.is_real)

    def __mul__(self, scalar) -> "SpectralField":
        real = self.is_real and np.isrealobj(scalar)
        return SpectralField(self.grid, self.coefficients * scalar, real)

    __rmul__ = __mul__


@dataclass
class FieldPair:
    """The diagonalised pair ``(u_{-1}, u_1)``."""

    u_minus: SpectralField
    u_plus: SpectralField

    def __post_init__(self):
        _same_grid(self.u_minus, self.u_plus)

    @property
    def grid(self) -> SpectralGrid:
        return self.u_minus.grid

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "FieldPair":
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))

    def __add__(self, other: "FieldPair") -> "FieldPair":
        return FieldPair(self.u_minus + other.u_minus, self.u_plus + other.u_plus)

    def __sub__(self, other: "FieldPair") -> "FieldPair":
        return FieldPair(self.u_minus - other.u_minus, self.u_plus - other.u_plus)

    def __mul__(self, scalar) -> "FieldPair":
        return FieldPair(self.u_minus * scalar, self.u_plus * scalar)

    __rmul__ = __mul__

    def sum(self) -> SpectralField:
        return self.u_minus + self.u_plus

    def copy(self) -> "FieldPair":
        return FieldPair(self.u_minus.copy(), self.u_plus.copy())


def _same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise GridError("fields live on different grids")


# ---------------------------------------------------------------------------
# transforms


def _origin_phase(grid: SpectralGrid) -> np.ndarray:
    # x starts at -P/2, so exp(-i k_j x_0) = (-1)^j
    return np.where(grid.index % 2 == 0, 1.0, -1.0)


def to_spectral(grid: SpectralGrid, values) -> np.ndarray:
    values = np.asarray(values)
    return np.fft.fft(values) / grid.n_points * _origin_phase(grid)


def to_physical(grid: SpectralGrid, coefficients) -> np.ndarray:
    return np.fft.ifft(np.asarray(coefficients) * _origin_phase(grid)) * grid.n_points


def reflect_conj(c: np.ndarray) -> np.ndarray:
    """Coefficient array of the complex conjugate field: c'(k) = conj(c(-k))."""
    return np.conj(np.roll(c[::-1], 1))


# ---------------------------------------------------------------------------
# operators


def apply_multiplier(field: SpectralField, sym: DispersionSymbol, prefactor: complex = 1.0) -> SpectralField:
    """Multiply coefficients by ``prefactor * sym(k)``.

    With ``prefactor = 1j`` an odd real symbol maps real fields to real fields.
    """
    c = prefactor * sym.eval(field.grid.k) * field.coefficients
    real = field.is_real and prefactor == 1j
    return SpectralField(field.grid, c, real)


def dealias(field: SpectralField) -> SpectralField:
    """Zero every coefficient with |k| above two thirds of the Nyquist wavenumber."""
    mask = np.abs(field.grid.k) <= field.grid.dealias_cutoff
    return SpectralField(field.grid, np.where(mask, field.coefficients, 0.0), field.is_real)


def dealias_mask(grid: SpectralGrid) -> np.ndarray:
    return np.abs(grid.k) <= grid.dealias_cutoff


def product(a: SpectralField, b: SpectralField, dealiased: bool = True) -> SpectralField:
    """Pseudospectral product, truncated to the 2/3 band when ``dealiased``."""
    _same_grid(a, b)
    grid = a.grid
    ca, cb = a.coefficients, b.coefficients
    if dealiased:
        m = dealias_mask(grid)
        ca, cb = ca * m, cb * m
    w = to_physical(grid, ca) * to_physical(grid, cb)
    out = to_spectral(grid, w)
    if dealiased:
        out = out * dealias_mask(grid)
    return SpectralField(grid, out, a.is_real and b.is_real)


def _check_finite(field: SpectralField) -> None:
    if not np.all(np.isfinite(field.coefficients)):
        raise ValueError("field has non-finite coefficients")


def sobolev_weight(k, s: float) -> np.ndarray:
    return (1.0 + np.asarray(k) ** 2) ** s


def sobolev_norm(field: SpectralField, s: float = 0.0) -> float:
    """Discrete ``(sum |u_hat|^2 (1+k^2)^s dk)^(1/2)`` with the unitary transform."""
    if s < 0:
        raise ValueError("regularity index must be non-negative")
    _check_finite(field)
    c = field.coefficients
    return float(math.sqrt(field.grid.period * np.sum(np.abs(c) ** 2 * sobolev_weight(field.grid.k, s))))


def l1s_norm(field: SpectralField, s: float = 0.0) -> float:
    """Discrete ``sum |u_hat(k)| (1+k^2)^(s/2) dk`` with the 1/(2 pi) transform.

    This equals ``sum_j |c_j| (1+k_j^2)^(s/2)`` and bounds the C^s_b norm.
    """
    _check_finite(field)
    c = field.coefficients
    return float(np.sum(np.abs(c) * sobolev_weight(field.grid.k, 0.5 * s)))


def l2_inner(a: SpectralField, b: SpectralField) -> complex:
    """``integral a conj(b) dx`` over the box."""
    _same_grid(a, b)
    return complex(a.grid.period * np.vdot(b.coefficients, a.coefficients))


def derivative(field: SpectralField, order: int = 1) -> SpectralField:
    c = (1j * field.grid.k) ** order * field.coefficients
    return SpectralField(field.grid, c, field.is_real)


def boundary_magnitude(field: SpectralField, fraction: float = 0.02) -> float:
    """Largest |u| within ``fraction * P`` of the box edges."""
    u = np.abs(field.physical())
    x = field.grid.x
    edge = np.abs(x) >= 0.5 * field.grid.period * (1.0 - 2.0 * fraction)
    return float(np.max(u[edge]))
