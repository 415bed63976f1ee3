"""Normal-form kernels acting on lattice fields.

The bilinear kernel

    n_{j1 j2}(k, k-m, m) = rho(k) theta_inf(m) chi_c(k-m) / (omega(k) - j1 j2 omega(m) + j1 omega(k-m))

is applied as a discrete convolution in which the first argument is confined
to the carrier windows ``chi_c``, so the cost is the grid size times the
number of lattice points in the windows.  Convolutions never wrap around the
lattice, and the unpaired Nyquist mode ``-n/2`` of every output is dropped so
real inputs give real outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..approximation import WeightOperator
from ..spectral import SpectralField, SpectralGrid, l2_inner, sobolev_norm
from ..symbols import DispersionSymbol


class KernelSingularity(RuntimeError):
    pass


SIGNS = (-1, 1)
GUARD = 1e-6


@dataclass(frozen=True)
class KernelSetup:
    omega: DispersionSymbol
    rho: DispersionSymbol
    k0: float
    delta: float
    weight: WeightOperator

    def chi_c(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        tol = 1e-12 * self.k0
        return (np.abs(np.abs(k) - self.k0) <= self.delta + tol).astype(float)

    def p0(self, k) -> np.ndarray:
        return (np.abs(np.asarray(k, dtype=float)) <= self.delta * (1 + 1e-12)).astype(float)

    def theta_inf(self, m) -> np.ndarray:
        # the mean mode is always excluded: omega(0) = 0 on the lattice even when omega(0+) != 0
        m = np.asarray(m, dtype=float)
        return np.where(m == 0.0, 0.0, self.weight.values(m, truncated=True))

    def guard(self, k) -> np.ndarray:
        return GUARD * (1.0 + np.abs(k)) ** self.omega.degree


def n_kernel(setup: KernelSetup, j1: int, j2: int, k, l, m) -> np.ndarray:
    """``n_{j1 j2}(k, l, m)`` with ``l = k - m``; zero where the numerator vanishes."""
    k, l, m = (np.asarray(a, dtype=float) for a in (k, l, m))
    num = setup.rho.eval(k) * setup.theta_inf(m) * setup.chi_c(l)
    den = setup.omega.eval(k) - j1 * j2 * setup.omega.eval(m) + j1 * setup.omega.eval(l)
    live = num != 0.0
    bad = live & (np.abs(den) < setup.guard(k))
    if np.any(bad):
        i = np.flatnonzero(bad.ravel())[0]
        kb, lb = np.broadcast_to(k, bad.shape).ravel()[i], np.broadcast_to(l, bad.shape).ravel()[i]
        raise KernelSingularity(
            f"kernel n_({j1},{j2}) has a resonant denominator at k={kb:.6g}, k-m={lb:.6g}; check the analysis report")
    return np.where(live, num / np.where(live, den, 1.0), 0.0)


def n_adjoint_kernel(setup: KernelSetup, j1: int, j2: int, k, l, m) -> np.ndarray:
    """Kernel of the adjoint in the last slot: ``n(-m, k-m, -k)``."""
    return n_kernel(setup, j1, j2, -np.asarray(m, dtype=float), l, -np.asarray(k, dtype=float))


def _nyquist(grid: SpectralGrid) -> int:
    return grid.n_points // 2


def window_offsets(grid: SpectralGrid, setup: KernelSetup) -> np.ndarray:
    """Lattice indices inside the carrier windows."""
    idx = grid.index
    return np.sort(idx[setup.chi_c(grid.k) > 0])


def _shift(c: np.ndarray, grid: SpectralGrid, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``c[j - s]`` for every lattice index ``j`` (zero when ``j - s`` is off the lattice)."""
    idx = grid.index
    src = idx - s
    ok = (src >= -grid.n_points // 2) & (src < grid.n_points // 2)
    out = np.zeros_like(c)
    out[ok] = c[src[ok] % grid.n_points]
    return out, ok


def bilinear_apply(kernel: Callable, setup: KernelSetup, h: SpectralField, f: SpectralField) -> SpectralField:
    """``out(k) = sum_m kernel(k, k-m, m) h(k-m) f(m)`` with ``k - m`` in the windows."""
    if h.grid != f.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    k = grid.k
    out = np.zeros(grid.n_points, dtype=complex)
    hc = h.coefficients
    for s in window_offsets(grid, setup):
        hs = hc[s % grid.n_points]
        if hs == 0:
            continue
        fs, ok = _shift(f.coefficients, grid, s)
        l = s * grid.dk
        kern = kernel(k[ok], l, k[ok] - l)
        out[ok] += kern * hs * fs[ok]
    out[_nyquist(grid)] = 0.0
    return SpectralField(grid, out, h.is_real and f.is_real)


class BoundBilinear:
    """``f -> N_{j1 j2}(psi_c, f)`` with the kernel samples precomputed for repeated use."""

    def __init__(self, setup: KernelSetup, j1: int, j2: int, psi_c: SpectralField):
        _check_signs(j1, j2)
        grid = psi_c.grid
        self.grid = grid
        self.is_real = psi_c.is_real
        k = grid.k
        self.terms = []
        for s in window_offsets(grid, setup):
            hs = psi_c.coefficients[s % grid.n_points]
            if hs == 0:
                continue
            _, ok = _shift(np.zeros(grid.n_points), grid, s)
            l = s * grid.dk
            self.terms.append((s, ok, n_kernel(setup, j1, j2, k[ok], l, k[ok] - l) * hs))

    def __call__(self, f: SpectralField) -> SpectralField:
        if f.grid != self.grid:
            raise ValueError("fields live on different grids")
        out = np.zeros(self.grid.n_points, dtype=complex)
        for s, ok, coef in self.terms:
            fs, _ = _shift(f.coefficients, self.grid, s)
            out[ok] += coef * fs[ok]
        out[_nyquist(self.grid)] = 0.0
        return SpectralField(self.grid, out, self.is_real and f.is_real)


def nf_apply(setup: KernelSetup, j1: int, j2: int, psi_c: SpectralField, f: SpectralField) -> SpectralField:
    """``N_{j1 j2}(psi_c, f)``."""
    _check_signs(j1, j2)
    return bilinear_apply(lambda k, l, m: n_kernel(setup, j1, j2, k, l, m), setup, psi_c, f)


def nf_adjoint_apply(setup: KernelSetup, j1: int, j2: int, h: SpectralField, f: SpectralField) -> SpectralField:
    """``N*_{j1 j2}(h, f)`` with ``<f, N(h, g)> = <g, N*(h, f)>`` for real fields."""
    _check_signs(j1, j2)
    return bilinear_apply(lambda k, l, m: n_adjoint_kernel(setup, j1, j2, k, l, m), setup, h, f)


def _check_signs(*js):
    for j in js:
        if j not in SIGNS:
            raise ValueError(f"sign indices must be -1 or 1, got {j}")


def lattice_product(a: np.ndarray, b: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Non-wrapping lattice convolution of two coefficient arrays, truncated to the grid.

    Computed by zero-padding to twice the size so no aliasing occurs.
    """
    n = grid.n_points
    idx = grid.index
    big = 2 * n
    pa = np.zeros(big, dtype=complex)
    pb = np.zeros(big, dtype=complex)
    pa[idx % big] = a
    pb[idx % big] = b
    conv = np.fft.fft(np.fft.ifft(pa) * np.fft.ifft(pb)) * big
    out = conv[idx % big]
    out[_nyquist(grid)] = 0.0
    return out


def nf_identity_residual(setup: KernelSetup, j1: int, j2: int, psi_c: SpectralField, f: SpectralField) -> float:
    """L2 norm of ``-j1 i w N(psi, f) - N(i w psi, f) + j2 N(psi, i w f) + j1 i rho (psi theta_inf f)``."""
    _check_signs(j1, j2)
    grid = f.grid
    k = grid.k
    w = setup.omega.eval(k)
    iw_psi = SpectralField(grid, 1j * w * psi_c.coefficients, psi_c.is_real)
    iw_f = SpectralField(grid, 1j * w * f.coefficients, f.is_real)
    lhs = (-j1 * 1j * w * nf_apply(setup, j1, j2, psi_c, f).coefficients
           - nf_apply(setup, j1, j2, iw_psi, f).coefficients
           + j2 * nf_apply(setup, j1, j2, psi_c, iw_f).coefficients)
    tf = setup.theta_inf(k) * f.coefficients
    rhs = -j1 * 1j * setup.rho.eval(k) * lattice_product(psi_c.coefficients, tf, grid)
    return sobolev_norm(SpectralField(grid, lhs - rhs), 0.0)


def adjoint_discrepancy(setup: KernelSetup, j1: int, j2: int, h: SpectralField, f: SpectralField, g: SpectralField) -> float:
    """Relative gap between ``<f, N(h, g)>`` and ``<g, N*(h, f)>``."""
    a = l2_inner(f, nf_apply(setup, j1, j2, h, g))
    b = l2_inner(g, nf_adjoint_apply(setup, j1, j2, h, f))
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


# ---------------------------------------------------------------------------
# dense oracles


def dense_matrix(apply: Callable[[SpectralField], SpectralField], grid: SpectralGrid, is_real: bool = False) -> np.ndarray:
    """Matrix of a linear map on coefficient vectors, column by column."""
    n = grid.n_points
    M = np.zeros((n, n), dtype=complex)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        M[:, j] = apply(SpectralField(grid, e, is_real)).coefficients
    return M


def nf_dense(setup: KernelSetup, j1: int, j2: int, psi_c: SpectralField) -> np.ndarray:
    """Direct construction ``M[k, m] = n(k, k-m, m) psi(k-m)`` over all lattice pairs."""
    grid = psi_c.grid
    idx = grid.index
    n = grid.n_points
    M = np.zeros((n, n), dtype=complex)
    half = n // 2
    for a in range(n):
        for b in range(n):
            l = idx[a] - idx[b]
            if not -half <= l < half:
                continue
            c = psi_c.coefficients[l % n]
            if c == 0:
                continue
            k, m = idx[a] * grid.dk, idx[b] * grid.dk
            M[a, b] = n_kernel(setup, j1, j2, k, l * grid.dk, m) * c
    M[_nyquist(grid)] = 0.0
    return M


def operator_norm(M: np.ndarray, grid: SpectralGrid, s_in: float = 0.0, s_out: float = 0.0) -> float:
    """Norm of ``M`` from H^{s_in} to H^{s_out} in the unitary lattice norms."""
    k = grid.k
    win = (1.0 + k**2) ** (-0.5 * s_in)
    wout = (1.0 + k**2) ** (0.5 * s_out)
    return float(np.linalg.norm(wout[:, None] * M * win[None, :], 2))


# ---------------------------------------------------------------------------
# trilinear term


def t_kernel(setup: KernelSetup, j1: int, j2: int, j3: int, j4: int, k) -> np.ndarray:
    """``t_{j1 j2 j3 j4}(k)``; identically zero in identity weight mode."""
    _check_signs(j1, j2, j3, j4)
    k = np.asarray(k, dtype=float)
    if setup.weight.mode == "identity":
        return np.zeros_like(k)
    k0 = setup.k0
    p0 = setup.p0(k)
    m = k - j4 * k0
    nn = n_kernel(setup, j1, j2, k, np.full_like(k, j4 * k0), m)
    num = -j2 * p0 * nn * setup.rho.eval(m)
    den = -j1 * setup.omega.eval(k) - 2.0 * setup.omega.eval(j4 * k0) + j3 * setup.omega.eval(k - 2 * j4 * k0)
    live = num != 0.0
    if np.any(live & (np.abs(den) < setup.guard(k))):
        raise KernelSingularity(f"kernel t_({j1},{j2},{j3},{j4}) has a resonant denominator near k=0")
    return np.where(live, num / np.where(live, den, 1.0), 0.0)


def carrier_part(psi_c: SpectralField, j: int, setup: KernelSetup) -> SpectralField:
    """Part of ``psi_c`` in the window around ``j k0``."""
    k = psi_c.grid.k
    mask = (np.abs(k - j * setup.k0) <= setup.delta * (1 + 1e-12))
    return SpectralField(psi_c.grid, np.where(mask, psi_c.coefficients, 0.0), False)


def trilinear_apply(setup: KernelSetup, j1: int, j2: int, j3: int, j4: int, psi_c: SpectralField,
                    f: SpectralField) -> SpectralField:
    """``T_{j1 j2 j3 j4}(psi_j4, psi_j4, f)(k) = t(k) FT(psi_j4^2 f)(k)``."""
    grid = f.grid
    t = t_kernel(setup, j1, j2, j3, j4, grid.k)
    if not np.any(t):
        return SpectralField.zeros(grid, f.is_real)
    p = carrier_part(psi_c, j4, setup).coefficients
    sq = lattice_product(p, p, grid)
    return SpectralField(grid, t * lattice_product(sq, f.coefficients, grid), False)


def trilinear_dense(setup: KernelSetup, j1: int, j2: int, j3: int, j4: int, psi_c: SpectralField) -> np.ndarray:
    """Direct matrix ``M[k, m] = t(k) q(k - m)`` with ``q`` the coefficients of ``psi_j4^2``."""
    grid = psi_c.grid
    n = grid.n_points
    idx = grid.index
    p = carrier_part(psi_c, j4, setup).coefficients
    # q by explicit double sum over the window
    q = np.zeros(n, dtype=complex)
    nz = np.flatnonzero(p)
    half = n // 2
    for a in nz:
        for b in nz:
            s = idx[a] + idx[b]
            if -half < s < half:
                q[s % n] += p[a] * p[b]
    t = t_kernel(setup, j1, j2, j3, j4, grid.k)
    M = np.zeros((n, n), dtype=complex)
    for a in range(n):
        if t[a] == 0 or a == half:
            continue
        for b in range(n):
            d = idx[a] - idx[b]
            if -half <= d < half:
                M[a, b] = t[a] * q[d % n]
    return M
