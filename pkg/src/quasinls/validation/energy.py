"""Weighted error variables and the modified energy built from the normal-form kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..approximation import WeightOperator, weight_apply
from ..spectral import FieldPair, SpectralField, SpectralGrid, derivative, l2_inner, sobolev_norm
from .kernels import SIGNS, BoundBilinear, KernelSetup, carrier_part, lattice_product, t_kernel

BETA = 2.5


@dataclass
class ErrorDecomposition:
    """``(u_-1, u_1) = eps^beta (theta R_-1, theta R_1) + eps Psi``."""

    R: FieldPair
    eps: float
    weight: WeightOperator
    beta: float = BETA

    @classmethod
    def from_solution(cls, u: FieldPair, eps_psi: FieldPair, eps: float, weight: WeightOperator,
                      beta: float = BETA) -> "ErrorDecomposition":
        if not eps > 0:
            raise ValueError("eps must be positive")
        d = u - eps_psi
        scale = eps ** (-beta)
        R = FieldPair(weight_apply(d.u_minus, weight, inverse=True) * scale,
                      weight_apply(d.u_plus, weight, inverse=True) * scale)
        return cls(R, eps, weight, beta)

    def reconstruct(self, eps_psi: FieldPair) -> FieldPair:
        s = self.eps**self.beta
        return FieldPair(weight_apply(self.R.u_minus, self.weight) * s + eps_psi.u_minus,
                         weight_apply(self.R.u_plus, self.weight) * s + eps_psi.u_plus)

    def component(self, j: int) -> SpectralField:
        return self.R.u_minus if j == -1 else self.R.u_plus


def _norm2(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0) ** 2


def _inner(a: SpectralField, b: SpectralField) -> float:
    return float(l2_inner(a, b).real)


@dataclass
class EnergyBreakdown:
    E0: float
    E_ell: float
    ell: int
    eps: float
    parts: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.E0 + self.E_ell

    def to_dict(self) -> dict:
        return {"E0": self.E0, "E_ell": self.E_ell, "total": self.total, "ell": self.ell, "eps": self.eps, **self.parts}


def closed_form_eps0(R: FieldPair, ell: int) -> float:
    """Energy with every eps-correction dropped."""
    return sum(0.5 * _norm2(derivative(r, ell)) + _norm2(r) for r in (R.u_minus, R.u_plus))


class EnergyOperators:
    """Kernels bound to one carrier field, reusable across many error draws."""

    def __init__(self, setup: KernelSetup, psi_c: SpectralField):
        self.setup = setup
        self.psi_c = psi_c
        grid = psi_c.grid
        self.n = {(j1, j2): BoundBilinear(setup, j1, j2, psi_c) for j1 in SIGNS for j2 in SIGNS}
        sq = {}
        for j4 in SIGNS:
            p = carrier_part(psi_c, j4, setup).coefficients
            sq[j4] = lattice_product(p, p, grid)
        self.sq = sq
        self.t = {(j1, j2, j3, j4): t_kernel(setup, j1, j2, j3, j4, grid.k)
                  for j1 in SIGNS for j2 in SIGNS for j3 in SIGNS for j4 in SIGNS}

    def trilinear(self, j1, j2, j3, j4, f: SpectralField) -> np.ndarray:
        t = self.t[(j1, j2, j3, j4)]
        if not np.any(t):
            return np.zeros(f.grid.n_points, dtype=complex)
        return t * lattice_product(self.sq[j4], f.coefficients, f.grid)


def modified_energy(R: ErrorDecomposition, psi_c: SpectralField, setup, ell: int,
                    eps: Optional[float] = None) -> EnergyBreakdown:
    """``E_ell + E_0`` with the eps-weighted bilinear and eps^2 trilinear corrections.

    ``E_ell = sum_j1 (1/2 |d^ell R_j1|^2 + eps sum_j2 <d^ell R_j1, d^ell theta^-1 N_j1j2(psi_c, R_j2)>)``
    and ``E_0 = sum_j |R_j + eps sum theta^-1 N + eps^2 sum theta^-1 T|^2``.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    eps = R.eps if eps is None else eps
    comps = {j: R.component(j) for j in SIGNS}
    if eps == 0:
        e_ell = sum(0.5 * _norm2(derivative(comps[j], ell)) for j in SIGNS)
        e0 = sum(_norm2(comps[j]) for j in SIGNS)
        return EnergyBreakdown(e0, e_ell, ell, 0.0, {"bilinear": 0.0, "check_shift": 0.0})
    if setup is None:
        raise ValueError("kernels are required for eps > 0")
    ops = setup if isinstance(setup, EnergyOperators) else EnergyOperators(setup, psi_c)
    w = R.weight
    e_ell = 0.0
    cross = 0.0
    e0 = 0.0
    for j1 in SIGNS:
        r1 = comps[j1]
        d1 = derivative(r1, ell)
        e_ell += 0.5 * _norm2(d1)
        check = r1.coefficients.copy()
        for j2 in SIGNS:
            nf = weight_apply(ops.n[(j1, j2)](comps[j2]), w, inverse=True)
            c = eps * _inner(d1, derivative(nf, ell))
            cross += c
            check = check + eps * nf.coefficients
            for j3 in SIGNS:
                for j4 in SIGNS:
                    tt = ops.trilinear(j1, j2, j3, j4, comps[j3])
                    check = check + eps**2 * w.values(r1.grid.k, inverse=True) * tt
        e0 += _norm2(SpectralField(r1.grid, check))
    e_ell += cross
    base0 = sum(_norm2(comps[j]) for j in SIGNS)
    return EnergyBreakdown(e0, e_ell, ell, eps, {"bilinear": cross, "check_shift": e0 - base0})


# ---------------------------------------------------------------------------
# equivalence with the Sobolev norm


def hl_norm(f: SpectralField, ell: int, kind: str = "split") -> float:
    """H^ell norm: ``split`` is ``(|f|^2 + |d^ell f|^2)^(1/2)``, ``bessel`` uses ``(1+k^2)^ell``."""
    if kind == "split":
        return math.sqrt(_norm2(f) + _norm2(derivative(f, ell)))
    if kind == "bessel":
        return sobolev_norm(f, ell)
    raise ValueError(f"unknown norm kind {kind!r}")


def energy_ratio(energy: float, R: FieldPair, ell: int, kind: str = "split") -> float:
    den = (hl_norm(R.u_minus, ell, kind) + hl_norm(R.u_plus, ell, kind)) ** 2
    return energy / den


def eps0_ratio_bounds(ell: int, kind: str = "split", k_max: float = 1e3) -> tuple[float, float]:
    """Exact range of the eps=0 ratio over all nonzero pairs.

    Per component the energy density over the norm density is ``g(k)``; the
    squared sum of the two norms lies between the sum of squares and twice it,
    so the ratio spans ``[min g / 2, max g]``.
    """
    if kind == "split":
        return 0.25, 1.0
    k = np.linspace(0.0, k_max, 200001)
    g = (0.5 * k ** (2 * ell) + 1.0) / (1.0 + k**2) ** ell
    return float(g.min()) / 2.0, float(g.max())


@dataclass
class EquivalenceStats:
    eps: float
    ratios: list
    ratios_bessel: list

    @property
    def min_ratio(self) -> float:
        return min(self.ratios)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    def constant(self) -> float:
        """Smallest ``C`` with every ratio in ``[1/C, C]``."""
        return max(self.max_ratio, 1.0 / self.min_ratio)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "C": self.constant(),
            "min_ratio_bessel": min(self.ratios_bessel),
            "max_ratio_bessel": max(self.ratios_bessel),
        }


def random_error_pair(grid: SpectralGrid, rng: np.random.Generator, kappa_range=(0.25, 4.0),
                      amp_range=(0.1, 10.0)) -> FieldPair:
    """Two independent smooth real fields.

    Each has Gaussian-distributed coefficients under a Gaussian spectral
    envelope of random width, scaled by a random amplitude (both log-uniform).
    """
    comps = []
    k = grid.k
    kmax = 0.5 * grid.dealias_cutoff
    for _ in range(2):
        kappa = math.exp(rng.uniform(math.log(kappa_range[0]), math.log(kappa_range[1])))
        amp = math.exp(rng.uniform(math.log(amp_range[0]), math.log(amp_range[1])))
        c = (rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points))
        c = c * np.exp(-0.5 * (k / kappa) ** 2) * (np.abs(k) <= kmax)
        c = 0.5 * (c + np.conj(np.roll(c[::-1], 1)))
        c[grid.n_points // 2] = 0.0
        f = SpectralField(grid, c, True)
        comps.append(f * (amp / max(sobolev_norm(f, 0.0), 1e-300)))
    return FieldPair(*comps)


def energy_equivalence_check(psi_by_eps: dict, setups: dict, n_draws: int = 50, ell: int = 4, seed: int = 0,
                             kind: str = "split") -> list[EquivalenceStats]:
    """Energy-to-norm ratios over a seeded random ensemble for each eps.

    ``psi_by_eps`` maps eps to the band-limited carrier field; ``setups`` maps
    eps to its KernelSetup.  The same draw sequence is used for every eps.
    """
    out = []
    for eps in sorted(psi_by_eps, reverse=True):
        psi = psi_by_eps[eps]
        setup = setups[eps]
        ops = EnergyOperators(setup, psi)
        rng = np.random.default_rng(seed)
        ratios, ratios_b = [], []
        for _ in range(n_draws):
            R = random_error_pair(psi.grid, rng)
            dec = ErrorDecomposition(R, eps, setup.weight)
            e = modified_energy(dec, psi, ops, ell).total
            ratios.append(energy_ratio(e, R, ell, "split"))
            ratios_b.append(energy_ratio(e, R, ell, "bessel"))
        out.append(EquivalenceStats(eps, ratios, ratios_b))
    return out
