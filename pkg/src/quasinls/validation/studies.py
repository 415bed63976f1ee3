"""Ready-made studies shared by the command line and the acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..analysis import nls_coefficients
from ..approximation import (PacketModel, WeightOperator, bandlimit, carrier_field, default_weight_mode,
                             gaussian_envelope, soliton_envelope, soliton_parameters)
from ..spectral import SpectralField, SpectralGrid, make_grid, sobolev_norm
from .convergence import ConvergenceReport, ConvergenceScenario, convergence_study
from .energy import ErrorDecomposition, closed_form_eps0, energy_equivalence_check, modified_energy, random_error_pair
from .kernels import SIGNS, KernelSetup, adjoint_discrepancy, nf_identity_residual
from .residual import residual_scaling_study

RESIDUAL_GAIN = 0.8
ENERGY_C = 4.0
NF_TOL = 1e-8
ADJOINT_TOL = 1e-10


@dataclass
class StudyResult:
    name: str
    passed: bool
    data: dict
    rows: list = field(default_factory=list)


def convergence(omega, rho, k0=1.0, eps_list=(0.3, 0.2, 0.14, 0.1), amplitude=0.15, T0=0.5, s=4.0,
                oversample=2.0, n_samples=50, dt=None, slope_range=(1.3, np.inf)) -> tuple[StudyResult, ConvergenceReport]:
    sc = ConvergenceScenario(omega, rho, k0, amplitude=amplitude, T0=T0, s=s, oversample=oversample,
                             n_samples=n_samples, dt=dt)
    rep = convergence_study(list(eps_list), sc)
    ok = slope_range[0] <= rep.fitted_slope <= slope_range[1]
    rows = []
    for r in rep.runs:
        for t, eu, ep in zip(r.series.times, r.series.u_errors, r.series.pair_errors):
            rows.append({"eps": r.eps, "t": t, "u_error": eu, "pair_error": ep})
    data = rep.to_dict()
    return StudyResult("convergence", ok, data, rows), rep


def residual(omega, rho, k0=1.0, eps_list=(0.2, 0.1, 0.05), width=40.0, delta=None, s=4.0, T0=0.5,
             n_samples=20, oversample=2.0) -> StudyResult:
    """Leading and corrected residual exponents for a Gaussian envelope of slow width ``width``."""
    coeffs = nls_coefficients(omega, rho, k0)
    delta = k0 / 32.0 if delta is None else delta
    out = {}
    rows = []
    for order in ("leading", "corrected"):
        def builder(eps, order=order):
            g = make_grid(k0, eps, width, oversample, "gaussian")
            return PacketModel(omega, rho, coeffs, g, eps, order, delta), gaussian_envelope(g, eps, coeffs, 1.0, width)

        st = residual_scaling_study(builder, list(eps_list), s, T0, n_samples, order)
        out[order] = st.to_dict()
        for item in st.series:
            for r in item["rows"]:
                rows.append({"order": order, "eps": item["eps"], **r})
    gain_hs = out["corrected"]["hs_fit"]["slope"] - out["leading"]["hs_fit"]["slope"]
    gain_l1 = out["corrected"]["l1s_fit"]["slope"] - out["leading"]["l1s_fit"]["slope"]
    data = {"width": width, "delta": delta, "T0": T0, **out, "gain_hs": gain_hs, "gain_l1s": gain_l1}
    return StudyResult("residual", gain_hs >= RESIDUAL_GAIN, data, rows)


def _carrier(omega, rho, k0, eps, amplitude, delta, oversample):
    coeffs = nls_coefficients(omega, rho, k0)
    b, _ = soliton_parameters(coeffs, amplitude)
    g = make_grid(k0, eps, 1.0 / b, oversample)
    A = bandlimit(soliton_envelope(g, eps, coeffs, amplitude), delta)
    return carrier_field(A, coeffs, 0.0)


def energy(omega, rho, k0=1.0, eps_list=(0.1, 0.05), n_draws=50, ell=4, seed=0, amplitude=0.5, delta=None,
           oversample=2.0, weight_mode: Optional[str] = None) -> StudyResult:
    delta = k0 / 32.0 if delta is None else delta
    mode = weight_mode or default_weight_mode(omega, k0)
    psis, setups = {}, {}
    for eps in eps_list:
        psis[eps] = _carrier(omega, rho, k0, eps, amplitude, delta, oversample)
        setups[eps] = KernelSetup(omega, rho, k0, delta, WeightOperator(delta, eps, mode))
    stats = energy_equivalence_check(psis, setups, n_draws, ell, seed)
    # eps = 0 reduction on the same draws
    grid = psis[max(eps_list)].grid
    rng = np.random.default_rng(seed)
    gap = 0.0
    for _ in range(n_draws):
        R = random_error_pair(grid, rng)
        dec = ErrorDecomposition(R, 0.0, WeightOperator(delta, 1.0, "identity"))
        e = modified_energy(dec, psis[max(eps_list)], None, ell, eps=0.0).total
        ref = closed_form_eps0(R, ell)
        gap = max(gap, abs(e - ref) / ref)
    C = max(s.constant() for s in stats)
    rows = []
    for st in stats:
        for i, (r, rb) in enumerate(zip(st.ratios, st.ratios_bessel)):
            rows.append({"eps": st.eps, "draw": i, "ratio": r, "ratio_bessel": rb})
    data = {"per_eps": [s.to_dict() for s in stats], "C": C, "eps0_relative_gap": gap, "weight_mode": mode,
            "n_draws": n_draws, "ell": ell, "seed": seed}
    return StudyResult("energy", C <= ENERGY_C and gap <= 1e-12, data, rows)


def random_band_field(grid: SpectralGrid, rng: np.random.Generator, mask: np.ndarray) -> SpectralField:
    c = (rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)) * mask
    c = 0.5 * (c + np.conj(np.roll(c[::-1], 1)))
    c[grid.n_points // 2] = 0.0
    return SpectralField(grid, c, True)


def nf_identity(omega, rho, k0=1.0, eps=0.1, delta=None, n_inputs=20, seed=0, n_points=1024,
                periods=64, weight_mode: Optional[str] = None) -> StudyResult:
    """Normal-form identity and adjoint symmetry on random band-limited real inputs.

    The identity residual is reported relative to ``|f|_{H^{deg rho + 1}}``.
    """
    delta = k0 / 32.0 if delta is None else delta
    mode = weight_mode or default_weight_mode(omega, k0)
    grid = SpectralGrid(n_points, 2.0 * np.pi * periods / k0, periods)
    setup = KernelSetup(omega, rho, k0, delta, WeightOperator(delta, eps, mode))
    rng = np.random.default_rng(seed)
    band = np.abs(grid.k) <= 0.5 * grid.k_nyquist
    window = setup.chi_c(grid.k)
    worst_id = {}
    worst_adj = {}
    rows = []
    s_norm = rho.degree + 1.0
    for i in range(n_inputs):
        psi = random_band_field(grid, rng, window)
        f = random_band_field(grid, rng, band)
        g = random_band_field(grid, rng, band)
        for j1 in SIGNS:
            for j2 in SIGNS:
                rel = nf_identity_residual(setup, j1, j2, psi, f) / sobolev_norm(f, s_norm)
                adj = adjoint_discrepancy(setup, j1, j2, psi, f, g)
                key = f"{j1},{j2}"
                worst_id[key] = max(worst_id.get(key, 0.0), rel)
                worst_adj[key] = max(worst_adj.get(key, 0.0), adj)
                rows.append({"draw": i, "j1": j1, "j2": j2, "identity_rel": rel, "adjoint_rel": adj})
    ok_id = max(worst_id.values()) < NF_TOL
    ok_adj = max(worst_adj.values()) < ADJOINT_TOL
    data = {"identity_max": worst_id, "adjoint_max": worst_adj, "identity_pass": ok_id, "adjoint_pass": ok_adj,
            "n_inputs": n_inputs, "seed": seed, "grid": grid.to_dict(), "weight_mode": mode}
    return StudyResult("nf-identity", ok_id and ok_adj, data, rows)
