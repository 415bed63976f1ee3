"""Error of the NLS approximation along full system runs, and its scaling in eps."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..analysis import NLSCoefficients, nls_coefficients
from ..approximation import PacketModel, gaussian_envelope, soliton_envelope, soliton_parameters, solve_nls
from ..solver import IntegratorConfig, SystemState, cfl_step, simulate
from ..spectral import make_grid, sobolev_norm
from ..symbols import DispersionSymbol
from .residual import FitError, fit_power_law


class StudyError(RuntimeError):
    pass


@dataclass
class ErrorSeries:
    times: list
    u_errors: list
    pair_errors: list

    @property
    def sup_u(self) -> float:
        return max(self.u_errors)

    @property
    def sup_pair(self) -> float:
        return max(self.pair_errors)


def error_vs_approximation(states, reference, s: float = 4.0, tol: float = 1e-9) -> ErrorSeries:
    """H^s distance between simulated states and reference approximations.

    ``reference`` is a list of Approximation objects sampled at the same times
    as ``states``.  Reports the undiagonalised ``u`` error and the error of the
    diagonal pair (combined as the Euclidean norm of both components).
    """
    if len(states) != len(reference):
        raise ValueError(f"{len(states)} states but {len(reference)} reference samples")
    times, eu, ep = [], [], []
    for st, ap in zip(states, reference):
        if abs(st.t - ap.t) > tol * max(1.0, abs(st.t)):
            raise ValueError(f"schedule mismatch: state at t={st.t}, reference at t={ap.t}")
        d = st.pair - ap.pair
        times.append(st.t)
        eu.append(sobolev_norm(d.sum(), s))
        ep.append(math.hypot(sobolev_norm(d.u_minus, s), sobolev_norm(d.u_plus, s)))
    return ErrorSeries(times, eu, ep)


@dataclass
class ConvergenceScenario:
    """One family of runs indexed by eps.

    The system starts from the corrected packet built with the full envelope
    and is compared against the leading-order NLS packet at every sample.
    """

    omega: DispersionSymbol
    rho: DispersionSymbol
    k0: float = 1.0
    amplitude: float = 0.15
    envelope: str = "sech"
    envelope_width: float = 1.0
    T0: float = 0.5
    s: float = 4.0
    oversample: float = 2.0
    n_samples: int = 50
    init_order: str = "corrected"
    delta: Optional[float] = None
    dt: Optional[float] = None
    dt_max: float = 1e-2
    cfl_safety: float = 0.1
    max_points: int = 2**20

    def coefficients(self) -> NLSCoefficients:
        return nls_coefficients(self.omega, self.rho, self.k0)

    def slow_width(self, coeffs: NLSCoefficients) -> float:
        if self.envelope == "sech":
            return 1.0 / soliton_parameters(coeffs, self.amplitude)[0]
        return self.envelope_width

    def initial_envelope(self, grid, eps, coeffs):
        if self.envelope == "sech":
            return soliton_envelope(grid, eps, coeffs, self.amplitude)
        return gaussian_envelope(grid, eps, coeffs, self.amplitude, self.envelope_width)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega.name,
            "rho": self.rho.name,
            "k0": self.k0,
            "amplitude": self.amplitude,
            "envelope": self.envelope,
            "envelope_width": self.envelope_width,
            "T0": self.T0,
            "s": self.s,
            "oversample": self.oversample,
            "n_samples": self.n_samples,
            "init_order": self.init_order,
            "delta": self.delta,
            "dt": self.dt,
            "dt_max": self.dt_max,
        }


@dataclass
class RunRecord:
    eps: float
    n_points: int
    dt: float
    n_steps: int
    runtime: float
    series: ErrorSeries


def run_scenario(sc: ConvergenceScenario, eps: float) -> RunRecord:
    coeffs = sc.coefficients()
    grid = make_grid(sc.k0, eps, sc.slow_width(coeffs), sc.oversample, sc.envelope, sc.max_points)
    A0 = sc.initial_envelope(grid, eps, coeffs)
    init = PacketModel(sc.omega, sc.rho, coeffs, grid, eps, sc.init_order, sc.delta).build(A0)
    lead = PacketModel(sc.omega, sc.rho, coeffs, grid, eps, "leading")
    amp = 2.0 * eps * float(np.max(np.abs(A0.A)))
    dt = sc.dt if sc.dt is not None else min(sc.dt_max, cfl_step(grid, sc.rho, amp, sc.cfl_safety))
    Ts = np.linspace(0.0, sc.T0, sc.n_samples + 1)[1:]
    nls_dt = min(1e-3, 0.05 / max(abs(coeffs.nu2) * float(np.max(np.abs(A0.A))) ** 2, 1e-12))
    envs = solve_nls(A0, coeffs, sc.T0, nls_dt, out_times=np.concatenate([[0.0], Ts]))
    t0 = time.perf_counter()
    res = simulate(SystemState(init.pair), sc.omega, sc.rho, sc.T0 / eps**2, IntegratorConfig(dt),
                   out_times=Ts / eps**2)
    runtime = time.perf_counter() - t0
    reference = [lead.build(A) for A in envs]
    series = error_vs_approximation(res.states, reference, sc.s)
    return RunRecord(eps, grid.n_points, dt, res.n_steps, runtime, series)


@dataclass
class ConvergenceReport:
    eps_values: list
    sup_errors: list
    fitted_slope: float
    fit_r2: float
    runtimes: list
    pair_sup_errors: list = field(default_factory=list)
    pair_slope: Optional[float] = None
    runs: list = field(default_factory=list)
    scenario: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "eps_values": self.eps_values,
            "sup_errors": self.sup_errors,
            "fitted_slope": self.fitted_slope,
            "fit_r2": self.fit_r2,
            "runtimes": self.runtimes,
            "pair_sup_errors": self.pair_sup_errors,
            "pair_slope": self.pair_slope,
            "runs": [
                {"eps": r.eps, "n_points": r.n_points, "dt": r.dt, "n_steps": r.n_steps, "runtime": r.runtime}
                for r in self.runs
            ],
            "scenario": self.scenario,
        }


def report_from_errors(eps_values: Sequence[float], sup_errors: Sequence[float], runtimes=None) -> ConvergenceReport:
    fit = fit_power_law(eps_values, sup_errors)
    return ConvergenceReport(list(eps_values), list(sup_errors), fit.slope, fit.r2,
                             list(runtimes) if runtimes is not None else [0.0] * len(eps_values))


def convergence_study(eps_list: Sequence[float], scenario: ConvergenceScenario) -> ConvergenceReport:
    """Sup-in-time H^s error for each eps and the fitted power of eps."""
    if len(set(eps_list)) < 2:
        raise FitError("convergence study needs at least two distinct eps values")
    runs = []
    for eps in eps_list:
        try:
            runs.append(run_scenario(scenario, eps))
        except Exception as exc:
            raise StudyError(f"run at eps={eps} failed: {exc}") from exc
    sup_u = [r.series.sup_u for r in runs]
    sup_p = [r.series.sup_pair for r in runs]
    rep = report_from_errors(eps_list, sup_u, [r.runtime for r in runs])
    rep.pair_sup_errors = sup_p
    rep.pair_slope = fit_power_law(eps_list, sup_p).slope
    rep.runs = runs
    rep.scenario = scenario.to_dict()
    return rep
