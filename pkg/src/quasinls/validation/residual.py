"""Residual of an approximation substituted into the diagonal system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..approximation import Approximation, EnvelopeState, PacketModel, nls_step, solve_nls
from ..spectral import FieldPair, SpectralField, l1s_norm, product, sobolev_norm
from ..symbols import DispersionSymbol


class FitError(ValueError):
    pass


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    r2: float

    def predict(self, eps) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(eps, dtype=float) ** self.slope


def fit_power_law(eps_values: Sequence[float], values: Sequence[float]) -> PowerLawFit:
    """Least-squares line through ``(log eps, log value)``."""
    x = np.log(np.asarray(eps_values, dtype=float))
    y = np.asarray(values, dtype=float)
    if x.size < 2 or np.unique(x).size < 2:
        raise FitError("a power-law fit needs at least two distinct eps values")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitError("power-law fit needs positive finite values")
    y = np.log(y)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2)


@dataclass
class ResidualValue:
    t: float
    fields: FieldPair
    hs: tuple[float, float]
    l1s: tuple[float, float]
    s: float

    @property
    def hs_total(self) -> float:
        return math.hypot(*self.hs)

    @property
    def l1s_total(self) -> float:
        return self.l1s[0] + self.l1s[1]


def residual_fields(pair: FieldPair, d_pair: FieldPair, omega: DispersionSymbol, rho: DispersionSymbol) -> FieldPair:
    """``Res_{-+1} = d_t Psi_{-+1} +- i omega Psi_{-+1} +- (i/2) rho (Psi_-1 + Psi_1)^2``."""
    if pair.grid != d_pair.grid:
        raise ValueError("approximation and its time derivative live on different grids")
    grid = pair.grid
    k = grid.k
    w = omega.eval(k)
    s = pair.sum()
    q = rho.eval(k) * product(s, s, dealiased=False).coefficients
    rm = d_pair.u_minus.coefficients + 1j * w * pair.u_minus.coefficients + 0.5j * q
    rp = d_pair.u_plus.coefficients - 1j * w * pair.u_plus.coefficients - 0.5j * q
    return FieldPair(SpectralField(grid, rm, True), SpectralField(grid, rp, True))


def residual(approx: Approximation, d_pair: FieldPair, omega: DispersionSymbol, rho: DispersionSymbol,
             s: float = 4.0) -> ResidualValue:
    """H^s and L^1(s) norms of the residual of ``approx`` given its time derivative."""
    res = residual_fields(approx.pair, d_pair, omega, rho)
    hs = (sobolev_norm(res.u_minus, s), sobolev_norm(res.u_plus, s))
    l1 = (l1s_norm(res.u_minus, s), l1s_norm(res.u_plus, s))
    return ResidualValue(approx.t, res, hs, l1, s)


def packet_residual(model: PacketModel, A: EnvelopeState, s: float = 4.0) -> ResidualValue:
    """Residual with the analytic time derivative (NLS right side through the chain rule)."""
    approx, d_pair = model.build(A, with_derivative=True)
    return residual(approx, d_pair, model.omega, model.rho, s)


def centered_derivative(model: PacketModel, A: EnvelopeState, dt_res: float = 1e-4, substeps: int = 4) -> FieldPair:
    """``(Psi(t + h) - Psi(t - h)) / 2h`` with the envelope moved by ``+-eps^2 h`` in slow time."""
    hT = model.eps**2 * dt_res
    plus = nls_step(A, model.coeffs, hT / substeps, substeps)
    minus = nls_step(A, model.coeffs, -hT / substeps, substeps)
    return (model.build(plus).pair - model.build(minus).pair) * (0.5 / dt_res)


@dataclass
class ResidualStudy:
    eps_values: list
    order: str
    s: float
    sup_hs: list
    sup_l1s: list
    hs_fit: Optional[PowerLawFit]
    l1s_fit: Optional[PowerLawFit]
    n_samples: int
    series: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def fit(f):
            return None if f is None else {"slope": f.slope, "intercept": f.intercept, "r2": f.r2}

        return {
            "order": self.order,
            "s": self.s,
            "eps_values": list(self.eps_values),
            "sup_hs": list(self.sup_hs),
            "sup_l1s": list(self.sup_l1s),
            "hs_fit": fit(self.hs_fit),
            "l1s_fit": fit(self.l1s_fit),
            "n_samples": self.n_samples,
        }


def sup_residual(model: PacketModel, A0: EnvelopeState, T0: float, n_samples: int = 20, s: float = 4.0,
                 nls_dt: Optional[float] = None):
    """Max of the residual norms over ``n_samples`` equally spaced slow times in ``[0, T0]``.

    Returns ``(sup_hs, sup_l1s, rows)``.
    """
    if n_samples < 2:
        raise ValueError("need at least two time samples")
    amp = float(np.max(np.abs(A0.A)))
    if nls_dt is None:
        nls_dt = min(1e-3, 0.05 / max(abs(model.coeffs.nu2) * amp**2, 1e-12))
    Ts = np.linspace(0.0, T0, n_samples)
    states = solve_nls(A0, model.coeffs, T0, nls_dt, out_times=Ts)
    rows = []
    for A in states:
        r = packet_residual(model, A, s)
        rows.append({"T": A.T, "t": r.t, "hs": r.hs_total, "l1s": r.l1s_total})
    return max(r["hs"] for r in rows), max(r["l1s"] for r in rows), rows


def residual_scaling_study(builder: Callable[[float], tuple[PacketModel, EnvelopeState]], eps_list: Sequence[float],
                           s: float = 4.0, T0: float = 0.5, n_samples: int = 20, order: str = "") -> ResidualStudy:
    """Fit the exponent of the sup-in-time residual over ``eps_list``.

    ``builder(eps)`` returns the packet model and the initial envelope for one eps.
    """
    if len(eps_list) < 3:
        raise FitError("residual scaling needs at least three eps values")
    sup_hs, sup_l1 = [], []
    series = []
    for eps in eps_list:
        model, A0 = builder(eps)
        hs, l1, rows = sup_residual(model, A0, T0, n_samples, s)
        sup_hs.append(hs)
        sup_l1.append(l1)
        series.append({"eps": eps, "rows": rows})
        order = order or model.order
    return ResidualStudy(list(eps_list), order, s, sup_hs, sup_l1, fit_power_law(eps_list, sup_hs),
                         fit_power_law(eps_list, sup_l1), n_samples, series)
