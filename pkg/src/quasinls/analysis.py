"""Non-resonance conditions, resonance roots and NLS coefficients."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .symbols import DispersionSymbol, eval_derivative

log = logging.getLogger(__name__)

NEAR_RESONANCE_WARN = 1e-3
MAX_SCAN_SAMPLES = 10**7


class ConditionError(ValueError):
    """A denominator in the NLS coefficients vanishes."""


def d0(sym: DispersionSymbol, n: int = 1, step: Optional[float] = None) -> float:
    """One-sided derivative at 0^+."""
    return float(eval_derivative(sym, 0.0, n, side="+", step=step))


@dataclass
class ConditionEntry:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ConditionReport:
    k0: float
    entries: list = field(default_factory=list)
    nr1_margins: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __getitem__(self, name: str) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "k0": self.k0,
            "all_pass": self.all_pass,
            "entries": [asdict(e) for e in self.entries],
            "nr1_margins": {str(m): v for m, v in self.nr1_margins.items()},
            "warnings": list(self.warnings),
        }


def check_conditions(
    omega: DispersionSymbol,
    rho: DispersionSymbol,
    k0: float,
    tol: float = 1e-10,
    warn_below: float = NEAR_RESONANCE_WARN,
    scan_k_max: Optional[float] = 20.0,
    scan_samples: int = 20001,
) -> ConditionReport:
    """Evaluate the derivation and non-resonance conditions at ``k0``.

    Margins are absolute distances; a condition passes when its margin
    exceeds ``tol``.  Margins below ``warn_below`` are flagged as near
    resonances.  Unless ``scan_k_max`` is None the resonance set on
    ``|k| <= scan_k_max`` is also required to be ``{0 (trivial), +-k0}``.
    """
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    rep = ConditionReport(k0=k0)
    w0 = omega.eval(k0)
    w1 = float(eval_derivative(omega, k0, 1))
    w2 = float(eval_derivative(omega, k0, 2))
    w0p = omega.limit_zero_plus
    dw0 = d0(omega)
    rho0 = rho.limit_zero_plus

    rep.entries.append(ConditionEntry("omega_pp_nonzero", abs(w2) > tol, abs(w2), "omega''(k0) != 0"))

    cg_margin = min(abs(w1 - dw0), abs(w1 + dw0))
    alt_a = cg_margin > tol and abs(rho0) <= tol
    alt_b = abs(w0p) > tol
    rep.entries.append(
        ConditionEntry(
            "derivation_alternative",
            alt_a or alt_b,
            max(min(cg_margin, 1.0 if abs(rho0) <= tol else 0.0), abs(w0p)),
            f"group velocity alternative={alt_a} (margin {cg_margin:.3g}, rho(0+)={rho0:.3g}); "
            f"omega(0+) alternative={alt_b} (omega(0+)={w0p:.3g})",
        )
    )

    nr1_ok = True
    for m in (2, 3, 4, 5, -2, -3, -4, -5):
        wm = omega.eval(m * k0)
        margin = min(abs(m * w0 - wm), abs(m * w0 + wm))
        rep.nr1_margins[m] = margin
        nr1_ok &= margin > tol
    rep.entries.append(ConditionEntry("nr1", nr1_ok, min(rep.nr1_margins.values()), "m omega(k0) != +-omega(m k0), m=+-2..+-5"))

    if abs(w0p) > tol:
        m10 = min(abs(w0p - 2 * w0), abs(w0p + 2 * w0))
        c10 = m10 > tol
        w2k = omega.eval(2 * k0)
        m11 = min(abs(s * w0p - (2 * w0 + j * w2k)) for s in (1, -1) for j in (1, -1))
        c11 = cg_margin > tol and abs(rho0) <= tol and m11 > tol
        rep.entries.append(
            ConditionEntry(
                "further_resonances",
                c10 or c11,
                max(m10, min(m11, cg_margin) if abs(rho0) <= tol else 0.0),
                f"omega(0+) != +-2 omega(k0): {c10} (margin {m10:.3g}); second alternative: {c11}",
            )
        )

    if scan_k_max is not None:
        scan = scan_resonances(omega, k0, max(scan_k_max, 5 * k0), scan_samples, rho=rho)
        extra = [r.k_root for r in scan if not r.trivial and min(abs(r.k_root - k0), abs(r.k_root + k0)) > 1e-6]
        rep.entries.append(
            ConditionEntry(
                "resonance_set",
                not extra,
                scan.inf_away_from_roots,
                "nontrivial resonances only at +-k0" if not extra
                else "additional nontrivial resonances at " + ", ".join(f"{k:.6g}" for k in sorted(set(extra))),
            )
        )

    for e in rep.entries:
        if e.passed and e.margin < warn_below:
            msg = f"condition {e.name} holds with small margin {e.margin:.3g}"
            rep.warnings.append(msg)
            log.warning(msg)
    return rep


# ---------------------------------------------------------------------------
# resonances


@dataclass
class ResonanceRoot:
    k_root: float
    j1: int
    j2: int
    branch: int
    residual_value: float
    trivial: bool


@dataclass
class ResonanceScan:
    roots: list
    inf_away_from_roots: float
    per_branch_inf: dict

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def locations(self, trivial: Optional[bool] = None) -> list:
        ks = [r.k_root for r in self.roots if trivial is None or r.trivial == trivial]
        return sorted(set(round(k, 9) for k in ks))

    def to_dict(self) -> dict:
        return {
            "roots": [asdict(r) for r in self.roots],
            "inf_away_from_roots": self.inf_away_from_roots,
            "per_branch_inf": {str(k): v for k, v in self.per_branch_inf.items()},
        }


def resonance_function(omega: DispersionSymbol, k0: float, j1: int, j2: int, branch: int):
    """``k -> omega(k) - j1 j2 omega(k - branch k0) + j1 omega(branch k0)``."""
    shift = branch * k0
    c = j1 * omega.eval(shift)

    def f(k):
        k = np.asarray(k, dtype=float)
        return omega.eval(k) - j1 * j2 * omega.eval(k - shift) + c

    return f


def _bisect(f, a: float, b: float, fa: float, tol: float = 1e-12) -> float:
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = float(f(mid))
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def scan_resonances(
    omega: DispersionSymbol,
    k0: float,
    k_max: float,
    n_samples: int,
    rho: Optional[DispersionSymbol] = None,
    dedupe: float = 1e-8,
    touch_tol: float = 1e-9,
) -> ResonanceScan:
    """Find the real roots of the resonance function over ``[-k_max, k_max]``.

    All eight sign choices ``(j1, j2, branch)`` are sampled.  Sign changes are
    refined by bisection; sampled local minima of |f| that do not change sign
    are refined by bounded minimisation and kept when they reach zero.  Each
    root is flagged trivial when ``rho`` vanishes there.
    """
    if k_max < 5 * k0:
        raise ValueError("k_max must be at least 5 k0")
    if n_samples < 10**4:
        raise ValueError("n_samples must be at least 1e4")
    if n_samples > MAX_SCAN_SAMPLES:
        raise ValueError(f"sampling budget exceeded: {n_samples} > {MAX_SCAN_SAMPLES}")
    rho = rho if rho is not None else omega
    ks = np.linspace(-k_max, k_max, n_samples | 1)
    h = ks[1] - ks[0]
    deg = max(omega.degree, 0.0)
    roots: list[ResonanceRoot] = []
    per_branch = {}
    for j1, j2, branch in itertools.product((1, -1), repeat=3):
        f = resonance_function(omega, k0, j1, j2, branch)
        vals = f(ks)
        found: list[float] = list(ks[vals == 0.0])
        s = np.sign(vals)
        idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
        for i in idx:
            found.append(_bisect(f, ks[i], ks[i + 1], vals[i]))
        a = np.abs(vals)
        loc = np.nonzero((a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:]) & (a[1:-1] > 0))[0] + 1
        for i in loc:
            if s[i - 1] * s[i + 1] < 0:
                continue
            if a[i] > 10 * h * (1 + abs(ks[i])) ** max(deg - 1, 0) * 10:
                continue
            res = minimize_scalar(lambda x: abs(float(f(x))), bounds=(ks[i - 1], ks[i + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            if abs(float(f(res.x))) <= touch_tol * (1 + abs(res.x)) ** deg:
                found.append(float(res.x))
        found.sort()
        kept: list[float] = []
        for k in found:
            if not kept or abs(k - kept[-1]) > dedupe:
                kept.append(k)
        for k in kept:
            resid = abs(float(f(k)))
            triv = abs(float(rho.eval(k))) < 1e-10 * (1 + abs(k)) ** max(rho.degree, 0.0)
            roots.append(ResonanceRoot(float(k), j1, j2, branch, resid, bool(triv)))
        away = np.ones_like(ks, dtype=bool)
        for k in kept:
            away &= np.abs(ks - k) > 0.05 * k0
        per_branch[(j1, j2, branch)] = float(np.min(a[away])) if np.any(away) else float("nan")
    finite = [v for v in per_branch.values() if not math.isnan(v)]
    return ResonanceScan(roots, min(finite) if finite else float("nan"), per_branch)


# ---------------------------------------------------------------------------
# NLS coefficients


@dataclass
class NLSCoefficients:
    k0: float
    omega0: float
    cg: float
    half_omega_pp: float
    nu2: float
    zero_limit_case: bool

    @property
    def omega_pp(self) -> float:
        return 2.0 * self.half_omega_pp

    @property
    def focusing(self) -> bool:
        return self.nu2 * self.half_omega_pp > 0

    def to_dict(self) -> dict:
        return asdict(self)


def nls_coefficients(
    omega: DispersionSymbol,
    rho: DispersionSymbol,
    k0: float,
    step: Optional[float] = None,
    tol: float = 1e-12,
) -> NLSCoefficients:
    """Carrier frequency, group velocity, dispersion and cubic coefficient at ``k0``.

    ``step`` forces finite-difference derivatives with that step.
    """
    w0 = float(omega.eval(k0))
    w2k = float(omega.eval(2 * k0))
    cg = float(eval_derivative(omega, k0, 1, step=step))
    wpp = float(eval_derivative(omega, k0, 2, step=None if step is None else step * 100))
    if abs(wpp) <= tol:
        raise ConditionError("omega''(k0) vanishes")
    rk0 = float(rho.eval(k0))
    r2k = float(rho.eval(2 * k0))
    den1 = 4.0 * w0**2 - w2k**2
    if abs(den1) <= tol * max(1.0, w2k**2):
        raise ConditionError("4 omega(k0)^2 - omega(2k0)^2 vanishes (NR1 violated at m=2)")
    harmonic = r2k * w2k / den1
    w0p = omega.limit_zero_plus
    zero_case = abs(w0p) <= tol
    if zero_case:
        dw0 = d0(omega, 1, step)
        dr0 = d0(rho, 1, step)
        den2 = cg**2 - dw0**2
        if abs(den2) <= tol * max(1.0, cg**2):
            raise ConditionError("omega'(k0)^2 - omega'(0)^2 vanishes")
        mean_flow = 2.0 * dr0 * dw0 / den2
    else:
        mean_flow = -2.0 * rho.limit_zero_plus / w0p
    nu2 = -rk0 * (harmonic + mean_flow)
    return NLSCoefficients(k0=k0, omega0=w0, cg=cg, half_omega_pp=0.5 * wpp, nu2=nu2, zero_limit_case=zero_case)
