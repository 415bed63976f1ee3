"""Odd real dispersion symbols and the structural checks on them.

Every symbol is stored through its radial profile ``g`` on ``r >= 0`` so that
``gamma(k) = sign(k) * g(|k|)``.  With that representation derivatives of any
order follow from ``gamma^(n)(k) = sign(k)^(n+1) * g^(n)(|k|)`` and the
one-sided limits at zero are ``g(0)`` and ``g^(n)(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

BUILTIN_NAMES = ("beam", "gravity_capillary", "ice_cover", "poly_sign")

_MP_DPS = 40


class SymbolError(ValueError):
    """Raised for invalid symbol construction or evaluation requests."""


@dataclass(frozen=True)
class DispersionSymbol:
    """An odd real Fourier symbol ``k -> sign(k) g(|k|)``.

    ``profile`` is vectorised over ``r >= 0``.  ``profile_deriv(r, n)`` gives
    closed-form derivatives when they exist; ``profile_mp`` is an mpmath scalar
    version of the profile used for high-precision differentiation.  When
    neither is present derivatives fall back to Richardson-extrapolated
    central differences.
    """

    name: str
    profile: Callable[[np.ndarray], np.ndarray]
    degree: float
    degree_exact: bool = True
    smooth_through_zero: bool = False
    profile_deriv: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    profile_mp: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    parity = "odd"

    def __call__(self, k):
        return self.eval(k)

    def eval(self, k):
        k = np.asarray(k, dtype=float)
        out = np.sign(k) * self.profile(np.abs(k))
        return out if out.ndim else float(out)

    @property
    def limit_zero_plus(self) -> float:
        return float(self.profile(np.array(0.0)))

    @property
    def m_order(self) -> int:
        """Smoothness order ``max(5, ceil(deg) + 1)``."""
        return max(5, math.ceil(self.degree) + 1)

    @property
    def is_zero(self) -> bool:
        return bool(self.params.get("zero", False))

    def derivative(self, k, n: int, side: Optional[str] = None, step: Optional[float] = None):
        return eval_derivative(self, k, n, side=side, step=step)


# ---------------------------------------------------------------------------
# builtins


def _beam_profile(r):
    return np.asarray(r, dtype=float) ** 2


def _beam_deriv(r, n):
    r = np.asarray(r, dtype=float)
    if n == 0:
        return r**2
    if n == 1:
        return 2.0 * r
    if n == 2:
        return np.full_like(r, 2.0)
    return np.zeros_like(r)


def _poly_profile(coeffs):
    c = np.asarray(coeffs, dtype=float)

    def profile(r):
        return np.polynomial.polynomial.polyval(np.asarray(r, dtype=float), c)

    def deriv(r, n):
        r = np.asarray(r, dtype=float)
        if n >= len(c):
            return np.zeros_like(r)
        return np.polynomial.polynomial.polyval(r, np.polynomial.polynomial.polyder(c, n))

    return profile, deriv


def _ratio_tanh(r):
    """tanh(r)/r, equal to 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r == 0.0, 1.0, np.tanh(r) / np.where(r == 0.0, 1.0, r))
    return out


def _gc_profile(b):
    def profile(r):
        r = np.asarray(r, dtype=float)
        return r * np.sqrt(_ratio_tanh(r) * (1.0 + b * r * r))

    def profile_mp(r):
        t = mpmath.mpf(1) if r == 0 else mpmath.tanh(r) / r
        return r * mpmath.sqrt(t * (1 + b * r * r))

    return profile, profile_mp


def _ice_profile():
    def profile(r):
        r = np.asarray(r, dtype=float)
        t = _ratio_tanh(r)
        return r * np.sqrt(t / (1.0 + r * np.tanh(r)) * (1.0 + r**2 + r**4))

    def profile_mp(r):
        t = mpmath.mpf(1) if r == 0 else mpmath.tanh(r) / r
        return r * mpmath.sqrt(t / (1 + r * mpmath.tanh(r)) * (1 + r**2 + r**4))

    return profile, profile_mp


def builtin(name: str, params: Optional[dict] = None) -> DispersionSymbol:
    """Build one of the catalogued symbols.

    ``beam``: sign(k) k^2.  ``gravity_capillary``: sign(k) sqrt(k tanh k (1 + b k^2))
    with surface tension ``b``.  ``ice_cover``: finite depth with an ice sheet.
    ``poly_sign``: sign(k) p(|k|) for a coefficient list ``coeffs`` (lowest first).
    """
    params = dict(params or {})
    if name == "beam":
        return DispersionSymbol(
            name="beam",
            profile=_beam_profile,
            profile_deriv=_beam_deriv,
            degree=2.0,
            smooth_through_zero=False,
            params=params,
        )
    if name == "gravity_capillary":
        b = float(params.get("b", 0.0))
        if b < 0:
            raise SymbolError(f"surface tension must be non-negative, got b={b}")
        profile, profile_mp = _gc_profile(b)
        return DispersionSymbol(
            name="gravity_capillary",
            profile=profile,
            profile_mp=profile_mp,
            degree=1.5 if b > 0 else 0.5,
            smooth_through_zero=True,
            params={"b": b},
        )
    if name == "ice_cover":
        profile, profile_mp = _ice_profile()
        # (k tanh k / (1 + k tanh k)) (1 + k^2 + k^4) ~ k^4 for large k
        return DispersionSymbol(
            name="ice_cover",
            profile=profile,
            profile_mp=profile_mp,
            degree=2.0,
            smooth_through_zero=True,
            params=params,
        )
    if name == "poly_sign":
        coeffs = params.get("coeffs")
        if coeffs is None:
            raise SymbolError("poly_sign needs a 'coeffs' list")
        coeffs = [float(c) for c in coeffs]
        nonzero = [i for i, c in enumerate(coeffs) if c != 0.0]
        profile, deriv = _poly_profile(coeffs)
        return DispersionSymbol(
            name="poly_sign",
            profile=profile,
            profile_deriv=deriv,
            degree=float(nonzero[-1]) if nonzero else 0.0,
            smooth_through_zero=all(coeffs[i] == 0.0 for i in range(0, len(coeffs), 2)),
            params={"coeffs": coeffs, "zero": not nonzero},
        )
    raise SymbolError(f"unknown symbol {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


def zero_symbol() -> DispersionSymbol:
    return builtin("poly_sign", {"coeffs": [0.0]})


def from_config(spec: dict) -> DispersionSymbol:
    """Build a symbol from ``{"name": ..., **params}``."""
    spec = dict(spec)
    name = spec.pop("name")
    return builtin(name, spec)


# ---------------------------------------------------------------------------
# derivatives


def _profile_derivative(sym: DispersionSymbol, r: np.ndarray, n: int, step: Optional[float]) -> np.ndarray:
    if n == 0:
        return sym.profile(r)
    if sym.profile_deriv is not None and step is None:
        return sym.profile_deriv(r, n)
    if sym.profile_mp is not None and step is None:
        with mpmath.workdps(_MP_DPS):
            vals = [float(mpmath.diff(sym.profile_mp, mpmath.mpf(float(x)), n)) for x in np.ravel(r)]
        return np.reshape(np.array(vals), np.shape(r))
    return _richardson(sym, r, n, step)


def _central(f, x, h, n):
    # n-th central difference from binomial weights
    acc = 0.0
    for i in range(n + 1):
        acc = acc + (-1) ** i * math.comb(n, i) * f(x + (n / 2.0 - i) * h)
    return acc / h**n


def _richardson(sym, r, n, step):
    r = np.asarray(r, dtype=float)
    h = step if step is not None else 1e-5 * (1.0 + np.abs(r))
    def f(x):
        return _extended(sym, x)

    d_h = _central(f, r, h, n)
    d_h2 = _central(f, r, h / 2.0, n)
    return (4.0 * d_h2 - d_h) / 3.0


def _extended(sym, x):
    """Smooth continuation of the profile through r = 0."""
    x = np.asarray(x, dtype=float)
    if sym.smooth_through_zero:
        # gamma itself is smooth and equals g on r > 0
        return np.sign(x) * sym.profile(np.abs(x))
    # sign(k) gamma(k) = g(|k|) is smooth
    return sym.profile(np.abs(x))


def eval_derivative(sym: DispersionSymbol, k, n: int, side: Optional[str] = None, step: Optional[float] = None):
    """n-th derivative of ``sym`` at ``k``.

    ``side='+'`` or ``'-'`` requests the one-sided derivative at ``0^+`` / ``0^-``
    and is required at ``k = 0`` for symbols whose smooth representative is
    ``sign(k) gamma(k)``.  ``step`` forces the finite-difference route with the
    given step.
    """
    if n < 0:
        raise SymbolError("derivative order must be non-negative")
    if n > sym.m_order:
        raise SymbolError(f"order {n} exceeds smoothness order m={sym.m_order} of {sym.name}")
    k = np.asarray(k, dtype=float)
    if side is not None:
        if side not in ("+", "-"):
            raise SymbolError("side must be '+' or '-'")
        sgn = 1.0 if side == "+" else -1.0
        val = _profile_derivative(sym, np.zeros_like(k) + np.abs(k), n, step)
        out = sgn ** (n + 1) * val
        return out if out.ndim else float(out)
    if n >= 1 and not sym.smooth_through_zero and np.any(k == 0.0):
        raise SymbolError(f"{sym.name} is not smooth at k=0; pass side='+' or '-'")
    r = np.abs(k)
    val = _profile_derivative(sym, r, n, step)
    sgn = np.where(k == 0.0, 1.0, np.sign(k))
    out = sgn ** (n + 1) * val
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# structural hypotheses


@dataclass
class SymbolHypothesisReport:
    deg_rho_le_deg_omega: bool
    derivative_degree_decay: list
    smoothness_order_checked: int
    omega_slopes: list = field(default_factory=list)
    rho_slopes: list = field(default_factory=list)
    omega_degree_slope: float = float("nan")
    rho_degree_slope: float = float("nan")

    @property
    def all_pass(self) -> bool:
        return self.deg_rho_le_deg_omega and all(self.derivative_degree_decay)

    def to_dict(self) -> dict:
        return {
            "deg_rho_le_deg_omega": self.deg_rho_le_deg_omega,
            "derivative_degree_decay": list(self.derivative_degree_decay),
            "smoothness_order_checked": self.smoothness_order_checked,
            "omega_slopes": list(self.omega_slopes),
            "rho_slopes": list(self.rho_slopes),
            "omega_degree_slope": self.omega_degree_slope,
            "rho_degree_slope": self.rho_degree_slope,
        }


def loglog_slope(sym: DispersionSymbol, n: int = 0, k_min: float = 1e2, k_max: float = 1e4, n_points: int = 25) -> Optional[float]:
    """Least-squares slope of log|gamma^(n)| against log k; None if the derivative vanishes."""
    ks = np.geomspace(k_min, k_max, n_points)
    vals = np.abs(np.asarray(eval_derivative(sym, ks, n), dtype=float))
    scale = np.abs(np.asarray(sym.eval(ks)))
    if np.all(vals <= 1e-13 * np.maximum(scale, 1.0)):
        return None
    if np.any(vals == 0.0):
        return None
    slope, _ = np.polyfit(np.log(ks), np.log(vals), 1)
    return float(slope)


def verify_hypotheses(omega: DispersionSymbol, rho: DispersionSymbol, tol: float = 0.05) -> SymbolHypothesisReport:
    """Check the degree conditions on ``omega`` and ``rho``.

    The degree of rho may not exceed that of omega.  Each derivative of omega
    must lose one degree; the first derivative exactly and later ones at least.
    Each derivative of rho must lose at least one degree.  Failures are
    reported, never raised.
    """
    m = omega.m_order
    om_slope = loglog_slope(omega, 0)
    rho_slope = loglog_slope(rho, 0)
    rho_ok_meta = rho.is_zero or rho.degree <= omega.degree
    rho_ok_sample = rho_slope is None or om_slope is None or rho_slope <= omega.degree + tol
    deg_ok = bool(rho_ok_meta and rho_ok_sample)

    decay, om_slopes, rho_slopes = [], [], []
    prev_om = om_slope if om_slope is not None else omega.degree
    prev_rho = rho_slope if rho_slope is not None else rho.degree
    for n in range(1, m + 1):
        so = loglog_slope(omega, n) if n <= omega.m_order else None
        sr = loglog_slope(rho, n) if n <= rho.m_order else None
        om_slopes.append(so)
        rho_slopes.append(sr)
        ok = True
        if so is not None:
            if n == 1:
                ok &= abs(so - (prev_om - 1.0)) <= tol
            else:
                ok &= so <= prev_om - 1.0 + tol
            prev_om = so
        if sr is not None:
            ok &= sr <= prev_rho - 1.0 + tol
            prev_rho = sr
        decay.append(bool(ok))
    return SymbolHypothesisReport(
        deg_rho_le_deg_omega=deg_ok,
        derivative_degree_decay=decay,
        smoothness_order_checked=m,
        omega_slopes=om_slopes,
        rho_slopes=rho_slopes,
        omega_degree_slope=float("nan") if om_slope is None else om_slope,
        rho_degree_slope=float("nan") if rho_slope is None else rho_slope,
    )


def describe(sym: DispersionSymbol) -> dict:
    return {
        "name": sym.name,
        "params": {k: v for k, v in sym.params.items() if k != "zero"},
        "degree": sym.degree,
        "degree_exact": sym.degree_exact,
        "limit_zero_plus": sym.limit_zero_plus,
        "smooth_through_zero": sym.smooth_through_zero,
        "m_order": sym.m_order,
    }


def sample_oddness(sym: DispersionSymbol, ks: Sequence[float]) -> float:
    ks = np.asarray(ks, dtype=float)
    return float(np.max(np.abs(sym.eval(ks) + sym.eval(-ks))))
