"""NLS envelope dynamics and the wave-packet approximation built from it.

The envelope ``A(X, T)`` lives on the slow grid ``X = eps x`` which shares the
lattice indices of the fast grid: slow wavenumber ``K_j`` corresponds to the
fast offset ``k_j = eps K_j`` from the carrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .analysis import NLSCoefficients
from .spectral import FieldPair, SpectralField, SpectralGrid, product, reflect_conj, to_physical, to_spectral
from .symbols import DispersionSymbol

DEFAULT_DELTA_FRACTION = 1.0 / 32.0
DELTA_LIMIT_FRACTION = 1.0 / 20.0


class NLSBlowup(RuntimeError):
    pass


class NearResonanceError(RuntimeError):
    pass


class WeightError(ValueError):
    pass


@dataclass
class EnvelopeState:
    """Envelope values on the slow grid at slow time ``T``."""

    A: np.ndarray
    T: float
    eps: float
    cg: float
    k0: float
    grid: SpectralGrid

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=complex)

    @property
    def slow_grid(self) -> SpectralGrid:
        return self.grid.scaled(self.eps)

    @property
    def X(self) -> np.ndarray:
        return self.eps * self.grid.x

    @property
    def K(self) -> np.ndarray:
        return self.grid.k / self.eps

    def spectrum(self) -> np.ndarray:
        return to_spectral(self.slow_grid, self.A)

    def field(self) -> SpectralField:
        return SpectralField(self.slow_grid, self.spectrum(), False)

    def with_A(self, A, T: Optional[float] = None) -> "EnvelopeState":
        return replace(self, A=np.asarray(A, dtype=complex), T=self.T if T is None else T)

    def mass(self) -> float:
        """Discrete ``integral |A|^2 dX``."""
        return float(np.sum(np.abs(self.A) ** 2) * self.slow_grid.period / self.grid.n_points)


# ---------------------------------------------------------------------------
# initial envelopes


def soliton_parameters(coeffs: NLSCoefficients, amplitude: float) -> tuple[float, float]:
    """Inverse width ``b`` and phase rate ``alpha`` of ``a sech(bX) e^{i alpha T}``."""
    if coeffs.nu2 * coeffs.omega_pp <= 0:
        raise ValueError("bright soliton needs nu2 * omega'' > 0")
    b = math.sqrt(coeffs.nu2 * amplitude**2 / coeffs.omega_pp)
    return b, 0.5 * coeffs.nu2 * amplitude**2


def soliton_envelope(grid: SpectralGrid, eps: float, coeffs: NLSCoefficients, amplitude: float = 1.0, T: float = 0.0) -> EnvelopeState:
    b, alpha = soliton_parameters(coeffs, amplitude)
    X = eps * grid.x
    A = amplitude / np.cosh(b * X) * np.exp(1j * alpha * T)
    return EnvelopeState(A, T, eps, coeffs.cg, coeffs.k0, grid)


def gaussian_envelope(grid: SpectralGrid, eps: float, coeffs: NLSCoefficients, amplitude: float = 1.0, width: float = 1.0) -> EnvelopeState:
    X = eps * grid.x
    A = amplitude * np.exp(-0.5 * (X / width) ** 2)
    return EnvelopeState(A.astype(complex), 0.0, eps, coeffs.cg, coeffs.k0, grid)


def default_envelope_kind(coeffs: NLSCoefficients) -> str:
    return "sech" if coeffs.nu2 * coeffs.omega_pp > 0 else "gaussian"


# ---------------------------------------------------------------------------
# NLS


def nls_rhs(state: EnvelopeState, coeffs: NLSCoefficients) -> np.ndarray:
    """``dA/dT = i (omega''/2) A_XX + i nu2 |A|^2 A`` as slow-grid coefficients."""
    a_hat = state.spectrum()
    K = state.K
    lin = 1j * coeffs.half_omega_pp * (-(K**2)) * a_hat
    nl = to_spectral(state.slow_grid, 1j * coeffs.nu2 * np.abs(state.A) ** 2 * state.A)
    return lin + nl


def solve_nls(
    A0: EnvelopeState,
    coeffs: NLSCoefficients,
    T_end: float,
    dt: float,
    out_times: Optional[Sequence[float]] = None,
    blowup_factor: float = 1e3,
) -> list[EnvelopeState]:
    """Strang split-step integration of the NLS equation.

    Half-step nonlinear phase rotation, exact linear step in Fourier space,
    half-step nonlinear rotation.  Returns the states at ``out_times``
    (default: start and end); each interval is split into equal steps no
    longer than ``dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    amp0 = float(np.max(np.abs(A0.A)))
    if abs(coeffs.nu2) * amp0**2 * dt >= 0.1:
        raise ValueError(f"dt={dt} does not resolve the nonlinear phase (nu2 max|A|^2 dt >= 0.1)")
    times = [A0.T, A0.T + T_end] if out_times is None else [A0.T + float(t) for t in out_times]
    if any(b < a - 1e-14 for a, b in zip(times, times[1:])) or times[0] < A0.T - 1e-14:
        raise ValueError("out_times must be non-decreasing and non-negative")
    A = A0.A.copy()
    T = A0.T
    out = []
    limit = blowup_factor * max(amp0, 1e-300)
    for target in times:
        span = target - T
        n = max(0, math.ceil(span / dt - 1e-9))
        if n:
            A = _strang(A0.slow_grid, A0.K, A, coeffs, span / n, n)
            if not np.all(np.isfinite(A)) or np.max(np.abs(A)) > limit:
                raise NLSBlowup(f"envelope exceeded {blowup_factor} x its initial maximum by T={target}")
        T = target
        out.append(A0.with_A(A.copy(), T))
    return out


def _strang(sg, K, A, coeffs, h, n):
    lin = np.exp(-1j * coeffs.half_omega_pp * K**2 * h)
    half = 0.5j * coeffs.nu2 * h
    for _ in range(n):
        A = A * np.exp(half * np.abs(A) ** 2)
        A = to_physical(sg, lin * to_spectral(sg, A))
        A = A * np.exp(half * np.abs(A) ** 2)
    return A


def nls_step(state: EnvelopeState, coeffs: NLSCoefficients, h: float, n: int = 1) -> EnvelopeState:
    """``n`` Strang steps of size ``h``; negative ``h`` runs backwards (the scheme is symmetric)."""
    A = _strang(state.slow_grid, state.K, state.A.copy(), coeffs, h, n)
    return state.with_A(A, state.T + n * h)


# ---------------------------------------------------------------------------
# cutoff and weights


def bandlimit(A: EnvelopeState, delta: float, eps: Optional[float] = None) -> EnvelopeState:
    """Restrict the envelope to fast offsets ``|k| <= delta`` (slow ``|K| <= delta/eps``)."""
    eps = A.eps if eps is None else eps
    if not 0 < delta < DELTA_LIMIT_FRACTION * A.k0:
        raise ValueError(f"delta must lie in (0, k0/20), got {delta} for k0={A.k0}")
    a_hat = A.spectrum()
    mask = np.abs(A.grid.k / eps) <= delta / eps * (1 + 1e-12)
    return A.with_A(to_physical(A.slow_grid, np.where(mask, a_hat, 0.0)))


@dataclass(frozen=True)
class WeightOperator:
    """Fourier weight equal to eps at k=0, rising linearly to 1 at |k| = delta."""

    delta: float
    eps: float
    mode: str = "weighted"

    def __post_init__(self):
        if self.mode not in ("weighted", "identity"):
            raise WeightError(f"unknown weight mode {self.mode!r}")
        if self.mode == "weighted" and not self.eps > 0:
            raise WeightError("weighted mode needs eps > 0")
        if self.delta <= 0:
            raise WeightError("delta must be positive")

    def values(self, k, inverse: bool = False, truncated: bool = False) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        if truncated and inverse:
            raise WeightError("the truncated weight vanishes near 0 and has no inverse")
        if self.mode == "identity":
            return np.ones_like(k)
        w = np.where(k <= self.delta, self.eps + (1.0 - self.eps) * k / self.delta, 1.0)
        if truncated:
            w = np.where(k <= self.eps, 0.0, w)
        return 1.0 / w if inverse else w


def weight_apply(field: SpectralField, w: WeightOperator, inverse: bool = False, truncated: bool = False) -> SpectralField:
    return SpectralField(field.grid, w.values(field.grid.k, inverse, truncated) * field.coefficients, field.is_real)


def default_weight_mode(omega: DispersionSymbol, k0: float, tol: float = 1e-10) -> str:
    """Identity weight when omega(0+) != 0 and +-omega(0+) != 2 omega(k0)."""
    w0p = omega.limit_zero_plus
    if abs(w0p) > tol and min(abs(w0p - 2 * omega.eval(k0)), abs(w0p + 2 * omega.eval(k0))) > tol:
        return "identity"
    return "weighted"


# ---------------------------------------------------------------------------
# wave packets


@dataclass
class Approximation:
    order: str
    pair: FieldPair
    k0: float
    omega0: float
    cg: float
    t: float
    psi_c: Optional[SpectralField] = None

    @property
    def u(self) -> SpectralField:
        """Undiagonalised first component ``u = u_{-1} + u_1``."""
        return self.pair.sum()


def _carrier_shift(grid: SpectralGrid, a_hat: np.ndarray, shift: int) -> np.ndarray:
    idx = grid.index
    new = idx + shift
    ok = (new >= -grid.n_points // 2) & (new < grid.n_points // 2)
    out = np.zeros(grid.n_points, dtype=complex)
    out[new[ok] % grid.n_points] = a_hat[ok]
    return out


def _upper_carrier(A1: EnvelopeState, coeffs: NLSCoefficients, t: float, dA_hat: Optional[np.ndarray] = None):
    grid = A1.grid
    if grid.k0_index is None:
        raise ValueError("grid has no carrier index")
    if abs(grid.k0 - coeffs.k0) > 1e-9 * coeffs.k0:
        raise ValueError(f"carrier k0={coeffs.k0} is not on the lattice (grid carrier {grid.k0})")
    k_off = grid.k
    phase = np.exp(-1j * (k_off * coeffs.cg + coeffs.omega0) * t)
    a_hat = A1.spectrum()
    plus = _carrier_shift(grid, a_hat * phase, grid.k0_index)
    if dA_hat is None:
        return plus, None
    d = (A1.eps**2 * dA_hat - 1j * (k_off * coeffs.cg + coeffs.omega0) * a_hat) * phase
    return plus, _carrier_shift(grid, d, grid.k0_index)


def carrier_field(A1: EnvelopeState, coeffs: NLSCoefficients, t: float) -> SpectralField:
    """``psi_c = A1(eps(x - cg t), eps^2 t) E + c.c.`` without the eps prefactor."""
    plus, _ = _upper_carrier(A1, coeffs, t)
    return SpectralField(A1.grid, plus + reflect_conj(plus), True)


def split_carriers(psi_c: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Parts of ``psi_c`` at positive and negative wavenumbers (psi_1, psi_-1)."""
    k = psi_c.grid.k
    c = psi_c.coefficients
    return (SpectralField(psi_c.grid, np.where(k > 0, c, 0.0), False),
            SpectralField(psi_c.grid, np.where(k < 0, c, 0.0), False))


def wave_packet(A1: EnvelopeState, coeffs: NLSCoefficients, eps: Optional[float] = None, t: float = 0.0,
                grid: Optional[SpectralGrid] = None) -> Approximation:
    """Leading-order packet ``(eps psi_c, 0)``."""
    eps = A1.eps if eps is None else eps
    if grid is not None and grid != A1.grid:
        raise ValueError("envelope and target grid differ")
    psi_c = carrier_field(A1, coeffs, t)
    pair = FieldPair(psi_c * eps, SpectralField.zeros(A1.grid))
    return Approximation("leading", pair, coeffs.k0, coeffs.omega0, coeffs.cg, t, psi_c)


@dataclass
class CorrectionOperator:
    """Mode-wise response of both components to the quadratic forcing.

    For a forcing mode at ``k`` in the window of carrier ``j in {-2, 0, 2}``
    oscillating at ``Omega = j omega0 + cg (k - j k0)``, the diagonal linear
    operator gives ``C_-1 = -rho F / (2 (omega - Omega))`` and
    ``C_1 = -rho F / (2 (omega + Omega))``.
    """

    g_minus: np.ndarray
    g_plus: np.ndarray
    min_margin: float

    @classmethod
    def build(cls, grid: SpectralGrid, omega: DispersionSymbol, rho: DispersionSymbol, coeffs: NLSCoefficients,
              forcing: Optional[np.ndarray] = None, guard: float = 1e-6) -> "CorrectionOperator":
        k = grid.k
        k0 = coeffs.k0
        j = 2.0 * np.round(k / (2.0 * k0))
        j = np.where(np.abs(k) < k0, 0.0, j)
        window = np.abs(j) <= 2
        Om = j * coeffs.omega0 + coeffs.cg * (k - j * k0)
        w = omega.eval(k)
        r = rho.eval(k)
        active = window & (r != 0.0)
        if forcing is not None:
            fmax = np.max(np.abs(forcing)) if forcing.size else 0.0
            active &= np.abs(forcing) > 1e-14 * fmax
        den_m = w - Om
        den_p = w + Om
        margin = float(np.min(np.minimum(np.abs(den_m), np.abs(den_p))[active])) if np.any(active) else float("inf")
        if margin < guard:
            bad = k[active][np.argmin(np.minimum(np.abs(den_m), np.abs(den_p))[active])]
            raise NearResonanceError(f"correction denominator {margin:.3g} below {guard} at k={bad:.6g}")
        safe_m = np.where(active, den_m, 1.0)
        safe_p = np.where(active, den_p, 1.0)
        g_m = np.where(active, -0.5 * r / safe_m, 0.0)
        g_p = np.where(active, -0.5 * r / safe_p, 0.0)
        return cls(g_m, g_p, margin)


def second_order_corrections(A1: EnvelopeState, omega: DispersionSymbol, rho: DispersionSymbol,
                             coeffs: NLSCoefficients, eps: Optional[float] = None, t: float = 0.0) -> Approximation:
    """``eps psi_c (1,0) + eps^2 (Psi_0 + Psi_2)`` from the quadratic forcing ``psi_c^2``."""
    eps = A1.eps if eps is None else eps
    psi_c = carrier_field(A1, coeffs, t)
    forcing = product(psi_c, psi_c).coefficients
    op = CorrectionOperator.build(A1.grid, omega, rho, coeffs, forcing)
    c_m = SpectralField(A1.grid, op.g_minus * forcing, True)
    c_p = SpectralField(A1.grid, op.g_plus * forcing, True)
    pair = FieldPair(psi_c * eps + c_m * eps**2, c_p * eps**2)
    return Approximation("corrected", pair, coeffs.k0, coeffs.omega0, coeffs.cg, t, psi_c)


@dataclass
class PacketModel:
    """Builds approximations and their exact time derivatives from an NLS trajectory.

    ``delta=None`` uses the full envelope instead of the band-limited one.
    """

    omega: DispersionSymbol
    rho: DispersionSymbol
    coeffs: NLSCoefficients
    grid: SpectralGrid
    eps: float
    order: str = "leading"
    delta: Optional[float] = None
    _op: Optional[CorrectionOperator] = field(default=None, repr=False)

    def __post_init__(self):
        if self.order not in ("leading", "corrected"):
            raise ValueError(f"unknown approximation order {self.order!r}")

    def envelope(self, A: EnvelopeState) -> EnvelopeState:
        return A if self.delta is None else bandlimit(A, self.delta, self.eps)

    def time_of(self, A: EnvelopeState) -> float:
        return A.T / self.eps**2

    def _operator(self, forcing) -> CorrectionOperator:
        if self._op is None:
            self._op = CorrectionOperator.build(self.grid, self.omega, self.rho, self.coeffs, forcing)
        return self._op

    def build(self, A: EnvelopeState, with_derivative: bool = False):
        """Approximation at ``t = T / eps^2`` and, optionally, ``d/dt`` of its pair."""
        t = self.time_of(A)
        A1 = self.envelope(A)
        dA = None
        if with_derivative:
            dA = nls_rhs(A, self.coeffs)
            if self.delta is not None:
                dA = np.where(np.abs(self.grid.k) <= self.delta * (1 + 1e-12), dA, 0.0)
        plus, dplus = _upper_carrier(A1, self.coeffs, t, dA)
        psi_c = SpectralField(self.grid, plus + reflect_conj(plus), True)
        eps = self.eps
        um = psi_c * eps
        up = SpectralField.zeros(self.grid)
        d_pair = None
        if with_derivative:
            dpsi = SpectralField(self.grid, dplus + reflect_conj(dplus), True)
            d_pair = FieldPair(dpsi * eps, SpectralField.zeros(self.grid))
        if self.order == "corrected":
            F = product(psi_c, psi_c).coefficients
            op = self._operator(F)
            um = um + SpectralField(self.grid, op.g_minus * F, True) * eps**2
            up = SpectralField(self.grid, op.g_plus * F, True) * eps**2
            if with_derivative:
                dF = 2.0 * product(psi_c, dpsi).coefficients
                d_pair = FieldPair(d_pair.u_minus + SpectralField(self.grid, op.g_minus * dF, True) * eps**2,
                                   SpectralField(self.grid, op.g_plus * dF, True) * eps**2)
        approx = Approximation(self.order, FieldPair(um, up), self.coeffs.k0, self.coeffs.omega0, self.coeffs.cg, t, psi_c)
        return (approx, d_pair) if with_derivative else approx


def nls_field(A: EnvelopeState, coeffs: NLSCoefficients) -> SpectralField:
    """``eps psi_NLS`` at ``t = T / eps^2`` from the full (uncut) envelope."""
    return carrier_field(A, coeffs, A.T / A.eps**2) * A.eps
