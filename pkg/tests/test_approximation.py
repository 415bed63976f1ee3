import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasinls.analysis import nls_coefficients
from quasinls.approximation import (CorrectionOperator, EnvelopeState, NearResonanceError, NLSBlowup, PacketModel,
                                    WeightError, WeightOperator, bandlimit, carrier_field, default_weight_mode,
                                    gaussian_envelope, nls_step, second_order_corrections, solve_nls,
                                    soliton_envelope, soliton_parameters, split_carriers, wave_packet, weight_apply)
from quasinls.spectral import SpectralField, l1s_norm, make_grid, sobolev_norm, to_physical
from quasinls.symbols import builtin, zero_symbol
from quasinls.validation import fit_power_law


def _soliton(coeffs, eps, a, oversample=2):
    b, _ = soliton_parameters(coeffs, a)
    g = make_grid(1.0, eps, 1.0 / b, oversample)
    return soliton_envelope(g, eps, coeffs, a)


def test_zero_envelope_stays_zero(beam_coeffs):
    g = make_grid(1.0, 0.1, 1.0, 2)
    A0 = EnvelopeState(np.zeros(g.n_points), 0.0, 0.1, 2.0, 1.0, g)
    out = solve_nls(A0, beam_coeffs, 1.0, 1e-2)
    assert not np.any(out[-1].A)


def test_soliton_profile(beam_coeffs):
    # [DERIVED] a sech(bX) exp(i alpha T) solves the envelope equation exactly
    a = 1.0
    A0 = _soliton(beam_coeffs, 0.1, a)
    out = solve_nls(A0, beam_coeffs, 1.0, 1e-3)[-1]
    b, alpha = soliton_parameters(beam_coeffs, a)
    exact = a / np.cosh(b * A0.X) * np.exp(1j * alpha * 1.0)
    assert np.max(np.abs(out.A - exact)) < 1e-6
    assert out.T == pytest.approx(1.0)


def test_linear_gaussian_matches_exact_propagator(beam_coeffs):
    # [DERIVED] exp(-i (omega''/2) K^2 T) applied to the initial spectrum
    lin = dataclasses.replace(beam_coeffs, nu2=0.0)
    g = make_grid(1.0, 0.1, 1.0, 2, "gaussian")
    A0 = gaussian_envelope(g, 0.1, lin, 1.0, 1.0)
    out = solve_nls(A0, lin, 0.7, 1e-2)[-1]
    exact = to_physical(A0.slow_grid, A0.spectrum() * np.exp(-1j * lin.half_omega_pp * A0.K**2 * 0.7))
    assert np.max(np.abs(out.A - exact)) < 1e-8


def test_mass_conservation(beam_coeffs):
    A0 = _soliton(beam_coeffs, 0.1, 1.0)
    # a non-stationary start
    A0 = A0.with_A(A0.A * (1.0 + 0.3 * np.cos(0.5 * A0.X)))
    out = solve_nls(A0, beam_coeffs, 1.0, 2e-3)[-1]
    assert abs(out.mass() - A0.mass()) <= 1e-10 * A0.mass()


def test_second_order_in_dt(beam_coeffs):
    A0 = _soliton(beam_coeffs, 0.1, 1.0)
    A0 = A0.with_A(A0.A * (1.0 + 0.3 * np.cos(0.5 * A0.X)))
    dt = 0.02
    ref = solve_nls(A0, beam_coeffs, 0.5, dt / 16)[-1].A
    e1 = np.max(np.abs(solve_nls(A0, beam_coeffs, 0.5, dt)[-1].A - ref))
    e2 = np.max(np.abs(solve_nls(A0, beam_coeffs, 0.5, dt / 2)[-1].A - ref))
    assert 3.3 < e1 / e2 < 4.7


def test_solver_guards(beam_coeffs):
    A0 = _soliton(beam_coeffs, 0.1, 1.0)
    with pytest.raises(ValueError):
        solve_nls(A0, beam_coeffs, 1.0, 0.5)
    with pytest.raises(NLSBlowup):
        solve_nls(A0, beam_coeffs, 0.2, 1e-3, blowup_factor=0.5)


def test_nls_step_reversible(beam_coeffs):
    A0 = _soliton(beam_coeffs, 0.1, 1.0)
    A0 = A0.with_A(A0.A * (1.0 + 0.3 * np.cos(0.5 * A0.X)))
    back = nls_step(nls_step(A0, beam_coeffs, 1e-2, 10), beam_coeffs, -1e-2, 10)
    assert np.max(np.abs(back.A - A0.A)) < 1e-12
    assert back.T == pytest.approx(0.0, abs=1e-15)


def test_bandlimit_projection(beam_coeffs):
    g = make_grid(1.0, 0.1, 40.0, 2, "gaussian")
    A = gaussian_envelope(g, 0.1, beam_coeffs, 1.0, 40.0)
    A1 = bandlimit(A, 1 / 32)
    A2 = bandlimit(A1, 1 / 32)
    np.testing.assert_allclose(A2.A, A1.A, atol=1e-15)
    # this wide envelope already lies inside the window
    assert np.max(np.abs(A1.A - A.A)) < 1e-12
    with pytest.raises(ValueError):
        bandlimit(A, 0.05)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_bandlimit_tail_bound(beam_coeffs, eps):
    # [DERIVED] direct spectral-tail computation, s = 1, s_A = 7
    delta = 1 / 32
    g = make_grid(1.0, eps, 1.0, 2, "gaussian")
    A = gaussian_envelope(g, eps, beam_coeffs, 1.0, 1.0)
    A1 = bandlimit(A, delta)
    tail = sobolev_norm(A.field() - A1.field(), 1)
    assert tail > 0
    assert tail <= (eps / delta) ** 6 * sobolev_norm(A.field(), 7)


def test_wave_packet_properties(beam_coeffs):
    eps, delta = 0.1, 1 / 32
    A = bandlimit(_soliton(beam_coeffs, eps, 0.5), delta)
    ap = wave_packet(A, beam_coeffs, t=3.0)
    g = A.grid
    c = ap.pair.u_minus.coefficients
    assert ap.pair.u_minus.hermitian_defect() < 1e-14
    assert not np.any(ap.pair.u_plus.coefficients)
    outside = np.abs(np.abs(g.k) - 1.0) > delta + 1e-12
    assert np.max(np.abs(c[outside])) <= 1e-14 * np.max(np.abs(c))
    z = wave_packet(A.with_A(np.zeros_like(A.A)), beam_coeffs)
    assert not np.any(z.pair.u_minus.coefficients)


def test_wave_packet_physical_is_real(beam_coeffs):
    A = _soliton(beam_coeffs, 0.1, 0.5)
    u = to_physical(A.grid, wave_packet(A, beam_coeffs, t=1.3).pair.u_minus.coefficients)
    assert np.max(np.abs(u.imag)) < 1e-12


def test_off_lattice_carrier(beam_coeffs):
    A = _soliton(beam_coeffs, 0.1, 0.5)
    other = dataclasses.replace(beam_coeffs, k0=1.0 + 1e-3)
    with pytest.raises(ValueError):
        carrier_field(A, other, 0.0)


def test_zero_rho_corrections_vanish(beam):
    coeffs = nls_coefficients(beam, zero_symbol(), 1.0)
    A = bandlimit(_soliton(nls_coefficients(beam, beam, 1.0), 0.1, 0.5), 1 / 32)
    ap = second_order_corrections(A, beam, zero_symbol(), coeffs)
    lead = wave_packet(A, coeffs)
    np.testing.assert_array_equal(ap.pair.u_minus.coefficients, lead.pair.u_minus.coefficients)
    assert not np.any(ap.pair.u_plus.coefficients)


@pytest.mark.parametrize("t", [0.0, 0.37])
def test_constant_envelope_second_harmonic(beam, beam_coeffs, t):
    # [DERIVED] independent 2x2 solve in the undiagonalised variables:
    # -i 2w0 U = -i w V,  -i 2w0 V = -i w U - i rho F
    eps, a = 0.1, 0.6 - 0.3j
    g = make_grid(1.0, eps, 1.0, 2)
    A = EnvelopeState(np.full(g.n_points, a), 0.0, eps, beam_coeffs.cg, 1.0, g)
    ap = second_order_corrections(A, beam, beam, beam_coeffs, t=t)
    F = a**2 * np.exp(-2j * beam_coeffs.omega0 * t)
    w, r, w0 = beam.eval(2.0), beam.eval(2.0), beam_coeffs.omega0
    M = np.array([[2 * w0, -w], [w, -2 * w0]], dtype=complex)
    U, V = np.linalg.solve(M, np.array([0.0, -r * F]))
    s = g.slot(2 * g.k0_index)
    cm = ap.pair.u_minus.coefficients[s] / eps**2
    cp = ap.pair.u_plus.coefficients[s] / eps**2
    assert cm + cp == pytest.approx(U, rel=1e-12)
    assert cm - cp == pytest.approx(V, rel=1e-12)
    # the nu2 structure: rho(2k0) w(2k0) / (4 w0^2 - w(2k0)^2) = -4/3
    assert U / F == pytest.approx(-4.0 / 3.0, rel=1e-12)


def test_corrected_packet_is_real_and_supported(beam, beam_coeffs):
    eps, delta = 0.1, 1 / 32
    A = bandlimit(_soliton(beam_coeffs, eps, 0.5), delta)
    ap = second_order_corrections(A, beam, beam, beam_coeffs, t=0.4)
    k = A.grid.k
    for f in (ap.pair.u_minus, ap.pair.u_plus):
        assert f.hermitian_defect() < 1e-13
        near = np.min(np.abs(k[:, None] - np.array([-2, -1, 0, 1, 2])[None, :]), axis=1)
        c = f.coefficients
        assert np.max(np.abs(c[near > 2 * delta + 1e-12])) <= 1e-14 * np.max(np.abs(c))


def test_near_resonance_guard():
    beam = builtin("beam")
    coeffs = nls_coefficients(beam, beam, 1.0)
    # omega = k puts the second harmonic exactly on the linear dispersion curve
    bad = builtin("poly_sign", {"coeffs": [0.0, 1.0]})
    g = make_grid(1.0, 0.1, 1.0, 2)
    bad_coeffs = dataclasses.replace(coeffs, omega0=1.0, cg=1.0)
    with pytest.raises(NearResonanceError):
        CorrectionOperator.build(g, bad, bad, bad_coeffs)


def test_corrections_scale_three_halves(beam, beam_coeffs):
    # |eps Psi - eps psi_NLS|_{H^7} = O(eps^{3/2}) for the uncut envelope
    eps_list = [0.2, 0.1, 0.05]
    vals = []
    for eps in eps_list:
        A = _soliton(beam_coeffs, eps, 0.5)
        ap = PacketModel(beam, beam, beam_coeffs, A.grid, eps, "corrected").build(A)
        lead = PacketModel(beam, beam, beam_coeffs, A.grid, eps, "leading").build(A)
        d = ap.pair - lead.pair
        vals.append(math.hypot(sobolev_norm(d.u_minus, 7), sobolev_norm(d.u_plus, 7)))
    assert fit_power_law(eps_list, vals).slope == pytest.approx(1.5, abs=0.1)


def test_carrier_time_derivative_scaling(beam, beam_coeffs):
    # |d_t psi_1 + i omega psi_1|_{L^1(s)} = O(eps^2), d_t by centered differences
    eps_list = [0.2, 0.1, 0.05]
    vals = []
    for eps in eps_list:
        A = _soliton(beam_coeffs, eps, 0.5)
        model = PacketModel(beam, beam, beam_coeffs, A.grid, eps, "leading")
        dT = 1e-3 * eps**2
        fwd = model.build(nls_step(A, beam_coeffs, dT, 1)).psi_c
        bwd = model.build(nls_step(A, beam_coeffs, -dT, 1)).psi_c
        mid = model.build(A).psi_c
        dpsi = (fwd - bwd) * (eps**2 / (2 * dT))
        r = dpsi + SpectralField(A.grid, 1j * beam.eval(A.grid.k) * mid.coefficients)
        p1, _ = split_carriers(r)
        vals.append(l1s_norm(p1, 4))
    assert fit_power_law(eps_list, vals).slope == pytest.approx(2.0, abs=0.15)


def test_weight_examples():
    w = WeightOperator(1 / 32, 0.1)
    assert w.values(0.0) == pytest.approx(0.1)
    assert w.values(0.0, inverse=True) == pytest.approx(10.0)
    assert w.values(1 / 32) == pytest.approx(1.0)
    assert w.values(0.5) == 1.0 and w.values(0.5, inverse=True) == 1.0
    assert w.values(0.05, truncated=True) == 0.0
    with pytest.raises(WeightError):
        w.values(0.1, inverse=True, truncated=True)
    with pytest.raises(WeightError):
        WeightOperator(1 / 32, 0.0)
    assert WeightOperator(1 / 32, 0.0, "identity").values(0.0) == 1.0


def test_weight_apply_leaves_high_modes():
    g = make_grid(1.0, 0.1, 1.0, 2)
    w = WeightOperator(1 / 32, 0.1)
    m = SpectralField.mode(g, g.k0_index, 1.0)
    for inv in (False, True):
        np.testing.assert_array_equal(weight_apply(m, w, inverse=inv).coefficients, m.coefficients)
    np.testing.assert_array_equal(weight_apply(m, w, truncated=True).coefficients, m.coefficients)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-3, max_value=0.9), st.floats(min_value=1e-3, max_value=0.049))
def test_weight_inequality(eps, delta):
    w = WeightOperator(delta, eps)
    k = np.linspace(-5 * delta, 5 * delta, 2001)
    v = w.values(k)
    assert np.all(np.abs(k / v) <= 1 + np.abs(k) + 1e-12)
    assert v.min() == pytest.approx(eps)
    assert np.all(v <= 1.0 + 1e-15)


def test_default_weight_modes(beam):
    assert default_weight_mode(beam, 1.0) == "weighted"
    g = builtin("poly_sign", {"coeffs": [1.0, 0.0, 1.0]})
    assert default_weight_mode(g, 1.0) == "identity"
