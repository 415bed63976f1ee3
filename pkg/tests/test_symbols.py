
import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasinls.symbols import (SymbolError, builtin, describe, eval_derivative, from_config, loglog_slope,
                              sample_oddness, verify_hypotheses)

BUILTINS = [("beam", {}), ("gravity_capillary", {"b": 0.0}), ("gravity_capillary", {"b": 0.2}),
            ("ice_cover", {}), ("poly_sign", {"coeffs": [0, 1, 0, 1]})]


def test_beam_values(beam):
    # [TRIVIAL] sign(k) k^2
    assert beam.eval(1.0) == 1.0
    assert beam.eval(-2.0) == -4.0
    assert beam.eval(0.0) == 0.0


def test_gravity_no_tension_matches_mpmath():
    # [DERIVED] high-precision scalar oracle of sqrt(k tanh k)
    sym = builtin("gravity_capillary", {"b": 0.0})
    with mpmath.workdps(40):
        ref = float(mpmath.sqrt(10 * mpmath.tanh(10)))
    assert sym.eval(10.0) == pytest.approx(ref, rel=1e-14)


def test_gravity_capillary_matches_closed_form():
    # [DERIVED] direct evaluation of sqrt(k tanh k (1 + b k^2))
    sym = builtin("gravity_capillary", {"b": 0.2})
    k = np.array([0.3, 1.0, 4.0])
    np.testing.assert_allclose(sym.eval(k), np.sqrt(k * np.tanh(k) * (1 + 0.2 * k**2)), rtol=1e-14)


def test_ice_cover_matches_closed_form():
    sym = builtin("ice_cover")
    k = np.array([0.5, 1.0, 3.0])
    t = k * np.tanh(k)
    np.testing.assert_allclose(sym.eval(k), np.sqrt(t / (1 + t) * (1 + k**2 + k**4)), rtol=1e-14)


def test_unknown_and_negative_tension():
    with pytest.raises(SymbolError):
        builtin("nope")
    with pytest.raises(SymbolError):
        builtin("gravity_capillary", {"b": -1.0})
    with pytest.raises(SymbolError):
        builtin("poly_sign")


@pytest.mark.parametrize("name,params", BUILTINS)
def test_oddness(name, params):
    sym = builtin(name, params)
    ks = np.linspace(0.01, 50, 997)
    assert sample_oddness(sym, ks) == 0.0


@pytest.mark.parametrize("name,params", BUILTINS)
def test_degree_slope(name, params):
    sym = builtin(name, params)
    assert loglog_slope(sym, 0) == pytest.approx(sym.degree, abs=0.05)


@pytest.mark.parametrize("name,params", BUILTINS)
def test_growth_bounded_by_degree(name, params):
    sym = builtin(name, params)
    ks = np.geomspace(10, 1e4, 60)
    ratio = np.abs(sym.eval(ks)) / (1 + ks) ** sym.degree
    assert ratio.max() < 10 and ratio.min() > 0.1


def test_beam_derivatives(beam):
    # [TRIVIAL] 2|k|, 2 sign(k), and 0 at 0+
    assert eval_derivative(beam, 1.0, 1) == 2.0
    assert eval_derivative(beam, 1.0, 2) == 2.0
    assert eval_derivative(beam, 0.0, 1, side="+") == 0.0
    assert eval_derivative(beam, -1.5, 1) == 3.0
    assert eval_derivative(beam, -1.5, 2) == -2.0


def test_derivative_errors(beam):
    with pytest.raises(SymbolError):
        eval_derivative(beam, 1.0, beam.m_order + 1)
    with pytest.raises(SymbolError):
        eval_derivative(beam, 0.0, 1)
    with pytest.raises(SymbolError):
        eval_derivative(beam, 0.0, 1, side="x")


@pytest.mark.parametrize("name,params", BUILTINS)
@pytest.mark.parametrize("n", [1, 2])
def test_analytic_vs_finite_difference(name, params, n):
    sym = builtin(name, params)
    for k in (0.5, 1.0, 2.0, 5.0, 10.0):
        exact = eval_derivative(sym, k, n)
        h = 1e-3 * (1 + k)
        if n == 1:
            fd = (sym.eval(k + h) - sym.eval(k - h)) / (2 * h)
        else:
            fd = (sym.eval(k + h) - 2 * sym.eval(k) + sym.eval(k - h)) / h**2
        assert fd == pytest.approx(exact, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("name,params", BUILTINS)
def test_finite_difference_route_matches(name, params):
    sym = builtin(name, params)
    for k in (0.5, 2.0, 10.0):
        a = eval_derivative(sym, k, 1)
        b = eval_derivative(sym, k, 1, step=1e-5 * (1 + k))
        assert b == pytest.approx(a, rel=1e-6)


def test_verify_beam():
    # [DERIVED] slope of 2|k| is 1 = 2 - 1; m = max(5, 3)
    beam = builtin("beam")
    rep = verify_hypotheses(beam, beam)
    assert rep.all_pass
    assert rep.smoothness_order_checked == 5
    assert rep.omega_slopes[0] == pytest.approx(1.0, abs=0.01)


def test_verify_ice_cover():
    ice = builtin("ice_cover")
    assert verify_hypotheses(ice, ice).deg_rho_le_deg_omega


def test_verify_cubic_rho_fails():
    # [TRIVIAL] 3 > 2
    rep = verify_hypotheses(builtin("beam"), builtin("poly_sign", {"coeffs": [0, 0, 0, 1]}))
    assert not rep.deg_rho_le_deg_omega
    assert not rep.all_pass


def test_report_deterministic():
    g = builtin("gravity_capillary", {"b": 0.2})
    assert verify_hypotheses(g, g).to_dict() == verify_hypotheses(g, g).to_dict()


def test_from_config_and_describe():
    sym = from_config({"name": "gravity_capillary", "b": 0.5})
    d = describe(sym)
    assert d["name"] == "gravity_capillary" and d["params"]["b"] == 0.5
    assert d["degree"] == 1.5
    assert describe(builtin("beam"))["limit_zero_plus"] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_beam_oddness_property(k):
    beam = builtin("beam")
    assert beam.eval(-k) == -beam.eval(k)
    assert beam.eval(k) == pytest.approx(k * k, rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=-3, max_value=3), min_size=1, max_size=5),
       st.floats(min_value=0.1, max_value=20))
def test_poly_sign_evaluates_polynomial(coeffs, k):
    sym = builtin("poly_sign", {"coeffs": coeffs})
    ref = sum(c * k**i for i, c in enumerate(coeffs))
    assert sym.eval(k) == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert sym.eval(-k) == pytest.approx(-ref, rel=1e-12, abs=1e-12)
