import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GROW_PARAMS, REGIMES, window_times
from ctpt import PhysicalParams, phi, ScaleProfile, analytic_solution, energy, evaluate, make_grid
from ctpt.checks import expval_coefficient_adjudication
from ctpt.observables import (closed_form_moments, expval_H, expval_H_closed, expval_H_oracle, numeric_moments,
                              probability_density, uncertainty_product)
from ctpt.transforms import support_grid

P = PhysicalParams()
CONST = ScaleProfile.constant(P)


def test_ground_state_moments():
    m = closed_form_moments(0, CONST, P, 0.0)
    assert m.x_mean == pytest.approx(-1j)
    assert m.p_mean == 0
    assert m.product == pytest.approx(0.5)
    assert m.source == "closed-form"


def test_first_excited_product():
    assert closed_form_moments(1, CONST, P, 2.0).product == pytest.approx(1.5)


def test_product_with_unit_rate():
    # |hbar adot / (2 omega0 alpha)| = 1 for Caldirola-Kanai at omega^2 - omega0^2 = 1
    prof = REGIMES["caldirola_kanai"]
    for t in (0.0, 1.3):
        assert closed_form_moments(0, prof, GROW_PARAMS, t).product == pytest.approx(0.5 * math.sqrt(2))
        assert uncertainty_product(0, prof, t) == pytest.approx(0.5 * math.sqrt(2))


def test_closed_form_product_matches_formula(regime):
    name, prof = regime
    for t in window_times(name, 5):
        for n in range(5):
            m = closed_form_moments(n, prof, prof.params, t)
            assert m.product == pytest.approx(uncertainty_product(n, prof, t), rel=1e-12)
            assert m.dx > 0 and m.dp > 0


def test_uncertainty_bound(regime):
    name, prof = regime
    for t in window_times(name, 9):
        adot = evaluate(prof, t).dalpha
        for n in range(5):
            u = uncertainty_product(n, prof, t)
            assert u >= (n + 0.5) * prof.params.hbar
            if adot == 0:
                assert u == (n + 0.5) * prof.params.hbar


@pytest.mark.parametrize("n,name,t,tol", [(0, "constant", 0.0, 1e-6), (1, "caldirola_kanai", 0.7, 1e-5),
                                          (2, "trig", 1.0, 1e-5), (3, "cosh", 1.5, 1e-5)])
def test_numeric_moments_match_closed_form(n, name, t, tol):
    prof = REGIMES[name]
    g = support_grid(prof, [t], n, resolution=0.05, widen=1.5)
    num = numeric_moments(analytic_solution(n, prof, prof.params, t, g), prof, prof.params, t)
    ref = closed_form_moments(n, prof, prof.params, t)
    for field in ("x_mean", "x2_mean", "p_mean", "p2_mean", "dx", "dp", "product"):
        assert getattr(num, field) == pytest.approx(getattr(ref, field), abs=tol), field
    assert abs(num.x_mean.real) <= 1e-8
    assert num.norm == pytest.approx(1.0, abs=1e-8)
    assert num.source == "numerical"


def test_numeric_moments_are_normalised():
    # scaling the state leaves the moments unchanged
    prof = REGIMES["cosh"]
    g = support_grid(prof, [0.5], 1, resolution=0.05, widen=1.5)
    w = analytic_solution(1, prof, prof.params, 0.5, g)
    a = numeric_moments(w, prof, prof.params, 0.5)
    b = numeric_moments(w.with_amplitudes(3j * w.amplitudes), prof, prof.params, 0.5)
    assert b.x2_mean == pytest.approx(a.x2_mean, rel=1e-12)
    assert b.norm == pytest.approx(9 * a.norm, rel=1e-12)


def test_expval_constant_is_energy():
    for n in range(5):
        assert expval_H(n, CONST, P, 0.7) == energy(n, P)


def test_expval_caldirola_kanai_at_zero():
    # E_0 = 1 and (m0 addot / 4 alpha) <x^2>_chi = 1 * (0.5 - 1)
    assert expval_H(0, REGIMES["caldirola_kanai"], GROW_PARAMS, 0.0) == pytest.approx(0.5, abs=1e-14)


def test_expval_is_real_and_oracle_agrees(regime):
    name, prof = regime
    for t in window_times(name, 4):
        for n in (0, 2, 4):
            closed = expval_H(n, prof, prof.params, t)
            assert closed.imag == 0
            oracle = expval_H_oracle(n, prof, prof.params, t)
            assert abs(oracle.value.imag) <= 1e-6
            assert oracle.residual <= 1e-6


def test_expval_route_and_params_validation():
    with pytest.raises(ValueError, match="route"):
        expval_H(0, CONST, P, 0.0, route="other")
    with pytest.raises(ValueError, match="match"):
        expval_H(0, REGIMES["cosh"], P, 0.0)
    with pytest.raises(ValueError, match="variant"):
        expval_H_closed(0, CONST, P, 0.0, variant="x")


def test_coefficient_adjudication_picks_alpha_variant():
    res = expval_coefficient_adjudication(REGIMES["caldirola_kanai"], 1, 0.7)
    assert res.variant == "m0*addot/(4*alpha)"
    assert res.passed
    assert res.detail["residuals"]["m0*addot/4"] > 1e-2


def test_density_ground_state_is_gaussian(regime):
    name, prof = regime
    g = make_grid()
    gauss = np.abs(phi(0, g.x, prof.params)) ** 2  # exp(-x^2)/sqrt(pi) at unit parameters
    lo, hi = window_times(name, 2)
    for t in (lo, 0.5 * (lo + hi)):
        d = probability_density(0, prof, prof.params, t, g)
        assert np.max(np.abs(d - gauss)) <= 1e-6
        assert g.integrate(d) == pytest.approx(1.0, abs=1e-8)


def test_density_time_independent():
    prof = REGIMES["caldirola_kanai"]
    g = make_grid()
    a = probability_density(3, prof, GROW_PARAMS, 0.0, g)
    b = probability_density(3, prof, GROW_PARAMS, 1.3, g)
    assert np.max(np.abs(a - b)) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(REGIMES)), st.floats(0.0, 1.0), st.integers(0, 6))
def test_expval_closed_form_real_property(name, frac, n):
    prof = REGIMES[name]
    lo, hi = window_times(name, 2)
    t = lo + frac * (hi - lo)
    val = expval_H(n, prof, prof.params, t)
    assert val.imag == 0 and math.isfinite(val.real)
