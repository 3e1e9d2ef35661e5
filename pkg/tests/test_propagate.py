import math
import warnings

import numpy as np
import pytest

from conftest import GROW_PARAMS, REGIMES
from ctpt import (BasisExpansion, GridWave, InnerProductKind, PhysicalParams, ScaleProfile, TimeSeries,
                  analytic_solution, apply_H, energy, inner_product, make_grid, operator_matrix, phi,
                  propagate_numeric, synthesize)
from ctpt.propagate import BoundaryLeakWarning, StepSizeError, analytic_state, chi_function
from ctpt.symmetry import chi_coefficients
from ctpt.transforms import support_grid

P = PhysicalParams()
CONST = ScaleProfile.constant(P)


def test_apply_H_hermitian_oscillator():
    g = make_grid()
    w = GridWave(g, phi(0, g.x, P).astype(complex))
    hw = apply_H(w, CONST, P, 0.0, drive=0.0)
    assert np.max(np.abs(hw.amplitudes - 0.5 * w.amplitudes)) <= 1e-6


def test_apply_H_matches_basis_matrix():
    g = make_grid()
    chi = GridWave(g, chi_function(0, P)(g.x))
    hchi = apply_H(chi, CONST, P, 0.0)
    coeffs = operator_matrix("H0pt", P, 64).entries @ chi_coefficients(P, 0, 64)
    ref = synthesize(BasisExpansion(P, coeffs), g)
    assert np.max(np.abs(hchi.amplitudes - ref.amplitudes)) <= 1e-6
    assert np.max(np.abs(hchi.amplitudes - energy(0, P) * chi.amplitudes)) <= 1e-6


def test_apply_H_zero():
    g = make_grid()
    z = GridWave(g, np.zeros(g.n_points, complex))
    assert not np.any(apply_H(z, REGIMES["cosh"], GROW_PARAMS, 0.5).amplitudes)


def test_hermitian_reduction_conserves_l2():
    g = make_grid()
    psi0 = GridWave(g, (phi(0, g.x - 0.5, P) + 0.5j * phi(1, g.x, P)).astype(complex))
    ts = propagate_numeric(psi0, CONST, P, 5.0, 1e-3, stride=500, drive=0.0)
    norms = [ts.wave(i).norm_l2() for i in range(len(ts))]
    assert max(abs(n - norms[0]) for n in norms) <= 1e-8


def test_caldirola_kanai_against_analytic():
    prof = REGIMES["caldirola_kanai"]
    g = support_grid(prof, np.linspace(0, 1, 11))
    ts = propagate_numeric(analytic_solution(0, prof, GROW_PARAMS, 0.0, g), prof, GROW_PARAMS, 1.0, 1e-3, stride=250)
    for i, t in enumerate(ts.times):
        err = np.max(np.abs(ts.snapshots[i] - analytic_solution(0, prof, GROW_PARAMS, t, g).amplitudes))
        assert err <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("name", ["trig", "cosh", "caldirola_kanai"])
def test_oracle_equivalence(name):
    prof = REGIMES[name]
    p = prof.params
    t_final = 1.2 if name == "trig" else 2.0
    dt = 5e-4
    g = support_grid(prof, np.linspace(0, t_final, 21), 2, resolution=0.2)
    steps = int(round(t_final / dt))
    for n in range(3):
        ts = propagate_numeric(analytic_solution(n, prof, p, 0.0, g), prof, p, t_final, dt, stride=steps // 4)
        for i, t in enumerate(ts.times):
            err = np.max(np.abs(ts.snapshots[i] - analytic_solution(n, prof, p, t, g).amplitudes))
            assert err <= 1e-4, (n, t, err)


def test_linearity():
    prof = REGIMES["cosh"]
    g = support_grid(prof, [0, 0.5], 1, resolution=0.2)
    a = analytic_solution(0, prof, GROW_PARAMS, 0.0, g)
    b = analytic_solution(1, prof, GROW_PARAMS, 0.0, g)
    c1, c2 = 0.7 - 0.2j, 1.3j
    run = lambda w: propagate_numeric(w, prof, GROW_PARAMS, 0.5, 1e-3, stride=500).snapshots[-1]  # noqa: E731
    combo = run(a.with_amplitudes(c1 * a.amplitudes + c2 * b.amplitudes))
    sep = c1 * run(a) + c2 * run(b)
    assert np.max(np.abs(combo - sep)) <= 1e-10


def test_step_bound():
    g = make_grid()
    w = GridWave(g, phi(0, g.x, P).astype(complex))
    with pytest.raises(StepSizeError, match="bound"):
        propagate_numeric(w, CONST, P, 1.0, 1.0)
    with pytest.raises(ValueError, match="whole number"):
        propagate_numeric(w, CONST, P, 1.0, 3e-4)
    with pytest.raises(ValueError, match="stride"):
        propagate_numeric(w, CONST, P, 1.0, 1e-3, stride=3)


def test_boundary_leak_warning():
    g = make_grid(-4, 4, 201)
    w = GridWave(g, np.exp(-(g.x - 2.5) ** 2).astype(complex))
    with pytest.warns(BoundaryLeakWarning):
        ts = propagate_numeric(w, CONST, P, 0.1, 1e-3, stride=100, drive=0.0)
    assert ts.diagnostics["edge_fraction"] > 1e-6
    assert ts.diagnostics["steps"] == 100


def test_snapshot_times():
    g = make_grid(-8, 8, 257)
    w = GridWave(g, phi(0, g.x, P).astype(complex))
    ts = propagate_numeric(w, CONST, P, 0.2, 1e-3, stride=50, t0=1.0)
    np.testing.assert_allclose(ts.times, [1.0, 1.05, 1.1, 1.15, 1.2])
    np.testing.assert_array_equal(ts.snapshots[0], w.amplitudes)


def test_timeseries_invariants():
    with pytest.raises(ValueError, match="increasing"):
        TimeSeries(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 1.0]), {"a": np.zeros(3)})
    ts = TimeSeries(np.array([0.0, 1.0])).with_fields(a=[1, 2])
    assert list(ts.fields["a"]) == [1, 2]


def test_analytic_solution_at_zero_is_chi():
    g = make_grid()
    for n in range(4):
        np.testing.assert_array_equal(analytic_solution(n, CONST, P, 0.0, g).amplitudes, chi_function(n, P)(g.x))


def test_analytic_phase_advance():
    g = make_grid()
    for n in (0, 3):
        a = analytic_solution(n, CONST, P, 0.4, g).amplitudes
        b = analytic_solution(n, CONST, P, 0.65, g).amplitudes
        np.testing.assert_allclose(b, a * np.exp(-1j * energy(n, P) * 0.25), atol=1e-13)


def test_analytic_ctpt_norm():
    prof = REGIMES["caldirola_kanai"]
    g = support_grid(prof, [1.0], 0, resolution=0.05)
    psi = analytic_solution(0, prof, GROW_PARAMS, 1.0, g)
    val = inner_product(InnerProductKind("CtPT", 1.0, prof), psi, psi)
    assert abs(val - 1) <= 1e-6


def test_analytic_state_is_linear():
    prof = REGIMES["trig"]
    p = prof.params
    g = make_grid(-15, 15, 1501)
    mix = analytic_state([0.5, 0.0, 2j], prof, p, 0.8, g).amplitudes
    sep = 0.5 * analytic_solution(0, prof, p, 0.8, g).amplitudes + 2j * analytic_solution(2, prof, p, 0.8, g).amplitudes
    np.testing.assert_allclose(mix, sep, atol=1e-13)


def test_analytic_requires_matching_params():
    with pytest.raises(ValueError, match="match"):
        analytic_solution(0, REGIMES["cosh"], P, 0.0, make_grid())
