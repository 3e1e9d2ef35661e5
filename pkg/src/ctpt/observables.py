"""Expectation values under the C(t)PT product, uncertainties and densities."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .hermite import energy
from .model import DEFAULT_DIM, DomainWarning, GridWave, PhysicalParams, SpatialGrid, make_grid, project, synthesize
from .profile import ScaleProfile, evaluate
from .propagate import analytic_solution, chi_function
from .symmetry import build_U_matrix, chi_coefficients, cpt_form
from .transforms import TIME_STEP, TransformSpec, apply_F, support_grid, transport

ORACLE_GRID = (-16.0, 16.0, 2049)


@dataclass(frozen=True)
class MomentReport:
    x_mean: complex
    x2_mean: complex
    p_mean: complex
    p2_mean: complex
    dx: float
    dp: float
    product: float
    source: Literal["closed-form", "numerical"]
    norm: complex = 1.0

    def energy(self, profile: ScaleProfile, t: float) -> complex:
        """<H(t)> assembled from the moments."""
        p = profile.params
        a = evaluate(profile, t).alpha
        return (self.p2_mean / (2 * p.m0 * a) + 0.5 * a * p.m0 * p.omega**2 * self.x2_mean
                + 1j * math.sqrt(a) * self.x_mean)


def _spread(second: complex, first: complex) -> float:
    # sqrt(<q^2> - <q>^2); the imaginary part vanishes up to rounding
    return math.sqrt(max((second - first * first).real, 0.0))


def closed_form_moments(n: int, profile: ScaleProfile, params: PhysicalParams, t: float) -> MomentReport:
    """C(t)PT moments of psi_n(t) = F^+(t) exp(-i E_n t) chi_n in closed form."""
    a, da, _ = evaluate(profile, t)
    m, w, hb = params.m0, params.omega0, params.hbar
    b = params.shift
    nh = hb * (n + 0.5)
    sa = math.sqrt(a)
    x1 = -1j * b / sa
    x2 = (nh / (m * w) - b * b) / a
    p1 = 1j * m * da * b / (2 * sa)
    p2 = nh * w * m * a + (m * da / 2) ** 2 * (nh / (m * w * a) - b * b / a)
    dx, dp = _spread(x2, x1), _spread(p2, p1)
    return MomentReport(x1, x2, p1, p2, dx, dp, dx * dp, "closed-form")


def uncertainty_product(n: int, profile: ScaleProfile, t: float) -> float:
    """hbar (n + 1/2) sqrt(1 + (adot / (2 omega0 alpha))^2)."""
    a, da, _ = evaluate(profile, t)
    p = profile.params
    return p.hbar * (n + 0.5) * math.sqrt(1 + (da / (2 * p.omega0 * a)) ** 2)


def _p_apply(amps: np.ndarray, h: float, hbar: float, power: int) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(amps.size, d=h)
    return np.fft.ifft((hbar * k) ** power * np.fft.fft(amps))


def numeric_moments(wave: GridWave, profile: ScaleProfile, params: PhysicalParams, t: float,
                    dim: int = DEFAULT_DIM) -> MomentReport:
    """Moments <psi|F^+ C P F A|psi> / <psi|F^+ C P F|psi> computed on the grid.

    x and x^2 act pointwise and p, p^2 spectrally in the physical frame; each
    image is carried to the chi frame by F(t), projected, and paired with the
    transported state through the CPT bilinear form.
    """
    spec = TransformSpec(profile, t)
    x = wave.grid.x
    psi = wave.amplitudes
    h = wave.grid.h
    images = {
        "x": x * psi,
        "x2": x * x * psi,
        "p": _p_apply(psi, h, params.hbar, 1),
        "p2": _p_apply(psi, h, params.hbar, 2),
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        base = project(apply_F(wave, spec), params, dim)
        coeffs = {k: project(apply_F(wave.with_amplitudes(v), spec), params, dim).coeffs
                  for k, v in images.items()}
    if base.diagnostics.get("boundary_warning"):
        warnings.warn("state reaches the grid edge; moments may be inaccurate", DomainWarning, stacklevel=2)
    norm = cpt_form(params, base.coeffs, base.coeffs)
    mom = {k: cpt_form(params, base.coeffs, c) / norm for k, c in coeffs.items()}
    dx, dp = _spread(mom["x2"], mom["x"]), _spread(mom["p2"], mom["p"])
    return MomentReport(mom["x"], mom["x2"], mom["p"], mom["p2"], dx, dp, dx * dp, "numerical", norm)


# --- <H(t)> ------------------------------------------------------------------

COEFFICIENT_VARIANTS = ("m0*addot/(4*alpha)", "m0*addot/4")


def expval_H_closed(n: int, profile: ScaleProfile, params: PhysicalParams, t: float,
                    variant: str = COEFFICIENT_VARIANTS[0]) -> float:
    """E_n + c(t) <x^2>_chi with c = m0 addot/(4 alpha) (default) or m0 addot/4."""
    a, _, dda = evaluate(profile, t)
    m, w, hb = params.m0, params.omega0, params.hbar
    x2_chi = hb * (n + 0.5) / (m * w) - params.shift**2
    if variant == COEFFICIENT_VARIANTS[0]:
        coef = m * dda / (4 * a)
    elif variant == COEFFICIENT_VARIANTS[1]:
        coef = m * dda / 4
    else:
        raise ValueError(f"unknown coefficient variant {variant!r}")
    return energy(n, params) + coef * x2_chi


@dataclass(frozen=True)
class OracleResult:
    value: complex
    closed_form: float
    residual: float


def expval_H_oracle(n: int, profile: ScaleProfile, params: PhysicalParams, t: float,
                    dim: int = DEFAULT_DIM, step: float = TIME_STEP) -> OracleResult:
    """E_n + <chi_n, i hbar F dF^+/dt chi_n>_CPT with dF^+/dt by centred differences.

    All frame maps act on exact callables, so the only numerical errors
    are the difference quotient and the quadrature of the projection.
    """
    chi = chi_function(n, params)
    fwd = transport(chi, profile, t + step, adjoint=True)
    bwd = transport(chi, profile, t - step, adjoint=True)
    g = transport(lambda x: (fwd(x) - bwd(x)) / (2 * step), profile, t)
    grid = make_grid(*ORACLE_GRID)
    with np.errstate(over="ignore", invalid="ignore"):
        samples = g(grid.x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        cg = project(GridWave(grid, samples), params, dim).coeffs
    term = 1j * params.hbar * cpt_form(params, chi_coefficients(params, n, dim), cg)
    value = energy(n, params) + term
    closed = expval_H_closed(n, profile, params, t)
    return OracleResult(complex(value), closed, abs(value - closed))


def expval_H(n: int, profile: ScaleProfile, params: PhysicalParams, t: float,
             route: Literal["closed-form", "oracle"] = "closed-form") -> complex:
    """<H(t)> in the state psi_n(t) under the C(t)PT product."""
    if params != profile.params:
        raise ValueError("params must match the profile's params")
    if route == "closed-form":
        return complex(expval_H_closed(n, profile, params, t))
    if route == "oracle":
        return expval_H_oracle(n, profile, params, t).value
    raise ValueError(f"unknown route {route!r}")


# --- densities ---------------------------------------------------------------

def probability_density(n: int, profile: ScaleProfile, params: PhysicalParams, t: float,
                        grid: SpatialGrid | None = None, dim: int = DEFAULT_DIM) -> np.ndarray:
    """|U^{-1} F(t) psi_n(x, t)|^2 sampled on ``grid``.

    psi_n is built on a working grid wide enough for its support, carried
    to the chi frame by F(t) on that grid, then mapped by U^{-1} in the
    oscillator basis.
    """
    if grid is None:
        grid = make_grid()
    work = support_grid(profile, [t], n, resolution=0.05, widen=1.5)
    psi = analytic_solution(n, profile, params, t, work)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        c = project(apply_F(psi, TransformSpec(profile, t)), params, dim)
    phi_c = build_U_matrix(params, dim, inverse=True).entries @ c.coeffs
    out = synthesize(c.__class__(params, phi_c), grid)
    return np.abs(out.amplitudes) ** 2
