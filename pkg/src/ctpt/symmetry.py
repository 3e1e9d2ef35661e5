"""Parity, time reversal, the maps U and C, and the four inner products."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.linalg import expm

from .hermite import OperatorMatrix, operator_matrix
from .model import (
    DEFAULT_DIM,
    TRUNCATION_TOL,
    BasisExpansion,
    GridWave,
    PhysicalParams,
    project,
)

EXPONENT_LIMIT = 50.0
MIN_EXP_DIM = 16


class ExponentialRangeError(ValueError):
    """exp(+-shift*p/hbar) is too large to represent on the truncated basis."""


def apply_parity(wave: GridWave) -> GridWave:
    g = wave.grid
    if g.x_min != -g.x_max:
        raise ValueError("parity needs a grid symmetric about the origin")
    return wave.with_amplitudes(wave.amplitudes[::-1])


def apply_time_reversal(wave: GridWave) -> GridWave:
    return wave.with_amplitudes(np.conj(wave.amplitudes))


def parity_matrix(dim: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(dim)).astype(complex)


def exponent_scale(params: PhysicalParams, dim: int) -> float:
    """shift/hbar times the largest |p| representable with ``dim`` modes."""
    return params.shift / params.hbar * math.sqrt(2 * dim * params.hbar * params.m0 * params.omega0)


def _check_range(params, dim):
    if dim < MIN_EXP_DIM:
        raise ValueError(f"dim must be at least {MIN_EXP_DIM} for the matrix exponential")
    scale = exponent_scale(params, dim)
    if scale >= EXPONENT_LIMIT:
        raise ExponentialRangeError(
            f"shift*sqrt(2N m0 W0/hbar) = {scale:.3g} >= {EXPONENT_LIMIT}: the truncated "
            f"exponential would overflow precision; reduce dim or the shift 1/(m0 W0^2)"
        )


@lru_cache(maxsize=32)
def _expm_p(params, dim, factor):
    p = operator_matrix("p", params, dim).entries
    out = expm(factor * params.shift / params.hbar * p)
    out.setflags(write=False)
    return out


def build_U_matrix(params: PhysicalParams, dim: int = DEFAULT_DIM, inverse: bool = False) -> OperatorMatrix:
    """exp(-shift*p/hbar) (or its inverse) on the truncated phi_n basis.

    U phi_n(x) = phi_n(x + i*shift), which is chi_n.
    """
    _check_range(params, dim)
    return OperatorMatrix("U_inv" if inverse else "U", _expm_p(params, dim, 1.0 if inverse else -1.0))


@lru_cache(maxsize=32)
def _c_entries(params, dim):
    out = _expm_p(params, dim, -2.0) @ parity_matrix(dim)
    out.setflags(write=False)
    return out


def build_C_matrix(params: PhysicalParams, dim: int = DEFAULT_DIM) -> OperatorMatrix:
    """C = exp(-2 shift p/hbar) P = P exp(2 shift p/hbar).

    This ordering is the one with C chi_n = (-1)^n chi_n and [C, H0pt] = 0.
    """
    _check_range(params, dim)
    return OperatorMatrix("C", _c_entries(params, dim))


def chi_coefficients(params: PhysicalParams, n: int, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Coefficients of chi_n = U phi_n over phi_0..phi_{dim-1}."""
    return np.array(build_U_matrix(params, dim).entries[:, n])


def pt_coefficients(coeffs) -> np.ndarray:
    """Coefficients of PT f given those of f (phi_n is real with parity (-1)^n)."""
    c = np.asarray(coeffs)
    return ((-1.0) ** np.arange(c.size)) * np.conj(c)


def cpt_form(params: PhysicalParams, cf, cg) -> complex:
    """Bilinear form int [CPT f](x) g(x) dx from basis coefficients."""
    cf = np.asarray(cf)
    C = build_C_matrix(params, cf.size).entries
    v = C @ pt_coefficients(cf)
    return complex(v @ np.asarray(cg))


def pt_form(cf, cg) -> complex:
    return complex(pt_coefficients(cf) @ np.asarray(cg))


@dataclass(frozen=True)
class InnerProductKind:
    kind: Literal["L2", "PT", "CPT", "CtPT"]
    t: float = 0.0
    profile: object = None

    def __post_init__(self):
        if self.kind not in ("L2", "PT", "CPT", "CtPT"):
            raise ValueError(f"unknown inner product {self.kind!r}")
        if self.kind == "CtPT" and self.profile is None:
            raise ValueError("CtPT needs a ScaleProfile")


def _coeffs(state, params, dim):
    if isinstance(state, BasisExpansion):
        c = state.coeffs
        if c.size < dim:
            c = np.pad(c, (0, dim - c.size))
        return c[:dim], state
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exp = project(state, params, dim)
    if exp.diagnostics.get("boundary_warning"):
        warnings.warn(
            f"projection near the grid edge (boundary magnitude "
            f"{exp.diagnostics['boundary_magnitude']:.2e})", RuntimeWarning, stacklevel=3)
    return exp.coeffs, exp


def inner_product(kind, f, g, params: PhysicalParams | None = None, dim: int = DEFAULT_DIM) -> complex:
    """One of the L2, PT, CPT or C(t)PT products of two states.

    ``f`` and ``g`` are both :class:`GridWave` on one grid, or both
    :class:`BasisExpansion`.  L2 and PT are evaluated on the grid when
    possible; CPT is always the basis form sum_n (C c_PTf)_n c_g,n; C(t)PT is
    the CPT product of F(t) f and F(t) g.
    """
    if isinstance(kind, str):
        kind = InnerProductKind(kind)
    if params is None:
        params = getattr(f, "params", None) or getattr(kind.profile, "params", None)
    grid_states = isinstance(f, GridWave) and isinstance(g, GridWave)
    if grid_states and f.grid != g.grid:
        raise ValueError("states live on different grids")
    if kind.kind == "L2":
        if grid_states:
            return complex(f.grid.integrate(np.conj(f.amplitudes) * g.amplitudes))
        return complex(np.vdot(f.coeffs, g.coeffs))
    if kind.kind == "PT":
        if grid_states:
            ptf = np.conj(f.amplitudes[::-1])
            return complex(f.grid.integrate(ptf * g.amplitudes))
        return pt_form(f.coeffs, g.coeffs)
    if params is None:
        raise ValueError("CPT products need PhysicalParams")
    if kind.kind == "CtPT":
        if not grid_states:
            raise TypeError("C(t)PT products are defined for grid states")
        from .transforms import TransformSpec, apply_F

        spec = TransformSpec(kind.profile, kind.t)
        f, g = apply_F(f, spec), apply_F(g, spec)
    cf, ef = _coeffs(f, params, dim)
    cg, eg = _coeffs(g, params, dim)
    for e in (ef, eg):
        if not e.converged(TRUNCATION_TOL):
            warnings.warn(f"basis expansion not converged (tail mass {e.tail_mass():.2e})",
                          RuntimeWarning, stacklevel=2)
    return cpt_form(params, cf, cg)


def apply_C_t(wave: GridWave, profile, t: float, dim: int = DEFAULT_DIM) -> GridWave:
    """C(t) = F^+(t) C F(t) acting on a grid state."""
    from .model import synthesize
    from .transforms import TransformSpec, apply_F

    params = profile.params
    chi = apply_F(wave, TransformSpec(profile, t))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = project(chi, params, dim)
    out = BasisExpansion(params, build_C_matrix(params, dim).entries @ c.coeffs)
    return apply_F(synthesize(out, wave.grid), TransformSpec(profile, t, adjoint=True))
