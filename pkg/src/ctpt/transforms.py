"""The unitary frame maps F1 (dilation), F2 (quadratic phase) and F = F2 F1."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .hermite import operator_matrix
from .model import GridWave, PhysicalParams, SpatialGrid, basis_functions, make_grid
from .profile import ScaleProfile, check_auxiliary, evaluate

LEAK_TOL = 1e-10
AUX_TOL = 1e-8
TIME_STEP = 1e-5


class BoundaryLossWarning(UserWarning):
    """Part of the norm was mapped outside the grid by a dilation."""


@dataclass(frozen=True)
class TransformSpec:
    profile: ScaleProfile
    t: float
    adjoint: bool = False

    def __post_init__(self):
        # evaluating raises for singular or non-positive alpha
        evaluate(self.profile, self.t)

    def inverse(self) -> "TransformSpec":
        return TransformSpec(self.profile, self.t, not self.adjoint)


def chirp_rate(profile: ScaleProfile, t: float) -> float:
    """kappa with F2 = exp(i kappa x^2), kappa = m0 adot / (4 alpha hbar)."""
    a, da, _ = evaluate(profile, t)
    p = profile.params
    return p.m0 * da / (4 * a * p.hbar)


def _dilate(wave: GridWave, s: float) -> GridWave:
    """psi(x) -> s^{-1/2} psi(x / s), resampled by cubic interpolation."""
    g = wave.grid
    amps = wave.amplitudes
    x = g.x
    out = _kernels.cubic_interp(g.x_min, g.h, amps, x / s) / math.sqrt(s)
    # fraction of the norm that the map pushes past the grid edge
    outside = np.abs(x) > g.x_max / s
    dens = np.abs(amps) ** 2
    total = float(g.integrate(dens))
    leaked = float(np.sum(dens[outside]) * g.h) / total if (s > 1 and total > 0) else 0.0
    if leaked > LEAK_TOL:
        warnings.warn(f"dilation by {s:.4g} pushes {leaked:.2e} of the norm off the grid "
                      f"[{g.x_min}, {g.x_max}]", BoundaryLossWarning, stacklevel=3)
    return wave.with_amplitudes(out, leaked_norm=leaked)


def apply_F1(wave: GridWave, profile: ScaleProfile, t: float, adjoint: bool = False) -> GridWave:
    """(F1 psi)(x) = alpha^{-1/4} psi(x / sqrt(alpha)); the adjoint uses 1/alpha."""
    a = evaluate(profile, t).alpha
    if a == 1.0:
        return wave.with_amplitudes(wave.amplitudes, leaked_norm=0.0)
    s = math.sqrt(a)
    return _dilate(wave, 1.0 / s if adjoint else s)


def apply_F2(wave: GridWave, profile: ScaleProfile, t: float, adjoint: bool = False) -> GridWave:
    """Multiply by exp(+-i m0 adot x^2 / (4 alpha hbar))."""
    k = chirp_rate(profile, t)
    if k == 0.0:
        return wave.with_amplitudes(wave.amplitudes)
    x = wave.grid.x
    phase = np.exp((-1j if adjoint else 1j) * k * x * x)
    return wave.with_amplitudes(wave.amplitudes * phase)


def _roughness(amps: np.ndarray) -> float:
    """Relative size of the second difference, a proxy for interpolation error."""
    d2 = amps[2:] - 2 * amps[1:-1] + amps[:-2]
    return float(np.vdot(d2, d2).real / max(np.vdot(amps, amps).real, 1e-300))


def apply_F(wave: GridWave, spec: TransformSpec) -> GridWave:
    """F = F2 F1 (forward) or F^+ = F1^+ F2^+ (adjoint).

    Since F2 F1 = F1 M with M = exp(i kappa alpha x^2), the chirp can be
    applied on either side of the dilation.  Both orders are the same map;
    the one whose interpolated function is smoother is used, so states
    that carry the chirp of F^+ and plain smooth states both stay at the
    interpolation floor.
    """
    profile, t = spec.profile, spec.t
    a = evaluate(profile, t).alpha
    k = chirp_rate(profile, t)
    x = wave.grid.x
    if not k:
        return apply_F1(wave, profile, t, adjoint=spec.adjoint)
    sign = -1j if spec.adjoint else 1j
    inner = np.exp(sign * k * a * x * x)  # M (or M^+) applied before a forward dilation
    outer = np.exp(sign * k * x * x)  # F2 (or F2^+) applied after it
    if not spec.adjoint:
        pre = wave.amplitudes * inner
        if _roughness(pre) < _roughness(wave.amplitudes):
            return apply_F1(wave.with_amplitudes(pre), profile, t)
        w = apply_F1(wave, profile, t)
        return w.with_amplitudes(w.amplitudes * outer)
    pre = wave.amplitudes * outer
    if _roughness(pre) < _roughness(wave.amplitudes):
        return apply_F1(wave.with_amplitudes(pre), profile, t, adjoint=True)
    w = apply_F1(wave, profile, t, adjoint=True)
    return w.with_amplitudes(w.amplitudes * inner)


# --- analytic transport of callables --------------------------------------

def transport(func, profile: ScaleProfile, t: float, adjoint: bool = False):
    """Exact F(t) or F^+(t) of a function given as a callable of x."""
    a = evaluate(profile, t).alpha
    k = chirp_rate(profile, t)
    s = math.sqrt(a)
    if adjoint:
        return lambda x: a**0.25 * np.exp(-1j * k * a * x * x) * func(x * s)
    return lambda x: a**-0.25 * np.exp(1j * k * x * x) * func(x / s)


def basis_derivatives(params: PhysicalParams, dim: int, z) -> tuple[np.ndarray, np.ndarray]:
    """phi_n(z) and phi_n'(z) for n < dim via the ladder relation."""
    vals = basis_functions(params, dim + 1, z)
    ell = params.length_scale
    n = np.arange(dim)[:, None]
    lower = np.vstack([np.zeros_like(vals[:1]), vals[: dim - 1]])
    deriv = (np.sqrt(n / 2) * lower - np.sqrt((n + 1) / 2) * vals[1 : dim + 1]) / ell
    return vals[:dim], deriv


def transported_basis(params: PhysicalParams, dim: int, profile: ScaleProfile, t: float,
                      x: np.ndarray, derivative: bool = False):
    """F^+(t) phi_n on x (rows n) and optionally its x-derivative."""
    a = evaluate(profile, t).alpha
    k = chirp_rate(profile, t)
    s = math.sqrt(a)
    vals, dvals = basis_derivatives(params, dim, x * s)
    env = a**0.25 * np.exp(-1j * k * a * x * x)
    f = env * vals
    if not derivative:
        return f
    df = env * (-2j * k * a * x * vals + s * dvals)
    return f, df


def support_grid(profile: ScaleProfile, times, n_max: int = 0, *, resolution: float = 0.1,
                 widen: float = 1.2, min_half_width: float = 0.0,
                 max_points: int = 1 << 17) -> SpatialGrid:
    """Grid wide and fine enough for F^+(t) chi_n, n <= n_max, over ``times``.

    The half-width is ``widen`` times the support estimate of chi_n
    (turning point plus 4.5 oscillator lengths), stretched by 1/sqrt(alpha)
    where alpha < 1.
    The spacing keeps k*h below ``resolution`` for the largest local
    wavenumber, including the quadratic phase of F^+.
    """
    p = profile.params
    times = np.atleast_1d(np.asarray(times, float))
    a, da, _ = evaluate(profile, times)
    a = np.atleast_1d(a)
    kappa = np.abs(np.atleast_1d(p.m0 * da / (4 * a * p.hbar)))
    ell = p.length_scale
    turning = math.sqrt(2 * n_max + 1)
    core = ell * (turning + 4.5)
    # cover the physical-frame support and the chi-frame support F(t) maps it to
    half = max(min_half_width, widen * core / min(1.0, math.sqrt(float(np.min(a)))))
    # local wavenumber: oscillation of chi_n plus the chirp slope where chi_n lives
    wave_k = (turning + 4.0) / ell
    chirp_x = ell * (turning + 3.0) / np.sqrt(a)
    kmax = float(np.max(wave_k * np.sqrt(a) + 2 * kappa * a * chirp_x))
    h = resolution / kmax
    n = int(math.ceil(2 * half / h)) + 1
    n += (n + 1) % 2  # odd count keeps x = 0 on the grid
    if n > max_points:
        raise ValueError(f"support grid needs {n} points (> {max_points}); narrow the time range")
    return make_grid(-half, half, n)


# --- verification of the frame change --------------------------------------

def transformed_matrix(profile: ScaleProfile, t: float, dim: int = 10, grid: SpatialGrid | None = None,
                       step: float = TIME_STEP) -> np.ndarray:
    """<phi_j| F H F^+ - i hbar F dF^+/dt |phi_k> built on a grid.

    H is applied to the transported basis images with the grid Hamiltonian;
    the time derivative uses centred differences of exact transported
    images.
    """
    from .propagate import apply_H

    params = profile.params
    if grid is None:
        grid = support_grid(profile, [t - step, t, t + step], dim, resolution=0.02)
    x = grid.x
    imgs = transported_basis(params, dim, profile, t, x)
    fwd = transported_basis(params, dim, profile, t + step, x)
    bwd = transported_basis(params, dim, profile, t - step, x)
    dt_imgs = (fwd - bwd) / (2 * step)
    h_imgs = np.array([apply_H(GridWave(grid, row), profile, params, t).amplitudes for row in imgs])
    integrand = h_imgs - 1j * params.hbar * dt_imgs
    w = np.full(grid.n_points, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return np.conj(imgs) @ (w[:, None] * integrand.T)


def verify_transformed_hamiltonian(profile: ScaleProfile, params: PhysicalParams, t_samples,
                                   dim: int = 10, *, strict: bool = True, grid: SpatialGrid | None = None) -> float:
    """Max deviation of the frame-transformed Hamiltonian from the fixed H0pt matrix.

    With ``strict`` the profile must solve the auxiliary equation on
    ``t_samples``; ``strict=False`` measures the deviation anyway, which is
    how a profile with omega != omega0 shows its residual x^2 term.
    """
    if params != profile.params:
        raise ValueError("params must match the profile's params")
    t_samples = np.atleast_1d(np.asarray(t_samples, float))
    if strict:
        res = check_auxiliary(profile, t_samples)
        if res > AUX_TOL:
            raise ValueError(f"profile does not solve the auxiliary equation (residual {res:.3e} > "
                             f"{AUX_TOL:.0e}); the transformed Hamiltonian would be time dependent")
    target = operator_matrix("H0pt", params, dim).entries
    worst = 0.0
    for t in t_samples:
        m = transformed_matrix(profile, float(t), dim, grid)
        worst = max(worst, float(np.max(np.abs(m - target))))
    return worst


def p2_image_check(profile: ScaleProfile, t: float, dim: int = 12,
                   grid: SpatialGrid | None = None) -> dict:
    """Compare <phi_j|F p^2 F^+|phi_k> against both candidate closed forms.

    The grid route uses <F^+phi_j, p^2 F^+phi_k> = hbar^2 <(F^+phi_j)', (F^+phi_k)'>.
    Candidates share the {x,p} and x^2 terms and differ in the leading
    term: ``alpha*p2`` or ``alpha*x2``.
    """
    params = profile.params
    a, da, _ = evaluate(profile, t)
    if grid is None:
        grid = support_grid(profile, [t], dim, resolution=0.02)
    _, d = transported_basis(params, dim, profile, t, grid.x, derivative=True)
    w = np.full(grid.n_points, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    measured = params.hbar**2 * (np.conj(d) @ (w[:, None] * d.T))
    m = params.m0
    op = lambda lab: operator_matrix(lab, params, dim).entries  # noqa: E731
    tail = -(m * da / 2) * op("xp_anticommutator") + (m * m * da * da / (4 * a)) * op("x2")
    variants = {"alpha*p2": a * op("p2") + tail, "alpha*x2": a * op("x2") + tail}
    res = {k: float(np.max(np.abs(measured - v))) for k, v in variants.items()}
    return {"residuals": res, "matched": min(res, key=res.get)}
