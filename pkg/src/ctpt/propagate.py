"""The driven Hamiltonian H(t) on grids, Crank-Nicolson propagation and exact solutions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .hermite import energy
from .model import GridWave, PhysicalParams, SpatialGrid, basis_functions
from .profile import ScaleProfile, evaluate
from .transforms import transport

STEP_FRACTION = 1e-3
LEAK_TOL = 1e-6
EDGE_FRACTION = 0.05


class StepSizeError(ValueError):
    """The time step violates the accuracy bound dt <= 1e-3 * 2 pi / omega0."""


class BoundaryLeakWarning(UserWarning):
    """Propagated probability reached the Dirichlet boundary."""


def _second_derivative(amps: np.ndarray, h: float) -> np.ndarray:
    """4th-order central second difference with zero values beyond the grid."""
    p = np.pad(amps, 2)
    return (-p[:-4] + 16 * p[1:-3] - 30 * p[2:-2] + 16 * p[3:-1] - p[4:]) / (12 * h * h)


def apply_H(wave: GridWave, profile: ScaleProfile, params: PhysicalParams, t: float,
            drive: float = 1.0) -> GridWave:
    """H(t) psi with H = p^2/(2 m0 alpha) + alpha m0 omega^2 x^2/2 + i sqrt(alpha) x.

    ``drive`` scales the imaginary linear potential; ``drive=0`` leaves the
    Hermitian oscillator of mass m0*alpha.
    """
    a = evaluate(profile, t).alpha
    x = wave.grid.x
    psi = wave.amplitudes
    kin = -(params.hbar**2) / (2 * params.m0 * a) * _second_derivative(psi, wave.grid.h)
    pot = 0.5 * a * params.m0 * params.omega**2 * x * x + 1j * drive * math.sqrt(a) * x
    return wave.with_amplitudes(kin + pot * psi)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Times plus equally long per-time fields; optionally grid snapshots."""

    times: np.ndarray
    fields: dict = field(default_factory=dict)
    grid: SpatialGrid | None = None
    snapshots: np.ndarray | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if t.ndim != 1 or (t.size > 1 and np.any(np.diff(t) <= 0)):
            raise ValueError("times must be a strictly increasing 1-D array")
        for name, col in self.fields.items():
            if np.shape(col)[0] != t.size:
                raise ValueError(f"field {name!r} has {np.shape(col)[0]} rows, expected {t.size}")
        if self.snapshots is not None and self.snapshots.shape[0] != t.size:
            raise ValueError("one snapshot per time is required")
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size

    def wave(self, i: int) -> GridWave:
        return GridWave(self.grid, self.snapshots[i])

    def waves(self):
        return [self.wave(i) for i in range(len(self))]

    def with_fields(self, **cols) -> "TimeSeries":
        merged = dict(self.fields)
        merged.update({k: np.asarray(v) for k, v in cols.items()})
        return TimeSeries(self.times, merged, self.grid, self.snapshots, dict(self.diagnostics))


def propagate_numeric(psi0: GridWave, profile: ScaleProfile, params: PhysicalParams, t_final: float,
                      dt: float, stride: int = 1, *, t0: float = 0.0, drive: float = 1.0) -> TimeSeries:
    """Crank-Nicolson propagation of i hbar dpsi/dt = H(t) psi.

    Each step solves (I + i dt H_mid / 2hbar) psi' = (I - i dt H_mid / 2hbar) psi
    with H_mid = H(t + dt/2) discretised by 4th-order differences, which
    keeps the matrices pentadiagonal.  Snapshots are kept every ``stride``
    steps (and at t0).
    """
    if dt <= 0 or t_final <= 0:
        raise ValueError("dt and t_final must be positive")
    bound = STEP_FRACTION * 2 * math.pi / params.omega0
    if dt > bound:
        raise StepSizeError(f"dt = {dt} exceeds the step bound 1e-3 * 2 pi / omega0 = {bound:.4g}")
    nsteps = int(round(t_final / dt))
    if abs(nsteps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final = {t_final} is not a whole number of steps dt = {dt}")
    if stride < 1 or nsteps % stride:
        raise ValueError(f"stride {stride} must divide the step count {nsteps}")
    grid = psi0.grid
    mids = t0 + (np.arange(nsteps) + 0.5) * dt
    alpha_mid = np.asarray(evaluate(profile, mids).alpha, float)
    # A = I + i tau H has Hermitian part I - tau sqrt(alpha) x; keep it definite
    tau = dt / (2 * params.hbar)
    margin = tau * drive * math.sqrt(float(alpha_mid.max())) * grid.x_max
    if margin >= 0.5:
        raise StepSizeError(f"dt too large for the elimination without pivoting (tau*sqrt(alpha)*x_max = {margin:.3g})")
    snaps = _kernels.cn_propagate(psi0.amplitudes, grid.x, grid.h, params.hbar, params.m0,
                                  params.omega**2, alpha_mid, dt, stride, drive)
    finite = np.all(np.isfinite(snaps), axis=1)
    if not finite.all():
        first = int(np.argmin(finite))
        raise RuntimeError(f"linear solve failed before step {first * stride} (t = {t0 + first * stride * dt:.6g})")
    times = t0 + np.arange(snaps.shape[0]) * stride * dt
    edge = max(2, int(EDGE_FRACTION * grid.n_points))
    dens = np.abs(snaps) ** 2
    total = dens.sum(axis=1)
    leak = float(np.max((dens[:, :edge].sum(axis=1) + dens[:, -edge:].sum(axis=1)) / total))
    diagnostics = {
        "cfl_ratio": dt / (params.m0 * float(alpha_mid.min()) * grid.h**2 / params.hbar),
        "edge_fraction": leak,
        "steps": nsteps,
    }
    if leak > LEAK_TOL:
        warnings.warn(f"{leak:.2e} of the norm reached the outer {EDGE_FRACTION:.0%} of the grid",
                      BoundaryLeakWarning, stacklevel=2)
    return TimeSeries(times, {}, grid, snaps, diagnostics)


def chi_function(n: int, params: PhysicalParams):
    """chi_n(x) = phi_n(x + i/(m0 omega0^2)) as a callable."""
    shift = 1j * params.shift

    def f(x):
        x = np.asarray(x, float)
        return basis_functions(params, n + 1, x.ravel() + shift)[n].reshape(x.shape)

    return f


def analytic_state(coeffs, profile: ScaleProfile, params: PhysicalParams, t: float,
                   grid: SpatialGrid) -> GridWave:
    """F^+(t) sum_n c_n exp(-i E_n t / hbar) chi_n sampled on ``grid``."""
    coeffs = np.asarray(coeffs, complex)
    dim = coeffs.size
    phases = np.array([np.exp(-1j * energy(k, params) * t / params.hbar) for k in range(dim)])
    c = coeffs * phases
    shift = 1j * params.shift

    def chi(x):
        return c @ basis_functions(params, dim, x + shift)

    with np.errstate(over="ignore", invalid="ignore"):
        amps = transport(chi, profile, t, adjoint=True)(grid.x)
    if not np.all(np.isfinite(amps)):
        raise FloatingPointError("analytic state overflowed on the grid")
    return GridWave(grid, amps)


def analytic_solution(n: int, profile: ScaleProfile, params: PhysicalParams, t: float,
                      grid: SpatialGrid) -> GridWave:
    """Exact psi_n(x, t) = F^+(t) exp(-i E_n t / hbar) chi_n(x).

    The frame map is applied in closed form, so the result carries no
    interpolation error.
    """
    if params != profile.params:
        raise ValueError("params must match the profile's params")
    c = np.zeros(n + 1, complex)
    c[n] = 1.0
    return analytic_state(c, profile, params, t, grid)
