"""The mass-scale function alpha(t) and its auxiliary equations."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .model import PhysicalParams

SINGULAR_MARGIN = 1e-3
FD_STEP = 1e-4


class Regime(str, Enum):
    CONSTANT = "constant"
    TRIG = "trig"
    COSH = "cosh"
    CALDIROLA_KANAI = "caldirola_kanai"
    TABULATED = "tabulated"


class ProfileDomainError(ValueError):
    """alpha(t) is singular, non-positive or outside the tabulated range."""


class ScaleValues(NamedTuple):
    alpha: np.ndarray | float
    dalpha: np.ndarray | float
    ddalpha: np.ndarray | float


@dataclass(frozen=True, eq=False)
class ScaleProfile:
    regime: Regime
    params: PhysicalParams
    A: float = 1.0
    B: float = 0.0
    table_t: np.ndarray | None = field(default=None, repr=False)
    table_alpha: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        p = self.params
        if self.regime is Regime.TABULATED:
            t = np.asarray(self.table_t, dtype=float)
            a = np.asarray(self.table_alpha, dtype=float)
            if t.ndim != 1 or t.shape != a.shape or t.size < 4:
                raise ValueError("tabulated profile needs matching 1-D t and alpha with >= 4 rows")
            if np.any(np.diff(t) <= 0):
                raise ValueError("tabulated t must be strictly increasing")
            if np.any(a <= 0) or not np.all(np.isfinite(a)):
                raise ProfileDomainError("tabulated alpha must be positive and finite")
            object.__setattr__(self, "_spline", CubicSpline(t, a))
            return
        if not (math.isfinite(self.A) and self.A != 0):
            raise ValueError("amplitude A must be finite and non-zero")
        if self.regime is Regime.TRIG and not p.omega0 > p.omega:
            raise ValueError("trig regime requires omega0 > omega")
        if self.regime in (Regime.COSH, Regime.CALDIROLA_KANAI) and not p.omega > p.omega0:
            raise ValueError(f"{self.regime.value} regime requires omega > omega0")

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, params, A=1.0):
        return cls(Regime.CONSTANT, params, A)

    @classmethod
    def trig(cls, params, A=1.0):
        return cls(Regime.TRIG, params, A)

    @classmethod
    def cosh(cls, params, A=1.0):
        return cls(Regime.COSH, params, A)

    @classmethod
    def caldirola_kanai(cls, params, A=1.0):
        return cls(Regime.CALDIROLA_KANAI, params, A)

    @classmethod
    def tabulated(cls, params, t, alpha):
        return cls(Regime.TABULATED, params, 1.0, 0.0, np.asarray(t, float), np.asarray(alpha, float))

    @classmethod
    def from_csv(cls, params, path):
        """Read a two-column (t, alpha) CSV; a non-numeric first row is a header."""
        rows, seen = [], 0
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                seen += 1
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if seen > 1:
                        raise ValueError(f"{path}:{lineno}: expected two numeric columns") from None
        if not rows:
            raise ValueError(f"{path}: no (t, alpha) rows")
        t, a = np.array(rows).T
        return cls.tabulated(params, t, a)

    @property
    def rate(self) -> float:
        """sqrt(|omega0^2 - omega^2|), the growth or oscillation rate of rho."""
        return math.sqrt(abs(self.params.omega0**2 - self.params.omega**2))

    def domain(self) -> tuple[float, float]:
        """Open time interval on which the profile is usable."""
        if self.regime is Regime.TRIG:
            edge = math.pi / (2 * self.rate) - SINGULAR_MARGIN
            return (-edge, edge)
        if self.regime is Regime.TABULATED:
            return (float(self.table_t[0]), float(self.table_t[-1]))
        return (-math.inf, math.inf)


def evaluate(profile: ScaleProfile, t) -> ScaleValues:
    """alpha(t) and its first two time derivatives (scalar or array t).

    Closed forms, with k = sqrt(|omega0^2 - omega^2|):

    * trig: alpha = cos^2(k t) / A^2
    * cosh: alpha = cosh^2(k t) / A^2
    * Caldirola-Kanai: alpha = exp(-2 k t) / A^2

    Each is rho^2 for a solution rho of rho'' + (omega0^2 - omega^2) rho = 0,
    which is what makes the auxiliary equation hold exactly.
    """
    t_arr = np.asarray(t, dtype=float)
    lo, hi = profile.domain()
    if np.any(t_arr <= lo) or np.any(t_arr >= hi):
        if profile.regime is Regime.TRIG:
            raise ProfileDomainError(
                f"trig profile is singular within {SINGULAR_MARGIN} of t = +/-{hi + SINGULAR_MARGIN:.6g}"
            )
        if profile.regime is Regime.TABULATED and (np.any(t_arr < lo) or np.any(t_arr > hi)):
            raise ProfileDomainError(f"t outside tabulated range [{lo}, {hi}]")
    g = profile.rate
    A2 = profile.A**2
    reg = profile.regime
    if reg is Regime.CONSTANT:
        a = np.full_like(t_arr, 1.0 / A2)
        da = np.zeros_like(t_arr)
        dda = np.zeros_like(t_arr)
    elif reg is Regime.TRIG:
        c = np.cos(g * t_arr)
        tn = np.tan(g * t_arr)
        a = c * c / A2
        da = -2 * g * tn * a
        dda = -2 * g * g * a * (1 - tn * tn)
    elif reg is Regime.COSH:
        th = np.tanh(g * t_arr)
        a = np.cosh(g * t_arr) ** 2 / A2
        da = 2 * g * th * a
        dda = 2 * g * g * a * (1 + th * th)
    elif reg is Regime.CALDIROLA_KANAI:
        a = np.exp(-2 * g * t_arr) / A2
        da = -2 * g * a
        dda = 4 * g * g * a
    else:
        a, da, dda = _tabulated_derivatives(profile, t_arr)
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ProfileDomainError("alpha(t) must stay positive and finite")
    if t_arr.ndim == 0:
        return ScaleValues(float(a), float(da), float(dda))
    return ScaleValues(a, da, dda)


def _tabulated_derivatives(profile, t):
    s = profile._spline
    k = FD_STEP
    f = [s(t + j * k) for j in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * k)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * k * k)
    return f[2], d1, d2


def effective_frequency_sq(profile: ScaleProfile, t):
    """Omega^2(t) = omega^2 + adot^2/(4 a^2) - addot/(2 a)."""
    a, da, dda = evaluate(profile, t)
    return profile.params.omega**2 + 0.25 * (da / a) ** 2 - 0.5 * dda / a


def auxiliary_residual(profile: ScaleProfile, t):
    a, da, dda = evaluate(profile, t)
    p = profile.params
    return dda - da * da / (2 * a) + 2 * a * (p.omega0**2 - p.omega**2)


def check_auxiliary(profile: ScaleProfile, t_grid) -> float:
    """Max |addot - adot^2/2a + 2a(omega0^2 - omega^2)| over ``t_grid``."""
    return float(np.max(np.abs(auxiliary_residual(profile, np.asarray(t_grid, float)))))


def rho_solve(params: PhysicalParams, A: float, B: float, t):
    """Closed-form solution of rho'' + (omega0^2 - omega^2) rho = 0, with alpha = rho^2.

    Oscillatory case: rho = A e^{ikt} + B e^{-ikt}, real only for A = B.
    Growing case: rho = A e^{gt} + B e^{-gt}.  Degenerate case
    omega0 = omega: the constant branch rho = A + B.
    """
    t = np.asarray(t, dtype=float)
    d = params.omega0**2 - params.omega**2
    if d > 0:
        if A != B:
            raise ValueError("the oscillatory branch is real only for A = B")
        k = math.sqrt(d)
        rho = (A + B) * np.cos(k * t)
    elif d < 0:
        g = math.sqrt(-d)
        rho = A * np.exp(g * t) + B * np.exp(-g * t)
    else:
        rho = np.full_like(t, A + B)
    scale = max(abs(A), abs(B))
    if np.any(np.abs(rho) < 1e-12 * scale) or np.any(np.sign(rho) != np.sign(rho.flat[0])):
        raise ProfileDomainError("rho(t) crosses zero; alpha = rho^2 vanishes there")
    return rho if rho.ndim else float(rho)


def rho_rk4(params: PhysicalParams, rho0: float, drho0: float, t_final: float, steps: int):
    """Classical RK4 integration of the rho equation; returns (t, rho)."""
    d = params.omega0**2 - params.omega**2
    h = t_final / steps
    y = np.array([rho0, drho0], dtype=float)
    out = np.empty(steps + 1)
    out[0] = rho0

    def f(y):
        return np.array([y[1], -d * y[0]])

    for i in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        out[i + 1] = y[0]
    return np.linspace(0.0, t_final, steps + 1), out


def profile_from_rho(params: PhysicalParams, A: float, B: float) -> ScaleProfile:
    """The closed-form profile whose alpha equals rho_solve(params, A, B, t)^2."""
    d = params.omega0**2 - params.omega**2
    if d > 0:
        return ScaleProfile.trig(params, 1.0 / (A + B))
    if d == 0:
        return ScaleProfile.constant(params, 1.0 / (A + B))
    if A == 0:
        return ScaleProfile.caldirola_kanai(params, 1.0 / B)
    if A == B:
        return ScaleProfile.cosh(params, 1.0 / (2 * A))
    raise ValueError("only A = B (cosh) and A = 0 (Caldirola-Kanai) have closed-form profiles")
