"""Named numerical checks with tolerances, shared by the CLI and the test-suite."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import eig, eig_banded

from .hermite import energy, energy_printed, operator_matrix
from .model import PhysicalParams, SpatialGrid, make_grid
from .observables import COEFFICIENT_VARIANTS, expval_H_closed, expval_H_oracle
from .profile import ScaleProfile
from .symmetry import build_U_matrix
from .transforms import p2_image_check

DEFAULT_TOLERANCES = {
    "im_H_closed": 1e-8,
    "im_H_oracle": 1e-6,
    "norm_ctpt": 1e-5,
    "l2_change_min": 1e-3,
    "spectrum_grid": 1e-6,
    "similarity": 1e-8,
    "inner_products": 1e-7,
    "uncertainty": 1e-5,
    "auxiliary": 1e-9,
    "effective_frequency": 1e-9,
    "transform": 1e-4,
    "unitarity": 1e-5,
    "parity_commutation": 1e-6,
    "propagation": 1e-4,
    "convergence_ratio_min": 3.5,
    "convergence_ratio_max": 4.5,
    "density": 1e-6,
    "density_norm": 1e-8,
    "operator_image": 1e-8,
    "expval_coefficient": 1e-6,
    "energy_sign": 1e-3,
}

SPECTRUM_GRID = (-12.0, 12.0, 2049)
SIGN_GRID = (-10.0, 10.0, 601)


@dataclass
class CheckResult:
    check_name: str
    residual: float
    tolerance: float
    passed: bool
    variant: str | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        if d["variant"] is None:
            d.pop("variant")
        if not d["detail"]:
            d.pop("detail")
        return d


def check(name: str, residual: float, tolerance: float, *, variant: str | None = None,
          at_least: bool = False, **detail) -> CheckResult:
    """Compare a residual with its tolerance (``at_least`` flips the test to residual >= tol)."""
    residual = float(residual)
    ok = residual >= tolerance if at_least else residual <= tolerance
    return CheckResult(name, residual, float(tolerance), bool(ok and math.isfinite(residual)), variant, detail)


def load_tolerances(path: str | Path | None) -> dict:
    """Defaults overridden by a JSON object or key=value lines from ``path``."""
    tol = dict(DEFAULT_TOLERANCES)
    if path is None:
        return tol
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{exc.lineno}: {exc.msg}") from None
        items = [(k, v, 1) for k, v in data.items()]
    else:
        items = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            items.append((k, v, lineno))
    for k, v, lineno in items:
        if k not in DEFAULT_TOLERANCES:
            raise ValueError(f"{path}:{lineno}: unknown tolerance {k!r}")
        try:
            tol[k] = float(v)
        except (TypeError, ValueError):
            raise ValueError(f"{path}:{lineno}: tolerance {k!r} must be a number") from None
    return tol


# --- spectra -----------------------------------------------------------------

def hermitian_grid_levels(params: PhysicalParams, n_levels: int, grid: SpatialGrid | None = None,
                          constant: float = 0.0) -> np.ndarray:
    """Lowest eigenvalues of p^2/2m0 + m0 omega0^2 x^2/2 + constant on a grid.

    4th-order differences give a real symmetric pentadiagonal matrix, solved
    with a banded eigensolver.
    """
    grid = grid or make_grid(*SPECTRUM_GRID)
    x, h = grid.x, grid.h
    kin = params.hbar**2 / (2 * params.m0) / (12 * h * h)
    ab = np.zeros((3, grid.n_points))
    ab[2] = 30 * kin + 0.5 * params.m0 * params.omega0**2 * x * x + constant
    ab[1, 1:] = -16 * kin
    ab[0, 2:] = kin
    return eig_banded(ab, select="i", select_range=(0, n_levels - 1), eigvals_only=True)


def pt_grid_levels(params: PhysicalParams, n_levels: int, grid: SpatialGrid | None = None) -> np.ndarray:
    """Lowest (by real part) eigenvalues of the non-Hermitian grid H0pt."""
    grid = grid or make_grid(*SIGN_GRID)
    x, h = grid.x, grid.h
    n = grid.n_points
    kin = params.hbar**2 / (2 * params.m0) / (12 * h * h)
    m = np.diag(30 * kin + 0.5 * params.m0 * params.omega0**2 * x * x + 1j * x)
    m += np.diag(np.full(n - 1, -16 * kin), 1) + np.diag(np.full(n - 1, -16 * kin), -1)
    m += np.diag(np.full(n - 2, kin), 2) + np.diag(np.full(n - 2, kin), -2)
    ev = eig(m, right=False)
    return ev[np.argsort(ev.real)][:n_levels]


def similarity_residual(params: PhysicalParams, dim: int = 64, block: int | None = None) -> float:
    """max |U^-1 H0pt U - h| over the leading ``block`` (default dim // 2) rows and columns."""
    block = block or dim // 2
    u = build_U_matrix(params, dim).entries
    ui = build_U_matrix(params, dim, inverse=True).entries
    hpt = operator_matrix("H0pt", params, dim).entries
    h = operator_matrix("h", params, dim).entries
    return float(np.max(np.abs((ui @ hpt @ u - h)[:block, :block])))


# --- adjudications -------------------------------------------------------------

def energy_sign_adjudication(params: PhysicalParams, n_levels: int = 6, tol: float = DEFAULT_TOLERANCES["energy_sign"]) -> CheckResult:
    """Which E_n constant (+ or - 1/(2 m0 omega0^2)) the grid spectrum of H0pt has."""
    levels = pt_grid_levels(params, n_levels)
    variants = {
        "+1/(2*m0*omega0^2)": [energy(k, params) for k in range(n_levels)],
        "-1/(2*m0*omega0^2)": [energy_printed(k, params) for k in range(n_levels)],
    }
    res = {k: float(np.max(np.abs(levels - np.array(v)))) for k, v in variants.items()}
    best = min(res, key=res.get)
    return check("energy_sign", res[best], tol, variant=best, residuals=res)


def operator_image_adjudication(profile: ScaleProfile, t: float, dim: int = 12,
                                tol: float = DEFAULT_TOLERANCES["operator_image"]) -> CheckResult:
    """First term of F p^2 F^+: alpha*p^2 or alpha*x^2."""
    out = p2_image_check(profile, t, dim)
    best = out["matched"]
    return check("operator_image_first_term", out["residuals"][best], tol, variant=best,
                 residuals=out["residuals"], t=t)


def expval_coefficient_adjudication(profile: ScaleProfile, n: int, t: float,
                                    tol: float = DEFAULT_TOLERANCES["expval_coefficient"]) -> CheckResult:
    """Which second-term coefficient of <H(t)> the numeric oracle reproduces."""
    oracle = expval_H_oracle(n, profile, profile.params, t).value
    res = {v: abs(oracle - expval_H_closed(n, profile, profile.params, t, v)) for v in COEFFICIENT_VARIANTS}
    best = min(res, key=res.get)
    return check("expval_H_coefficient", res[best], tol, variant=best,
                 residuals={k: float(v) for k, v in res.items()}, n=n, t=t)
