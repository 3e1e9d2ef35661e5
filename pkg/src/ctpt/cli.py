"""Scenario runner.

    ctpt run --config scenario.cfg --out results/
    ctpt run --sweep configs/ --out results/ [--tolerances tol.json]

Configs are flat ``key = value`` files or a single JSON object (chosen by the
``.json`` extension).  Exit status: 0 when every check passes, 1 for a
configuration error, 2 when a numerical check fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks
from .hermite import energy, phi
from .model import PhysicalParams, make_grid
from .observables import closed_form_moments, expval_H_closed, expval_H_oracle, numeric_moments, probability_density
from .profile import Regime, ScaleProfile, check_auxiliary, effective_frequency_sq, profile_from_rho
from .propagate import STEP_FRACTION, analytic_state, propagate_numeric
from .symmetry import InnerProductKind, apply_parity, inner_product
from .transforms import TransformSpec, apply_F, support_grid, verify_transformed_hamiltonian

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2
SCENARIOS = ("spectrum", "propagate", "verify-transform", "moments", "density")
PROPAGATE_COLUMNS = ("t", "re_H", "im_H", "norm_ctpt", "norm_l2", "dx", "dp", "dxdp", "x_re", "x_im", "p_re", "p_im")

# key -> (type, default); None default means "required" or "derived"
KEYS = {
    "scenario": (str, None),
    "m0": (float, 1.0),
    "omega": (float, 1.0),
    "omega0": (float, 1.0),
    "hbar": (float, 1.0),
    "regime": (str, "constant"),
    "A": (float, 1.0),
    "B": (float, None),
    "table": (str, None),
    "n": (int, 0),
    "n_max": (int, 5),
    "x_max": (float, None),
    "points": (int, None),
    "t_final": (float, 1.0),
    "dt": (float, 2.5e-4),
    "stride": (int, None),
    "dim": (int, 64),
    "times": (list, None),
    "initial": (list, None),
    "seed": (int, 0),
}


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    values: dict
    lines: dict = field(default_factory=dict)
    source: str = "<config>"

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def error(self, key: str, message: str) -> ConfigError:
        line = self.lines.get(key)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {key}: {message}")

    @property
    def params(self) -> PhysicalParams:
        return self.values["_params"]

    @property
    def profile(self) -> ScaleProfile:
        return self.values["_profile"]


def _coerce(key, kind, raw, where):
    try:
        if kind is list:
            if isinstance(raw, str):
                raw = [s for s in raw.replace(",", " ").split() if s]
            return [complex(v) if isinstance(v, str) and "j" in v else float(v) for v in raw]
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario config; errors carry file:line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    raw, lines = {}, {}
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:1: expected a JSON object")
        for key, value in data.items():
            raw[key] = value
            lines[key] = next((i for i, ln in enumerate(text.splitlines(), 1) if f'"{key}"' in ln), None)
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key], lines[key] = value, lineno
    values = {}
    for key, value in raw.items():
        if key not in KEYS:
            raise ConfigError(f"{path}:{lines.get(key)}: unknown key {key!r}")
        values[key] = _coerce(key, KEYS[key][0], value, f"{path}:{lines.get(key)}")
    for key, (_, default) in KEYS.items():
        values.setdefault(key, default)
    cfg = ScenarioConfig(values, lines, str(path))
    _validate(cfg, path)
    return cfg


def _validate(cfg: ScenarioConfig, path: Path) -> None:
    v = cfg.values
    if v["scenario"] not in SCENARIOS:
        raise cfg.error("scenario", f"expected one of {', '.join(SCENARIOS)}")
    try:
        v["_params"] = PhysicalParams(v["m0"], v["omega"], v["omega0"], v["hbar"])
    except ValueError as exc:
        key = next((k for k in ("m0", "omega", "omega0", "hbar") if k in str(exc)), "m0")
        raise cfg.error(key, str(exc)) from None
    try:
        regime = Regime(v["regime"])
    except ValueError:
        raise cfg.error("regime", f"expected one of {', '.join(r.value for r in Regime)}") from None
    try:
        if regime is Regime.TABULATED:
            if not v["table"]:
                raise cfg.error("table", "tabulated regime needs a CSV path")
            table = Path(v["table"])
            if not table.is_absolute():
                table = path.parent / table
            profile = ScaleProfile.from_csv(v["_params"], table)
        elif v["B"] is not None:
            profile = profile_from_rho(v["_params"], v["A"], v["B"])
            if profile.regime is not regime:
                raise cfg.error("B", f"rho constants A, B select the {profile.regime.value} regime, not {regime.value}")
        else:
            profile = ScaleProfile(regime, v["_params"], v["A"])
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise cfg.error("regime", str(exc)) from None
    v["_profile"] = profile
    for key in ("n", "n_max", "stride"):
        if v[key] is not None and (v[key] < 0 or (key == "stride" and v[key] == 0)):
            raise cfg.error(key, "must be positive")
    if v["dim"] < 16:
        raise cfg.error("dim", "basis dimension must be at least 16")
    if (v["x_max"] is None) != (v["points"] is None):
        raise cfg.error("x_max" if v["x_max"] is None else "points", "give both x_max and points, or neither")
    if v["x_max"] is not None:
        try:
            make_grid(-v["x_max"], v["x_max"], v["points"])
        except ValueError as exc:
            raise cfg.error("points", str(exc)) from None
    lo, hi = profile.domain()
    if v["scenario"] == "propagate":
        if v["t_final"] <= 0 or v["t_final"] >= hi:
            raise cfg.error("t_final", f"must lie in (0, {hi:.6g}) for this regime")
        bound = STEP_FRACTION * 2 * math.pi / v["omega0"]
        if not 0 < v["dt"] <= bound:
            raise cfg.error("dt", f"step {v['dt']} violates the bound 0 < dt <= 1e-3 * 2 pi / omega0 = {bound:.4g}")
        steps = v["t_final"] / v["dt"]
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise cfg.error("dt", f"t_final / dt = {steps:.6g} must be a whole number of steps")
        if v["stride"] is None:
            v["stride"] = _default_stride(round(steps))
        if round(steps) % v["stride"]:
            raise cfg.error("stride", f"stride {v['stride']} must divide the {round(steps)} steps of t_final/dt")
    times = v["times"]
    if times is not None:
        if any(not (lo < t < hi) for t in times):
            raise cfg.error("times", f"all times must lie in ({lo:.6g}, {hi:.6g})")
    if v["initial"] is not None and (len(v["initial"]) == 0 or len(v["initial"]) > v["dim"]):
        raise cfg.error("initial", f"give between 1 and {v['dim']} coefficients")


def _default_stride(steps: int, snapshots: int = 20) -> int:
    """Largest divisor of ``steps`` that keeps at least ``snapshots`` snapshots."""
    stride = max(1, steps // snapshots)
    while steps % stride:
        stride -= 1
    return stride


# --- scenarios -----------------------------------------------------------------

def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _times(cfg, default):
    return cfg.times if cfg.times is not None else default


def _adjudications(cfg, tol):
    """The three misprint adjudications, run on a profile with alpha != 1."""
    prof = cfg.profile
    if prof.regime in (Regime.CONSTANT, Regime.TABULATED):
        prof = ScaleProfile.caldirola_kanai(PhysicalParams(cfg.m0, math.sqrt(cfg.omega0**2 + 1), cfg.omega0, cfg.hbar))
    lo, hi = prof.domain()
    t = min(0.7, 0.5 * hi)
    return [
        checks.operator_image_adjudication(prof, t, tol=tol["operator_image"]),
        checks.expval_coefficient_adjudication(prof, 1, t, tol=tol["expval_coefficient"]),
        checks.energy_sign_adjudication(cfg.params, tol=tol["energy_sign"]),
    ]


def run_spectrum(cfg, out: Path, tol) -> list:
    p = cfg.params
    levels = checks.hermitian_grid_levels(p, cfg.n_max + 1, constant=0.5 * p.shift)
    rows = [(k, energy(k, p), float(levels[k])) for k in range(cfg.n_max + 1)]
    _write_csv(out / "spectrum.csv", ("n", "E_n", "grid_E_n"), rows)
    res = [
        checks.check("spectrum_grid", np.max(np.abs(levels - [r[1] for r in rows])), tol["spectrum_grid"]),
        checks.check("similarity_leading_block", checks.similarity_residual(p, cfg.dim), tol["similarity"]),
    ]
    return res


def _initial_coeffs(cfg):
    if cfg.initial is not None:
        return np.asarray(cfg.initial, complex)
    c = np.zeros(cfg.n + 1, complex)
    c[cfg.n] = 1.0
    return c


def run_propagate(cfg, out: Path, tol) -> list:
    p, prof = cfg.params, cfg.profile
    coeffs = _initial_coeffs(cfg)
    if cfg.x_max is not None:
        grid = make_grid(-cfg.x_max, cfg.x_max, cfg.points)
    else:
        grid = support_grid(prof, np.linspace(0, cfg.t_final, 33), coeffs.size - 1)
    psi0 = analytic_state(coeffs, prof, p, 0.0, grid)
    ts = propagate_numeric(psi0, prof, p, cfg.t_final, cfg.dt, cfg.stride)
    rows, dev, norm_dev, im_h, l2 = [], 0.0, 0.0, 0.0, []
    for t, wave in zip(ts.times, ts.waves()):
        norm = inner_product(InnerProductKind("CtPT", float(t), prof), wave, wave, p, cfg.dim)
        mom = numeric_moments(wave, prof, p, float(t), cfg.dim)
        h = mom.energy(prof, float(t))
        nl2 = wave.norm_l2()
        l2.append(nl2)
        exact = analytic_state(coeffs, prof, p, float(t), grid)
        dev = max(dev, float(np.max(np.abs(wave.amplitudes - exact.amplitudes))))
        norm_dev = max(norm_dev, abs(norm - 1))
        im_h = max(im_h, abs(h.imag))
        rows.append((float(t), h.real, h.imag, norm.real, nl2, mom.dx, mom.dp, mom.product,
                     mom.x_mean.real, mom.x_mean.imag, mom.p_mean.real, mom.p_mean.imag))
    _write_csv(out / "propagate.csv", PROPAGATE_COLUMNS, rows)
    l2 = np.array(l2)
    return [
        checks.check("norm_ctpt_conserved", norm_dev, tol["norm_ctpt"]),
        checks.check("im_H", im_h, tol["im_H_oracle"]),
        checks.check("analytic_agreement", dev, tol["propagation"]),
        checks.check("l2_norm_departure", np.max(np.abs(l2 - 1)), tol["l2_change_min"], at_least=True,
                     relative_l2_drift=float(np.ptp(l2) / l2[0])),
    ]


def run_verify_transform(cfg, out: Path, tol) -> list:
    prof, p = cfg.profile, cfg.params
    lo, hi = prof.domain()
    times = _times(cfg, [0.0, 0.5, 1.0] if hi > 1.0 else [0.0, 0.5 * hi])
    t_aux = np.linspace(max(lo, 0.0), min(hi, 3.0), 200, endpoint=hi > 3.0)
    aux = check_auxiliary(prof, t_aux)
    eff = float(np.max(np.abs(effective_frequency_sq(prof, t_aux) - p.omega0**2)))
    res = [checks.check("auxiliary_residual", aux, tol["auxiliary"]),
           checks.check("effective_frequency", eff, tol["effective_frequency"])]
    if aux <= checks.DEFAULT_TOLERANCES["transform"]:
        dev = verify_transformed_hamiltonian(prof, p, times, strict=False)
        res.append(checks.check("transformed_hamiltonian", dev, tol["transform"]))
    rng = np.random.default_rng(cfg.seed)
    grid = support_grid(prof, times, 6, widen=1.5)
    unit, par = 0.0, 0.0
    rows = []
    for t in times:
        spec = TransformSpec(prof, t)
        c = rng.normal(size=6) + 1j * rng.normal(size=6)
        wave = analytic_state(c, ScaleProfile.constant(p), p, 0.0, grid)
        fw = apply_F(wave, spec)
        u = abs(fw.norm_l2() - wave.norm_l2()) / wave.norm_l2()
        pc = float(np.max(np.abs(apply_F(apply_parity(wave), spec).amplitudes - apply_parity(fw).amplitudes)))
        unit, par = max(unit, u), max(par, pc / np.max(np.abs(wave.amplitudes)))
        rows.append((t, u, pc))
    _write_csv(out / "transform.csv", ("t", "unitarity_residual", "parity_commutator"), rows)
    res += [checks.check("F_unitarity", unit, tol["unitarity"]),
            checks.check("F_parity_commutation", par, tol["parity_commutation"])]
    return res


def run_moments(cfg, out: Path, tol) -> list:
    prof, p = cfg.profile, cfg.params
    lo, hi = prof.domain()
    times = _times(cfg, list(np.linspace(0.0, min(1.0, 0.8 * hi), 5)))
    rows, mdev, imc, imo = [], 0.0, 0.0, 0.0
    for n in range(cfg.n_max + 1):
        grid = support_grid(prof, times, n, widen=1.5)
        for t in times:
            cf = closed_form_moments(n, prof, p, t)
            nm = numeric_moments(analytic_state(np.eye(n + 1)[n], prof, p, t, grid), prof, p, t, cfg.dim)
            d = max(abs(getattr(cf, k) - getattr(nm, k)) for k in ("x_mean", "x2_mean", "p_mean", "p2_mean", "product"))
            o = expval_H_oracle(n, prof, p, t)
            mdev, imo = max(mdev, d), max(imo, abs(o.value.imag))
            imc = max(imc, abs(complex(expval_H_closed(n, prof, p, t)).imag))
            rows.append((n, t, cf.dx, cf.dp, cf.product, nm.product, o.value.real, o.value.imag, o.closed_form))
    _write_csv(out / "moments.csv", ("n", "t", "dx", "dp", "dxdp_closed", "dxdp_numeric", "re_H_oracle",
                                     "im_H_oracle", "H_closed"), rows)
    return [checks.check("moments_closed_vs_numeric", mdev, tol["uncertainty"]),
            checks.check("im_H_closed", imc, tol["im_H_closed"]),
            checks.check("im_H_oracle", imo, tol["im_H_oracle"])]


def run_density(cfg, out: Path, tol) -> list:
    prof, p = cfg.profile, cfg.params
    lo, hi = prof.domain()
    times = _times(cfg, [0.0, min(0.6, 0.4 * hi), min(1.3, 0.8 * hi)])
    grid = make_grid(-cfg.x_max, cfg.x_max, cfg.points) if cfg.x_max else make_grid()
    cols, names, dev, ndev = [grid.x], ["x"], 0.0, 0.0
    for n in range(cfg.n_max + 1):
        ref = np.abs(phi(n, grid.x, p)) ** 2
        for t in times:
            d = probability_density(n, prof, p, t, grid, cfg.dim)
            dev = max(dev, float(np.max(np.abs(d - ref))))
            ndev = max(ndev, abs(grid.integrate(d) - 1))
            cols.append(d)
            names.append(f"n{n}_t{t:g}")
    _write_csv(out / "density.csv", names, [tuple(float(c[i]) for c in cols) for i in range(grid.n_points)])
    return [checks.check("density_invariance", dev, tol["density"]),
            checks.check("density_normalisation", ndev, tol["density_norm"])]


RUNNERS = {
    "spectrum": run_spectrum,
    "propagate": run_propagate,
    "verify-transform": run_verify_transform,
    "moments": run_moments,
    "density": run_density,
}


def run(config_path, out_dir, tolerances=None) -> int:
    """Run one scenario; returns the exit status."""
    try:
        tol = checks.load_tolerances(tolerances)
        cfg = parse_config(config_path)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            results = RUNNERS[cfg.scenario](cfg, out, tol)
        except ValueError as exc:
            print(f"config error: {config_path}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        results += _adjudications(cfg, tol)
    report = {
        "scenario": cfg.scenario,
        "config": str(config_path),
        "checks": [r.to_dict() for r in results],
        "warnings": sorted({str(w.message) for w in caught}),
        "passed": all(r.passed for r in results),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"check failed: {r.check_name}: residual {r.residual:.3e} vs tolerance {r.tolerance:.1e}",
              file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


def _sweep_one(args):
    cfg_path, out_dir, tol = args
    return run(cfg_path, out_dir, tol)


def sweep(config_dir, out_dir, tolerances=None) -> int:
    configs = sorted(p for p in Path(config_dir).iterdir() if p.suffix in (".json", ".cfg", ".conf", ".txt"))
    if not configs:
        print(f"config error: no configs in {config_dir}", file=sys.stderr)
        return EXIT_CONFIG
    cap = int(os.environ.get("CTPT_THREADS", os.cpu_count() or 1))
    jobs = [(str(c), str(Path(out_dir) / c.stem), tolerances) for c in configs]
    workers = max(1, min(cap, len(jobs)))
    if workers == 1:
        codes = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_sweep_one, jobs))
    return max(codes)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ctpt", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one scenario or a sweep of scenarios")
    r.add_argument("--config", help="scenario config (key = value or .json)")
    r.add_argument("--sweep", help="directory of configs run concurrently, one output dir each")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--tolerances", help="tolerance overrides (key = value or .json)")
    args = parser.parse_args(argv)
    if bool(args.config) == bool(args.sweep):
        parser.error("give exactly one of --config or --sweep")
    if args.sweep:
        return sweep(args.sweep, args.out, args.tolerances)
    return run(args.config, args.out, args.tolerances)


if __name__ == "__main__":
    sys.exit(main())
