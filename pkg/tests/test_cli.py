import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ctpt import PhysicalParams, energy
from ctpt.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, PROPAGATE_COLUMNS, ConfigError, main, parse_config

CK = "regime = caldirola_kanai\nomega = 1.4142135623730951\n"


def _write(tmp_path, name, text):
    f = tmp_path / name
    f.write_text(text)
    return f


def _run(cfg, out, *extra):
    return main(["run", "--config", str(cfg), "--out", str(out), *extra])


def _report(out):
    return json.loads((out / "report.json").read_text())


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], float)


def test_spectrum_scenario(tmp_path):
    cfg = _write(tmp_path, "s.cfg", "scenario = spectrum\nn_max = 5\n")
    assert _run(cfg, tmp_path / "o") == EXIT_OK
    header, data = _read_csv(tmp_path / "o" / "spectrum.csv")
    assert header == ["n", "E_n", "grid_E_n"]
    np.testing.assert_array_equal(data[:, 1], [energy(n, PhysicalParams()) for n in range(6)])
    assert np.max(np.abs(data[:, 2] - data[:, 1])) <= 1e-6
    rep = _report(tmp_path / "o")
    assert rep["passed"] and rep["scenario"] == "spectrum"
    for entry in rep["checks"]:
        assert {"check_name", "residual", "tolerance", "pass"} <= set(entry)


def test_report_records_adjudications(tmp_path):
    cfg = _write(tmp_path, "s.cfg", "scenario = spectrum\nn_max = 2\n")
    _run(cfg, tmp_path / "o")
    by_name = {c["check_name"]: c for c in _report(tmp_path / "o")["checks"]}
    assert by_name["operator_image_first_term"]["variant"] == "alpha*p2"
    assert by_name["expval_H_coefficient"]["variant"] == "m0*addot/(4*alpha)"
    assert by_name["energy_sign"]["variant"] == "+1/(2*m0*omega0^2)"


@pytest.mark.slow
def test_propagate_scenario(tmp_path):
    cfg = _write(tmp_path, "p.cfg", "scenario = propagate\n" + CK + "t_final = 2\n")
    assert _run(cfg, tmp_path / "o") == EXIT_OK
    header, data = _read_csv(tmp_path / "o" / "propagate.csv")
    assert tuple(header) == PROPAGATE_COLUMNS
    assert np.max(np.abs(data[:, 2])) <= 1e-6
    assert np.max(np.abs(data[:, 3] - 1)) <= 1e-5
    assert data[0, 0] == 0 and data[-1, 0] == 2


def test_step_bound_is_a_config_error(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.cfg", "scenario = propagate\n" + CK + "t_final = 2\ndt = 1\n")
    assert _run(cfg, tmp_path / "o") == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "bad.cfg:5" in err and "dt" in err and "bound" in err
    assert not (tmp_path / "o").exists()


def test_exit_code_from_subprocess(tmp_path):
    cfg = _write(tmp_path, "bad.cfg", "scenario = propagate\ndt = 1\n")
    proc = subprocess.run([sys.executable, "-m", "ctpt", "run", "--config", str(cfg), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    assert "bad.cfg:2" in proc.stderr


@pytest.mark.parametrize("text,fragment", [
    ("scenario = spectra\n", ":1: scenario"),
    ("scenario = spectrum\nfoo = 1\n", ":2: unknown key 'foo'"),
    ("scenario = spectrum\nm0 = -1\n", ":2"),
    ("scenario = spectrum\nn_max = two\n", ":2: n_max"),
    ("scenario = propagate\nregime = trig\nomega0 = 2\nt_final = 1.6\n", ":4: t_final"),
    ("scenario = propagate\nregime = cosh\n", ":2: regime"),
    ("scenario = propagate\nt_final = 1\ndt = 3e-4\n", ":3: dt"),
    ("scenario = propagate\nt_final = 1\ndt = 1e-3\nstride = 7\n", ":4: stride"),
    ("just words\n", ":1: expected key = value"),
])
def test_config_errors_name_file_and_line(tmp_path, text, fragment):
    cfg = _write(tmp_path, "c.cfg", text)
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    assert "c.cfg" + fragment in str(info.value)


def test_json_config(tmp_path):
    cfg = _write(tmp_path, "v.json", json.dumps({"scenario": "verify-transform", "regime": "cosh",
                                                  "omega": 1.4142135623730951, "times": [0.0, 0.8]}))
    c = parse_config(cfg)
    assert c.scenario == "verify-transform" and c.times == [0.0, 0.8]
    assert _run(cfg, tmp_path / "o") == EXIT_OK
    names = [x["check_name"] for x in _report(tmp_path / "o")["checks"]]
    for n in ("auxiliary_residual", "effective_frequency", "transformed_hamiltonian", "F_unitarity",
              "F_parity_commutation"):
        assert n in names


def test_bad_json_reports_line(tmp_path):
    cfg = _write(tmp_path, "v.json", '{"scenario": "spectrum",\n "n_max": }\n')
    with pytest.raises(ConfigError, match=r"v\.json:2"):
        parse_config(cfg)


def test_tolerance_override_fails_check(tmp_path, capsys):
    cfg = _write(tmp_path, "s.cfg", "scenario = spectrum\n")
    tol = _write(tmp_path, "tol.cfg", "# tighter than reachable\nsimilarity = 1e-30\n")
    assert _run(cfg, tmp_path / "o", "--tolerances", str(tol)) == EXIT_CHECK
    assert "similarity_leading_block" in capsys.readouterr().err
    rep = _report(tmp_path / "o")
    assert not rep["passed"]
    entry = next(c for c in rep["checks"] if c["check_name"] == "similarity_leading_block")
    assert entry["tolerance"] == 1e-30 and entry["pass"] is False


def test_unknown_tolerance_is_config_error(tmp_path):
    cfg = _write(tmp_path, "s.cfg", "scenario = spectrum\n")
    tol = _write(tmp_path, "tol.cfg", "\nsimilarty = 1\n")
    assert _run(cfg, tmp_path / "o", "--tolerances", str(tol)) == EXIT_CONFIG


def test_moments_and_density_scenarios(tmp_path):
    m = _write(tmp_path, "m.cfg", "scenario = moments\nregime = cosh\nomega = 1.4142135623730951\nn_max = 2\n")
    d = _write(tmp_path, "d.cfg", "scenario = density\n" + CK + "n_max = 2\n")
    assert _run(m, tmp_path / "m") == EXIT_OK
    assert _run(d, tmp_path / "d") == EXIT_OK
    header, data = _read_csv(tmp_path / "d" / "density.csv")
    assert header[0] == "x" and len(header) == 1 + 3 * 3
    assert data.shape == (1024, 10)


def test_tabulated_profile_from_table(tmp_path):
    t = np.linspace(0, 2, 801)
    rows = "\n".join(f"{a!r},{b!r}" for a, b in zip(t.tolist(), np.exp(-2 * t).tolist()))
    _write(tmp_path, "alpha.csv", "t,alpha\n" + rows + "\n")
    cfg = _write(tmp_path, "v.cfg", "scenario = verify-transform\nregime = tabulated\ntable = alpha.csv\n"
                                    "omega = 1.4142135623730951\ntimes = 0.5, 1.0\n")
    code = _run(cfg, tmp_path / "o")
    rep = _report(tmp_path / "o")
    aux = next(c for c in rep["checks"] if c["check_name"] == "auxiliary_residual")
    assert aux["residual"] <= 1e-4
    assert code in (EXIT_OK, EXIT_CHECK)  # the 1e-9 auxiliary tolerance is below the tabulation floor


def test_reproducible_bytes(tmp_path):
    cfg = _write(tmp_path, "p.cfg", "scenario = propagate\n" + CK + "t_final = 0.25\ndt = 5e-4\n")
    assert _run(cfg, tmp_path / "a") == EXIT_OK
    assert _run(cfg, tmp_path / "b") == EXIT_OK
    a = (tmp_path / "a" / "propagate.csv").read_bytes()
    assert a == (tmp_path / "b" / "propagate.csv").read_bytes()
    assert a.startswith(b"t,re_H,im_H,norm_ctpt,norm_l2,dx,dp,dxdp,x_re,x_im,p_re,p_im")


def test_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("CTPT_THREADS", "2")
    d = tmp_path / "cfgs"
    d.mkdir()
    _write(d, "one.cfg", "scenario = spectrum\nn_max = 2\n")
    _write(d, "two.json", json.dumps({"scenario": "spectrum", "omega0": 1.5, "n_max": 3}))
    assert main(["run", "--sweep", str(d), "--out", str(tmp_path / "o")]) == EXIT_OK
    for name in ("one", "two"):
        assert _report(tmp_path / "o" / name)["passed"]
    _, data = _read_csv(tmp_path / "o" / "two" / "spectrum.csv")
    assert data.shape == (4, 3)


def test_sweep_propagates_worst_exit(tmp_path):
    d = tmp_path / "cfgs"
    d.mkdir()
    _write(d, "good.cfg", "scenario = spectrum\nn_max = 1\n")
    _write(d, "bad.cfg", "scenario = nothing\n")
    assert main(["run", "--sweep", str(d), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_config_and_sweep_are_exclusive(tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--out", str(tmp_path)])
