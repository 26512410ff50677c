import cmath
import json
import math

import numpy as np
import pytest

from pdrwave import cli
from pdrwave.beampattern import RadarConfig, desired_pattern, scenario_cases
from pdrwave.errors import SolverError
from pdrwave.io import read_csv, read_waveform, write_waveform
from pdrwave.ortho import lfm_set


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_design_writes_bundle(tmp_path, capsys):
    out = tmp_path / "c1"
    code, cap = run(capsys, "design", "--config", "case1", "--output-dir", str(out))
    assert code == 0
    for name in ("waveform.csv", "pattern.csv", "inner_trace.csv", "outer_trace.csv", "summary.json"):
        assert (out / name).exists()
    assert not (out / ".lock").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["deviation_db"] - 22.80) <= 1.5
    assert summary["iterations"] <= 300
    assert summary["config"]["scenario"] == "case1"
    header, rows = read_csv(out / "pattern.csv")
    assert header == ["theta_deg", "f_hz", "value_db"] and len(rows) == 180 * 32
    assert json.loads(cap.out)["deviation_db"] == summary["deviation_db"]


def test_evaluate_reproduces_design_metrics(tmp_path, capsys):
    run(capsys, "design", "--config", "case1", "--output-dir", str(tmp_path / "d"))
    summary = json.loads((tmp_path / "d" / "summary.json").read_text())
    code, cap = run(
        capsys, "evaluate", "--config", "case1", "--waveform", str(tmp_path / "d" / "waveform.csv"),
        "--output-dir", str(tmp_path / "e"),
    )
    assert code == 0
    ev = json.loads((tmp_path / "e" / "evaluation.json").read_text())
    assert abs(ev["deviation_db"] - summary["deviation_db"]) <= 1e-12
    assert abs(ev["isl0_db"] - summary["isl0_db"]) <= 1e-12
    assert (tmp_path / "e" / "pattern.csv").read_text() == (tmp_path / "d" / "pattern.csv").read_text().replace(
        str(tmp_path / "d"), str(tmp_path / "e")
    )


def test_evaluate_lfm_code(tmp_path, capsys):
    x = lfm_set(10, 32).T.reshape(-1)
    write_waveform(tmp_path / "lfm.csv", x, 10, 32)
    code, cap = run(capsys, "evaluate", "--config", "case1", "--waveform", str(tmp_path / "lfm.csv"), "--output-dir", str(tmp_path / "o"))
    assert code == 0 and json.loads(cap.out)["isl0_db"] <= -200


def test_evaluate_all_ones_against_scalar_loops(tmp_path, capsys):
    cfg = RadarConfig()
    write_waveform(tmp_path / "ones.csv", np.ones(cfg.L), cfg.M, cfg.N)
    code, cap = run(capsys, "evaluate", "--config", "case1", "--waveform", str(tmp_path / "ones.csv"), "--output-dir", str(tmp_path / "o"))
    assert code == 0
    # independent recomputation with plain complex arithmetic
    c, f_c, B, M, N = 299_792_458.0, 1e9, 200e6, 10, 32
    d = c / (2 * (f_c + B / 2))
    amp = desired_pattern(cfg, scenario_cases()["case1"]).amplitudes
    rho = 0.0
    for pi, p in enumerate(range(-N // 2, N // 2)):
        y = sum(cmath.exp(-2j * math.pi * n * p / N) for n in range(N))
        f = p * B / N + f_c
        for si in range(180):
            theta = math.radians(si + 0.5)
            resp = sum(cmath.exp(-2j * math.pi * f * m * d * math.cos(theta) / c) * y for m in range(M))
            rho += (amp[si, pi] - abs(resp) / N) ** 2
    assert json.loads(cap.out)["deviation_db"] == pytest.approx(10 * math.log10(rho), rel=1e-9)


def test_evaluate_warns_on_non_unit_code(tmp_path, capsys):
    write_waveform(tmp_path / "w.csv", 2 * np.ones(320), 10, 32)
    with pytest.warns(UserWarning, match="unit-modulus"):
        code, _ = run(capsys, "evaluate", "--config", "case1", "--waveform", str(tmp_path / "w.csv"), "--output-dir", str(tmp_path / "o"))
    assert code == 0


def test_evaluate_length_mismatch(tmp_path, capsys):
    write_waveform(tmp_path / "w.csv", np.ones(8), 2, 4)
    code, cap = run(capsys, "evaluate", "--config", "case1", "--waveform", str(tmp_path / "w.csv"), "--output-dir", str(tmp_path / "o"))
    assert code == 2 and "2 x 4" in cap.err


def test_malformed_json_exit_code_and_no_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"radar": {"M": 10,}')
    out = tmp_path / "never"
    code, cap = run(capsys, "design", "--config", str(bad), "--output-dir", str(out))
    assert code == 2
    assert "line 1" in cap.err
    assert not out.exists()


def test_solver_error_exit_code(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise SolverError("did not converge")

    monkeypatch.setattr(cli, "design_beampattern", boom)
    out = tmp_path / "o"
    code, cap = run(capsys, "design", "--config", "case1", "--output-dir", str(out))
    assert code == 3 and "did not converge" in cap.err
    assert not out.exists()


def test_locked_output_dir(tmp_path, capsys):
    out = tmp_path / "o"
    out.mkdir()
    (out / ".lock").write_text("123")
    code, cap = run(capsys, "design", "--config", "case1", "--output-dir", str(out))
    assert code == 2 and "in use" in cap.err


def test_overrides_apply(tmp_path, capsys):
    out = tmp_path / "o"
    code, _ = run(capsys, "design", "--config", "case1", "--output-dir", str(out), "--seed", "7", "--beta", "4e-5", "--alpha", "100")
    assert code == 0
    cfg = json.loads((out / "summary.json").read_text())["config"]
    assert (cfg["seed"], cfg["solver"]["beta"], cfg["alpha"]) == (7, 4e-5, 100.0)


def test_safe_mode_design_runs(tmp_path, capsys):
    code, _ = run(capsys, "--threads", "1", "design", "--config", "case1", "--safe-mode", "--output-dir", str(tmp_path / "s"))
    assert code == 0
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert summary["config"]["solver"]["safe_mode"] is True


def test_alpha_200_design_is_nearly_orthogonal(tmp_path, capsys):
    code, _ = run(capsys, "design", "--config", "case1", "--alpha", "200", "--beta", "3e-5", "--output-dir", str(tmp_path / "a"))
    assert code == 0
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["isl0_db"] <= -10


@pytest.mark.parametrize("mode", ["lfm", "coherent"])
def test_mismatch_outputs(tmp_path, capsys, mode):
    out = tmp_path / mode
    code, cap = run(capsys, "mismatch", "--config", "case1", "--mode", mode, "--delta", "10", "20", "--output-dir", str(out))
    assert code == 0
    table = {r["delta_deg"]: r["peak_loss_db"] for r in json.loads(cap.out)["peak_loss"]}
    assert table[0.0] == 0.0
    if mode == "lfm":
        assert table[10.0] <= 0.5 and table[20.0] <= 0.5
    else:
        assert table[10.0] >= 3 and table[20.0] >= 3
    for delta in ("0", "10", "20"):
        header, rows = read_csv(out / f"gtr_{mode}_delta{delta}.csv")
        assert header == ["theta_deg", "g_tr", "g_tr_db"] and len(rows) == 1801
    assert (out / f"peak_loss_{mode}.csv").exists()


def test_mismatch_with_supplied_waveform(tmp_path, capsys):
    write_waveform(tmp_path / "w.csv", lfm_set(10, 32).T.reshape(-1), 10, 32)
    code, cap = run(capsys, "mismatch", "--config", "case1", "--mode", "pdr", "--waveform", str(tmp_path / "w.csv"), "--output-dir", str(tmp_path / "m"))
    assert code == 0
    assert all(r["peak_loss_db"] <= 0.5 for r in json.loads(cap.out)["peak_loss"])


def test_baselines(tmp_path, capsys):
    code, cap = run(capsys, "baselines", "--config", "case1", "--output-dir", str(tmp_path / "b"))
    assert code == 0
    res = json.loads((tmp_path / "b" / "baselines.json").read_text())
    assert abs(res["unconstrained_deviation_db"] - 19.93) <= 1.0
    assert res["lfm_isl0_db"] <= -200


def test_cases_prints_bundled_configs(capsys):
    code, cap = run(capsys, "cases")
    assert code == 0 and cap.out.count('"scenario"') == 3
    code, cap = run(capsys, "cases", "case2")
    assert json.loads(cap.out)["solver"]["beta"] == 4e-5


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "pdrwave", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "pdrwave" in res.stdout


def test_design_is_deterministic(tmp_path, capsys):
    for name in ("r1", "r2"):
        assert run(capsys, "design", "--config", "case2", "--seed", "11", "--output-dir", str(tmp_path / name))[0] == 0
    a, _, _ = read_waveform(tmp_path / "r1" / "waveform.csv")
    b, _, _ = read_waveform(tmp_path / "r2" / "waveform.csv")
    assert a.tobytes() == b.tobytes()
