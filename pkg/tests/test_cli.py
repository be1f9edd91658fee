import argparse
import json
import time
from pathlib import Path

import pytest

from minorclt.cli import (CSV_COLUMNS, EXIT_FAIL, EXIT_OK, EXIT_USAGE, cmd_verify, format_config,
                          main, parse_config)
from minorclt.harness import ConfigError, MCReport
from minorclt.predictor import PredictionReport
from minorclt.spectral import w_semicircle

SMOKE = """minorclt-config v1
# smoke run
ensemble = complex-gaussian
function = bump
phi = 1
N_list = 32
trials = 200
seed = 11
"""


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestPredict:
    def test_zero_variance_example(self, capsys):
        code, out, _ = run(["predict", "-f", "id", "--phi", "4", "--ensemble", "complex-bernoulli"], capsys)
        d = json.loads(out)
        assert code == EXIT_OK
        assert d["omega"] == pytest.approx(2.0, abs=1e-12)
        assert d["v_f"] == pytest.approx(0.0, abs=1e-10)
        assert d["zero_variance"] is True

    def test_constant(self, capsys):
        code, out, _ = run(["predict", "-f", "one", "--phi", "1", "--ensemble", "real-gaussian"], capsys)
        assert code == EXIT_OK
        assert json.loads(out)["omega"] == pytest.approx(1.0, abs=1e-12)

    def test_regime_error(self, capsys):
        code, _, err = run(["predict", "--phi", "1.05"], capsys)
        assert code == EXIT_USAGE
        assert "phi = 1 or |phi - 1| > d_star" in err

    @pytest.mark.parametrize("argv", [
        ["predict", "-f", "nope", "--phi", "1"],
        ["predict", "-f", "id", "--phi", "1", "--ensemble", "nope"],
        ["predict", "-f", "id", "--phi", "-2"],
        ["predict", "-f", "id"],
        ["frobnicate"],
        [],
    ])
    def test_usage_errors(self, argv, capsys):
        assert run(argv, capsys)[0] == EXIT_USAGE

    def test_help_is_success(self, capsys):
        assert run(["--help"], capsys)[0] == EXIT_OK

    def test_output_files(self, tmp_path, capsys):
        code, _, _ = run(["predict", "-f", "bump", "--phi", "4", "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        [rep] = tmp_path.glob("*.prediction.json")
        d = json.loads(rep.read_text())
        man = json.loads((tmp_path / d.pop("manifest")).read_text())
        assert man["status"] == "done"
        PredictionReport.from_dict(d)


class TestSimulate:
    def test_smoke_under_budget(self, tmp_path, capsys):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        t0 = time.perf_counter()
        code, out, _ = run(["simulate", str(cfg), "--out", str(tmp_path / "o")], capsys)
        assert time.perf_counter() - t0 < 30
        assert code in (EXIT_OK, EXIT_FAIL)
        [csv_path] = (tmp_path / "o").glob("*.csv")
        header = csv_path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_same_seed_same_csv(self, tmp_path, capsys):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        for d in ("a", "b"):
            run(["simulate", str(cfg), "--trials", "60", "--out", str(tmp_path / d)], capsys)
        [a] = (tmp_path / "a").glob("*.csv")
        [b] = (tmp_path / "b").glob("*.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_manifest_referenced(self, tmp_path, capsys):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        run(["simulate", str(cfg), "--trials", "30", "--out", str(tmp_path)], capsys)
        [rep] = tmp_path.glob("*.report.json")
        d = json.loads(rep.read_text())
        man = json.loads((tmp_path / d["manifest"]).read_text())
        assert man["resolved_config"]["seed"] == 11
        assert "started" in man and "finished" in man
        assert set(man["outputs"].values()) >= {rep.name, d["manifest"]}
        MCReport.from_dict(d)

    def test_checks_toggle(self, tmp_path, capsys):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        run(["simulate", str(cfg), "--trials", "10", "--N", "16", "--checks", "rank1", "ward", "interlacing",
             "--out", str(tmp_path / "on")], capsys)
        run(["simulate", str(cfg), "--trials", "10", "--N", "16", "--out", str(tmp_path / "off")], capsys)
        on = next((tmp_path / "on").glob("*.csv")).read_text()
        off = next((tmp_path / "off").glob("*.csv")).read_text()
        for name in ("rank1", "ward", "interlacing"):
            assert f"16,check_{name},0," in on
            assert f"check_{name}" not in off

    def test_flags_without_config(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--ensemble", "complex-bernoulli", "-f", "id", "--phi", "1",
                          "--N", "16", "--trials", "120", "--seed", "0", "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK

    def test_statistical_failure_exit(self, tmp_path, capsys):
        """A variance far from the prediction (tiny N, many trials) is a verdict failure."""
        code, out, _ = run(["simulate", "--ensemble", "real-rademacher", "-f", "sq", "--phi", "1",
                            "--N", "4", "--trials", "4000", "--seed", "0", "--out", str(tmp_path)], capsys)
        assert code == EXIT_FAIL
        assert "variance" in out and "fail" in out

    @pytest.mark.parametrize("text", [
        "ensemble = complex-gaussian\n",
        "minorclt-config v2\n",
        SMOKE + "colour = blue\n",
        SMOKE + "seed = 3\n",
        SMOKE.replace("trials = 200", "trials = many"),
        SMOKE.replace("phi = 1", "phi = 1.02"),
        SMOKE.replace("N_list = 32", "N_list = 1"),
        SMOKE + "eta0 = 0.5\n",
        SMOKE + "checks = rank1, nonsense\n",
        SMOKE.replace("seed = 11\n", ""),
        SMOKE.replace("trials = 200", "trials 200"),
    ])
    def test_malformed_config(self, tmp_path, capsys, text):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(text)
        assert run(["simulate", str(cfg), "--out", str(tmp_path)], capsys)[0] == EXIT_USAGE

    def test_missing_config_file(self, tmp_path, capsys):
        assert run(["simulate", str(tmp_path / "absent.cfg")], capsys)[0] == EXIT_USAGE


class TestConfigFormat:
    def test_round_trip(self):
        d = parse_config(SMOKE + "checks = rank1, ward\nsweep = true\neta0 = 0.001\n")
        assert d["N_list"] == (32,) and d["checks"] == ("rank1", "ward") and d["sweep"] is True
        assert parse_config(format_config(d)) == d

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_config(SMOKE + "phi = 4\n")


class TestVerify:
    def _args(self, grid="standard", out=None):
        return argparse.Namespace(grid=grid, out=out)

    def test_default(self, capsys):
        assert run(["verify"], capsys)[0] == EXIT_OK

    def test_fine_grid(self, capsys, tmp_path):
        code, out, _ = run(["verify", "--grid", "fine", "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        [rep] = tmp_path.glob("*.verify.json")
        assert json.loads(rep.read_text())["passed"] is True

    def test_injected_sign_error(self, capsys):
        code = cmd_verify(self._args(), w_func=lambda z, phi: -w_semicircle(z, phi))
        out = capsys.readouterr().out
        assert code == EXIT_FAIL
        assert "FAIL" in out


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "minorclt", "predict", "-f", "sq", "--phi", "1"],
                       capture_output=True, text=True, cwd=Path(__file__).parent)
    assert r.returncode == 0
    assert json.loads(r.stdout)["omega"] == pytest.approx(3.0)
