import csv
import io
import json

import numpy as np
import pytest

from horizonlab.cli import run
from horizonlab.cli.config import load_config
from horizonlab.errors import ConfigError
from horizonlab.waves.io import read_snapshot


def _run(capsys, *argv):
    code = run(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        code, out, _ = _run(capsys, "params", "--out", str(tmp_path), "--set", "params.charge=0.5")
        assert code == 0
        status = json.loads(out)
        assert status["status"] == "ok"
        assert "manifest.json" in status["artifacts"]

    def test_unknown_key_is_config_error(self, tmp_path, capsys):
        code, _, err = _run(capsys, "params", "--out", str(tmp_path), "--set", "params.bogus=1")
        assert code == 2
        rec = json.loads(err)
        assert rec["kind"] == "config" and rec["path"] == "params.bogus"

    def test_wrong_type_is_config_error(self, tmp_path, capsys):
        code, _, err = _run(capsys, "params", "--out", str(tmp_path), "--set", "params.mass=heavy")
        assert code == 2
        assert json.loads(err)["path"] == "params.mass"

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = _run(capsys, "params", "--out", str(tmp_path), "--config", str(tmp_path / "none.json"))
        assert code == 2
        assert json.loads(err)["path"] == "--config"

    def test_conflicting_command(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"command": "flow"}))
        with pytest.raises(ConfigError):
            load_config(str(p), command="params")

    def test_computational_failure(self, tmp_path, capsys):
        code, _, err = _run(capsys, "params", "--out", str(tmp_path), "--set", 'params.family="RN_flat"',
                            "--set", "params.lam=0.0", "--set", "params.charge=2.0")
        assert code == 1
        assert json.loads(err)["kind"] == "computation"
        assert json.loads((tmp_path / "error.json").read_text())["status"] == "error"

    def test_bad_jobs(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "scan", "--out", str(tmp_path), "--jobs", "0")
        assert code == 2


class TestParams:
    def test_values(self, tmp_path, capsys):
        _run(capsys, "params", "--out", str(tmp_path), "--set", 'params.family="RN_flat"', "--set", "params.lam=0.0",
             "--set", "params.charge=0.8")
        row = _rows(tmp_path / "params.csv")[0]
        assert float(row["r1"]) == pytest.approx(0.4, abs=1e-12)
        assert float(row["r2"]) == pytest.approx(1.6, abs=1e-12)
        assert float(row["beta1"]) == pytest.approx(4 / 15, rel=1e-12)
        assert json.loads((tmp_path / "params.json").read_text())["kappa1"] == pytest.approx(3.75)

    def test_deterministic_and_replayable(self, tmp_path, capsys):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        args = ("--set", "params.charge=0.3", "--set", "params.lam=0.01")
        _run(capsys, "params", "--out", str(a), *args)
        _run(capsys, "params", "--out", str(b), *args)
        _run(capsys, "params", "--out", str(c), "--config", str(a / "manifest.json"))
        for name in ("params.csv", "params.json", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()
        man = json.loads((a / "manifest.json").read_text())
        assert set(man["artifacts"]) == {"params.csv", "params.json"}
        assert man["config"]["params"]["charge"] == 0.3
        assert {"python", "numpy", "scipy"} <= set(man["versions"])

    def test_output_directory_from_environment(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("HORIZONLAB_OUT", str(tmp_path / "env"))
        assert _run(capsys, "params")[0] == 0
        assert (tmp_path / "env" / "params.csv").exists()


class TestScan:
    def test_charge_trend(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "scan", "--out", str(tmp_path), "--set", "params.lam=0.01",
                          "--set", "scan.axes={\"charge\": [0.1, 0.05]}")
        assert code == 0
        rows = sorted(_rows(tmp_path / "scan.csv"), key=lambda r: float(r["charge"]))
        assert [float(r["charge"]) for r in rows] == [0.05, 0.1]
        b = [float(r["beta1"]) / float(r["charge"]) ** 4 for r in rows]
        # beta_1 ~ Q^4 / 4 with the correction shrinking as Q decreases
        assert abs(b[0] - 0.25) < abs(b[1] - 0.25) < 0.01

    def test_parallel_matches_serial(self, tmp_path, capsys):
        args = ("--set", "scan.axes={\"charge\": [0.2, 0.4, 0.6]}")
        _run(capsys, "scan", "--out", str(tmp_path / "s"), *args)
        _run(capsys, "scan", "--out", str(tmp_path / "p"), "--jobs", "2", *args)
        assert (tmp_path / "s" / "scan.csv").read_bytes() == (tmp_path / "p" / "scan.csv").read_bytes()


class TestFit:
    def test_decay_fit_from_csv(self, tmp_path, capsys):
        t = np.linspace(0, 40, 401)
        src = tmp_path / "series.csv"
        buf = io.StringIO()
        buf.write("t,y\n")
        for a, b in zip(t, 2 + 3 * np.exp(-0.5 * t)):
            buf.write(f"{float(a)!r},{float(b)!r}\n")
        src.write_text(buf.getvalue())
        code, _, _ = _run(capsys, "fit", "--out", str(tmp_path / "o"), "--set", f"fit.input={src}",
                          "--set", 'fit.column="y"')
        assert code == 0
        res = json.loads((tmp_path / "o" / "fit.json").read_text())
        assert res["u0"] == pytest.approx(2.0, abs=1e-9)
        assert res["alpha"] == pytest.approx(0.5, rel=1e-8)

    def test_missing_column(self, tmp_path, capsys):
        src = tmp_path / "series.csv"
        src.write_text("t,y\n0,1\n1,2\n")
        code, _, err = _run(capsys, "fit", "--out", str(tmp_path / "o"), "--set", f"fit.input={src}",
                            "--set", 'fit.column="z"')
        assert code == 2
        assert json.loads(err)["path"] == "fit.column"


class TestEvolution:
    def test_exterior(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "evolve-exterior", "--out", str(tmp_path), "--set", "params.charge=0.5",
                          "--set", "exterior.n=300", "--set", "exterior.t_end=20.0", "--set", "exterior.snapshot_every=100")
        assert code == 0
        rows = _rows(tmp_path / "probes.csv")
        assert float(rows[-1]["t"]) == pytest.approx(20.0)
        data, axes, meta = read_snapshot(tmp_path / "final.snap")
        assert np.all(np.isfinite(data))
        assert "r" in axes
        rep = json.loads((tmp_path / "exterior.json").read_text())
        assert len(rep["fits"]) == sum(k.startswith("u@") for k in rows[0])

    def test_interior(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "evolve-interior", "--out", str(tmp_path), "--set", "params.charge=0.5",
                          "--set", "interior.h=0.1", "--set", "interior.v_max=20.0", "--set", "interior.u_min=-20.0")
        assert code == 0
        rep = json.loads((tmp_path / "interior.json").read_text())
        assert np.isfinite(rep["sup_abs"])
        assert (tmp_path / "rays.csv").exists()
        read_snapshot(tmp_path / "interior.snap")

    def test_interior_needs_cauchy_horizon(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "evolve-interior", "--out", str(tmp_path), "--set", "params.charge=0.0",
                          "--set", "interior.h=0.1", "--set", "interior.v_max=10.0")
        assert code in (1, 2)

    def test_flow_radial(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "flow", "--out", str(tmp_path), "--set", "params.charge=0.5")
        assert code == 0
        assert any(p.suffix == ".json" and p.name != "manifest.json" for p in tmp_path.iterdir())

    def test_pipeline(self, tmp_path, capsys):
        code, _, err = _run(capsys, "pipeline", "--out", str(tmp_path), "--set", "params.charge=0.5",
                            "--set", "exterior.n=400", "--set", "exterior.t_end=60.0",
                            "--set", "interior.h=0.1", "--set", "interior.v_max=30.0",
                            "--set", "interior.u_min=-20.0")
        assert code == 0, err
        rep = json.loads((tmp_path / "pipeline.json").read_text())
        assert (tmp_path / "tail.csv").exists()
        assert rep["predictors"]["status"] == "theorem"
        assert np.isfinite(rep["interior_sup"])
