import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from whichway import cli


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def write_cfg(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestFigure:
    def test_fig1_csv(self, tmp_path):
        out = tmp_path / "fig1.csv"
        assert cli.main(["figure", "1", "--out", str(out)]) == 0
        header, data = read_csv(out)
        assert header == ["x_over_b", "V_x", "K_x", "delta", "density"]
        assert data.shape == (601, 5)
        i = np.argmax(data[:, 1])
        assert data[i, 0] == 0.0 and data[i, 1] == pytest.approx(1.0, abs=1e-15)

    def test_fig2_values(self, tmp_path):
        out = tmp_path / "fig2.csv"
        assert cli.main(["figure", "2", "--out", str(out)]) == 0
        _, data = read_csv(out)
        assert data[0, 1] == pytest.approx(1 / math.cosh(4), rel=1e-15)
        assert np.all(np.diff(data[:, 1]) > 0)

    def test_floats_round_trip(self, tmp_path):
        from whichway import eraser
        out = tmp_path / "fig1.csv"
        cli.main(["figure", "1", "--out", str(out)])
        _, data = read_csv(out)
        assert np.array_equal(data[:, 1], eraser.figure_scan("fig1").V_x)

    def test_bit_identical_runs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["figure", "3", "--out", str(a)])
        cli.main(["figure", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_json(self, tmp_path):
        out = tmp_path / "fig1.json"
        assert cli.main(["figure", "1", "--format", "json", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["rows"]) == 601

    def test_config_overrides(self, tmp_path):
        cfg = write_cfg(tmp_path, "figure:\n  points: 11\nphysics:\n  lambda_plus: 1.0\n")
        out = tmp_path / "f.csv"
        assert cli.main(["figure", "1", "--config", cfg, "--out", str(out)]) == 0
        _, data = read_csv(out)
        assert data.shape[0] == 11 and np.all(data[:, 1] == 0.0)

    def test_bad_figure_id(self, capsys):
        assert cli.main(["figure", "4"]) == 2


class TestConfig:
    def test_unknown_key(self, tmp_path):
        cfg = write_cfg(tmp_path, "physics:\n  dd: 3\n")
        assert cli.main(["figure", "1", "--config", cfg]) == 2

    def test_unknown_section(self, tmp_path):
        cfg = write_cfg(tmp_path, "colors: {}\n")
        assert cli.main(["figure", "1", "--config", cfg]) == 2

    def test_bad_lambdas(self, tmp_path):
        cfg = write_cfg(tmp_path, "physics:\n  lambda_plus: 0.9\n  lambda_minus: 0.9\n")
        assert cli.main(["figure", "1", "--config", cfg]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["figure", "1", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_empty_config(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "")
        assert cli.main(["figure", "1", "--config", cfg]) == 0
        assert capsys.readouterr().out.startswith("x_over_b,")

    def test_lambda_completion(self):
        cfg = cli.load_config(None)
        cfg["physics"]["lambda_plus"] = math.sqrt(0.3)
        lp, lm = cfg.lambdas
        assert lp * lp + lm * lm == pytest.approx(1.0, abs=1e-15)


class TestVerify:
    def test_passes(self, capsys):
        assert cli.main(["verify"]) == 0
        assert "all invariants hold" in capsys.readouterr().out

    @pytest.mark.parametrize("fault", ["identity-sign", "eraser-sign"])
    def test_injected_fault_detected(self, fault, capsys):
        assert cli.main(["verify", "--inject-fault", fault]) == 1
        assert "invariant failure" in capsys.readouterr().out


class TestSample:
    def test_csv_outputs(self, tmp_path):
        out = tmp_path / "hist.csv"
        assert cli.main(["sample", "--n", "20000", "--seed", "4", "--out", str(out)]) == 0
        header, hist = read_csv(out)
        assert header == ["bin_lo", "bin_hi", "count", "expected"]
        assert hist[:, 2].sum() == 20000
        _, vis = read_csv(tmp_path / "hist_visibility.csv")
        locus = vis[np.argmin(np.abs((vis[:, 0] + vis[:, 1]) / 2))]
        assert locus[3] == pytest.approx(1.0, abs=0.02)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert cli.main(["sample", "--n", "5000", "--format", "json", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()
        doc = json.loads(a.read_text())
        assert doc["summary"]["n"] == 5000 and doc["summary"]["seed"] == 0

    def test_zero_draws(self):
        assert cli.main(["sample", "--n", "0"]) == 2

    def test_no_detector_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, "sampling:\n  scenario: no-detector\n  n: 1000\n")
        out = tmp_path / "h.csv"
        assert cli.main(["sample", "--config", cfg, "--out", str(out)]) == 0
        assert not (tmp_path / "h_visibility.csv").exists()


class TestWaveParticle:
    def test_json_report(self, tmp_path):
        out = tmp_path / "wp.json"
        assert cli.main(["waveparticle", "--format", "json", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        det = rep["detectors"]
        assert det["D1"]["region_fidelity_wave"] > 0.99
        assert det["D3"]["region_fidelity_particle"] > 0.99
        assert det["D2"]["center_fidelity_superposition"] == pytest.approx(1.0, abs=1e-12)
        assert sum(d["click_probability"] for d in det.values()) < 1.0
        assert rep["convention"] == "bare"
        assert rep["postselection_probability"] == pytest.approx(0.7523, abs=1e-4)

    def test_csv(self, tmp_path):
        out = tmp_path / "wp.csv"
        assert cli.main(["waveparticle", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("detector,") and len(lines) == 4


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "whichway", "figure", "2", "--config", "/dev/null"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0
    assert len(res.stdout.splitlines()) == 602
