import csv

import numpy as np
import pytest

from wzdrift.cli import main
from wzdrift.config import parse_config
from wzdrift.runner import run_scenario, run_sweep

SHORT_RUN = """
[model]
name = tripod
x = 1.0

[protocol]
scan = z
start = 0.0
end = 2.0
velocity = 0.01

[run]
dt = 0.01
sample_interval = 0.5
out_dir = {out}
"""

SHORT_SWEEP = SHORT_RUN + """
[sweep]
velocities = 2.5e-3, 5e-3, 1e-2, 2e-2
workers = 2
"""


@pytest.fixture
def short_cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SHORT_RUN.format(out=tmp_path / "out"))
    return path, tmp_path / "out"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRunCommand:
    def test_run_writes_trace(self, short_cfg, capsys):
        path, out = short_cfg
        assert main(["run", str(path)]) == 0
        rows = read_rows(out / "trace.csv")
        assert rows[0] == ["t", "R", "d_perp", "d_par", "norm_err", "predicted_offset"]
        assert len(rows) == 402  # 400 samples plus endpoints
        summary = capsys.readouterr().out
        assert "mean_d_perp=" in summary and "max_d_par=" in summary

    def test_deterministic_bytes(self, short_cfg, tmp_path):
        path, out = short_cfg
        assert main(["run", str(path), "--out-dir", str(tmp_path / "a")]) == 0
        assert main(["run", str(path), "--out-dir", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "trace.csv").read_bytes()
        b = (tmp_path / "b" / "trace.csv").read_bytes()
        assert a == b

    def test_emit_gamma(self, short_cfg, tmp_path):
        path, _ = short_cfg
        out = tmp_path / "g"
        assert main(["run", str(path), "--out-dir", str(out), "--emit-gamma"]) == 0
        gamma_rows = read_rows(out / "gamma_matrix.csv")
        assert len(gamma_rows) == 7  # header + 6 rows
        spec_rows = read_rows(out / "gamma_spectrum.csv")
        assert [r[3] for r in spec_rows[1:]].count("1") == 2  # two zero modes

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[protocol]\nvelocty = 1e-3\n")
        assert main(["run", str(bad)]) == 2
        assert "velocity" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.cfg")]) == 2

    def test_numerical_error_exit_code(self, short_cfg, capsys):
        path, _ = short_cfg
        # --dt bypasses config validation; the integrator still refuses
        assert main(["run", str(path), "--dt", "0.2"]) == 3
        assert "StepTooLarge" in capsys.readouterr().err

    def test_velocity_override(self, short_cfg, tmp_path):
        path, _ = short_cfg
        out = tmp_path / "v"
        assert main(["run", str(path), "--out-dir", str(out),
                     "--velocity", "0.02"]) == 0
        rows = read_rows(out / "trace.csv")
        assert len(rows) == 202  # half the duration at twice the speed


class TestScenarioSeeding:
    def test_offset_start_flattens_short_run(self, tmp_path):
        text = SHORT_RUN.format(out=tmp_path / "o1")
        cfg_i = parse_config(text)
        cfg_ii = parse_config(text.replace("[run]", "[run]\nscenario = offset_start"))
        tr_i, _ = run_scenario(cfg_i, out_dir=str(tmp_path / "i"))
        tr_ii, _ = run_scenario(cfg_ii, out_dir=str(tmp_path / "ii"))
        assert tr_ii.d_perp.std() < 0.5 * tr_i.d_perp.std()

    def test_predicted_column_positive(self, tmp_path):
        cfg = parse_config(SHORT_RUN.format(out=tmp_path / "o2"))
        trace, summary = run_scenario(cfg)
        assert np.all(trace.predicted_offset > 0)
        assert summary["predicted_offset"] == pytest.approx(trace.predicted_offset[0])


class TestSweepCommand:
    def test_sweep_writes_summary_and_scaling(self, tmp_path, capsys):
        path = tmp_path / "sweep.cfg"
        path.write_text(SHORT_SWEEP.format(out=tmp_path / "sw"))
        assert main(["sweep", str(path)]) == 0
        summary = read_rows(tmp_path / "sw" / "summary.csv")
        assert summary[0] == ["velocity", "mean_d_perp", "max_d_par"]
        assert len(summary) == 5
        scaling = read_rows(tmp_path / "sw" / "scaling.csv")
        assert scaling[1][0] == "mean_perp" and scaling[2][0] == "max_par"
        slope_perp = float(scaling[1][1])
        slope_par = float(scaling[2][1])
        assert 0.8 < slope_perp < 1.2
        assert slope_par > 1.5
        for v in ("0.0025", "0.005", "0.01", "0.02"):
            assert (tmp_path / "sw" / f"run_v{v}" / "trace.csv").exists()

    def test_sweep_requires_velocities(self, tmp_path):
        cfg = parse_config(SHORT_RUN.format(out=tmp_path))
        with pytest.raises(Exception):
            run_sweep(cfg)

    def test_zero_spread_sweep_exits_poorly(self, tmp_path, capsys):
        path = tmp_path / "flat.cfg"
        path.write_text(SHORT_RUN.format(out=tmp_path / "flat")
                        + "\n[sweep]\nvelocities = 1e-2, 1e-2, 1e-2\nworkers = 1\n")
        assert main(["sweep", str(path)]) == 3
        assert "PoorFit" in capsys.readouterr().err


class TestReverseScan:
    def test_negated_velocity_statistics_match(self, tmp_path):
        forward = parse_config(SHORT_RUN.format(out=tmp_path / "f")
                               .replace("end = 2.0", "end = 4.0"))
        reverse = parse_config(SHORT_RUN.format(out=tmp_path / "r")
                               .replace("start = 0.0", "start = 4.0")
                               .replace("end = 2.0", "end = 0.0")
                               .replace("velocity = 0.01", "velocity = -0.01"))
        tr_f, _ = run_scenario(forward)
        tr_r, _ = run_scenario(reverse)
        half_f = tr_f.d_perp[tr_f.times.size // 2:].mean()
        half_r = tr_r.d_perp[tr_r.times.size // 2:].mean()
        assert abs(half_r - half_f) <= 0.02 * half_f
