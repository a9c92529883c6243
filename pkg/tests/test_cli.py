"""Exit codes, file outputs, and reproducibility of the experiment runner."""

import json
import subprocess
import sys

import pytest

from wflow import cli
from wflow.transport import IntegrationError

IDENTITY_EQUAL = """\
kind: identity
rho: 2.0
horizon: 0.5
steps: 100
x:
  mm_infty: {birth: 1.0, death: 0.5, n_top: 30}
y:
  mm_infty: {birth: 1.0, death: 0.5, n_top: 30}
p0_x:
  dirac: 3.0
p0_y:
  dirac: 3.0
tolerances:
  residual: 1.0e-10
"""

BD_CONTRACTION = """\
kind: bd-contraction
chain:
  mm_infty: {birth: 1.0, death: 0.5, n_top: 40}
p0_x:
  dirac: 3.0
p0_y:
  dirac: 7.0
rho: 2.0
horizon: 1.0
steps: 200
tolerances:
  violation: 1.0e-8
"""

BAD_KERNEL = """\
kind: simulate
horizon: 1.0
n_paths: 100
seed: 7
generator:
  states: [0.0, 1.0]
  lam: [1.0, 1.0]
  kernel: [[0.0, 0.9], [1.0, 0.0]]
p0:
  dirac: 0.0
"""

SIMULATE = """\
kind: simulate
horizon: 1.0
n_paths: 20000
seed: 11
generator:
  mm_infty: {birth: 1.0, death: 0.5, n_top: 30}
p0:
  dirac: 2.0
confidence: 0.99
"""

PDMP_APPROX = """\
kind: pdmp-approx
x:
  drift: {name: neg_tanh}
  intensity: {const: 0.3}
  kernel: {name: shift, d: 0.5}
p0_x:
  support: [0.5, 1.0, 1.5]
  weights: [0.4, 0.3, 0.3]
p0_y:
  support: [-1.0, -0.4]
  weights: [0.5, 0.5]
rho: 2.0
horizon: 1.0
mu_list: [4, 8]
steps: 40
grid_nodes: 257
tolerances:
  identity_residual: 1.0e-2
"""

BOUNDS_GROWTH = """\
kind: bounds
family: growth-moment
generator:
  mm_infty: {birth: 1.0, death: 0.5, n_top: 40}
p0:
  dirac: 3.0
horizon: 1.0
alpha_list: [1, 2, 3]
"""


def write_config(tmp_path, text, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_summary(out_dir):
    with open(out_dir / "summary.json") as fh:
        return json.load(fh)


def read_rows(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestExitCodes:
    def test_identity_equal_marginals_passes(self, tmp_path):
        cfg = write_config(tmp_path, IDENTITY_EQUAL)
        out = tmp_path / "out"
        code = cli.main(["identity", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        summary = read_summary(out)
        assert summary["schema"] == 1
        assert summary["kind"] == "identity"
        assert summary["max_residual"] <= 1e-10
        assert summary["violations"] == 0
        assert summary["runtime_seconds"] > 0
        assert (out / "identity.csv").exists()

    def test_bd_contraction_violation_column(self, tmp_path):
        cfg = write_config(tmp_path, BD_CONTRACTION)
        out = tmp_path / "out"
        code = cli.main(["bd-contraction", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        rows = read_rows(out / "bd-contraction.csv")
        assert len(rows) == 201
        assert max(float(r["violation"]) for r in rows) <= 1e-8

    def test_invalid_kernel_is_config_error_with_line(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BAD_KERNEL)
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        line = 1 + BAD_KERNEL.splitlines().index("generator:")
        assert err.startswith(f"{cfg}:{line}:")
        assert "kernel rows" in err

    def test_tolerance_violation_exits_nonzero(self, tmp_path):
        text = BD_CONTRACTION.replace("1.0e-8", "1.0e-30")
        cfg = write_config(tmp_path, text)
        out = tmp_path / "out"
        code = cli.main(["bd-contraction", "--config", str(cfg), "--out", str(out)])
        assert code == 1
        assert read_summary(out)["violations"] == 1

    def test_numerical_failure_exits_three(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, IDENTITY_EQUAL)
        config = cli.load_config(cfg, "identity", out_dir=str(tmp_path / "o"))

        def boom(config, out_dir, started):
            raise IntegrationError("dual check failed")

        monkeypatch.setitem(cli._RUNNERS, "identity", boom)
        assert cli.run(config) == 3

    def test_runtime_error_exits_three(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, IDENTITY_EQUAL)
        config = cli.load_config(cfg, "identity", out_dir=str(tmp_path / "o"))
        monkeypatch.setitem(
            cli._RUNNERS,
            "identity",
            lambda *a: (_ for _ in ()).throw(RuntimeError("diverged")),
        )
        assert cli.run(config) == 3

    def test_kind_mismatch_anchored_to_kind_line(self, tmp_path, capsys):
        cfg = write_config(tmp_path, IDENTITY_EQUAL)
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert capsys.readouterr().err.startswith(f"{cfg}:1:")

    def test_yaml_syntax_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "kind: identity\n  bad: [unclosed\n")
        code = cli.main(["identity", "--config", str(cfg)])
        assert code == 2
        assert "YAML" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = cli.main(["identity", "--config", str(tmp_path / "absent.yaml")])
        assert code == 2

    def test_nonpositive_tolerance_rejected(self, tmp_path, capsys):
        text = IDENTITY_EQUAL.replace("1.0e-10", "-1.0")
        cfg = write_config(tmp_path, text)
        code = cli.main(["identity", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        line = 1 + text.splitlines().index("tolerances:")
        assert err.startswith(f"{cfg}:{line}:")

    def test_rho_below_one_rejected(self, tmp_path, capsys):
        text = IDENTITY_EQUAL.replace("rho: 2.0", "rho: 0.5")
        cfg = write_config(tmp_path, text)
        code = cli.main(["identity", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "rho" in capsys.readouterr().err

    def test_missing_seed_for_sampling(self, tmp_path, capsys):
        text = SIMULATE.replace("seed: 11\n", "")
        cfg = write_config(tmp_path, text)
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_unknown_bounds_family(self, tmp_path, capsys):
        text = BOUNDS_GROWTH.replace("growth-moment", "mystery")
        cfg = write_config(tmp_path, text)
        code = cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "family" in capsys.readouterr().err

    def test_unknown_kind_rejected_by_parser(self, tmp_path):
        cfg = write_config(tmp_path, IDENTITY_EQUAL)
        with pytest.raises(SystemExit) as exc:
            cli.main(["spectral", "--config", str(cfg)])
        assert exc.value.code == 2


class TestReproducibility:
    def test_simulate_csv_byte_identical(self, tmp_path, monkeypatch):
        monkeypatch.delenv("WFLOW_THREADS", raising=False)
        cfg = write_config(tmp_path, SIMULATE)
        outs = []
        for name, extra in [("a", []), ("b", []), ("c", ["--threads", "4"])]:
            out = tmp_path / name
            code = cli.main(
                ["simulate", "--config", str(cfg), "--out", str(out)] + extra
            )
            assert code == 0
            outs.append((out / "simulate.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_env_thread_count_does_not_change_csv(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, SIMULATE)
        out1 = tmp_path / "one"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out1)])
        monkeypatch.setenv("WFLOW_THREADS", "8")
        out2 = tmp_path / "eight"
        cli.main(["simulate", "--config", str(cfg), "--out", str(out2)])
        assert (out1 / "simulate.csv").read_bytes() == (out2 / "simulate.csv").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, SIMULATE)
        base = tmp_path / "base"
        cli.main(["simulate", "--config", str(cfg), "--out", str(base)])
        same = tmp_path / "same"
        cli.main(["simulate", "--config", str(cfg), "--out", str(same), "--seed", "11"])
        other = tmp_path / "other"
        cli.main(["simulate", "--config", str(cfg), "--out", str(other), "--seed", "12"])
        base_csv = (base / "simulate.csv").read_bytes()
        assert base_csv == (same / "simulate.csv").read_bytes()
        assert base_csv != (other / "simulate.csv").read_bytes()


class TestRunners:
    def test_simulate_gap_within_envelope(self, tmp_path):
        cfg = write_config(tmp_path, SIMULATE)
        out = tmp_path / "out"
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        summary = read_summary(out)
        assert summary["violations"] == 0
        assert summary["max_residual"] > 0
        rows = read_rows(out / "simulate.csv")
        assert abs(sum(float(r["weight"]) for r in rows) - 1.0) < 1e-12

    def test_simulate_finite_mu_chain(self, tmp_path):
        text = SIMULATE.replace("generator:", "mu: 16\npdmp:").replace(
            "  mm_infty: {birth: 1.0, death: 0.5, n_top: 30}",
            "  drift: {name: neg_tanh}\n  intensity: {const: 0.3}\n"
            "  kernel: {name: shift, d: 0.5}",
        ).replace("n_paths: 20000", "n_paths: 2000")
        cfg = write_config(tmp_path, text)
        out = tmp_path / "out"
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        assert (out / "simulate.csv").exists()

    def test_pdmp_approx_without_sampling_needs_no_seed(self, tmp_path):
        cfg = write_config(tmp_path, PDMP_APPROX)
        out = tmp_path / "out"
        code = cli.main(["pdmp-approx", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        rows = read_rows(out / "pdmp-approx.csv")
        assert [float(r["mu"]) for r in rows] == [4.0, 8.0]
        assert all(float(r["identity_residual"]) <= 1e-2 for r in rows)

    def test_bounds_growth_moment(self, tmp_path):
        cfg = write_config(tmp_path, BOUNDS_GROWTH)
        out = tmp_path / "out"
        code = cli.main(["bounds", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        rows = read_rows(out / "bounds.csv")
        assert len(rows) == 3
        for row in rows:
            assert float(row["lhs"]) <= float(row["rhs"])
            assert float(row["violation"]) == 0.0

    def test_bounds_bd_moment(self, tmp_path):
        text = BOUNDS_GROWTH.replace("growth-moment", "bd-moment").replace(
            "generator:", "chain:"
        ).replace("alpha_list: [1, 2, 3]", "rho_list: [1.5, 2.0]")
        cfg = write_config(tmp_path, text)
        out = tmp_path / "out"
        code = cli.main(["bounds", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        summary = read_summary(out)
        assert summary["bounds_checked"] == 2
        assert summary["violations"] == 0

    def test_console_script_runs(self, tmp_path):
        cfg = write_config(tmp_path, IDENTITY_EQUAL)
        out = tmp_path / "out"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "wflow.cli",
                "identity",
                "--config",
                str(cfg),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert (out / "summary.json").exists()
