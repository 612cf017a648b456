import json
import os
import subprocess
import sys

import pytest

from adabatch.harness import (
    ExperimentSpec,
    cmd_adaptive,
    cmd_fixed,
    cmd_grid,
    cmd_reference,
    default_tau_grid,
    fmt,
)

TINY = dict(
    synth_n=40,
    synth_d=3,
    synth_noise=0.5,
    model="ridge",
    lam=0.3,
    partitions=2,
    sampling="nice",
    eps=0.4,
    seeds=3,
    seed=7,
    max_epochs=60.0,
)


def tiny_spec(tmp_path, **kw):
    args = dict(TINY)
    args.setdefault("out_dir", str(tmp_path / "out"))
    args.update(kw)
    return ExperimentSpec(**args)


class TestReference:
    def test_artifact_fields_and_tolerance(self, tmp_path):
        spec = tiny_spec(tmp_path, ref_tol=1e-12)
        path = cmd_reference(spec)
        with open(path) as fh:
            art = json.load(fh)
        assert art["grad_norm"] <= 1e-12
        assert len(art["x_star"]) == spec.synth_d
        assert set(art["r0"]) == {"0", "1", "2"}

    def test_rerun_is_byte_identical(self, tmp_path):
        spec = tiny_spec(tmp_path)
        path = cmd_reference(spec)
        first = open(path, "rb").read()
        cmd_reference(spec)
        assert open(path, "rb").read() == first

    def test_logistic_tolerance(self, tmp_path):
        spec = tiny_spec(tmp_path, model="logistic", lam=0.1, ref_tol=1e-10)
        path = cmd_reference(spec)
        with open(path) as fh:
            assert json.load(fh)["grad_norm"] <= 1e-10


class TestAdaptive:
    def test_start_at_optimum_single_row(self, tmp_path):
        spec = tiny_spec(tmp_path, seeds=1, x0_at_optimum=True)
        cmd_reference(spec)
        cmd_adaptive(spec)
        lines = open(os.path.join(spec.out_dir, "trace_adaptive_seed0.csv")).read().splitlines()
        assert len(lines) == 2  # header + one row
        assert float(lines[1].split(",")[-1]) == 0.0

    def test_rerun_byte_identical_csv(self, tmp_path):
        spec = tiny_spec(tmp_path)
        cmd_reference(spec)
        cmd_adaptive(spec)
        trace_path = os.path.join(spec.out_dir, "trace_adaptive_seed1.csv")
        first = open(trace_path, "rb").read()
        cmd_adaptive(spec)
        assert open(trace_path, "rb").read() == first

    def test_reaches_target(self, tmp_path):
        spec = tiny_spec(tmp_path, seeds=2, max_epochs=300.0)
        cmd_reference(spec)
        summary = cmd_adaptive(spec)
        assert summary["epochs_mean"] is not None
        for seed, status in summary["statuses"].items():
            assert status == "converged"
        for path_seed in range(2):
            rows = open(
                os.path.join(spec.out_dir, f"trace_adaptive_seed{path_seed}.csv")
            ).read().splitlines()
            assert float(rows[-1].split(",")[-1]) <= spec.eps / 10.0

    def test_missing_reference_is_an_error(self, tmp_path):
        spec = tiny_spec(tmp_path)
        with pytest.raises(FileNotFoundError):
            cmd_adaptive(spec)


class TestFixed:
    def test_summary_and_traces(self, tmp_path):
        spec = tiny_spec(tmp_path, tau=2, seeds=2)
        cmd_reference(spec)
        summary = cmd_fixed(spec)
        assert summary["tau"] == 2
        assert os.path.exists(os.path.join(spec.out_dir, "trace_fixed_tau2_seed1.csv"))

    def test_tau_required(self, tmp_path):
        spec = tiny_spec(tmp_path)
        cmd_reference(spec)
        with pytest.raises(ValueError):
            cmd_fixed(spec)


class TestGrid:
    def test_csv_contract(self, tmp_path):
        spec = tiny_spec(tmp_path, seeds=2, tau_grid=[1, 2, 4, 8])
        cmd_reference(spec)
        summary = cmd_grid(spec)
        lines = open(os.path.join(spec.out_dir, "grid.csv")).read().splitlines()
        assert len(lines) == 4 + 1 + 1  # grid rows + adaptive row + header
        header = lines[0].split(",")
        taus = [float(ln.split(",")[0]) for ln in lines[1:-1]]
        assert taus == sorted(taus)
        flags = [ln.split(",")[header.index("is_adaptive")] for ln in lines[1:]]
        assert flags == ["0", "0", "0", "0", "1"]
        assert set(summary) >= {
            "tau_star_theoretical",
            "epochs_adaptive",
            "epochs_best_fixed",
            "T_table",
        }

    def test_seventeen_digit_roundtrip(self, tmp_path):
        spec = tiny_spec(tmp_path, seeds=1, tau_grid=[1, 3])
        cmd_reference(spec)
        cmd_grid(spec)
        lines = open(os.path.join(spec.out_dir, "grid.csv")).read().splitlines()
        for ln in lines[1:]:
            for cell in ln.split(","):
                if "." in cell or "e" in cell or "n" in cell:
                    v = float(cell)
                    assert fmt(v) == cell  # formatting is round-trip stable

    def test_single_full_batch_row(self, tmp_path):
        spec = tiny_spec(tmp_path, partitions=1, seeds=1, tau_grid=[40])
        cmd_reference(spec)
        summary = cmd_grid(spec)
        assert summary["tau_grid"] == [40]

    def test_workers_do_not_change_output(self, tmp_path):
        spec1 = tiny_spec(tmp_path, seeds=2, tau_grid=[1, 4], out_dir=str(tmp_path / "w1"))
        spec2 = tiny_spec(tmp_path, seeds=2, tau_grid=[1, 4], out_dir=str(tmp_path / "w2"), workers=2)
        cmd_reference(spec1)
        cmd_reference(spec2)
        cmd_grid(spec1)
        cmd_grid(spec2)
        a = open(os.path.join(spec1.out_dir, "grid.csv"), "rb").read()
        b = open(os.path.join(spec2.out_dir, "grid.csv"), "rb").read()
        assert a == b


class TestDefaultGrid:
    def test_contents(self):
        grid = default_tau_grid(20, 7)
        assert grid == [1, 2, 4, 6, 7, 8, 16, 20]

    def test_neighbors_clamped(self):
        assert default_tau_grid(4, 1) == [1, 2, 4]


class TestSpecConfig:
    def test_from_config_with_overrides(self, tmp_path):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({"synth_n": 30, "synth_d": 2, "model": "ridge", "eps": 0.3}))
        spec = ExperimentSpec.from_config(str(cfg), {"eps": 0.7, "seeds": None})
        assert spec.synth_n == 30
        assert spec.eps == 0.7
        assert spec.seeds == 10  # default untouched by a None override

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        with pytest.raises(ValueError):
            ExperimentSpec.from_config(str(cfg))


class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "adabatch.cli", *args],
            capture_output=True,
            text=True,
        )

    def test_reference_then_adaptive(self, tmp_path):
        out = str(tmp_path / "cli_out")
        common = [
            "--synth-n", "30", "--synth-d", "2", "--model", "ridge", "--lambda", "0.3",
            "--partitions", "2", "--eps", "0.4", "--seeds", "2", "--seed", "3",
            "--max-epochs", "80", "--out", out,
        ]
        ref = self.run_cli("reference", *common)
        assert ref.returncode == 0, ref.stderr
        ad = self.run_cli("adaptive", *common)
        assert ad.returncode == 0, ad.stderr
        assert os.path.exists(os.path.join(out, "adaptive_summary.json"))

    def test_error_paths_exit_nonzero(self, tmp_path):
        r = self.run_cli("reference", "--data", str(tmp_path / "missing.libsvm"))
        assert r.returncode == 1
        assert "error" in r.stderr
        r2 = self.run_cli("adaptive", "--synth-n", "10", "--synth-d", "2",
                          "--out", str(tmp_path / "nowhere"))
        assert r2.returncode == 1
