import csv
import json
from pathlib import Path

import pytest

from pastarl.cli import main


TINY_INI = """
[environment]
name = stub
episode_cap = 8

[algorithm]
name = pasta

[ppo]
horizon = 64
epochs = 2
minibatch = 32
total_iterations = 3
seed = 7
hidden = 16

[output]
eval_every = 2
eval_episodes = 2
"""


@pytest.fixture
def tiny_ini(tmp_path):
    p = tmp_path / "tiny.ini"
    p.write_text(TINY_INI)
    return p


def train(tiny_ini, out, extra=()):
    rc = main(["train", "--config", str(tiny_ini), "--out", str(out), *extra])
    assert rc == 0
    return out


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestTrain:
    def test_writes_expected_artifacts(self, tiny_ini, tmp_path):
        out = train(tiny_ini, tmp_path / "run")
        for name in ("manifest.json", "metrics.csv", "eval.csv", "checkpoint_final.json"):
            assert (out / name).exists(), name

    def test_metrics_csv_schema(self, tiny_ini, tmp_path):
        out = train(tiny_ini, tmp_path / "run")
        rows = read_csv(out / "metrics.csv")
        header, body = rows[0], rows[1:]
        assert header[:6] == ["iteration", "kappa", "mu", "mu_base", "beta", "mu_star"]
        assert "return_0" in header and "return_1" in header
        assert "eval_hv" in header and "eval_eu" in header
        assert len(body) == 3
        assert [r[0] for r in body] == ["1", "2", "3"]
        # iterations 2 and 3 carry eval numbers, iteration 1 leaves them blank
        hv_col = header.index("eval_hv")
        assert body[0][hv_col] == ""
        assert body[1][hv_col] != "" and body[2][hv_col] != ""
        # fixed-width float formatting
        assert "." in body[0][2] and len(body[0][2].split(".")[1]) == 10

    def test_eval_csv_has_initial_row(self, tiny_ini, tmp_path):
        out = train(tiny_ini, tmp_path / "run")
        rows = read_csv(out / "eval.csv")
        assert rows[0][0] == "iteration"
        assert [r[0] for r in rows[1:]] == ["0", "2", "3"]

    def test_reruns_are_byte_identical(self, tiny_ini, tmp_path):
        a = train(tiny_ini, tmp_path / "a")
        b = train(tiny_ini, tmp_path / "b")
        for name in ("metrics.csv", "eval.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_manifest_reproduces_run_bytes(self, tiny_ini, tmp_path):
        a = train(tiny_ini, tmp_path / "a")
        rc = main(["train", "--manifest", str(a / "manifest.json"), "--out", str(tmp_path / "c")])
        assert rc == 0
        assert (a / "metrics.csv").read_bytes() == (tmp_path / "c" / "metrics.csv").read_bytes()

    def test_seed_flag_changes_results(self, tiny_ini, tmp_path):
        a = train(tiny_ini, tmp_path / "a")
        b = train(tiny_ini, tmp_path / "b", extra=["--seed", "123"])
        assert (a / "metrics.csv").read_bytes() != (b / "metrics.csv").read_bytes()
        assert json.loads((b / "manifest.json").read_text())["seed"] == 123

    def test_periodic_checkpoints(self, tiny_ini, tmp_path):
        out = train(tiny_ini, tmp_path / "run", extra=["--override", "output.checkpoint_every=2"])
        assert (out / "checkpoint_iter00002.json").exists()

    def test_missing_config_is_usage_error(self, tmp_path, capsys):
        assert main(["train", "--out", str(tmp_path / "x")]) == 2
        assert "config" in capsys.readouterr().err

    def test_unknown_key_is_usage_error(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text("[ppo]\nlearning_rate = 0.001\n")
        assert main(["train", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
        err = capsys.readouterr().err
        assert "learning_rate" in err and "lr" in err

    def test_bad_preference_is_usage_error(self, tiny_ini, tmp_path):
        rc = main([
            "train", "--config", str(tiny_ini), "--out", str(tmp_path / "x"),
            "--override", "algorithm.preference=-0.5,1.5",
        ])
        assert rc == 2


class TestEvaluate:
    def test_prints_per_objective_returns(self, tiny_ini, tmp_path, capsys):
        out = train(tiny_ini, tmp_path / "run")
        rc = main(["evaluate", "--run", str(out), "--episodes", "2"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "return_0" in text and "return_1" in text
        assert "expected_utility" in text

    def test_is_deterministic(self, tiny_ini, tmp_path, capsys):
        out = train(tiny_ini, tmp_path / "run")
        capsys.readouterr()  # drop training output
        main(["evaluate", "--run", str(out), "--episodes", "2", "--seed", "5"])
        first = capsys.readouterr().out
        main(["evaluate", "--run", str(out), "--episodes", "2", "--seed", "5"])
        assert capsys.readouterr().out == first

    def test_missing_checkpoint_is_usage_error(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        assert main(["evaluate", "--run", str(tmp_path / "empty")]) == 2
        assert "checkpoint" in capsys.readouterr().err


class TestSweep:
    def test_seed_axis_expands_runs(self, tiny_ini, tmp_path):
        out = tmp_path / "sw"
        rc = main(["sweep", "--config", str(tiny_ini), "--out", str(out), "--axis", "seed=0,1"])
        assert rc == 0
        doc = json.loads((out / "sweep_manifest.json").read_text())
        assert len(doc["runs"]) == 2
        for rec in doc["runs"]:
            run_dir = Path(rec)
            assert (run_dir / "metrics.csv").exists()
            assert (run_dir / "manifest.json").exists()

    def test_cartesian_product_of_axes(self, tiny_ini, tmp_path):
        out = tmp_path / "sw"
        rc = main([
            "sweep", "--config", str(tiny_ini), "--out", str(out),
            "--axis", "seed=0,1", "--axis", "rho=0.1,0.2",
        ])
        assert rc == 0
        doc = json.loads((out / "sweep_manifest.json").read_text())
        assert len(doc["runs"]) == 4
        assert len(set(doc["runs"])) == 4
        assert doc["axes"][0]["name"] == "seed"

    def test_mu_grid_keyword(self, tiny_ini, tmp_path):
        out = tmp_path / "sw"
        rc = main([
            "sweep", "--config", str(tiny_ini), "--out", str(out),
            "--override", "algorithm.name=stch_fixed",
            "--axis", "mu_fixed=0.1,1.0",
        ])
        assert rc == 0
        doc = json.loads((out / "sweep_manifest.json").read_text())
        mus = sorted(
            json.loads((Path(rec) / "manifest.json").read_text())["config"]["algorithm"]["fixed_mu"]
            for rec in doc["runs"]
        )
        assert mus == [0.1, 1.0]

    def test_unknown_axis_is_usage_error(self, tiny_ini, tmp_path):
        rc = main([
            "sweep", "--config", str(tiny_ini), "--out", str(tmp_path / "sw"),
            "--axis", "velocity=1,2",
        ])
        assert rc == 2


class TestCompare:
    @pytest.fixture
    def four_runs(self, tiny_ini, tmp_path):
        dirs = []
        for algo in ("pasta", "linear"):
            for seed in (0, 1):
                out = tmp_path / f"{algo}_s{seed}"
                train(
                    tiny_ini,
                    out,
                    extra=["--override", f"algorithm.name={algo}", "--seed", str(seed)],
                )
                dirs.append(out)
        return dirs

    def test_writes_summary_tables(self, four_runs, tmp_path, capsys):
        out = tmp_path / "cmp"
        rc = main(["compare", *map(str, four_runs), "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "summary.csv")
        header, body = rows[0], rows[1:]
        assert header[0] == "method"
        for col in ("hypervolume_mean", "win_rate", "objective_dominance_rate", "dmp_auc"):
            assert col in header
        assert sorted(r[0] for r in body) == ["linear", "pasta"]
        per_pref = read_csv(out / "per_preference.csv")
        assert per_pref[0][0] == "method"
        assert len(per_pref) == 3  # two methods, one preference each
        assert "method" in capsys.readouterr().out

    def test_win_rates_sum_to_one_for_two_methods(self, four_runs, tmp_path):
        out = tmp_path / "cmp"
        main(["compare", *map(str, four_runs), "--out", str(out)])
        rows = read_csv(out / "summary.csv")
        w = rows[0].index("win_rate")
        total = sum(float(r[w]) for r in rows[1:])
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_rejects_directory_without_manifest(self, tmp_path):
        (tmp_path / "junk").mkdir()
        assert main(["compare", str(tmp_path / "junk"), "--out", str(tmp_path / "cmp")]) == 2

    def test_rejects_mixed_environments(self, four_runs, tiny_ini, tmp_path):
        other = tmp_path / "frog"
        train(
            tiny_ini,
            other,
            extra=[
                "--override", "environment.name=frogger",
                "--override", "environment.episode_cap=16",
                "--override", "algorithm.preference=0.4,0.3,0.3",
            ],
        )
        rc = main(["compare", str(four_runs[0]), str(other), "--out", str(tmp_path / "cmp")])
        assert rc == 2


class TestToybench:
    def test_writes_csv_and_reports_hits(self, tmp_path, capsys):
        out = tmp_path / "toy"
        rc = main([
            "toybench", "--out", str(out),
            "--n-prefs", "4", "--steps", "300", "--resolution", "120",
        ])
        assert rc == 0
        rows = read_csv(out / "toybench.csv")
        assert rows[0] == [
            "w_0", "w_1", "method", "f_0", "f_1", "oracle_f_0", "oracle_f_1", "distance",
        ]
        assert len(rows) == 1 + 3 * 4  # three scalarizers, four preferences
        text = capsys.readouterr().out
        for method in ("linear", "tch", "stch"):
            assert method in text
