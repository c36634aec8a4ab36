import json

import numpy as np
import pytest

from asm.cli import EXIT_CONFIG, EXIT_OK, load_config, main
from asm.oracle import read_pool_csv

TINY_CONFIG = """
[pool]
n = 400
d = 2
undefined_fraction = 0.15
separation = 3.0
tangential_spread = 1.0
seed_fraction = 0.10

[hyper]
m = 4
seed = 7
learning_rate = 0.05
batch_size = 16
warmup_iterations = 60
minibatches_per_round = 15
max_rounds = 4
model = linear

[strategy]
mode = asm
annotation_budget = 30

[output]
dir = {out}
"""


def write_config(tmp_path, text=None, **fmt):
    cfg = tmp_path / "run.ini"
    body = (text or TINY_CONFIG).format(out=fmt.get("out", tmp_path / "out"))
    cfg.write_text(body)
    return cfg


class TestRun:
    def test_run_writes_artifacts(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["run", str(cfg)]) == EXIT_OK
        out = tmp_path / "out"
        assert (out / "metrics.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "model.asmw").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["strategy"] == "asm"
        header = (out / "metrics.csv").read_text().splitlines()[0]
        assert header.startswith(
            "iteration,annotated,rejected,pseudo,discarded,test_acc,lambda_0")

    def test_same_config_same_bytes(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["run", str(cfg)])
        first = (tmp_path / "out" / "metrics.csv").read_bytes()
        main(["run", str(cfg)])
        second = (tmp_path / "out" / "metrics.csv").read_bytes()
        assert first == second

    def test_dry_run_prints_plan_without_artifacts(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["run", str(cfg), "--dry-run"]) == EXIT_OK
        plan = json.loads(capsys.readouterr().out)
        assert plan["strategy"]["mode"] == "asm"
        assert not (tmp_path / "out").exists()

    def test_env_var_overrides_output_dir(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path)
        override = tmp_path / "elsewhere"
        monkeypatch.setenv("ASM_OUTPUT_DIR", str(override))
        assert main(["run", str(cfg)]) == EXIT_OK
        assert (override / "metrics.csv").exists()
        assert not (tmp_path / "out").exists()


class TestConfigValidation:
    def test_unknown_strategy_names_the_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_CONFIG.replace("mode = asm",
                                                         "mode = bogus"))
        assert main(["run", str(cfg)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "strategy" in err and "bogus" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path,
                           TINY_CONFIG.replace("n = 400", "n = 400\nwat = 1"))
        assert main(["run", str(cfg)]) == EXIT_CONFIG
        assert "pool.wat" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.ini")]) == EXIT_CONFIG

    def test_unparsable_value_names_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path,
                           TINY_CONFIG.replace("seed = 7", "seed = seven"))
        assert main(["run", str(cfg)]) == EXIT_CONFIG
        assert "hyper.seed" in capsys.readouterr().err

    def test_budget_and_fraction_conflict(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            TINY_CONFIG.replace("annotation_budget = 30",
                                "annotation_budget = 30\nbudget_fraction = 0.2"))
        assert main(["run", str(cfg)]) == EXIT_CONFIG
        assert "mutually exclusive" in capsys.readouterr().err

    def test_loaded_defaults(self, tmp_path):
        cfg = write_config(tmp_path)
        setup = load_config(cfg)
        assert setup.hyper.beta == 10000
        assert setup.engine_cfg.sgd.weight_decay == pytest.approx(0.0005)


class TestGenPool:
    def test_gen_pool_roundtrip(self, tmp_path):
        out = tmp_path / "pool.csv"
        assert main(["gen-pool", "--n", "200", "--m", "3", "--d", "2",
                     "--undefined-fraction", "0.2", "--separation", "3.0",
                     "--seed", "5", "--out", str(out)]) == EXIT_OK
        pool = read_pool_csv(out)
        assert len(pool) == 200
        assert np.any(pool.hidden_truth == -1)

    def test_infeasible_geometry_exits_2(self, tmp_path, capsys):
        out = tmp_path / "pool.csv"
        assert main(["gen-pool", "--n", "200", "--m", "3",
                     "--separation", "1e7", "--out", str(out)]) == EXIT_CONFIG


class TestSweep:
    def test_lambda0_sweep_writes_rows(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sweep", str(cfg), "--parameter", "lambda0",
                     "--values", "0.105,0.357", "--seeds", "1,2",
                     "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == ("parameter,value,seed,annotations_used,"
                            "pseudo_fraction,final_accuracy,status")
        assert len(lines) == 5
        assert all(line.endswith("ok") for line in lines[1:])

    def test_bad_parameter_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["sweep", str(cfg), "--parameter", "lambda0",
                     "--values", ""]) == EXIT_CONFIG
