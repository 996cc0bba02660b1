import csv
import io

import numpy as np
import pytest

from wiplab.cli import main


def _fast_config(tmp_path, **extra):
    """A config small enough for CLI tests to stay in milliseconds-to-seconds."""
    lines = [
        "[policy]", "hidden = 8,8",
        "[ensemble]", "members = 2",
        "[sac]", "buffer_capacity = 20000",
        "[task]", "horizon_steps = 200",
        "[train]", "epochs = 2", "steps_per_epoch = 200", "update_every = 100",
        "checkpoint_every = 0",
        "[bench]", "bench_seeds = 0,1", "bench_tasks = task1,task2",
        "bench_cases = case1,case2",
    ]
    for section, kv in extra.items():
        lines.append(f"[{section}]")
        lines.extend(kv)
    p = tmp_path / "cfg.ini"
    p.write_text("\n".join(lines) + "\n")
    return p


class TestTrain:
    def test_writes_artifacts(self, tmp_path, capsys):
        cfg = _fast_config(tmp_path)
        out = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--seed", "3",
                     "--out", str(out)]) == 0
        assert (out / "checkpoint.bin").exists()
        assert (out / "training_log.csv").exists()
        assert (out / "epoch_stats.csv").exists()
        assert (out / "resolved_config.ini").exists()
        assert "seed = 3" in (out / "resolved_config.ini").read_text()
        header = (out / "training_log.csv").read_text().splitlines()[0]
        assert header == "epoch,step,critic_loss,actor_loss,alpha,mean_reward"

    def test_same_seed_byte_identical_outputs(self, tmp_path):
        cfg = _fast_config(tmp_path)
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            main(["train", "--config", str(cfg), "--seed", "11", "--out", str(out)])
            outs.append((out / "checkpoint.bin").read_bytes()
                        + (out / "training_log.csv").read_bytes()
                        + (out / "epoch_stats.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_zero_epochs_checkpoint_loadable(self, tmp_path):
        cfg = _fast_config(tmp_path)
        out = tmp_path / "run0"
        assert main(["train", "--config", str(cfg), "--epochs", "0",
                     "--out", str(out)]) == 0
        from wiplab import Config, load_checkpoint
        ens, gains, _ = load_checkpoint(out / "checkpoint.bin",
                                        Config.load(cfg).sac_kwargs(), 1000)
        assert len(ens.members) == 2


class TestBench:
    def test_lqr_only_needs_no_checkpoint(self, tmp_path):
        cfg = _fast_config(tmp_path)
        out = tmp_path / "bench"
        assert main(["bench", "--config", str(cfg), "--method", "lqr",
                     "--out", str(out)]) == 0
        text = (out / "bench_results.csv").read_text()
        assert "position_m" in text
        assert (out / "bench_results.md").exists()

    def test_hybrid_without_checkpoint_is_usage_error(self, tmp_path, capsys):
        cfg = _fast_config(tmp_path)
        code = main(["bench", "--config", str(cfg), "--method", "hybrid",
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "checkpoint" in capsys.readouterr().err

    def test_deterministic_and_parallel_equivalent(self, tmp_path, monkeypatch):
        cfg = _fast_config(tmp_path)
        texts = []
        for name, threads in (("b1", "1"), ("b2", "1"), ("b3", "2")):
            out = tmp_path / name
            monkeypatch.setenv("HLMC_THREADS", threads)
            main(["bench", "--config", str(cfg), "--method", "lqr",
                  "--out", str(out)])
            texts.append((out / "bench_results.csv").read_text())
        assert texts[0] == texts[1] == texts[2]

    def test_hybrid_from_checkpoint(self, tmp_path):
        cfg = _fast_config(tmp_path)
        run = tmp_path / "run"
        main(["train", "--config", str(cfg), "--seed", "0", "--out", str(run)])
        out = tmp_path / "bench_h"
        assert main(["bench", "--config", str(cfg), "--method", "hybrid",
                     "--checkpoint", str(run / "checkpoint.bin"),
                     "--out", str(out)]) == 0
        assert "hybrid" in (out / "bench_results.csv").read_text().splitlines()[2]


class TestSimulate:
    def test_ten_column_trace(self, tmp_path):
        cfg = _fast_config(tmp_path)
        out = tmp_path / "trace.csv"
        assert main(["simulate", "--config", str(cfg), "--method", "lqr",
                     "--theta0", "0.1", "--out", str(out)]) == 0
        rows = list(csv.reader(io.StringIO(out.read_text())))
        assert rows[0] == ["t", "x_w", "x_des", "x_w_dot", "xdot_des", "theta",
                           "tau_lqr", "tau_res", "tau_c", "reward"]
        assert all(len(r) == 10 for r in rows[1:])
        assert len(rows) == 201  # horizon + header

    def test_lqr_drives_pitch_down(self, tmp_path):
        cfg = tmp_path / "cfg2.ini"
        cfg.write_text("[task]\nhorizon_steps = 1500\ntask = task1\n")
        out = tmp_path / "trace2.csv"
        assert main(["simulate", "--config", str(cfg), "--method", "lqr",
                     "--theta0", "0.1", "--out", str(out)]) == 0
        rows = list(csv.reader(io.StringIO(out.read_text())))
        theta_first = abs(float(rows[1][5]))
        theta_last = abs(float(rows[-1][5]))
        assert theta_last < 0.01 < theta_first

    def test_trace_replay_passthrough(self, tmp_path):
        trace = tmp_path / "human.csv"
        trace.write_text("t,x_des,xdot_des\n0.0,0.0,0.0\n0.2,0.1,0.5\n0.4,0.2,0.5\n")
        cfg = tmp_path / "cfg3.ini"
        cfg.write_text(f"[task]\ntask = trace\ntrace_path = {trace}\n"
                       "horizon_steps = 150\n")
        out = tmp_path / "trace3.csv"
        assert main(["simulate", "--config", str(cfg), "--method", "lqr",
                     "--out", str(out)]) == 0
        rows = list(csv.reader(io.StringIO(out.read_text())))
        x_des_at_01 = float(rows[50][2])  # t = 0.1, midway through segment one
        assert x_des_at_01 == pytest.approx(0.05, abs=1e-9)


class TestSynthAndEval:
    def test_lqr_synth_prints_stable_gains(self, capsys):
        assert main(["lqr-synth"]) == 0
        out = capsys.readouterr().out
        assert "gains:" in out
        gains = [float(v) for v in out.splitlines()[0].split(":")[1].split(",")]
        assert len(gains) == 4
        assert all(g < 0 for g in gains)

    def test_eval_reports_metrics(self, tmp_path, capsys):
        cfg = _fast_config(tmp_path)
        run = tmp_path / "run"
        main(["train", "--config", str(cfg), "--seed", "0", "--out", str(run)])
        capsys.readouterr()
        assert main(["eval", "--config", str(cfg),
                     "--checkpoint", str(run / "checkpoint.bin"),
                     "--task", "task1"]) == 0
        out = capsys.readouterr().out
        assert "rmse_pos=" in out and "members=2" in out
