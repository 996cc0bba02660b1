"""Command-line front end: train, bench, simulate, lqr-synth, eval.

Every command accepts --seed and produces byte-identical outputs under the
same seed: float fields are written with repr (shortest round-trip), rows
are emitted in a fixed order, and nothing timestamps its output. Bench
sweeps parallelize across rollouts up to the HLMC_THREADS environment
variable; each rollout owns its RNG, so the results do not depend on the
worker count.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bench import (
    CaseResult,
    HybridController,
    LqrController,
    RunMetrics,
    ZeroController,
    case_by_name,
    emit_markdown,
    emit_table,
    rollout,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import Config
from .dynamics import apply_case
from .errors import WiplabError
from .fusion import Ensemble, EpochConfig, train_epoch
from .lqr import closed_loop_matrix, linearize, solve_care
from .tasks import OBS_DIM, TrajectoryProfile, WipEnv

__all__ = ["main"]


def _f(x) -> str:
    """Shortest round-trip float text, stable across runs."""
    return repr(float(x))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _echo_config(cfg: Config, outdir: Path) -> None:
    (outdir / "resolved_config.ini").write_text(cfg.resolved_text())


def _init_sampler(base_pitch: float, jitter: float):
    def sampler(rng):
        return np.array([0.0, base_pitch + rng.uniform(-jitter, jitter), 0.0, 0.0])
    return sampler


def _train_profile_factory(cfg: Config):
    """Velocity profiles with per-episode amplitude (and optionally sign)."""
    def factory(rng):
        amp = rng.uniform(cfg.amplitude_min, cfg.amplitude_max)
        if cfg.random_direction and rng.random() < 0.5:
            amp = -amp
        return TrajectoryProfile(kind="quintic_velocity", duration=cfg.duration,
                                 amplitude=amp, dt=cfg.dt)
    return factory


def _bench_init_sampler(cfg: Config, task: str):
    base = cfg.task1_init_pitch if task == "task1" else 0.0
    return _init_sampler(base, cfg.init_pitch_jitter)


def _gains_from_config(cfg: Config):
    if not cfg.synthesize:
        return cfg.lqr_gains()
    model = linearize(cfg.plant())
    return solve_care(model, np.diag(cfg.q_weights), cfg.r_weight,
                      action_var=cfg.action_var)


# ---------------------------------------------------------------- train --

def cmd_train(cfg: Config, outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, outdir)
    rng = np.random.default_rng(cfg.seed)
    gains = _gains_from_config(cfg)
    plant = apply_case(cfg.plant(), case_by_name(cfg.train_case))
    env = WipEnv(plant, profile_factory=_train_profile_factory(cfg),
                 init_sampler=_init_sampler(cfg.init_pitch, cfg.init_pitch_jitter),
                 **cfg.env_kwargs())
    ensemble = Ensemble.create(cfg.members, OBS_DIM, cfg.buffer_capacity, rng,
                               **cfg.sac_kwargs())
    ep_cfg = EpochConfig(steps=cfg.steps_per_epoch, update_every=cfg.update_every,
                         residual_scale=cfg.residual_scale)

    log_rows = []
    epoch_rows = []
    for epoch in range(1, cfg.epochs + 1):
        stats = train_epoch(ensemble, env, gains, ep_cfg, rng)
        for step, c_loss, a_loss, alpha, mean_r in stats.updates:
            log_rows.append((epoch, step, _f(c_loss), _f(a_loss), _f(alpha), _f(mean_r)))
        epoch_rows.append((epoch, stats.steps, stats.episodes, _f(stats.reward_total),
                           _f(stats.reward_mean), _f(stats.rmse_pos), _f(stats.rmse_vel),
                           _f(stats.rmse_pitch), stats.updated_member,
                           _f(stats.mixture_var_mean)))
        if cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0 and epoch < cfg.epochs:
            save_checkpoint(outdir / f"checkpoint_epoch_{epoch:04d}.bin", ensemble,
                            gains, cfg.config_hash())
        print(f"epoch {epoch}/{cfg.epochs}: reward_mean={stats.reward_mean:.4f} "
              f"rmse_pos={stats.rmse_pos:.4f} episodes={stats.episodes}")

    save_checkpoint(outdir / "checkpoint.bin", ensemble, gains, cfg.config_hash())
    _write_rows(outdir / "training_log.csv",
                ("epoch", "step", "critic_loss", "actor_loss", "alpha", "mean_reward"),
                log_rows)
    _write_rows(outdir / "epoch_stats.csv",
                ("epoch", "steps", "episodes", "reward_total", "reward_mean",
                 "rmse_pos", "rmse_vel", "rmse_pitch", "updated_member",
                 "mixture_var_mean"), epoch_rows)
    print(f"checkpoint written to {outdir / 'checkpoint.bin'}")
    return 0


# ---------------------------------------------------------------- bench --

def _bench_job(args):
    """One rollout, fully described by plain data so it can cross processes."""
    cfg_text, task, case_name, method, seed, ckpt = args
    cfg = Config.loads(cfg_text)
    case = case_by_name(case_name)
    plant = apply_case(cfg.plant(), case)
    rng = np.random.default_rng(seed)
    env = WipEnv(plant, profile=cfg.task_profile(task),
                 init_sampler=_bench_init_sampler(cfg, task), **cfg.env_kwargs())
    if method == "lqr":
        controller = LqrController(_gains_from_config(cfg))
    elif method == "zero":
        controller = ZeroController()
    elif method == "hybrid":
        ensemble, gains, _ = load_checkpoint(ckpt, cfg.sac_kwargs(), cfg.buffer_capacity)
        controller = HybridController(ensemble, gains, cfg.residual_scale)
    else:
        raise WiplabError(f"unknown method {method!r}")
    metrics = rollout(controller, env, rng)
    return task, case_name, method, seed, metrics


def _thread_count() -> int:
    raw = os.environ.get("HLMC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_bench(cfg: Config, checkpoint_path, outdir: Path) -> int:
    if "hybrid" in cfg.bench_methods and not checkpoint_path:
        raise WiplabError("bench with the hybrid method requires --checkpoint")
    if checkpoint_path:
        # Surface dimension mismatches before the sweep starts.
        ensemble, _, _ = load_checkpoint(checkpoint_path, cfg.sac_kwargs(),
                                         cfg.buffer_capacity)
        if ensemble.members[0].obs_dim != OBS_DIM:
            raise WiplabError("checkpoint observation width does not match this build")
    outdir.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, outdir)

    cfg_text = cfg.resolved_text()
    jobs = [(cfg_text, task, case, method, seed, str(checkpoint_path) if checkpoint_path else "")
            for task in cfg.bench_tasks
            for case in cfg.bench_cases
            for method in cfg.bench_methods
            for seed in cfg.bench_seeds]

    n_workers = min(_thread_count(), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_bench_job, jobs))
    else:
        outcomes = [_bench_job(j) for j in jobs]

    grouped: dict = {}
    for task, case_name, method, seed, metrics in outcomes:
        grouped.setdefault((task, case_name, method), []).append((seed, metrics))
    results = {}
    for key, rows in grouped.items():
        rows.sort(key=lambda sr: sr[0])
        results[key] = CaseResult(case=case_by_name(key[1]),
                                  seeds=tuple(s for s, _ in rows),
                                  per_seed=tuple(m for _, m in rows))

    table = emit_table(results, cfg.config_hash(), cfg.bench_seeds)
    (outdir / "bench_results.csv").write_text(table)
    (outdir / "bench_results.md").write_text(emit_markdown(results))
    print(emit_markdown(results))
    print(f"results written to {outdir / 'bench_results.csv'}")
    return 0


# ------------------------------------------------------------- simulate --

def cmd_simulate(cfg: Config, method: str, checkpoint_path, theta0: float,
                 out_path: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    plant = apply_case(cfg.plant(), case_by_name(cfg.train_case))
    env = WipEnv(plant, profile=cfg.task_profile(),
                 init_state=np.array([0.0, theta0, 0.0, 0.0]), **cfg.env_kwargs())
    if method == "lqr":
        controller = LqrController(_gains_from_config(cfg))
    elif method == "zero":
        controller = ZeroController()
    elif method == "hybrid":
        if not checkpoint_path:
            raise WiplabError("simulate with the hybrid method requires --checkpoint")
        ensemble, gains, _ = load_checkpoint(checkpoint_path, cfg.sac_kwargs(),
                                             cfg.buffer_capacity)
        controller = HybridController(ensemble, gains, cfg.residual_scale)
    else:
        raise WiplabError(f"unknown method {method!r}")

    _, series = rollout(controller, env, rng, collect=True)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_rows(out_path,
                ("t", "x_w", "x_des", "x_w_dot", "xdot_des", "theta",
                 "tau_lqr", "tau_res", "tau_c", "reward"),
                [tuple(_f(v) for v in row) for row in series])
    _echo_config(cfg, out_path.parent)
    print(f"trace with {len(series)} steps written to {out_path}")
    return 0


# ------------------------------------------------------------ lqr-synth --

def cmd_lqr_synth(cfg: Config) -> int:
    model = linearize(cfg.plant())
    gains = solve_care(model, np.diag(cfg.q_weights), cfg.r_weight,
                       action_var=cfg.action_var)
    eigs = np.linalg.eigvals(closed_loop_matrix(model, gains))
    print("gains:", ", ".join(_f(k) for k in gains.K))
    print("action_var:", _f(gains.action_var))
    print("closed_loop_eigenvalues:",
          ", ".join(f"{e.real:.6f}{e.imag:+.6f}j" for e in sorted(eigs, key=lambda e: e.real)))
    return 0


# ----------------------------------------------------------------- eval --

def cmd_eval(cfg: Config, checkpoint_path, task: str) -> int:
    ensemble, gains, config_hash = load_checkpoint(checkpoint_path, cfg.sac_kwargs(),
                                                   cfg.buffer_capacity)
    plant = apply_case(cfg.plant(), case_by_name(cfg.train_case))
    print(f"checkpoint: {checkpoint_path} (config_hash={config_hash[:12]}..., "
          f"members={len(ensemble)})")
    rows = []
    for seed in cfg.bench_seeds:
        rng = np.random.default_rng(seed)
        env = WipEnv(plant, profile=cfg.task_profile(task),
                     init_sampler=_bench_init_sampler(cfg, task), **cfg.env_kwargs())
        m = rollout(HybridController(ensemble, gains, cfg.residual_scale), env, rng)
        rows.append(m)
        print(f"seed {seed}: rmse_pos={m.rmse_pos:.4f} rmse_vel={m.rmse_vel:.4f} "
              f"rmse_pitch={m.rmse_pitch:.4f} failed={m.failed}")
    ok = [m for m in rows if not m.failed]
    if ok:
        print(f"mean over {len(ok)} completed seeds: "
              f"rmse_pos={np.mean([m.rmse_pos for m in ok]):.4f} "
              f"rmse_vel={np.mean([m.rmse_vel for m in ok]):.4f} "
              f"rmse_pitch={np.mean([m.rmse_pitch for m in ok]):.4f}")
    else:
        print("all seeds failed")
    return 0


# ----------------------------------------------------------------- main --

def _load_config(args) -> Config:
    cfg = Config.load(args.config) if args.config else Config()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        if hasattr(args, "seeds") and args.seeds is None and args.command == "bench":
            cfg.bench_seeds = (args.seed,)
    if getattr(args, "seeds", None):
        cfg.bench_seeds = tuple(int(s) for s in args.seeds.split(","))
    if getattr(args, "epochs", None) is not None:
        cfg.epochs = args.epochs
    if getattr(args, "method", None) and args.command == "bench":
        cfg.bench_methods = tuple(args.method.split(","))
    if getattr(args, "task", None) and args.command in ("simulate", "eval"):
        cfg.task = args.task
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wiplab",
        description="Wheeled-inverted-pendulum control lab: training, benchmarking, "
                    "and simulation of the fused feedback + ensemble policy controller.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")

    p_train = sub.add_parser("train", help="train the policy ensemble")
    add_common(p_train)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--out", type=Path, default=Path("runs/train"))

    p_bench = sub.add_parser("bench", help="tasks x cases x methods sweep")
    add_common(p_bench)
    p_bench.add_argument("--method", type=str, default=None,
                         help="comma list of methods (lqr,hybrid,zero)")
    p_bench.add_argument("--checkpoint", type=Path, default=None)
    p_bench.add_argument("--seeds", type=str, default=None, help="comma list of seeds")
    p_bench.add_argument("--out", type=Path, default=Path("runs/bench"))

    p_sim = sub.add_parser("simulate", help="single rollout state trace")
    add_common(p_sim)
    p_sim.add_argument("--method", type=str, default="lqr", help="lqr, hybrid, or zero")
    p_sim.add_argument("--checkpoint", type=Path, default=None)
    p_sim.add_argument("--task", type=str, default=None)
    p_sim.add_argument("--theta0", type=float, default=0.0, help="initial pitch (rad)")
    p_sim.add_argument("--out", type=Path, default=Path("simulate_trace.csv"))

    p_synth = sub.add_parser("lqr-synth", help="print gains synthesized from Q,R")
    add_common(p_synth)

    p_eval = sub.add_parser("eval", help="metrics of one checkpoint on one task")
    add_common(p_eval)
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--task", type=str, default=None)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "train":
            return cmd_train(cfg, args.out)
        if args.command == "bench":
            return cmd_bench(cfg, args.checkpoint, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.method, args.checkpoint, args.theta0, args.out)
        if args.command == "lqr-synth":
            return cmd_lqr_synth(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.checkpoint, cfg.task)
    except WiplabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
