"""Shared machinery for the training-based acceptance checks.

One worker call trains a full hybrid ensemble at the published
configuration (desk-scale epoch count) and evaluates it alongside the pure
feedback controller on the benchmark cases. Everything is seeded, so the
checks are deterministic; workers return plain tuples to stay picklable
for process pools.
"""

import numpy as np

from wiplab import (
    Config,
    Ensemble,
    EpochConfig,
    HybridController,
    LqrController,
    WipEnv,
    apply_case,
    case_by_name,
    rollout,
    train_epoch,
)
from wiplab.cli import _bench_init_sampler, _init_sampler, _train_profile_factory
from wiplab.tasks import OBS_DIM


def make_config(history=True, torque=True, epochs=50) -> Config:
    cfg = Config()
    cfg.epochs = epochs
    cfg.history_inputs = history
    cfg.torque_inputs = torque
    return cfg


def train_hybrid(cfg: Config, seed: int):
    """Train the ensemble for cfg.epochs; returns (ensemble, gains, curve)."""
    rng = np.random.default_rng(seed)
    gains = cfg.lqr_gains()
    plant = apply_case(cfg.plant(), case_by_name(cfg.train_case))
    env = WipEnv(plant, profile_factory=_train_profile_factory(cfg),
                 init_sampler=_init_sampler(cfg.init_pitch, cfg.init_pitch_jitter),
                 **cfg.env_kwargs())
    ensemble = Ensemble.create(cfg.members, OBS_DIM, cfg.buffer_capacity, rng,
                               **cfg.sac_kwargs())
    ep_cfg = EpochConfig(steps=cfg.steps_per_epoch, update_every=cfg.update_every,
                         residual_scale=cfg.residual_scale)
    curve = []
    for _ in range(cfg.epochs):
        stats = train_epoch(ensemble, env, gains, ep_cfg, rng)
        curve.append(stats.reward_mean)
    return ensemble, gains, curve


def eval_controller(cfg: Config, controller, task: str, case_name: str, seed: int):
    """One seeded evaluation rollout; returns the RunMetrics."""
    env = WipEnv(apply_case(cfg.plant(), case_by_name(case_name)),
                 profile=cfg.task_profile(task),
                 init_sampler=_bench_init_sampler(cfg, task), **cfg.env_kwargs())
    return rollout(controller, env, np.random.default_rng(seed))


def train_and_eval_worker(job):
    """Train one seed and evaluate it everywhere the acceptance checks need.

    job = (seed, history, torque, epochs). Returns a dict of plain values:
    the epoch reward curve plus hybrid and feedback metrics per (task, case).
    """
    seed, history, torque, epochs = job
    cfg = make_config(history=history, torque=torque, epochs=epochs)
    ensemble, gains, curve = train_hybrid(cfg, seed)
    hybrid = HybridController(ensemble, gains, cfg.residual_scale)
    feedback = LqrController(gains)

    evals = {}
    for task, case_name in (("task2", "case1"), ("task2", "case2"), ("task2", "case3"),
                            ("task3", "case1"), ("task3", "case2"), ("task3", "case3")):
        m = eval_controller(cfg, hybrid, task, case_name, seed)
        evals[("hybrid", task, case_name)] = (m.rmse_pos, m.rmse_vel, m.rmse_pitch,
                                              m.completed_fraction, m.failed)
        m = eval_controller(cfg, feedback, task, case_name, seed)
        evals[("lqr", task, case_name)] = (m.rmse_pos, m.rmse_vel, m.rmse_pitch,
                                           m.completed_fraction, m.failed)
    return {"seed": seed, "history": history, "torque": torque,
            "curve": curve, "evals": evals}
