"""Benchmark sweep of the feedback controller over tasks and plant cases.

The harness runs tasks x perturbation cases x seeds, averages RMSE over
completed rollouts, and annotates failures with the surviving fraction of
the horizon. The learned methods plug into the same sweep via
`wiplab bench --method hybrid --checkpoint ...`.
"""
import numpy as np

from wiplab import (Config, LqrController, ZeroController, case_by_name,
                    emit_markdown, emit_table, run_case)
from wiplab.bench import TABLE_CASES, CaseResult
from wiplab.cli import _bench_init_sampler

cfg = Config()
gains = cfg.lqr_gains()
seeds = (0, 1, 2)

results = {}
for task in ("task1", "task2", "task3"):
    def factory(rng, task=task):
        return cfg.task_profile(task)
    for case in TABLE_CASES:
        for method, make in (("lqr", lambda rng: LqrController(gains)),
                             ("zero", lambda rng: ZeroController())):
            results[(task, case.name, method)] = run_case(
                make, factory, case, cfg.plant(), seeds,
                env_kwargs={**cfg.env_kwargs(),
                            "init_sampler": _bench_init_sampler(cfg, task)})

print(emit_markdown(results))
csv_text = emit_table(results, cfg.config_hash(), seeds)
print("CSV head:")
print("\n".join(csv_text.splitlines()[:8]))
