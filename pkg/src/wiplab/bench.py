"""Benchmark harness: tasks x parameter cases x methods, RMSE metrics,
failure accounting, and table emission.

Each rollout owns its environment, controller, and seeded RNG, so cases
and seeds can run in parallel processes; aggregation is a single-writer
reduction over the sorted job list.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import WipParams, apply_case
from .errors import ParameterError
from .fusion import Ensemble, hybrid_action
from .lqr import LqrGains, lqr_action
from .tasks import RewardConfig, TrajectoryProfile, WipEnv

__all__ = [
    "BenchmarkCase",
    "TABLE_CASES",
    "case_by_name",
    "RunMetrics",
    "rmse",
    "LqrController",
    "HybridController",
    "ZeroController",
    "rollout",
    "run_case",
    "CaseResult",
    "emit_table",
    "emit_markdown",
]


@dataclass(frozen=True)
class BenchmarkCase:
    """One plant perturbation: absolute mass, gear and friction multipliers,
    CoM offset in meters."""

    name: str
    mass: float
    gear: float
    friction: float
    com: float


# The bundled perturbation fixture. case1 doubles as the training plant.
TABLE_CASES = (
    BenchmarkCase("case1", 4.05, 1.0, 1.0, 0.0),
    BenchmarkCase("case2", 8.05, 1.3, 1.3, 0.12),
    BenchmarkCase("case3", 14.05, 0.9, 1.1, -0.12),
)


def case_by_name(name: str) -> BenchmarkCase:
    for c in TABLE_CASES:
        if c.name == name:
            return c
    raise ParameterError(f"unknown benchmark case {name!r}; known: "
                         + ", ".join(c.name for c in TABLE_CASES))


@dataclass(frozen=True)
class RunMetrics:
    """Tracking errors of one rollout plus its failure record."""

    rmse_pos: float
    rmse_vel: float
    rmse_pitch: float
    completed_fraction: float
    failed: bool


def rmse(actual, desired) -> float:
    """Root mean square error between two equal-length series."""
    a = np.asarray(actual, dtype=float)
    d = np.asarray(desired, dtype=float)
    if a.shape != d.shape:
        raise ParameterError(f"series shapes differ: {a.shape} vs {d.shape}")
    if a.size == 0:
        raise ParameterError("series must be non-empty")
    return float(np.sqrt(np.mean((a - d) ** 2)))


class LqrController:
    """Pure feedback torque, zero residual."""

    def __init__(self, gains: LqrGains):
        self.gains = gains

    def act(self, obs, q, q_des, rng):
        u = lqr_action(self.gains, q, q_des).mean
        return u, u, 0.0


class HybridController:
    """Feedback torque plus the fused ensemble residual."""

    def __init__(self, ensemble: Ensemble, gains: LqrGains, residual_scale: float = 1.0):
        self.ensemble = ensemble
        self.gains = gains
        self.residual_scale = residual_scale

    def act(self, obs, q, q_des, rng):
        fa = hybrid_action(self.ensemble, self.gains, obs, q, q_des, rng,
                           self.residual_scale)
        return fa.total_torque, fa.lqr_torque, fa.residual_torque


class ZeroController:
    """No torque at all; open-loop reference for failure tests."""

    def act(self, obs, q, q_des, rng):
        return 0.0, 0.0, 0.0


def rollout(controller, env: WipEnv, rng: np.random.Generator,
            collect: bool = False):
    """Run one episode to termination and compute its metrics.

    RMSEs cover the samples actually executed, so a failed run is scored
    only on its pre-failure segment. With ``collect`` the per-step series
    (t, x, x_des, xd, xd_des, theta, tau_lqr, tau_res, tau_c, r) is
    returned alongside the metrics.
    """
    obs = env.reset(rng)
    pos_a, pos_d, vel_a, vel_d, pitch = [], [], [], [], []
    series = [] if collect else None
    done = False
    info = None
    while not done:
        tau_c, tau_lqr, tau_res = controller.act(obs, env.q_array, env.reference(), rng)
        obs, r, done, info = env.step(tau_c, tau_lqr, tau_res)
        q = info["q"]
        ref = info["q_des"]
        pos_a.append(q[0])
        pos_d.append(ref.x_w)
        vel_a.append(q[2])
        vel_d.append(ref.x_w_dot)
        pitch.append(q[1])
        if collect:
            series.append((info["t"], q[0], ref.x_w, q[2], ref.x_w_dot, q[1],
                           tau_lqr, tau_res, tau_c, r))
    metrics = RunMetrics(
        rmse_pos=rmse(pos_a, pos_d),
        rmse_vel=rmse(vel_a, vel_d),
        rmse_pitch=rmse(pitch, np.zeros(len(pitch))),
        completed_fraction=info["completed_fraction"],
        failed=info["failed"],
    )
    return (metrics, series) if collect else metrics


@dataclass(frozen=True)
class CaseResult:
    """Per-seed metrics of one (task, case, method) cell."""

    case: BenchmarkCase
    seeds: tuple
    per_seed: tuple  # RunMetrics per seed

    @property
    def n_failed(self) -> int:
        return sum(m.failed for m in self.per_seed)

    @property
    def all_failed(self) -> bool:
        return self.n_failed == len(self.per_seed)

    def _mean_over_completed(self, attr: str) -> float:
        vals = [getattr(m, attr) for m in self.per_seed if not m.failed]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def rmse_pos(self) -> float:
        return self._mean_over_completed("rmse_pos")

    @property
    def rmse_vel(self) -> float:
        return self._mean_over_completed("rmse_vel")

    @property
    def rmse_pitch(self) -> float:
        return self._mean_over_completed("rmse_pitch")

    @property
    def mean_failed_fraction(self) -> float:
        """Mean completed fraction of the failed seeds (nan when none failed)."""
        vals = [m.completed_fraction for m in self.per_seed if m.failed]
        return float(np.mean(vals)) if vals else math.nan


def run_case(make_controller, profile_factory, case: BenchmarkCase,
             params: WipParams, seeds, env_kwargs=None) -> CaseResult:
    """Evaluate one controller on one perturbation case over several seeds.

    ``make_controller(rng)`` builds a fresh controller per seed and
    ``profile_factory(rng)`` a fresh task profile; each seed owns one RNG,
    so results are reproducible regardless of execution order.
    """
    env_kwargs = dict(env_kwargs or {})
    plant = apply_case(params, case)
    results = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        env = WipEnv(plant, profile_factory=profile_factory, **env_kwargs)
        controller = make_controller(rng)
        results.append(rollout(controller, env, rng))
    return CaseResult(case=case, seeds=tuple(seeds), per_seed=tuple(results))


def _cell_text(result: CaseResult, attr: str) -> str:
    if result.all_failed:
        return f"F ({result.mean_failed_fraction!r})"
    value = repr(getattr(result, attr))
    if result.n_failed:
        return f"{value} ({result.mean_failed_fraction!r})"
    return value


_METRIC_ROWS = (("rmse_pos", "position_m"), ("rmse_vel", "velocity_mps"),
                ("rmse_pitch", "pitch_rad"))


def emit_table(results: dict, config_hash: str = "", seeds=()) -> str:
    """Render benchmark results as CSV.

    ``results`` maps (task, case_name, method) to CaseResult. Rows are
    (task, case, metric); one column per method. Failure cells carry the
    mean surviving fraction in parentheses. Provenance comment lines hold
    the config hash and seed list.
    """
    if not results:
        raise ParameterError("no results to emit")
    tasks = sorted({k[0] for k in results})
    cases = sorted({k[1] for k in results})
    methods = sorted({k[2] for k in results})
    lines = [f"# config_hash={config_hash}", "# seeds=" + " ".join(str(s) for s in seeds)]
    lines.append(",".join(["task", "case", "metric"] + methods))
    for task in tasks:
        for case in cases:
            for attr, label in _METRIC_ROWS:
                row = [task, case, label]
                for method in methods:
                    r = results.get((task, case, method))
                    row.append(_cell_text(r, attr) if r is not None else "")
                lines.append(",".join(f'"{c}"' if "," in c else c for c in row))
    return "\n".join(lines) + "\n"


def emit_markdown(results: dict) -> str:
    """Render benchmark results as one markdown table per task."""
    if not results:
        raise ParameterError("no results to emit")
    tasks = sorted({k[0] for k in results})
    cases = sorted({k[1] for k in results})
    methods = sorted({k[2] for k in results})
    out = []
    for task in tasks:
        out.append(f"### {task}")
        out.append("| case | metric | " + " | ".join(methods) + " |")
        out.append("|---" * (2 + len(methods)) + "|")
        for case in cases:
            for attr, label in _METRIC_ROWS:
                cells = []
                for method in methods:
                    r = results.get((task, case, method))
                    if r is None:
                        cells.append("")
                        continue
                    if r.all_failed:
                        cells.append(f"F ({r.mean_failed_fraction:.2f})")
                    elif r.n_failed:
                        cells.append(f"{getattr(r, attr):.4f} ({r.mean_failed_fraction:.2f})")
                    else:
                        cells.append(f"{getattr(r, attr):.4f}")
                out.append(f"| {case} | {label} | " + " | ".join(cells) + " |")
        out.append("")
    return "\n".join(out)
