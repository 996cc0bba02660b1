"""Flat INI-style configuration with sections mirroring the modules.

Every default matches the published experiment values where those exist
(plant table, gain set, training hyperparameters, perturbation cases);
artifact-level knobs (residual scale, termination limits, desk-scale epoch
count) are documented at their definition. A config resolves to canonical
text whose SHA-256 is the provenance hash carried by checkpoints and
benchmark outputs.
"""

import configparser
import hashlib
import io
from dataclasses import dataclass

import numpy as np

from .dynamics import WipParams
from .errors import ParameterError
from .lqr import LqrGains
from .tasks import RewardConfig, TrajectoryProfile, load_trace

__all__ = ["Config", "DEFAULT_CONFIG_TEXT"]


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _parse_ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip() != "")


def _parse_strs(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip() != "")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class Config:
    """Fully resolved run configuration; see section comments for units."""

    # [plant]
    m0: float = 6.8
    mw: float = 0.4297
    I0: float = 0.16
    Iw: float = 0.00278
    L: float = 0.28
    r: float = 0.06
    g: float = 9.81
    gear_ratio: float = 1.0
    friction_coeff: float = 1.0
    com_offset: float = 0.0
    visc_coeff: float = 0.1
    torque_limit: float = 20.0

    # [lqr]
    gains: tuple = (-100.0, -315.0, -40.0, -40.0)
    action_var: float = 0.4
    q_weights: tuple = (100.0, 300.0, 10.0, 10.0)
    r_weight: float = 1.0
    synthesize: bool = False

    # [policy]
    hidden: tuple = (64, 64)

    # [sac]
    lr: float = 1e-3
    gamma: float = 0.99
    polyak: float = 0.995
    batch_size: int = 64
    buffer_capacity: int = 1_000_000
    target_entropy: float = -1.0
    init_alpha: float = 0.2

    # [ensemble]
    members: int = 10
    residual_scale: float = 1.0

    # [task]
    task: str = "task2"
    duration: float = 4.0
    amplitude: float = 0.5
    dt: float = 0.002
    horizon_steps: int = 4000
    pitch_limit: float = 1.0
    pos_err_limit: float = 3.0
    reward_k_pos: float = 0.1
    reward_k_pitch: float = 0.1
    pos_gate: float = 1.0
    pitch_gate: float = 0.35
    history_inputs: bool = True
    torque_inputs: bool = True
    trace_path: str = ""

    # [train]
    epochs: int = 50
    steps_per_epoch: int = 4000
    update_every: int = 1000
    seed: int = 0
    train_case: str = "case1"
    amplitude_min: float = 0.2
    amplitude_max: float = 0.6
    random_direction: bool = True
    init_pitch: float = 0.0
    init_pitch_jitter: float = 0.02
    checkpoint_every: int = 10

    # [bench]
    bench_tasks: tuple = ("task1", "task2", "task3")
    bench_cases: tuple = ("case1", "case2", "case3")
    bench_methods: tuple = ("lqr", "hybrid")
    bench_seeds: tuple = (0, 1, 2, 3, 4)
    task1_init_pitch: float = 0.1
    task2_amplitude: float = 0.5
    task3_amplitude: float = 1.0

    _SECTIONS = {
        "plant": ("m0", "mw", "I0", "Iw", "L", "r", "g", "gear_ratio",
                  "friction_coeff", "com_offset", "visc_coeff", "torque_limit"),
        "lqr": ("gains", "action_var", "q_weights", "r_weight", "synthesize"),
        "policy": ("hidden",),
        "sac": ("lr", "gamma", "polyak", "batch_size", "buffer_capacity",
                "target_entropy", "init_alpha"),
        "ensemble": ("members", "residual_scale"),
        "task": ("task", "duration", "amplitude", "dt", "horizon_steps",
                 "pitch_limit", "pos_err_limit", "reward_k_pos", "reward_k_pitch",
                 "pos_gate", "pitch_gate", "history_inputs", "torque_inputs",
                 "trace_path"),
        "train": ("epochs", "steps_per_epoch", "update_every", "seed", "train_case",
                  "amplitude_min", "amplitude_max", "random_direction", "init_pitch",
                  "init_pitch_jitter", "checkpoint_every"),
        "bench": ("bench_tasks", "bench_cases", "bench_methods", "bench_seeds",
                  "task1_init_pitch", "task2_amplitude", "task3_amplitude"),
    }

    # -- parsing ----------------------------------------------------------

    @classmethod
    def load(cls, path) -> "Config":
        """Read an INI file over the defaults; unknown keys are errors."""
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keys are case-sensitive (I0 vs i0)
        with open(path) as fh:
            parser.read_file(fh)
        return cls._from_parser(parser, str(path))

    @classmethod
    def loads(cls, text: str) -> "Config":
        parser = configparser.ConfigParser()
        parser.optionxform = str
        parser.read_string(text)
        return cls._from_parser(parser, "<string>")

    @classmethod
    def _from_parser(cls, parser, origin: str) -> "Config":
        cfg = cls()
        known = {name for names in cls._SECTIONS.values() for name in names}
        for section in parser.sections():
            if section not in cls._SECTIONS:
                raise ParameterError(f"{origin}: unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in cls._SECTIONS[section] or key not in known:
                    raise ParameterError(f"{origin}: unknown key {section}.{key}")
                default = getattr(cfg, key)
                try:
                    if isinstance(default, bool):
                        value = _parse_bool(raw)
                    elif isinstance(default, int):
                        value = int(raw)
                    elif isinstance(default, float):
                        value = float(raw)
                    elif isinstance(default, tuple):
                        if key in ("hidden", "bench_seeds"):
                            value = _parse_ints(raw)
                        elif key in ("bench_tasks", "bench_cases", "bench_methods"):
                            value = _parse_strs(raw)
                        else:
                            value = _parse_floats(raw)
                    else:
                        value = raw.strip()
                except ValueError as err:
                    raise ParameterError(f"{origin}: bad value for {section}.{key}: {err}") from None
                setattr(cfg, key, value)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if len(self.gains) != 4:
            raise ParameterError("lqr.gains must have exactly 4 entries")
        if len(self.q_weights) != 4:
            raise ParameterError("lqr.q_weights must have exactly 4 entries")
        if self.members < 1:
            raise ParameterError("ensemble.members must be at least 1")
        if self.epochs < 0:
            raise ParameterError("train.epochs must be non-negative")
        if self.task not in ("task1", "task2", "task3", "trace"):
            raise ParameterError(f"task.task must be task1/task2/task3/trace, got {self.task!r}")
        if self.task == "trace" and not self.trace_path:
            raise ParameterError("task.trace_path is required when task = trace")

    # -- canonical text and hash ------------------------------------------

    def resolved_text(self) -> str:
        """Canonical INI rendering of every field, in a fixed order."""
        buf = io.StringIO()
        for section, keys in self._SECTIONS.items():
            buf.write(f"[{section}]\n")
            for key in keys:
                value = getattr(self, key)
                if isinstance(value, bool):
                    text = "true" if value else "false"
                elif isinstance(value, tuple):
                    text = ",".join(repr(v) if isinstance(v, float) else str(v)
                                    for v in value)
                elif isinstance(value, float):
                    text = repr(value)
                else:
                    text = str(value)
                buf.write(f"{key} = {text}\n")
            buf.write("\n")
        return buf.getvalue()

    def config_hash(self) -> str:
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()

    # -- factories ---------------------------------------------------------

    def plant(self) -> WipParams:
        return WipParams(m0=self.m0, mw=self.mw, I0=self.I0, Iw=self.Iw, L=self.L,
                         r=self.r, g=self.g, gear_ratio=self.gear_ratio,
                         friction_coeff=self.friction_coeff, com_offset=self.com_offset,
                         visc_coeff=self.visc_coeff, torque_limit=self.torque_limit)

    def lqr_gains(self) -> LqrGains:
        return LqrGains(K=np.asarray(self.gains), action_var=self.action_var)

    def reward_config(self) -> RewardConfig:
        return RewardConfig(k_pos=self.reward_k_pos, k_pitch=self.reward_k_pitch,
                            pos_gate=self.pos_gate, pitch_gate=self.pitch_gate)

    def task_profile(self, task: str | None = None, amplitude: float | None = None) -> TrajectoryProfile:
        """Profile for a named task; trace tasks load their CSV here."""
        task = task or self.task
        if task == "task1":
            return TrajectoryProfile(kind="balance")
        if task == "task2":
            amp = self.task2_amplitude if amplitude is None else amplitude
            return TrajectoryProfile(kind="quintic_velocity", duration=self.duration,
                                     amplitude=amp, dt=self.dt)
        if task == "task3":
            amp = self.task3_amplitude if amplitude is None else amplitude
            return TrajectoryProfile(kind="quintic_position", duration=self.duration,
                                     amplitude=amp, dt=self.dt)
        if task == "trace":
            return load_trace(self.trace_path)
        raise ParameterError(f"unknown task {task!r}")

    def env_kwargs(self) -> dict:
        return dict(reward_cfg=self.reward_config(), dt=self.dt,
                    horizon_steps=self.horizon_steps, pitch_limit=self.pitch_limit,
                    pos_err_limit=self.pos_err_limit,
                    history_inputs=self.history_inputs,
                    torque_inputs=self.torque_inputs)

    def sac_kwargs(self) -> dict:
        return dict(hidden=self.hidden, lr=self.lr, gamma=self.gamma,
                    polyak=self.polyak, batch_size=self.batch_size,
                    target_entropy=self.target_entropy, init_alpha=self.init_alpha)


DEFAULT_CONFIG_TEXT = Config().resolved_text()
