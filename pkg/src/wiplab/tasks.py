"""Task environments: reference trajectories, reward, and episode lifecycle.

A task is a reference profile for the wheel position/velocity (pitch
references are always zero) plus the episode rules: fixed control period,
horizon, and termination limits. The environment exposes a 15-dimensional
observation: plant state, previous torque triple, current commands, and
short histories of position error and velocity.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PlantState, WipParams, step_rk4
from .errors import DataError, DivergenceError, ParameterError, WiplabError

__all__ = [
    "quintic",
    "TrajectoryProfile",
    "build_reference",
    "load_trace",
    "RewardConfig",
    "reward",
    "AugmentedState",
    "WipEnv",
]

OBS_DIM = 15


def quintic(t: float, T: float, x0: float, xf: float) -> tuple[float, float]:
    """Fifth-order point-to-point profile value and slope at time t.

    x(t) = x0 + (xf-x0)(10 s^3 - 15 s^4 + 6 s^5) with s = t/T; both
    endpoint slopes and curvatures vanish. Caller keeps t within [0, T].
    """
    if T <= 0.0:
        raise ParameterError(f"profile duration must be positive, got {T}")
    s = t / T
    blend = s**3 * (10.0 + s * (-15.0 + 6.0 * s))
    dblend = (s**2 * (30.0 + s * (-60.0 + 30.0 * s))) / T
    return x0 + (xf - x0) * blend, (xf - x0) * dblend


@dataclass(eq=False)
class TrajectoryProfile:
    """Reference generator for one task.

    kind is one of 'balance', 'quintic_velocity', 'quintic_position',
    'trace_replay'. For velocity profiles the position reference is the
    running control-grid integral of the commanded velocity (accumulated
    at ``dt``), matching how the tracking target is generated online.
    """

    kind: str = "balance"
    duration: float = 4.0
    amplitude: float = 0.0
    dt: float = 0.002
    trace_t: np.ndarray | None = None
    trace_x: np.ndarray | None = None
    trace_xd: np.ndarray | None = None
    _cum: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        kinds = ("balance", "quintic_velocity", "quintic_position", "trace_replay")
        if self.kind not in kinds:
            raise ParameterError(f"unknown profile kind {self.kind!r}")
        if self.kind != "balance" and self.duration <= 0.0:
            raise ParameterError("profile duration must be positive")
        if self.kind == "trace_replay":
            if self.trace_t is None or len(self.trace_t) == 0:
                raise DataError("trace replay requires a non-empty trace")

    def _velocity_at(self, t: float) -> float:
        tc = min(max(t, 0.0), self.duration)
        x, _ = quintic(tc, self.duration, 0.0, self.amplitude)
        return x

    def _ensure_cumulative(self, n: int) -> None:
        if self._cum is not None and len(self._cum) > n:
            return
        alloc = max(2 * n + 1, 4096)
        have = 0 if self._cum is None else len(self._cum)
        cum = np.empty(alloc)
        if have:
            cum[:have] = self._cum
        else:
            cum[0] = 0.0
            have = 1
        for k in range(have, alloc):
            cum[k] = cum[k - 1] + self._velocity_at(k * self.dt) * self.dt
        self._cum = cum


def build_reference(profile: TrajectoryProfile, t: float) -> PlantState:
    """Desired plant state at time t; pitch references are always zero.

    Quintic profiles clamp beyond their duration (velocity holds its final
    value, position holds its endpoint). Velocity-profile positions are
    defined on the control grid, so t is rounded to the nearest grid step.
    """
    if profile.kind == "balance":
        return PlantState()
    if profile.kind == "quintic_velocity":
        n = int(round(t / profile.dt))
        profile._ensure_cumulative(n)
        xd = profile._velocity_at(n * profile.dt)
        return PlantState(x_w=float(profile._cum[n]), x_w_dot=xd)
    if profile.kind == "quintic_position":
        tc = min(max(t, 0.0), profile.duration)
        x, _ = quintic(tc, profile.duration, 0.0, profile.amplitude)
        return PlantState(x_w=x, x_w_dot=0.0)
    # trace replay: linear interpolation, clamped at the ends
    x = float(np.interp(t, profile.trace_t, profile.trace_x))
    xd = float(np.interp(t, profile.trace_t, profile.trace_xd))
    return PlantState(x_w=x, x_w_dot=xd)


def load_trace(path) -> TrajectoryProfile:
    """Parse a reference trace CSV with header ``t,x_des,xdot_des``.

    Time must be strictly increasing; malformed rows report their line
    number.
    """
    ts, xs, xds = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty trace file")
        if [h.strip() for h in header] != ["t", "x_des", "xdot_des"]:
            raise DataError(f"{path}: line 1: expected header 't,x_des,xdot_des'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
            try:
                t, x, xd = (float(v) for v in row)
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric value") from None
            if ts and t <= ts[-1]:
                raise DataError(f"{path}: line {lineno}: time must be strictly increasing")
            ts.append(t)
            xs.append(x)
            xds.append(xd)
    if not ts:
        raise DataError(f"{path}: trace has no data rows")
    return TrajectoryProfile(
        kind="trace_replay",
        duration=ts[-1],
        trace_t=np.asarray(ts),
        trace_x=np.asarray(xs),
        trace_xd=np.asarray(xds),
    )


@dataclass(frozen=True)
class RewardConfig:
    """Weights and gates of the tracking reward."""

    k_pos: float = 0.1
    k_pitch: float = 0.1
    pos_gate: float = 1.0
    pitch_gate: float = 0.35

    def __post_init__(self):
        if self.pos_gate <= 0.0 or self.pitch_gate <= 0.0:
            raise ParameterError("reward gates must be positive")


def reward(err_x: float, err_theta: float, prev_err_x: float, prev_err_theta: float,
           cfg: RewardConfig = RewardConfig()) -> float:
    """Tracking reward: weighted error norm, in-bounds bonus, improvement bonus.

    R = -||(k_pos*err_x, k_pitch*err_theta)||_2
        + 1(|err_x| < pos_gate) * 1(|err_theta| < pitch_gate)
        + 1(|err_x| < |prev_err_x|) * 1(|err_theta| < |prev_err_theta|)
    """
    r = -math.hypot(cfg.k_pos * err_x, cfg.k_pitch * err_theta)
    if abs(err_x) < cfg.pos_gate and abs(err_theta) < cfg.pitch_gate:
        r += 1.0
    if abs(err_x) < abs(prev_err_x) and abs(err_theta) < abs(prev_err_theta):
        r += 1.0
    return r


@dataclass(frozen=True)
class AugmentedState:
    """The 15-dim observation: plant state, previous torque triple
    (feedback, residual, total), current commands (desired position and
    pitch), then position-error and velocity histories, oldest first."""

    q: np.ndarray  # (4,)
    tau_prev: np.ndarray  # (3,)
    command: np.ndarray  # (2,)
    hist_err: np.ndarray  # (3,)
    hist_vel: np.ndarray  # (3,)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.tau_prev, self.command,
                               self.hist_err, self.hist_vel])

    @classmethod
    def from_vector(cls, v) -> "AugmentedState":
        v = np.asarray(v, dtype=float)
        if v.shape != (OBS_DIM,):
            raise ParameterError(f"observation must have shape ({OBS_DIM},)")
        return cls(q=v[0:4].copy(), tau_prev=v[4:7].copy(), command=v[7:9].copy(),
                   hist_err=v[9:12].copy(), hist_vel=v[12:15].copy())


class WipEnv:
    """Episode machinery around the plant: step, observe, reward, terminate.

    One instance is single-threaded; run separate instances for parallel
    rollouts. Ablation switches zero the history or torque observation
    blocks while keeping the 15-dim layout.
    """

    def __init__(self, params: WipParams, profile: TrajectoryProfile | None = None,
                 profile_factory=None, reward_cfg: RewardConfig | None = None,
                 dt: float = 0.002, horizon_steps: int = 4000,
                 pitch_limit: float = 1.0, pos_err_limit: float = 3.0,
                 history_inputs: bool = True, torque_inputs: bool = True,
                 init_state=None, init_sampler=None):
        if profile is None and profile_factory is None:
            raise ParameterError("either profile or profile_factory is required")
        if dt <= 0.0 or horizon_steps < 1:
            raise ParameterError("dt must be positive and horizon_steps >= 1")
        self.params = params
        self._fixed_profile = profile
        self._profile_factory = profile_factory
        self.reward_cfg = reward_cfg or RewardConfig()
        self.dt = dt
        self.horizon_steps = int(horizon_steps)
        self.pitch_limit = pitch_limit
        self.pos_err_limit = pos_err_limit
        self.history_inputs = history_inputs
        self.torque_inputs = torque_inputs
        self._init_state = np.zeros(4) if init_state is None else np.asarray(init_state, dtype=float)
        self._init_sampler = init_sampler
        self.profile = profile
        self._q = None
        self._done = True

    @property
    def state(self) -> PlantState:
        return PlantState.from_array(self._q)

    @property
    def q_array(self) -> np.ndarray:
        """Current plant state as the raw length-4 array (not a copy)."""
        return self._q

    @property
    def step_count(self) -> int:
        return self._step

    @property
    def time(self) -> float:
        return self._step * self.dt

    def reference(self) -> PlantState:
        """Desired state at the current episode time."""
        return build_reference(self.profile, self.time)

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        if self._profile_factory is not None:
            if rng is None:
                raise ParameterError("profile_factory requires an rng at reset")
            self.profile = self._profile_factory(rng)
        if self._init_sampler is not None:
            if rng is None:
                raise ParameterError("init_sampler requires an rng at reset")
            self._q = np.asarray(self._init_sampler(rng), dtype=float).copy()
        else:
            self._q = self._init_state.copy()
        self._step = 0
        self._done = False
        ref = build_reference(self.profile, 0.0)
        self._prev_err_x = ref.x_w - self._q[0]
        self._prev_err_th = -self._q[1]
        self._tau_prev = np.zeros(3)
        self._hist_err = np.zeros(3)
        self._hist_vel = np.zeros(3)
        return self._observe(ref)

    def _observe(self, ref: PlantState) -> np.ndarray:
        obs = np.empty(OBS_DIM)
        obs[0:4] = self._q
        obs[4:7] = self._tau_prev if self.torque_inputs else 0.0
        obs[7] = ref.x_w
        obs[8] = 0.0  # desired pitch
        if self.history_inputs:
            obs[9:12] = self._hist_err
            obs[12:15] = self._hist_vel
        else:
            obs[9:15] = 0.0
        return obs

    def augmented_state(self) -> AugmentedState:
        """Current observation as a structured value."""
        ref = build_reference(self.profile, self.time)
        v = self._observe(ref)
        return AugmentedState.from_vector(v)

    def step(self, tau_c: float, tau_lqr: float | None = None,
             tau_res: float | None = None):
        """Advance one control period with the executed torque.

        ``tau_lqr``/``tau_res`` record the feedback/residual decomposition
        in the observation; by default the whole torque is attributed to
        the feedback part. Returns (obs, reward, done, info).
        """
        if self._done:
            raise WiplabError("step called on a finished episode; call reset")
        if tau_lqr is None:
            tau_lqr = tau_c
        if tau_res is None:
            tau_res = tau_c - tau_lqr

        diverged = False
        try:
            self._q = step_rk4(self.params, self._q, float(tau_c), self.dt)
        except DivergenceError:
            diverged = True
        self._step += 1
        t = self._step * self.dt
        ref = build_reference(self.profile, t)

        err_x = float(ref.x_w - self._q[0])
        err_th = float(-self._q[1])
        r = reward(err_x, err_th, self._prev_err_x, self._prev_err_th, self.reward_cfg)
        self._prev_err_x = err_x
        self._prev_err_th = err_th

        self._hist_err[0:2] = self._hist_err[1:3]
        self._hist_err[2] = err_x
        self._hist_vel[0:2] = self._hist_vel[1:3]
        self._hist_vel[2] = self._q[2]
        self._tau_prev[:] = (tau_lqr, tau_res, tau_c)

        out_of_bounds = bool(abs(self._q[1]) > self.pitch_limit
                             or abs(err_x) > self.pos_err_limit)
        horizon = self._step >= self.horizon_steps
        failed = diverged or out_of_bounds
        done = failed or horizon
        self._done = done
        if diverged:
            r = 0.0

        info = {
            "t": t,
            "step": self._step,
            "q": self._q.copy(),
            "q_des": ref,
            "err_x": err_x,
            "err_theta": err_th,
            "failed": failed,
            "diverged": diverged,
            "completed_fraction": self._step / self.horizon_steps if failed else 1.0,
        }
        return self._observe(ref), r, done, info
