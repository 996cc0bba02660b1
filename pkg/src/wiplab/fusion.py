"""Ensemble policy fusion with the feedback controller.

The ensemble's member policies form a uniformly weighted Gaussian mixture;
its exact moments are fused with the feedback controller's torque
distribution by precision weighting. The executed torque is the feedback
mean plus a bounded residual: residual_scale * tanh(z) with z sampled from
the fused Gaussian.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .lqr import LqrGains, lqr_action
from .nets import GaussianAction
from .sac import ReplayBuffer, SacAgent, Transition

__all__ = [
    "mixture_moments",
    "composite",
    "Ensemble",
    "FusedAction",
    "hybrid_action",
    "EpochConfig",
    "EpochStats",
    "train_epoch",
]

# Keep the stored residual strictly inside (-1, 1) even when tanh saturates
# to 1.0 in float64.
_UNIT_BOUND = 1.0 - 1e-12


def mixture_moments(actions) -> tuple[float, float]:
    """Exact mean and variance of a uniformly weighted Gaussian mixture.

    Accepts a sequence of GaussianAction (or (mean, var) pairs). The
    variance is evaluated in centered form, mean(var) + var(means), which
    is algebraically the usual mean(var + mean^2) - mixture_mean^2 but
    exact for identical members.
    """
    if len(actions) == 0:
        raise ParameterError("mixture requires at least one member")
    means = np.array([a.mean if isinstance(a, GaussianAction) else a[0] for a in actions])
    variances = np.array([a.var if isinstance(a, GaussianAction) else a[1] for a in actions])
    if np.any(variances <= 0.0):
        raise ParameterError("member variances must be positive")
    return _mixture_from_arrays(means, variances)


def _mixture_from_arrays(means: np.ndarray, variances: np.ndarray) -> tuple[float, float]:
    # Shifted summation keeps identical members exact under the division.
    mean = float(means[0] + np.mean(means - means[0]))
    var = float(variances[0] + np.mean(variances - variances[0])
                + np.mean((means - mean) ** 2))
    return mean, var


def composite(mu_mix: float, var_mix: float, mu_fb: float, var_fb: float) -> tuple[float, float]:
    """Precision-weighted fusion of two Gaussians (normalized density product).

    mean = (mu_mix*var_fb + mu_fb*var_mix) / (var_mix + var_fb)
    var  = var_fb*var_mix / (var_fb + var_mix)
    """
    if var_mix < 0.0 or var_fb < 0.0:
        raise ParameterError("variances must be non-negative")
    total = var_mix + var_fb
    if total <= 0.0:
        raise ParameterError("degenerate fusion: both variances are zero")
    mean = (mu_mix * var_fb + mu_fb * var_mix) / total
    var = var_fb * var_mix / total
    return float(mean), float(var)


class Ensemble:
    """M soft actor-critic members sharing one replay buffer."""

    def __init__(self, members: list[SacAgent], buffer: ReplayBuffer):
        if not members:
            raise ParameterError("ensemble requires at least one member")
        dims = {m.obs_dim for m in members}
        if len(dims) != 1:
            raise ParameterError(f"members disagree on input dimension: {sorted(dims)}")
        self.members = members
        self.buffer = buffer

    @classmethod
    def create(cls, n_members: int = 10, obs_dim: int = 15,
               buffer_capacity: int = 1_000_000,
               rng: np.random.Generator | None = None, **agent_kwargs) -> "Ensemble":
        rng = rng or np.random.default_rng()
        members = [SacAgent(obs_dim=obs_dim, rng=rng, **agent_kwargs)
                   for _ in range(n_members)]
        return cls(members, ReplayBuffer(obs_dim, buffer_capacity))

    def __len__(self) -> int:
        return len(self.members)

    def member_gaussians(self, obs) -> tuple[np.ndarray, np.ndarray]:
        """Per-member pre-squash (mean, variance) arrays at one observation."""
        means = np.empty(len(self.members))
        variances = np.empty(len(self.members))
        for i, m in enumerate(self.members):
            g = m.policy_gaussian(obs)
            means[i] = g.mean
            variances[i] = g.var
        return means, variances


@dataclass(frozen=True)
class FusedAction:
    """Everything produced by one fused control decision."""

    mixture_mean: float
    mixture_var: float
    fused_mean: float
    fused_var: float
    lqr_torque: float
    residual_unit: float  # tanh of the fused sample, in (-1, 1)
    residual_torque: float
    total_torque: float
    presquash: float  # the raw fused sample z


def hybrid_action(ensemble: Ensemble, gains: LqrGains, obs, q, q_des,
                  rng: np.random.Generator, residual_scale: float = 1.0) -> FusedAction:
    """Fuse the ensemble with the feedback controller and sample a torque.

    Every member contributes its pre-squash Gaussian; the mixture moments
    are fused with the feedback torque distribution by precision weighting,
    a sample z of the fused Gaussian is squashed, and the executed torque
    is feedback mean + residual_scale * tanh(z).
    """
    fb = lqr_action(gains, q, q_des)
    means, variances = ensemble.member_gaussians(obs)
    mix_mean, mix_var = _mixture_from_arrays(means, variances)
    fused_mean, fused_var = composite(mix_mean, mix_var, fb.mean, fb.var)
    z = fused_mean + math.sqrt(fused_var) * rng.standard_normal()
    unit = math.tanh(z)
    if unit > _UNIT_BOUND:
        unit = _UNIT_BOUND
    elif unit < -_UNIT_BOUND:
        unit = -_UNIT_BOUND
    tau_res = residual_scale * unit
    return FusedAction(
        mixture_mean=mix_mean,
        mixture_var=mix_var,
        fused_mean=fused_mean,
        fused_var=fused_var,
        lqr_torque=fb.mean,
        residual_unit=unit,
        residual_torque=tau_res,
        total_torque=fb.mean + tau_res,
        presquash=z,
    )


@dataclass(frozen=True)
class EpochConfig:
    """Shape of one training epoch."""

    steps: int = 4000
    update_every: int = 1000
    residual_scale: float = 1.0


@dataclass
class EpochStats:
    """Aggregates of one training epoch."""

    steps: int
    episodes: int
    reward_total: float
    reward_mean: float
    rmse_pos: float
    rmse_vel: float
    rmse_pitch: float
    updated_member: int
    mixture_var_mean: float
    updates: list  # rows: (step, critic_loss, actor_loss, alpha, mean_reward)


def train_epoch(ensemble: Ensemble, env, gains: LqrGains, cfg: EpochConfig,
                rng: np.random.Generator) -> EpochStats:
    """Run one epoch: act with the fused policy, store transitions, update.

    One member is selected uniformly at random at the start of the epoch
    and receives all gradient updates of the epoch; every member
    contributes to every action. The environment is reset whenever an
    episode terminates. Update events fire every ``update_every`` steps
    with one gradient step per environment step since the last event.
    """
    member_idx = int(rng.integers(len(ensemble)))
    agent = ensemble.members[member_idx]
    obs = env.reset(rng)

    sq_pos = sq_vel = sq_pitch = 0.0
    reward_total = 0.0
    reward_window = 0.0
    mix_var_sum = 0.0
    episodes = 0
    updates = []
    steps_since_update = 0

    for k in range(1, cfg.steps + 1):
        fa = hybrid_action(ensemble, gains, obs, env.q_array, env.reference(),
                           rng, cfg.residual_scale)
        s_prev = obs
        obs, r, done, info = env.step(fa.total_torque, fa.lqr_torque, fa.residual_torque)
        ensemble.buffer.push(Transition(s_prev, fa.residual_unit, r, obs, done))

        q = info["q"]
        ref = info["q_des"]
        sq_pos += (q[0] - ref.x_w) ** 2
        sq_vel += (q[2] - ref.x_w_dot) ** 2
        sq_pitch += q[1] ** 2
        reward_total += r
        reward_window += r
        mix_var_sum += fa.mixture_var
        steps_since_update += 1

        if done:
            episodes += 1
            obs = env.reset(rng)

        if k % cfg.update_every == 0 and steps_since_update > 0:
            stats = agent.update(ensemble.buffer, steps_since_update, rng)
            updates.append((k, stats["critic_loss"], stats["actor_loss"],
                            stats["alpha"], reward_window / steps_since_update))
            steps_since_update = 0
            reward_window = 0.0

    n = cfg.steps
    return EpochStats(
        steps=n,
        episodes=episodes,
        reward_total=reward_total,
        reward_mean=reward_total / n,
        rmse_pos=math.sqrt(sq_pos / n),
        rmse_vel=math.sqrt(sq_vel / n),
        rmse_pitch=math.sqrt(sq_pitch / n),
        updated_member=member_idx,
        mixture_var_mean=mix_var_sum / n,
        updates=updates,
    )
