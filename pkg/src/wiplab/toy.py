"""A 1-D point-mass task for sanity-checking the actor-critic stack.

The agent pushes a damped point mass toward the origin with a bounded
force; reward is highest at the origin. Small enough that a learning
signal is unmistakable within a few tens of epochs.
"""

import numpy as np

from .sac import ReplayBuffer, SacAgent, Transition

__all__ = ["PointMassEnv", "train_point_mass", "random_policy_reward"]


class PointMassEnv:
    """State (x, v); scalar action in (-1, 1) scales a bounded force."""

    def __init__(self, dt: float = 0.05, horizon: int = 200, force: float = 3.0,
                 damping: float = 0.98):
        self.dt = dt
        self.horizon = horizon
        self.force = force
        self.damping = damping

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        side = 1.0 if rng.random() < 0.5 else -1.0
        self._x = side * rng.uniform(0.8, 1.4)
        self._v = 0.0
        self._step = 0
        return np.array([self._x, self._v])

    def step(self, a: float):
        self._v = self.damping * self._v + self.force * float(a) * self.dt
        self._x += self._v * self.dt
        self._step += 1
        r = max(0.0, 1.0 - abs(self._x))
        done = self._step >= self.horizon
        return np.array([self._x, self._v]), r, done, {}


def random_policy_reward(env: PointMassEnv, episodes: int, rng: np.random.Generator) -> float:
    """Mean episode reward of uniform random actions."""
    total = 0.0
    for _ in range(episodes):
        env.reset(rng)
        done = False
        while not done:
            _, r, done, _ = env.step(rng.uniform(-1.0, 1.0))
            total += r
    return total / episodes


def train_point_mass(agent: SacAgent, env: PointMassEnv, epochs: int,
                     rng: np.random.Generator, episodes_per_epoch: int = 3,
                     buffer: ReplayBuffer | None = None) -> list[float]:
    """Train on the point mass; returns the mean episode reward per epoch.

    Each episode is followed by one gradient step per environment step,
    the same 1:1 replay ratio the main training loop uses.
    """
    buffer = buffer or ReplayBuffer(obs_dim=2, capacity=200_000)
    curve = []
    for _ in range(epochs):
        epoch_reward = 0.0
        for _ in range(episodes_per_epoch):
            obs = env.reset(rng)
            done = False
            ep_steps = 0
            while not done:
                _, a, _ = agent.act(obs, rng=rng)
                obs2, r, done, _ = env.step(a)
                buffer.push(Transition(obs, a, r, obs2, done))
                obs = obs2
                epoch_reward += r
                ep_steps += 1
            agent.update(buffer, ep_steps, rng)
        curve.append(epoch_reward / episodes_per_epoch)
    return curve


def eval_point_mass(agent: SacAgent, env: PointMassEnv, episodes: int,
                    rng: np.random.Generator) -> float:
    """Mean episode reward of the deterministic (tanh-mean) policy."""
    total = 0.0
    for _ in range(episodes):
        obs = env.reset(rng)
        done = False
        while not done:
            _, a, _ = agent.act(obs, deterministic=True)
            obs, r, done, _ = env.step(a)
            total += r
    return total / episodes
