"""Soft actor-critic for a single ensemble member.

One agent owns a squashed-Gaussian actor, twin Q critics with polyak-
averaged targets, and an automatically tuned entropy temperature. All
gradients are computed analytically against the `nets` backward pass;
the derivations are finite-difference checked in the test suite.

An agent plus the buffer it samples from form a single-writer unit:
ensemble members may act concurrently (reads), but updates against the
shared buffer must be serialized.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .nets import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    AdamState,
    GaussianAction,
    Mlp,
    actor_head,
    adam_step,
    sample_squashed,
    tanh_log_jacobian,
)

__all__ = ["Transition", "ReplayBuffer", "SacAgent"]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Transition:
    """One stored step: observation, executed residual in (-1, 1), reward,
    next observation, and the episode-termination flag."""

    s: np.ndarray
    a: float
    r: float
    s_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Ring buffer over transitions with FIFO overwrite.

    Storage grows geometrically up to ``capacity`` so small experiments do
    not pay for the full default allocation.
    """

    def __init__(self, obs_dim: int, capacity: int = 1_000_000):
        if capacity < 1:
            raise ParameterError("capacity must be at least 1")
        self.obs_dim = int(obs_dim)
        self.capacity = int(capacity)
        self._alloc = 0
        self._size = 0
        self._pos = 0
        self._s = self._a = self._r = self._s2 = self._d = None

    def __len__(self) -> int:
        return self._size

    def _grow(self, needed: int) -> None:
        new_alloc = max(1024, self._alloc * 2)
        while new_alloc < needed:
            new_alloc *= 2
        new_alloc = min(new_alloc, self.capacity)
        s = np.zeros((new_alloc, self.obs_dim))
        a = np.zeros(new_alloc)
        r = np.zeros(new_alloc)
        s2 = np.zeros((new_alloc, self.obs_dim))
        d = np.zeros(new_alloc)
        if self._size:
            s[: self._size] = self._s[: self._size]
            a[: self._size] = self._a[: self._size]
            r[: self._size] = self._r[: self._size]
            s2[: self._size] = self._s2[: self._size]
            d[: self._size] = self._d[: self._size]
        self._s, self._a, self._r, self._s2, self._d = s, a, r, s2, d
        self._alloc = new_alloc

    def push(self, t: Transition) -> None:
        s = np.asarray(t.s, dtype=float)
        s2 = np.asarray(t.s_next, dtype=float)
        if s.shape != (self.obs_dim,) or s2.shape != (self.obs_dim,):
            raise ParameterError(f"observation shape must be ({self.obs_dim},)")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(s2))
                and math.isfinite(t.a) and math.isfinite(t.r)):
            raise ParameterError("non-finite transition rejected")
        if self._pos >= self._alloc and self._alloc < self.capacity:
            self._grow(self._pos + 1)
        i = self._pos
        self._s[i] = s
        self._a[i] = t.a
        self._r[i] = t.r
        self._s2[i] = s2
        self._d[i] = float(t.done)
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        if self._size == 0:
            raise ParameterError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return {
            "s": self._s[idx],
            "a": self._a[idx],
            "r": self._r[idx],
            "s2": self._s2[idx],
            "d": self._d[idx],
        }


class SacAgent:
    """Twin-critic SAC with auto temperature for a scalar action."""

    def __init__(self, obs_dim: int = 15, hidden=(64, 64), lr: float = 1e-3,
                 gamma: float = 0.99, polyak: float = 0.995, batch_size: int = 64,
                 target_entropy: float = -1.0, init_alpha: float = 0.2,
                 rng: np.random.Generator | None = None):
        self.obs_dim = int(obs_dim)
        self.gamma = gamma
        self.polyak = polyak
        self.batch_size = int(batch_size)
        self.target_entropy = target_entropy
        self.lr = lr

        hidden = tuple(int(h) for h in hidden)
        self.actor = Mlp((self.obs_dim, *hidden, 2), rng)
        self.q1 = Mlp((self.obs_dim + 1, *hidden, 1), rng)
        self.q2 = Mlp((self.obs_dim + 1, *hidden, 1), rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array(math.log(init_alpha))

        self.opt_actor = AdamState(self.actor.params(), lr)
        self.opt_q1 = AdamState(self.q1.params(), lr)
        self.opt_q2 = AdamState(self.q2.params(), lr)
        self.opt_alpha = AdamState([self.log_alpha], lr)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    def policy_gaussian(self, s) -> GaussianAction:
        """Actor head (mean, variance) of the pre-squash Gaussian at s."""
        out = self.actor.forward(np.asarray(s, dtype=float))
        mean, log_std = actor_head(out)
        return GaussianAction(mean=float(mean), var=float(np.exp(2.0 * log_std)))

    def act(self, s, deterministic: bool = False, rng: np.random.Generator | None = None):
        """Return (GaussianAction, squashed action, log-prob or None)."""
        dist = self.policy_gaussian(s)
        if deterministic:
            return dist, math.tanh(dist.mean), None
        if rng is None:
            raise ParameterError("sampling requires an rng")
        a, logp = sample_squashed(dist, rng)
        return dist, a, logp

    def update(self, buffer: ReplayBuffer, n_grad_steps: int,
               rng: np.random.Generator) -> dict:
        """Run SAC gradient steps against the buffer.

        Returns averaged loss statistics; a too-small buffer yields a
        skipped status instead of raising.
        """
        if len(buffer) < self.batch_size:
            return {"status": "skipped", "reason": "buffer smaller than batch",
                    "critic_loss": math.nan, "actor_loss": math.nan, "alpha": self.alpha}
        c_losses = np.empty(n_grad_steps)
        a_losses = np.empty(n_grad_steps)
        for i in range(n_grad_steps):
            batch = buffer.sample(self.batch_size, rng)
            c, a, _ = self.update_on_batch(batch, rng)
            c_losses[i] = c
            a_losses[i] = a
        return {
            "status": "ok",
            "critic_loss": float(c_losses.mean()) if n_grad_steps else math.nan,
            "actor_loss": float(a_losses.mean()) if n_grad_steps else math.nan,
            "alpha": self.alpha,
        }

    def update_on_batch(self, batch: dict, rng: np.random.Generator):
        """One gradient step on an explicit batch; returns (critic, actor, alpha) stats."""
        s, a, r, s2, d = batch["s"], batch["a"], batch["r"], batch["s2"], batch["d"]
        n = s.shape[0]
        alpha = self.alpha

        # Critic targets from fresh next-state actions against target critics.
        mu2, log_std2 = actor_head(self.actor.forward(s2))
        std2 = np.exp(log_std2)
        eps2 = rng.standard_normal(n)
        z2 = mu2 + std2 * eps2
        a2 = np.tanh(z2)
        logp2 = -0.5 * eps2**2 - log_std2 - _LOG_SQRT_2PI - tanh_log_jacobian(z2)
        sa2 = np.concatenate([s2, a2[:, None]], axis=1)
        q_next = np.minimum(self.q1_target.forward(sa2)[:, 0],
                            self.q2_target.forward(sa2)[:, 0])
        y = r + self.gamma * (1.0 - d) * (q_next - alpha * logp2)

        # Twin critic regression on the stored actions.
        sa = np.concatenate([s, a[:, None]], axis=1)
        critic_loss = 0.0
        for q, opt in ((self.q1, self.opt_q1), (self.q2, self.opt_q2)):
            qv = q.forward(sa)[:, 0]
            err = qv - y
            critic_loss += float(np.mean(err**2))
            grads, _ = q.backward((2.0 / n) * err[:, None])
            adam_step(opt, q, grads)

        # Actor: maximize min-Q of a reparameterized sample minus entropy cost.
        out = self.actor.forward(s)
        mu = out[:, 0]
        raw = out[:, 1]
        clip_mask = (raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        std = np.exp(log_std)
        eps = rng.standard_normal(n)
        z = mu + std * eps
        a_new = np.tanh(z)
        logp = -0.5 * eps**2 - log_std - _LOG_SQRT_2PI - tanh_log_jacobian(z)

        sa_new = np.concatenate([s, a_new[:, None]], axis=1)
        q1v = self.q1.forward(sa_new)[:, 0]
        q2v = self.q2.forward(sa_new)[:, 0]
        q_min = np.minimum(q1v, q2v)
        actor_loss = float(np.mean(alpha * logp - q_min))

        pick1 = q1v <= q2v
        _, gin1 = self.q1.backward((-1.0 / n) * pick1[:, None].astype(float))
        _, gin2 = self.q2.backward((-1.0 / n) * (~pick1)[:, None].astype(float))
        g_a = gin1[:, -1] + gin2[:, -1]  # dL/da through the active critic

        # d logp / dz = 2 tanh(z); z = mu + std*eps with eps held fixed.
        dlogp_dz = 2.0 * a_new
        da_dz = 1.0 - a_new**2
        g_mu = (alpha / n) * dlogp_dz + g_a * da_dz
        g_log_std = ((alpha / n) * (-1.0 + dlogp_dz * std * eps)
                     + g_a * da_dz * std * eps)
        upstream = np.stack([g_mu, g_log_std * clip_mask], axis=1)
        grads, _ = self.actor.backward(upstream)
        adam_step(self.opt_actor, self.actor, grads)

        # Temperature: alpha minimizes alpha * (-logp - target_entropy).
        g_log_alpha = alpha * float(np.mean(-logp - self.target_entropy))
        self.opt_alpha.step([self.log_alpha], [np.array(g_log_alpha)])

        # Polyak trail of the critics.
        rho = self.polyak
        for net, tgt in ((self.q1, self.q1_target), (self.q2, self.q2_target)):
            for p, t in zip(net.params(), tgt.params()):
                t *= rho
                t += (1.0 - rho) * p

        return critic_loss, actor_loss, alpha
