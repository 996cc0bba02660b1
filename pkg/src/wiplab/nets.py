"""Minimal feed-forward networks with explicit reverse-mode gradients.

Everything is float64 numpy: weight matrices are stored per layer in
(fan_in, fan_out) row-major order, hidden layers use tanh, and the output
layer is linear. Gradients come from a hand-written backward pass over the
cached forward activations, and updates go through a standalone Adam
optimizer. No autodiff framework is involved, which keeps training runs
bit-reproducible and the checkpoint format trivial.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, WiplabError

__all__ = [
    "GaussianAction",
    "Mlp",
    "AdamState",
    "actor_head",
    "sample_squashed",
    "squashed_log_prob",
    "tanh_log_jacobian",
    "LOG_STD_MIN",
    "LOG_STD_MAX",
]

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianAction:
    """Scalar torque distribution (mean, variance), variance strictly positive."""

    mean: float
    var: float

    def __post_init__(self):
        if not (self.var > 0.0 and math.isfinite(self.var)):
            raise ParameterError(f"variance must be positive and finite, got {self.var}")


class Mlp:
    """Fully connected network with tanh hidden layers and a linear head.

    ``layer_dims`` lists the widths from input to output, e.g.
    (15, 64, 64, 2). Hidden weights are Xavier-uniform; the output layer is
    zero-initialized so fresh actor means and critic values start at zero.
    A forward pass caches activations for the next backward call; instances
    are single-writer and must not be shared across threads mid-update.
    """

    def __init__(self, layer_dims, rng: np.random.Generator | None = None):
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ParameterError(f"invalid layer dims {dims}")
        self.layer_dims = tuple(dims)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(dims) - 1
        for i in range(n_layers):
            fan_in, fan_out = dims[i], dims[i + 1]
            if i == n_layers - 1 or rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                limit = math.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))
        self._cache = None

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def forward(self, x) -> np.ndarray:
        """Evaluate the network on a (d,) vector or (batch, d) matrix."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.layer_dims[0]:
            raise ParameterError(
                f"input width {x.shape[-1]} does not match layer dims {self.layer_dims}"
            )
        activations = [x]
        out = x
        last = self.n_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out = out @ w + b
            if i != last:
                out = np.tanh(out)
            activations.append(out)
        self._cache = activations
        return out

    def backward(self, upstream) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Reverse-mode gradients of the last forward pass.

        ``upstream`` is dL/d(output) with the output's shape. Returns
        (per-layer (dW, db) list, dL/d(input)). Parameters are left
        untouched; updates happen only in AdamState.step.
        """
        if self._cache is None:
            raise WiplabError("backward called before any forward pass")
        activations = self._cache
        grad = np.asarray(upstream, dtype=float)
        if grad.shape != activations[-1].shape:
            raise ParameterError(
                f"upstream shape {grad.shape} does not match output {activations[-1].shape}"
            )
        single = grad.ndim == 1
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * self.n_layers
        last = self.n_layers - 1
        for i in range(last, -1, -1):
            a_out = activations[i + 1]
            if i != last:
                grad = grad * (1.0 - a_out * a_out)  # tanh'
            a_in = activations[i]
            if single:
                dw = np.outer(a_in, grad)
                db = grad.copy()
            else:
                dw = a_in.T @ grad
                db = grad.sum(axis=0)
            grads[i] = (dw, db)
            grad = grad @ self.weights[i].T
        return grads, grad

    def copy(self) -> "Mlp":
        dup = Mlp.__new__(Mlp)
        dup.layer_dims = self.layer_dims
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        dup._cache = None
        return dup

    def params(self) -> list[np.ndarray]:
        """Interleaved [W0, b0, W1, b1, ...] views of the parameters."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


class AdamState:
    """Bias-corrected Adam over a list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Apply one update in place. Non-finite gradients reject the update."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ParameterError("parameter/gradient count does not match optimizer state")
        for g in grads:
            # cheap screen first; the sum is non-finite whenever g is (and
            # only spuriously on absurd magnitudes, which the exact check
            # then clears)
            if not math.isfinite(float(np.sum(g))) and not np.all(np.isfinite(g)):
                raise ParameterError("non-finite gradient: update rejected")
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def adam_step(opt: AdamState, net: Mlp, grads) -> None:
    """Update a network in place from backward() output."""
    flat = []
    for dw, db in grads:
        flat.append(dw)
        flat.append(db)
    opt.step(net.params(), flat)


def actor_head(out) -> tuple[np.ndarray, np.ndarray]:
    """Split raw actor output into (mean, log_std) with the log-std clamp."""
    out = np.asarray(out, dtype=float)
    mean = out[..., 0]
    log_std = np.clip(out[..., 1], LOG_STD_MIN, LOG_STD_MAX)
    return mean, log_std


def tanh_log_jacobian(z):
    """log(1 - tanh(z)^2) in a form stable for large |z|."""
    z = np.asarray(z, dtype=float)
    return 2.0 * (math.log(2.0) - z - np.logaddexp(0.0, -2.0 * z))


def squashed_log_prob(mean, var, z):
    """Log-density of a = tanh(z) where z ~ N(mean, var).

    Includes the tanh change-of-variables correction; broadcasts over
    arrays.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    z = np.asarray(z, dtype=float)
    gauss = -0.5 * (z - mean) ** 2 / var - 0.5 * np.log(var) - _LOG_SQRT_2PI
    return gauss - tanh_log_jacobian(z)


def sample_squashed(action: GaussianAction, rng: np.random.Generator):
    """Draw a = tanh(z), z ~ N(mean, var); return (a, log_prob(a))."""
    z = action.mean + math.sqrt(action.var) * rng.standard_normal()
    a = math.tanh(z)
    logp = float(squashed_log_prob(action.mean, action.var, z))
    return a, logp
