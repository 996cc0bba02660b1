"""Linearization, continuous Riccati synthesis, and the feedback law.

Gain vectors are stored in the same orientation as the published defaults
(all entries negative for a stabilizing controller): the torque is

    u = K[0]*(x_des - x) + K[1]*(theta - theta_des)
      + K[2]*(xdot_des - xdot) + K[3]*(thetadot - thetadot_des)

Position-channel errors enter as target minus state and pitch-channel
errors as state minus target. This is the unique orientation in which the
default gain set stabilizes the plant of `dynamics` (verified by the
closed-loop eigenvalue and rollout tests).
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import WipParams, PlantState, _as_q
from .errors import ParameterError, SynthesisError
from .nets import GaussianAction

__all__ = [
    "LinearModel",
    "LqrGains",
    "DEFAULT_GAINS",
    "linearize",
    "solve_care",
    "lqr_action",
    "feedback_row",
    "closed_loop_matrix",
    "riccati_residual",
]

# Published feedback gains for the default plant, with the empirically
# assumed action variance used when the controller is wrapped as a
# Gaussian torque source.
DEFAULT_GAIN_VECTOR = (-100.0, -315.0, -40.0, -40.0)
DEFAULT_ACTION_VARIANCE = 0.4


@dataclass(frozen=True)
class LinearModel:
    """State-space model (A, B) of the plant about the upright equilibrium."""

    A: np.ndarray  # (4, 4)
    B: np.ndarray  # (4, 1)


@dataclass(frozen=True)
class LqrGains:
    """Feedback gain vector plus the variance of the wrapped torque distribution."""

    K: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GAIN_VECTOR))
    action_var: float = DEFAULT_ACTION_VARIANCE

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float).reshape(4))
        if self.action_var <= 0.0:
            raise ParameterError("action_var must be positive")


DEFAULT_GAINS = LqrGains()


@dataclass(frozen=True)
class _GenericGains:
    """solve_care result for non-4-state systems: plain K = R^-1 B' P."""

    K: np.ndarray
    action_var: float = DEFAULT_ACTION_VARIANCE


def linearize(params: WipParams) -> LinearModel:
    """Exact Jacobians of the plant vector field at the upright equilibrium.

    Closed form from the inverse mass matrix at theta = 0; the x_w column
    is zero because the dynamics do not depend on absolute position.
    """
    ml = params.m0 * params.length
    m11 = params.translational_mass
    m22 = params.m0 * params.length**2 + params.I0
    det = m11 * m22 - ml * ml
    if abs(det) < 1e-12:
        raise ParameterError("singular mass matrix: non-physical parameters")
    minv = np.array([[m22, ml], [ml, m11]]) / det

    grav = minv @ np.array([0.0, params.m0 * params.g * params.length])
    damp = minv @ np.array([-params.friction_coeff * params.visc_coeff, 0.0])
    gear = minv @ np.array([params.gear_ratio, 0.0])

    A = np.zeros((4, 4))
    A[0, 2] = 1.0
    A[1, 3] = 1.0
    A[2, 1], A[3, 1] = grav
    A[2, 2], A[3, 2] = damp
    B = np.zeros((4, 1))
    B[2, 0], B[3, 0] = gear
    return LinearModel(A=A, B=B)


def feedback_row(gains: LqrGains) -> np.ndarray:
    """Gain row w such that u = w @ (q - q_des) under the stored orientation."""
    k = gains.K
    return np.array([-k[0], k[1], -k[2], k[3]])


def closed_loop_matrix(model: LinearModel, gains: LqrGains) -> np.ndarray:
    """Closed-loop state matrix of the linearized plant under the feedback law."""
    return model.A + model.B @ feedback_row(gains)[None, :]


def _solve_lyapunov(Ac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # Solve Ac^T P + P Ac + rhs = 0 via the Kronecker-vectorized linear system.
    n = Ac.shape[0]
    eye = np.eye(n)
    coeff = np.kron(eye, Ac.T) + np.kron(Ac.T, eye)
    p = np.linalg.solve(coeff, -rhs.reshape(-1)).reshape(n, n)
    return 0.5 * (p + p.T)


def _stabilizing_seed(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Search for K0 with A - B K0 Hurwitz, standard-orientation row vector.

    Candidates sweep a high-gain pitch loop combined with weak position
    feedback over several magnitudes; 1-D and 2-D systems fall back to
    plain output damping sweeps.
    """
    n = A.shape[0]
    candidates = []
    scales = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 0.5, 0.25]
    if n == 4:
        base = np.array([-1.0, 100.0, -2.0, 12.5])
        candidates += [c * base for c in scales]
        candidates += [-c * base for c in scales]
    bt = B.reshape(-1)
    for c in [1.0, 4.0, 16.0, 64.0, 256.0]:
        candidates.append(c * bt / max(np.dot(bt, bt), 1e-12))
        candidates.append(-c * bt / max(np.dot(bt, bt), 1e-12))
        candidates.append(c * np.ones(n))
        candidates.append(-c * np.ones(n))
    for k0 in candidates:
        eig = np.linalg.eigvals(A - B @ k0[None, :])
        if np.all(eig.real < -1e-9):
            return k0
    raise SynthesisError("no stabilizing seed found for the Riccati iteration")


def solve_care(model: LinearModel, Q, R, action_var: float = DEFAULT_ACTION_VARIANCE,
               max_iter: int = 100, residual_tol: float = 1e-8) -> LqrGains:
    """Synthesize feedback gains from the continuous algebraic Riccati equation.

    Newton-Kleinman iteration from a searched stabilizing seed: repeatedly
    solve the closed-loop Lyapunov equation and refresh the gain until the
    Riccati residual A'P + PA - PBR^-1B'P + Q drops below ``residual_tol``
    in Frobenius norm. For the 4-state plant the result is converted to the
    package gain orientation (negative entries for this plant family); for
    other dimensions the plain gain K = R^-1 B' P is returned, stabilizing
    as u = -K x.

    Raises SynthesisError when no seed stabilizes or the iteration stalls.
    """
    A = np.asarray(model.A, dtype=float)
    B = np.asarray(model.B, dtype=float).reshape(A.shape[0], -1)
    Q = np.asarray(Q, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape != (B.shape[1], B.shape[1]) or np.any(np.linalg.eigvalsh(R) <= 0.0):
        raise ParameterError("R must be positive definite with one row per input")
    if Q.shape != A.shape or np.any(np.linalg.eigvalsh(0.5 * (Q + Q.T)) < -1e-12):
        raise ParameterError("Q must be a PSD matrix matching A")

    r_inv = np.linalg.inv(R)
    k = _stabilizing_seed(A, B).reshape(B.shape[1], A.shape[0])
    p = None
    for _ in range(max_iter):
        a_cl = A - B @ k
        try:
            p = _solve_lyapunov(a_cl, Q + k.T @ R @ k)
        except np.linalg.LinAlgError as err:
            raise SynthesisError(f"Lyapunov solve failed: {err}") from None
        k_next = r_inv @ B.T @ p
        if np.max(np.abs(k_next - k)) < 1e-13:
            k = k_next
            break
        k = k_next
    residual = A.T @ p + p @ A - p @ B @ r_inv @ B.T @ p + Q
    res_norm = float(np.linalg.norm(residual, "fro"))
    if res_norm >= residual_tol:
        raise SynthesisError(f"Riccati residual {res_norm:.3e} above {residual_tol:.1e}")
    if np.any(np.linalg.eigvals(A - B @ k).real >= 0.0):
        raise SynthesisError("Riccati iteration returned a non-stabilizing gain")

    k_std = k.reshape(-1)
    if k_std.shape[0] == 4:
        # Convert R^-1 B' P into the package storage orientation.
        return LqrGains(K=np.array([k_std[0], -k_std[1], k_std[2], -k_std[3]]),
                        action_var=action_var)
    return _GenericGains(K=k_std, action_var=action_var)


def riccati_residual(model: LinearModel, Q, R, gains) -> float:
    """Frobenius norm of A'P + PA - PBR^-1B'P + Q at the gains' Riccati root.

    P is recovered independently of the synthesis path by solving the
    closed-loop Lyapunov equation the optimal gain must satisfy.
    """
    A = np.asarray(model.A, dtype=float)
    B = np.asarray(model.B, dtype=float).reshape(A.shape[0], -1)
    Q = np.asarray(Q, dtype=float)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    k = np.asarray(gains.K, dtype=float)
    if k.shape[0] == 4:
        k_std = np.array([k[0], -k[1], k[2], -k[3]]).reshape(1, 4)
    else:
        k_std = k.reshape(B.shape[1], A.shape[0])
    p = _solve_lyapunov(A - B @ k_std, Q + k_std.T @ R @ k_std)
    r_inv = np.linalg.inv(R)
    residual = A.T @ p + p @ A - p @ B @ r_inv @ B.T @ p + Q
    return float(np.linalg.norm(residual, "fro"))


def lqr_action(gains: LqrGains, q, q_des) -> GaussianAction:
    """Feedback torque wrapped as a Gaussian with the configured variance."""
    e = _as_q(q) - _as_q(q_des)
    k = gains.K
    mean = k[0] * (-e[0]) + k[1] * e[1] + k[2] * (-e[2]) + k[3] * e[3]
    return GaussianAction(mean=float(mean), var=gains.action_var)
