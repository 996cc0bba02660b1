"""Nonlinear planar wheeled-inverted-pendulum plant.

The robot is reduced to a lumped torso pendulum on driven wheels with
generalized coordinates (x_w, theta): traversed wheel position and body
pitch. The coupled equations of motion are

    (m0 + mw + Iw/r^2) x''  +  m0 L sin(th) th'^2  -  m0 L cos(th) th''  = u_eff
    (m0 L^2 + I0) th''      -  m0 L cos(th) x''    -  m0 g L sin(th)     = 0

with the effective wheel input u_eff = gear_ratio * u - friction_coeff *
visc_coeff * x', clipped to the plant torque limit. The center-of-mass
lever arm is L + com_offset throughout.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError, ParameterError

__all__ = [
    "WipParams",
    "PlantState",
    "accelerations",
    "step_rk4",
    "simulate",
    "apply_case",
    "total_energy",
    "DEFAULT_PARAMS",
]


@dataclass(frozen=True)
class WipParams:
    """Physical parameters of the plant plus perturbation multipliers.

    Masses/inertias in kg and kg*m^2, lengths in m. gear_ratio scales the
    commanded torque, friction_coeff scales the viscous wheel damping, and
    com_offset shifts the center-of-mass lever arm additively.
    """

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
    visc_coeff: float = 0.1  # N*m*s/m, base viscous damping on the wheel
    torque_limit: float = 20.0  # N*m, plant-side clip on u_eff

    def __post_init__(self):
        if min(self.m0, self.mw, self.I0, self.Iw, self.r) <= 0.0:
            raise ParameterError("masses, inertias and wheel radius must be positive")
        if self.length <= 0.0:
            raise ParameterError(
                f"effective lever arm L + com_offset = {self.length} must be positive"
            )
        if self.gear_ratio <= 0.0:
            raise ParameterError("gear_ratio must be positive")
        if self.friction_coeff < 0.0:
            raise ParameterError("friction_coeff must be non-negative")

    @property
    def length(self) -> float:
        """Effective wheel-center-to-CoM lever arm (m)."""
        return self.L + self.com_offset

    @property
    def translational_mass(self) -> float:
        """Total inertia against wheel translation: m0 + mw + Iw/r^2."""
        return self.m0 + self.mw + self.Iw / self.r**2


DEFAULT_PARAMS = WipParams()


@dataclass(frozen=True)
class PlantState:
    """Plant state q = (x_w, theta, x_w_dot, theta_dot)."""

    x_w: float = 0.0
    theta: float = 0.0
    x_w_dot: float = 0.0
    theta_dot: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x_w, self.theta, self.x_w_dot, self.theta_dot])

    @classmethod
    def from_array(cls, q) -> "PlantState":
        x, th, xd, thd = (float(v) for v in q)
        return cls(x, th, xd, thd)


def _as_q(state) -> np.ndarray:
    if isinstance(state, PlantState):
        return state.as_array()
    q = np.asarray(state, dtype=float)
    if q.shape != (4,):
        raise ParameterError(f"state must have 4 components, got shape {q.shape}")
    return q


def _accel(p: WipParams, th: float, xd: float, thd: float, u: float) -> tuple[float, float]:
    # Scalar hot path: solve the 2x2 system by hand, no array allocation.
    sin_th = math.sin(th)
    cos_th = math.cos(th)
    u_eff = p.gear_ratio * u - p.friction_coeff * p.visc_coeff * xd
    lim = p.torque_limit
    if u_eff > lim:
        u_eff = lim
    elif u_eff < -lim:
        u_eff = -lim
    ml = p.m0 * p.length
    m11 = p.translational_mass
    m12 = -ml * cos_th
    m22 = p.m0 * p.length * p.length + p.I0
    det = m11 * m22 - m12 * m12
    if abs(det) < 1e-12:
        raise ParameterError("singular mass matrix: non-physical parameters")
    rhs0 = u_eff - ml * sin_th * thd * thd
    rhs1 = p.m0 * p.g * p.length * sin_th
    xdd = (m22 * rhs0 - m12 * rhs1) / det
    thdd = (m11 * rhs1 - m12 * rhs0) / det
    return float(xdd), float(thdd)


def accelerations(params: WipParams, state, u: float) -> tuple[float, float]:
    """Solve the 2x2 mass-matrix system for (x_w_ddot, theta_ddot).

    ``u`` is the commanded wheel torque in N*m; gearing, viscous friction
    and the plant torque limit are applied internally.
    """
    q = _as_q(state)
    if not np.all(np.isfinite(q)):
        raise ParameterError("state must be finite")
    return _accel(params, q[1], q[2], q[3], u)


def step_rk4(params: WipParams, state, u: float, dt: float):
    """Classical 4th-order Runge-Kutta advance with zero-order-hold torque.

    Returns the same kind of state object it was given (PlantState in,
    PlantState out; array in, array out).
    """
    if dt <= 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    q = _as_q(state)
    x, th, xd, thd = q
    h = dt

    a1x, a1t = _accel(params, th, xd, thd, u)
    k1 = (xd, thd, a1x, a1t)

    a2x, a2t = _accel(params, th + 0.5 * h * k1[1], xd + 0.5 * h * k1[2], thd + 0.5 * h * k1[3], u)
    k2 = (xd + 0.5 * h * k1[2], thd + 0.5 * h * k1[3], a2x, a2t)

    a3x, a3t = _accel(params, th + 0.5 * h * k2[1], xd + 0.5 * h * k2[2], thd + 0.5 * h * k2[3], u)
    k3 = (xd + 0.5 * h * k2[2], thd + 0.5 * h * k2[3], a3x, a3t)

    a4x, a4t = _accel(params, th + h * k3[1], xd + h * k3[2], thd + h * k3[3], u)
    k4 = (xd + h * k3[2], thd + h * k3[3], a4x, a4t)

    s = h / 6.0
    x_n = x + s * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    th_n = th + s * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    xd_n = xd + s * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    thd_n = thd + s * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

    if not (math.isfinite(x_n) and math.isfinite(th_n) and math.isfinite(xd_n) and math.isfinite(thd_n)):
        raise DivergenceError("integration produced a non-finite state")
    if isinstance(state, PlantState):
        return PlantState(x_n, th_n, xd_n, thd_n)
    return np.array([x_n, th_n, xd_n, thd_n])


def simulate(params: WipParams, state, torque_fn, dt: float, n_steps: int) -> np.ndarray:
    """Roll the plant forward, returning the (n_steps+1, 4) state trajectory.

    ``torque_fn(t, q)`` supplies the commanded torque. A divergence error
    raised mid-run is re-raised carrying the failing simulation time.
    """
    q = _as_q(state)
    out = np.empty((n_steps + 1, 4))
    out[0] = q
    for k in range(n_steps):
        t = k * dt
        try:
            q = step_rk4(params, q, float(torque_fn(t, q)), dt)
        except DivergenceError as err:
            raise DivergenceError(str(err), time=t + dt) from None
        out[k + 1] = q
    return out


def apply_case(params: WipParams, case) -> WipParams:
    """Return params perturbed by a benchmark case.

    The case supplies an absolute body mass plus gear/friction multipliers
    and a CoM offset; everything else is carried over unchanged.
    """
    return replace(
        params,
        m0=case.mass,
        gear_ratio=case.gear,
        friction_coeff=case.friction,
        com_offset=case.com,
    )


def total_energy(params: WipParams, state) -> float:
    """Total mechanical energy: (1/2) q' M(theta) q' + m0 g L_eff cos(theta)."""
    q = _as_q(state)
    _, th, xd, thd = q
    ml = params.m0 * params.length
    m11 = params.translational_mass
    m12 = -ml * math.cos(th)
    m22 = params.m0 * params.length**2 + params.I0
    kinetic = 0.5 * (m11 * xd**2 + 2.0 * m12 * xd * thd + m22 * thd**2)
    potential = params.m0 * params.g * params.length * math.cos(th)
    return float(kinetic + potential)
