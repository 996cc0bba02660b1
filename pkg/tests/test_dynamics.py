import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiplab import (
    DivergenceError,
    ParameterError,
    PlantState,
    WipParams,
    accelerations,
    apply_case,
    simulate,
    step_rk4,
    total_energy,
)
from wiplab.bench import TABLE_CASES

from conftest import random_physical_params


def oracle_accelerations(p: WipParams, q, u):
    """Independent closed-form 2x2 inverse of the equations of motion."""
    _, th, xd, thd = q
    m1 = p.m0 + p.mw + p.Iw / p.r**2
    le = p.L + p.com_offset
    u_eff = p.gear_ratio * u - p.friction_coeff * p.visc_coeff * xd
    u_eff = float(np.clip(u_eff, -p.torque_limit, p.torque_limit))
    a = m1
    b = -p.m0 * le * math.cos(th)
    c = -p.m0 * le * math.cos(th)
    d = p.m0 * le**2 + p.I0
    e = u_eff - p.m0 * le * math.sin(th) * thd**2
    f = p.m0 * p.g * le * math.sin(th)
    det = a * d - b * c
    inv = np.array([[d, -b], [-c, a]]) / det
    return inv @ np.array([e, f])


class TestAccelerations:
    def test_upright_equilibrium_is_fixed(self, params):
        assert accelerations(params, PlantState(), 0.0) == (0.0, 0.0)

    def test_matches_symbolic_solve_at_tilt(self, params):
        got = accelerations(params, (0.0, 0.1, 0.0, 0.0), 0.0)
        want = oracle_accelerations(params, (0.0, 0.1, 0.0, 0.0), 0.0)
        assert got == pytest.approx(tuple(want), rel=1e-12)

    def test_matches_symbolic_solve_random_states(self, params):
        rng = np.random.default_rng(7)
        for _ in range(50):
            q = rng.uniform(-1.0, 1.0, size=4)
            u = rng.uniform(-10.0, 10.0)
            got = accelerations(params, q, u)
            want = oracle_accelerations(params, q, u)
            assert got == pytest.approx(tuple(want), rel=1e-12)

    def test_odd_symmetry_of_tilt(self, params):
        xdd_p, thdd_p = accelerations(params, (0.0, 0.3, 0.0, 0.0), 0.0)
        xdd_m, thdd_m = accelerations(params, (0.0, -0.3, 0.0, 0.0), 0.0)
        assert xdd_m == -xdd_p
        assert thdd_m == -thdd_p

    def test_cross_check_against_adaptive_integrator(self, params):
        # Short-horizon comparison with scipy's adaptive RK45 on the same field.
        from scipy.integrate import solve_ivp

        def field(t, q):
            xdd, thdd = accelerations(params, q, 1.5)
            return [q[2], q[3], xdd, thdd]

        q0 = [0.0, 0.1, 0.0, 0.0]
        sol = solve_ivp(field, (0.0, 0.1), q0, rtol=1e-11, atol=1e-12)
        q = np.asarray(q0)
        for _ in range(50):
            q = step_rk4(params, q, 1.5, 0.002)
        assert q == pytest.approx(sol.y[:, -1], abs=1e-8)

    def test_rejects_nonfinite_state(self, params):
        with pytest.raises(ParameterError):
            accelerations(params, (0.0, math.nan, 0.0, 0.0), 0.0)

    def test_float_outputs(self, params):
        xdd, thdd = accelerations(params, (0.1, 0.2, 0.3, 0.4), 1.0)
        assert type(xdd) is float and type(thdd) is float


class TestStepRk4:
    def test_fixed_point(self, params):
        q = step_rk4(params, PlantState(), 0.0, 0.002)
        assert q == PlantState()

    def test_open_loop_pitch_growth(self, params):
        q = np.array([0.0, 0.05, 0.0, 0.0])
        pitches = [q[1]]
        for _ in range(100):
            q = step_rk4(params, q, 0.0, 0.002)
            pitches.append(q[1])
        assert all(b > a for a, b in zip(pitches, pitches[1:]))

    def test_dt_must_be_positive(self, params):
        with pytest.raises(ParameterError):
            step_rk4(params, PlantState(), 0.0, 0.0)

    def test_fourth_order_convergence(self, params):
        # Richardson check against a much finer reference on a half-second
        # open-loop swing; the asymptotic halving ratio is 2^4 = 16.
        frictionless = apply_case(params, TABLE_CASES[0])  # any plant works
        def run(dt):
            q = np.array([0.0, 0.1, 0.0, 0.0])
            for _ in range(int(round(0.5 / dt))):
                q = step_rk4(frictionless, q, 0.0, dt)
            return q

        ref = run(0.00025)
        ratio = np.linalg.norm(run(0.002) - ref) / np.linalg.norm(run(0.001) - ref)
        assert 12.0 <= ratio <= 20.0

    def test_energy_conservation(self):
        p = WipParams(friction_coeff=0.0)
        q = np.array([0.0, 0.1, 0.0, 0.0])
        e0 = total_energy(p, q)
        worst = 0.0
        for _ in range(2000):
            q = step_rk4(p, q, 0.0, 0.0005)
            worst = max(worst, abs(total_energy(p, q) - e0) / abs(e0))
        assert worst < 1e-6

    def test_acceleration_matches_finite_difference_of_steps(self, params):
        q0 = np.array([0.0, 0.2, 0.1, -0.3])
        xdd, thdd = accelerations(params, q0, 2.0)
        dt = 1e-5
        q1 = step_rk4(params, q0, 2.0, dt)
        assert (q1[2] - q0[2]) / dt == pytest.approx(xdd, rel=1e-3)
        assert (q1[3] - q0[3]) / dt == pytest.approx(thdd, rel=1e-3)

    def test_mirror_symmetry_of_trajectories(self, params):
        rng = np.random.default_rng(3)
        torques = rng.uniform(-5.0, 5.0, size=200)
        qp = np.array([0.0, 0.12, 0.0, 0.0])
        qm = np.array([0.0, -0.12, 0.0, 0.0])
        for u in torques:
            qp = step_rk4(params, qp, u, 0.002)
            qm = step_rk4(params, qm, -u, 0.002)
        assert np.max(np.abs(qp + qm)) < 1e-12

    def test_simulate_divergence_carries_time(self):
        # Unbounded torque limit and a huge torque blow the state up fast.
        p = WipParams(torque_limit=1e308)
        with np.errstate(over="ignore"), pytest.raises(DivergenceError) as exc:
            simulate(p, np.zeros(4), lambda t, q: 1e300, 0.002, 100)
        assert exc.value.time is not None and exc.value.time > 0.0


class TestApplyCase:
    @pytest.mark.parametrize("case, expect", [
        (TABLE_CASES[0], (4.05, 1.0, 1.0, 0.0)),
        (TABLE_CASES[1], (8.05, 1.3, 1.3, 0.12)),
        (TABLE_CASES[2], (14.05, 0.9, 1.1, -0.12)),
    ])
    def test_fixture_tuples(self, params, case, expect):
        p = apply_case(params, case)
        assert (p.m0, p.gear_ratio, p.friction_coeff, p.com_offset) == expect
        # everything else untouched
        assert (p.mw, p.I0, p.Iw, p.L, p.r) == (params.mw, params.I0, params.Iw,
                                                params.L, params.r)

    def test_identity_multipliers(self, params):
        from wiplab.bench import BenchmarkCase
        p = apply_case(params, BenchmarkCase("id", params.m0 + 1.0, 1.0, 1.0, 0.0))
        assert p.m0 == params.m0 + 1.0
        assert (p.gear_ratio, p.friction_coeff, p.com_offset) == (1.0, 1.0, 0.0)

    def test_invalid_lever_arm_rejected(self, params):
        from wiplab.bench import BenchmarkCase
        with pytest.raises(ParameterError):
            apply_case(params, BenchmarkCase("bad", 5.0, 1.0, 1.0, -params.L))


class TestParamValidation:
    def test_negative_mass_rejected(self):
        with pytest.raises(ParameterError):
            WipParams(m0=-1.0)

    def test_zero_gear_rejected(self):
        with pytest.raises(ParameterError):
            WipParams(gear_ratio=0.0)

    @given(st.floats(-0.27, 0.5), st.floats(0.01, 0.3))
    @settings(max_examples=30, deadline=None)
    def test_random_valid_params_have_solvable_dynamics(self, com, theta):
        p = WipParams(com_offset=com)
        xdd, thdd = accelerations(p, (0.0, theta, 0.0, 0.0), 0.0)
        assert math.isfinite(xdd) and math.isfinite(thdd)
        if theta > 1e-6:
            assert thdd > 0.0  # upright is open-loop unstable

    def test_random_draws_match_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = random_physical_params(rng)
            q = rng.uniform(-0.5, 0.5, size=4)
            u = rng.uniform(-8.0, 8.0)
            got = accelerations(p, q, u)
            want = oracle_accelerations(p, q, u)
            assert got == pytest.approx(tuple(want), rel=1e-11)
