from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoquad import ControlOutput, QuadParams, RigidBodyState, step
from geoquad.dynamics import state_derivative
from geoquad.errors import NumericalBlowup, SingularInertia
from geoquad.so3 import E3, axis_angle, is_rotation, random_rotation

ZERO_U = np.zeros(3)


def free_spin(p: QuadParams, s: RigidBodyState, dt: float, n: int) -> RigidBodyState:
    c = ControlOutput(0.0, ZERO_U, None)
    for _ in range(n):
        s = step(s, c, p, dt)
    return s


def test_default_params():
    p = QuadParams()
    assert p.m == 1.34
    assert np.allclose(np.diag(p.J), [0.072, 0.0734, 0.1477])
    assert np.allclose(p.J @ p.J_inv, np.eye(3))


def test_params_reject_indefinite_inertia():
    with pytest.raises(SingularInertia):
        QuadParams(J=np.diag([0.1, 0.1, -0.1]))
    with pytest.raises(ValueError):
        QuadParams(m=0.0)
    with pytest.raises(ValueError):
        QuadParams(J=np.array([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))


def test_hover_is_an_equilibrium(params):
    s = RigidBodyState.at_rest((1.0, 2.0, 3.0))
    c = ControlOutput(params.m * params.g, ZERO_U, None)
    for _ in range(1000):
        s = step(s, c, params, 1e-3)
    assert np.allclose(s.x, [1.0, 2.0, 3.0], atol=1e-12)
    assert np.allclose(s.v, 0.0, atol=1e-12)
    assert np.allclose(s.R, np.eye(3), atol=1e-12)


def test_free_fall_is_exact(params):
    s = RigidBodyState.at_rest()
    c = ControlOutput(0.0, ZERO_U, None)
    for _ in range(500):
        s = step(s, c, params, 2e-3)
    # RK4 integrates the quadratic exactly
    assert s.x[2] == pytest.approx(-0.5 * params.g * 1.0**2, rel=1e-12)
    assert s.v[2] == pytest.approx(-params.g * 1.0, rel=1e-12)


def test_derivative_matches_model(params, rng):
    R = random_rotation(rng)
    w = rng.normal(size=3)
    s = RigidBodyState(np.zeros(3), np.ones(3), R, w)
    u = rng.normal(size=3)
    d = state_derivative(s, ControlOutput(7.0, u, None), params)
    assert np.allclose(d.x_dot, np.ones(3))
    assert np.allclose(d.v_dot, 7.0 / params.m * R @ E3 - params.g * E3)
    assert np.allclose(params.J @ d.omega_dot + np.cross(w, params.J @ w), u)


@settings(max_examples=30)
@given(arrays(np.float64, 3, elements=st.floats(-3.0, 3.0)))
def test_torque_free_energy_and_momentum(w0):
    p = QuadParams()
    s = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), w0)
    E0 = 0.5 * w0 @ p.J @ w0
    L0 = s.R @ p.J @ w0
    s = free_spin(p, s, 1e-3, 500)
    E1 = 0.5 * s.omega @ p.J @ s.omega
    L1 = s.R @ p.J @ s.omega
    scale = max(1.0, E0)
    assert abs(E1 - E0) <= 1e-6 * scale
    assert np.linalg.norm(L1 - L0) <= 1e-6 * max(1.0, np.linalg.norm(L0))
    assert is_rotation(s.R)


def test_rk4_is_fourth_order(params):
    w0 = np.array([2.0, -1.5, 1.0])
    s0 = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), w0)
    ref = free_spin(params, s0, 1.25e-4, 8000)

    def err(dt):
        s = free_spin(params, s0, dt, int(round(1.0 / dt)))
        return np.linalg.norm(s.omega - ref.omega)

    e1, e2 = err(0.02), err(0.01)
    order = np.log2(e1 / e2)
    assert 3.5 < order < 4.6


def test_stays_on_so3_over_long_runs(params):
    s = RigidBodyState(np.zeros(3), np.zeros(3), axis_angle(E3, 0.3), np.array([5.0, -3.0, 8.0]))
    s = free_spin(params, s, 1e-3, 5000)
    assert np.linalg.norm(s.R.T @ s.R - np.eye(3)) < 1e-12
    assert np.linalg.det(s.R) == pytest.approx(1.0, abs=1e-12)


def test_blowup_raises(params):
    s = RigidBodyState(np.zeros(3), np.array([2e9, 0, 0]), np.eye(3), np.zeros(3))
    with pytest.raises(NumericalBlowup):
        step(s, ControlOutput(0.0, ZERO_U, None), params, 1e-3)
    s = RigidBodyState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
    with pytest.raises(NumericalBlowup):
        step(s, ControlOutput(np.nan, ZERO_U, None), params, 1e-3)


def test_step_rejects_bad_dt(params):
    with pytest.raises(ValueError):
        step(RigidBodyState.at_rest(), ControlOutput(0.0, ZERO_U, None), params, 0.0)


def test_state_is_finite():
    assert RigidBodyState.at_rest().is_finite()
    assert not RigidBodyState(np.array([np.nan, 0, 0]), np.zeros(3), np.eye(3), np.zeros(3)).is_finite()
