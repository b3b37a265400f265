from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoquad.errors import DomainViolation, NonSkew
from geoquad.so3 import (
    E1,
    E2,
    E3,
    angular_velocity_error,
    attitude_error_vector,
    attitude_errors,
    axis_angle,
    cross,
    error_jacobian,
    exp_so3,
    feedforward_ad,
    hat,
    is_rotation,
    project_to_so3,
    psi_bounds_check,
    psi_error,
    random_rotation,
    vee,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite)
rot_vec = arrays(np.float64, 3, elements=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))


# --- hat / vee ---------------------------------------------------------------


def test_hat_of_zero_is_zero():
    assert np.array_equal(hat(np.zeros(3)), np.zeros((3, 3)))


def test_hat_known_matrix():
    expected = np.array([[0.0, -3.0, 2.0], [3.0, 0.0, -1.0], [-2.0, 1.0, 0.0]])
    assert np.array_equal(hat([1.0, 2.0, 3.0]), expected)


def test_hat_cross_identity():
    assert np.allclose(hat(E1) @ E2, E3)


@given(vec3, vec3)
def test_hat_matches_cross(v, w):
    assert np.allclose(hat(v) @ w, np.cross(v, w), atol=1e-9)
    assert np.array_equal(hat(v).T, -hat(v))


@given(vec3, vec3)
def test_fast_cross_matches_numpy(a, b):
    assert np.allclose(cross(a, b), np.cross(a, b), rtol=1e-12, atol=1e-9)


@given(vec3)
def test_vee_hat_round_trip(v):
    assert np.array_equal(vee(hat(v)), v)


@pytest.mark.parametrize("v", [(1.0, 2.0, 3.0), (0.0, 0.0, 0.0), (-0.5, 4.0, 1e-3)])
def test_vee_examples(v):
    assert np.array_equal(vee(hat(np.array(v))), np.array(v))


def test_vee_rejects_non_skew():
    with pytest.raises(NonSkew):
        vee(np.eye(3))


# --- rotations -----------------------------------------------------------------


@given(rot_vec)
def test_exp_is_rotation(phi):
    assert is_rotation(exp_so3(phi))


def test_project_restores_rotation(rng):
    R = random_rotation(rng)
    noisy = R + 1e-4 * rng.normal(size=(3, 3))
    P = project_to_so3(noisy)
    assert is_rotation(P)
    assert np.linalg.norm(P - R) < 1e-3


def test_project_fixes_reflection():
    assert is_rotation(project_to_so3(np.diag([1.0, 1.0, -1.0])))


# --- attitude errors -----------------------------------------------------------


def test_psi_identity_zero():
    assert psi_error(np.eye(3), np.eye(3)) == 0.0


def test_psi_half_turn_about_e3():
    assert psi_error(axis_angle(E3, np.pi), np.eye(3)) == pytest.approx(2.0, abs=1e-12)


def test_psi_quarter_turn_about_e2():
    angle = np.pi / 2
    # trace formula vs 1/2 (3 - (1 + 2 cos angle))
    assert psi_error(axis_angle(E2, angle), np.eye(3)) == pytest.approx(0.5 * (3 - (1 + 2 * np.cos(angle))), abs=1e-12)
    assert psi_error(axis_angle(E2, angle), np.eye(3)) == pytest.approx(1.0, abs=1e-12)


def test_error_vector_identity_zero():
    assert np.array_equal(attitude_error_vector(np.eye(3), np.eye(3)), np.zeros(3))


def test_error_vector_single_axis_is_sine():
    e = attitude_error_vector(axis_angle(E3, 0.3), np.eye(3))
    assert np.allclose(e, [0.0, 0.0, np.sin(0.3)], atol=1e-15)


def test_error_vector_vanishes_at_antipode():
    assert np.allclose(attitude_error_vector(axis_angle(E1, np.pi), np.eye(3)), 0.0, atol=1e-15)


def test_angular_velocity_error_examples():
    w = np.array([0.3, -1.0, 2.0])
    assert np.allclose(angular_velocity_error(np.eye(3), w, np.eye(3), w), 0.0)
    assert np.allclose(angular_velocity_error(np.eye(3), E1, np.eye(3), np.zeros(3)), E1)
    R = axis_angle(E3, np.pi / 2)
    expected = np.zeros(3) - R.T @ np.eye(3) @ E1
    assert np.allclose(angular_velocity_error(R, np.zeros(3), np.eye(3), E1), expected)
    assert np.allclose(expected, [0.0, 1.0, 0.0], atol=1e-15)


@given(rot_vec, rot_vec)
def test_error_identity_and_bounds(a, b):
    R, Rd = exp_so3(a), exp_so3(b)
    psi = psi_error(R, Rd)
    e_R = attitude_error_vector(R, Rd)
    assert -1e-12 <= psi <= 2.0 + 1e-12
    assert e_R @ e_R == pytest.approx((2.0 - psi) * psi, abs=1e-9)
    assert np.linalg.norm(error_jacobian(R, Rd), 2) <= 1.0 + 1e-9


def test_error_jacobian_matches_finite_differences(rng):
    R0, Rd = random_rotation(rng), random_rotation(rng)
    w = rng.normal(size=3)
    h = 1e-6
    Rp = R0 @ exp_so3(w * h)
    Rm = R0 @ exp_so3(-w * h)
    fd = (attitude_error_vector(Rp, Rd) - attitude_error_vector(Rm, Rd)) / (2 * h)
    assert np.allclose(fd, error_jacobian(R0, Rd) @ w, atol=1e-8)


def test_feedforward_zero_for_static_reference(rng):
    R = random_rotation(rng)
    assert np.allclose(feedforward_ad(R, rng.normal(size=3), np.eye(3), np.zeros(3), np.zeros(3)), 0.0)


def test_attitude_errors_dataclass(rng):
    R, Rd = random_rotation(rng), random_rotation(rng)
    err = attitude_errors(R, np.ones(3), Rd, np.zeros(3))
    assert err.psi == pytest.approx(psi_error(R, Rd))
    assert np.allclose(err.e_omega, np.ones(3))


def test_psi_bounds_check():
    assert psi_bounds_check(0.5, np.array([np.sqrt(0.75), 0, 0]), 1.0)
    with pytest.raises(DomainViolation):
        psi_bounds_check(1.5, np.zeros(3), 1.0)
    with pytest.raises(DomainViolation):
        psi_bounds_check(0.1, np.zeros(3), 2.0)


def test_random_rotation_respects_max_angle(rng):
    for _ in range(100):
        R = random_rotation(rng, max_angle=0.2)
        assert psi_error(R, np.eye(3)) <= 1 - np.cos(0.2) + 1e-12


@given(st.integers(0, 2**32 - 1))
def test_psi_rate_is_error_dot_rate_error(seed):
    rng = np.random.default_rng(seed)
    R, Rd = random_rotation(rng), random_rotation(rng)
    w = rng.normal(size=3)
    h = 1e-6
    fd = (psi_error(R @ exp_so3(w * h), Rd) - psi_error(R @ exp_so3(-w * h), Rd)) / (2 * h)
    e_w = angular_velocity_error(R, w, Rd, np.zeros(3))
    assert fd == pytest.approx(attitude_error_vector(R, Rd) @ e_w, abs=1e-7)
