"""Rotation-group primitives and attitude tracking errors on SO(3).

Rotations are plain ``(3, 3)`` float arrays mapping body-frame vectors to the
inertial frame.  Angular velocities are expressed in the body frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DomainViolation, NonSkew

Array = NDArray[np.float64]

#: Orthonormality / skewness tolerance (Frobenius norm).
ORTHO_TOL = 1e-9

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def cross(a, b) -> Array:
    """Cross product of two 3-vectors (``np.cross`` is slow on tiny inputs)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def hat(v) -> Array:
    """Map a 3-vector to the skew matrix with ``hat(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(M, tol: float = ORTHO_TOL) -> Array:
    """Inverse of :func:`hat`.

    Raises:
        NonSkew: if ``M + M.T`` exceeds ``tol`` in Frobenius norm.
    """
    M = np.asarray(M, dtype=float)
    if np.linalg.norm(M + M.T) > tol:
        raise NonSkew(f"matrix is not skew-symmetric (|M + M^T| = {np.linalg.norm(M + M.T):.3e})")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def skew_part(M) -> Array:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M - M.T)


def is_rotation(R, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(np.linalg.norm(R.T @ R - np.eye(3)) <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def exp_so3(phi) -> Array:
    """Rodrigues formula: rotation by ``|phi|`` about ``phi / |phi|``."""
    phi = np.asarray(phi, dtype=float)
    theta = float(np.linalg.norm(phi))
    K = hat(phi)
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return (
        np.eye(3)
        + (np.sin(theta) / theta) * K
        + ((1.0 - np.cos(theta)) / theta**2) * (K @ K)
    )


def axis_angle(axis, angle: float) -> Array:
    axis = np.asarray(axis, dtype=float)
    return exp_so3(axis / np.linalg.norm(axis) * angle)


def project_to_so3(M) -> Array:
    """Closest rotation to ``M`` in Frobenius norm (polar projection)."""
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0.0:
        U[:, -1] = -U[:, -1]
        R = U @ Vt
    return R


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi) -> Array:
    """Sample an axis uniformly on the sphere and an angle uniformly on ``[0, max_angle)``."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return exp_so3(axis * rng.uniform(0.0, max_angle))


# --- attitude errors ---------------------------------------------------------


def psi_error(R, Rd) -> float:
    """Attitude error function ``1/2 tr[I - Rd^T R]``."""
    return 0.5 * (3.0 - float(np.sum(np.asarray(Rd) * np.asarray(R))))


def attitude_error_vector(R, Rd) -> Array:
    """``e_R = 1/2 vee(Rd^T R - R^T Rd)``."""
    M = np.asarray(Rd).T @ np.asarray(R)
    return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def angular_velocity_error(R, omega, Rd, omega_d) -> Array:
    """``e_omega = omega - R^T Rd omega_d``."""
    return np.asarray(omega, dtype=float) - np.asarray(R).T @ (np.asarray(Rd) @ np.asarray(omega_d))


def error_jacobian(R, Rd) -> Array:
    """Matrix ``E`` with ``d/dt e_R = E e_omega``: ``1/2 (tr[R^T Rd] I - R^T Rd)``."""
    M = np.asarray(R).T @ np.asarray(Rd)
    E = -0.5 * M
    tr = 0.5 * (M[0, 0] + M[1, 1] + M[2, 2])
    E[0, 0] += tr
    E[1, 1] += tr
    E[2, 2] += tr
    return E


def feedforward_ad(R, omega, Rd, omega_d, omega_d_dot) -> Array:
    """``a_d = hat(omega) R^T Rd omega_d - R^T Rd omega_d_dot``."""
    M = np.asarray(R).T @ np.asarray(Rd)
    return cross(omega, M @ omega_d) - M @ np.asarray(omega_d_dot, dtype=float)


def psi_bounds_check(psi: float, e_R, psi_cap: float, tol: float = 1e-9) -> bool:
    """Check ``1/2 |e_R|^2 <= psi <= |e_R|^2 / (2 - psi_cap)``.

    The upper bound only holds while ``psi < psi_cap < 2``.

    Raises:
        DomainViolation: if ``psi >= psi_cap`` or ``psi_cap >= 2``.
    """
    if not psi_cap < 2.0:
        raise DomainViolation(f"psi_cap must be < 2, got {psi_cap}")
    if psi >= psi_cap:
        raise DomainViolation(f"psi={psi} is not below psi_cap={psi_cap}")
    n2 = float(np.dot(e_R, e_R))
    return 0.5 * n2 <= psi + tol and psi <= n2 / (2.0 - psi_cap) + tol


@dataclass(frozen=True)
class AttitudeErrorState:
    psi: float
    e_R: Array
    e_omega: Array


def attitude_errors(R, omega, Rd, omega_d) -> AttitudeErrorState:
    return AttitudeErrorState(
        psi=psi_error(R, Rd),
        e_R=attitude_error_vector(R, Rd),
        e_omega=angular_velocity_error(R, omega, Rd, omega_d),
    )
