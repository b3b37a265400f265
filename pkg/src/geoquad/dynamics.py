"""Rigid-body quadrotor model and fixed-step RK4 integrator.

Equations of motion (inertial position/velocity, body angular velocity)::

    x' = v
    m v' = -m g E3 + f R e3
    J w' = u - w x J w
    R' = R hat(w)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import NumericalBlowup, SingularInertia
from .so3 import E3, cross, hat, project_to_so3

Array = NDArray[np.float64]

BLOWUP_LIMIT = 1e9


@dataclass(frozen=True)
class QuadParams:
    """Physical parameters of the vehicle.

    Attributes:
        m: mass [kg].
        J: body inertia matrix [kg m^2].
        d: distance from the centre of mass to each rotor axis [m].
        b_T: rotor torque-to-thrust coefficient [m].
        g: gravitational acceleration [m/s^2].
    """

    m: float = 1.34
    J: Array = field(default_factory=lambda: np.diag([0.072, 0.0734, 0.1477]))
    d: float = 0.30
    b_T: float = 9.001e-3
    g: float = 9.81
    J_inv: Array = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.shape != (3, 3):
            raise ValueError("J must be 3x3")
        if self.m <= 0 or self.d <= 0 or self.b_T <= 0:
            raise ValueError("m, d and b_T must be strictly positive")
        if np.linalg.norm(J - J.T) > 1e-12 * max(1.0, np.linalg.norm(J)):
            raise ValueError("J must be symmetric")
        eig = np.linalg.eigvalsh(J)
        if eig[0] <= 0.0:
            raise SingularInertia(f"J is not positive definite (eigenvalues {eig})")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_inv", np.linalg.inv(J))


@dataclass(frozen=True)
class RigidBodyState:
    x: Array
    v: Array
    R: Array
    omega: Array

    @classmethod
    def at_rest(cls, x=(0.0, 0.0, 0.0), R=None) -> "RigidBodyState":
        return cls(
            x=np.array(x, dtype=float),
            v=np.zeros(3),
            R=np.eye(3) if R is None else np.array(R, dtype=float),
            omega=np.zeros(3),
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.x))
            and np.all(np.isfinite(self.v))
            and np.all(np.isfinite(self.R))
            and np.all(np.isfinite(self.omega))
        )


@dataclass(frozen=True)
class ControlOutput:
    """Total thrust ``f`` [N], body moment ``u`` [N m] and rotor thrusts ``F`` [N]."""

    f: float
    u: Array
    F: Array


@dataclass(frozen=True)
class StateDerivative:
    x_dot: Array
    v_dot: Array
    R_dot: Array
    omega_dot: Array


def _deriv(v, R, omega, f, u, p: QuadParams):
    v_dot = (f / p.m) * R[:, 2] - p.g * E3
    omega_dot = p.J_inv @ (u - cross(omega, p.J @ omega))
    R_dot = R @ hat(omega)
    return v, v_dot, R_dot, omega_dot


def state_derivative(s: RigidBodyState, c: ControlOutput, p: QuadParams) -> StateDerivative:
    x_dot, v_dot, R_dot, omega_dot = _deriv(s.v, s.R, s.omega, float(c.f), np.asarray(c.u, float), p)
    return StateDerivative(x_dot=x_dot, v_dot=v_dot, R_dot=R_dot, omega_dot=omega_dot)


def step(s: RigidBodyState, c: ControlOutput, p: QuadParams, dt: float) -> RigidBodyState:
    """Advance one classical RK4 step with the control held constant.

    ``R`` is projected back onto SO(3) after the step.

    Raises:
        NumericalBlowup: if any component is non-finite or exceeds 1e9.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = float(c.f)
    u = np.asarray(c.u, dtype=float)
    x, v, R, w = s.x, s.v, s.R, s.omega

    k1 = _deriv(v, R, w, f, u, p)
    h = 0.5 * dt
    k2 = _deriv(v + h * k1[1], R + h * k1[2], w + h * k1[3], f, u, p)
    k3 = _deriv(v + h * k2[1], R + h * k2[2], w + h * k2[3], f, u, p)
    k4 = _deriv(v + dt * k3[1], R + dt * k3[2], w + dt * k3[3], f, u, p)
    c6 = dt / 6.0
    x_n = x + c6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    v_n = v + c6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    R_n = R + c6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    w_n = w + c6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

    # NaN fails the comparison, so one test covers both cases
    if not np.abs(np.concatenate((x_n, v_n, w_n, R_n.ravel()))).max() <= BLOWUP_LIMIT:
        raise NumericalBlowup("state left the finite range")
    R_n = project_to_so3(R_n)
    return RigidBodyState(x=x_n, v=v_n, R=R_n, omega=w_n)
