"""Surface-based attitude/position controllers and the benchmark baseline.

Attitude mode drives the surface ``s_R = k_R e_R + k_omega e_omega`` to zero;
with the moment law below the closed loop satisfies ``s_R' = -eta k_omega s_R``.
Position mode builds a required force ``U`` from the position surface
``s_x = k_x e_x + k_v e_v``, takes the thrust as its projection on the body
``e3`` axis and tracks the attitude ``R_x`` whose third axis is ``U/|U|``.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .commands import (  # noqa: F401  (re-exported)
    AttitudeCommand,
    AttitudeReference,
    PositionCommand,
    PositionReference,
)
from .dynamics import QuadParams, RigidBodyState
from .errors import DegenerateThrustDirection, HeadingParallel, OutsideL2
from .so3 import (
    E3,
    cross,
    angular_velocity_error,
    attitude_error_vector,
    error_jacobian,
    feedforward_ad,
    hat,
    psi_error,
    skew_part,
)

Array = NDArray[np.float64]

EPS_DEN = 1e-6
EPS_PAR = 1e-4


@dataclass(frozen=True)
class GainSet:
    """Controller and allocation gains; defaults are the reference tuning."""

    eta: float = 0.809261
    k_R: float = 5625.0
    k_omega: float = 150.0
    a: float = 0.5540514
    k_x: float = 900.0
    k_v: float = 60.0
    k_xi: float = 0.0028
    iota: Array = field(default_factory=lambda: np.array([1.0, 1.0, 2.3]))
    k_h1: float = 2.0
    k_h2: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "iota", np.array(self.iota, dtype=float))
        scalars = (self.eta, self.k_R, self.k_omega, self.a, self.k_x, self.k_v, self.k_xi, self.k_h1, self.k_h2)
        if min(scalars) <= 0 or np.any(self.iota <= 0):
            raise ValueError("all gains must be strictly positive")


@dataclass(frozen=True)
class BenchmarkGains:
    """Matrix attitude gains and scalar position gains of the baseline tracking controller."""

    k_R: Array = field(default_factory=lambda: np.diag([259.2, 264.24, 531.72]))
    k_omega: Array = field(default_factory=lambda: np.diag([8.64, 8.808, 17.724]))
    k_x: float = 501.977
    k_v: float = 51.871

    def __post_init__(self):
        for name in ("k_R", "k_omega"):
            M = np.array(getattr(self, name), dtype=float)
            if M.ndim == 1:
                M = np.diag(M)
            object.__setattr__(self, name, M)
        if self.k_x <= 0 or self.k_v <= 0:
            raise ValueError("all gains must be strictly positive")


# --- attitude mode -----------------------------------------------------------


def attitude_surface(e_R, e_omega, gains: GainSet) -> Array:
    return gains.k_R * np.asarray(e_R, float) + gains.k_omega * np.asarray(e_omega, float)


@dataclass(frozen=True)
class AttitudeControlResult:
    u: Array
    psi: float
    e_R: Array
    e_omega: Array
    s_R: Array


def surface_moment(
    R, omega, R_d, omega_d, omega_d_dot, gains: GainSet, p: QuadParams, warn: bool = True
) -> AttitudeControlResult:
    """Moment ``u = w x Jw - J((k_R/k_w) E e_w + a_d + eta s_R)`` against ``(R_d, omega_d)``."""
    psi = psi_error(R, R_d)
    if warn and psi >= 2.0:
        warnings.warn(f"attitude error Psi={psi:.6f} left the domain Psi < 2", OutsideL2, stacklevel=3)
    e_R = attitude_error_vector(R, R_d)
    e_w = angular_velocity_error(R, omega, R_d, omega_d)
    s_R = gains.k_R * e_R + gains.k_omega * e_w
    e_R_dot = error_jacobian(R, R_d) @ e_w
    a_d = feedforward_ad(R, omega, R_d, omega_d, omega_d_dot)
    u = cross(omega, p.J @ omega) - p.J @ ((gains.k_R / gains.k_omega) * e_R_dot + a_d + gains.eta * s_R)
    return AttitudeControlResult(u=u, psi=psi, e_R=e_R, e_omega=e_w, s_R=s_R)


def attitude_control(s: RigidBodyState, cmd, gains: GainSet, p: QuadParams, t: float = 0.0) -> Array:
    """Body moment of the surface-based attitude controller.

    ``cmd`` is an :class:`AttitudeReference` or an :class:`AttitudeCommand`
    sampled at ``t``.  Emits :class:`OutsideL2` (a warning) when ``Psi >= 2``.
    """
    ref = cmd.at(t) if isinstance(cmd, AttitudeCommand) else cmd
    return surface_moment(s.R, s.omega, ref.R_d, ref.omega_d, ref.omega_d_dot, gains, p).u


# --- position mode -----------------------------------------------------------


@dataclass(frozen=True)
class PositionErrorState:
    e_x: Array
    e_v: Array
    s_x: Array


def position_errors(s: RigidBodyState, ref: PositionReference, gains: GainSet) -> PositionErrorState:
    e_x = s.x - ref.x
    e_v = s.v - ref.v
    return PositionErrorState(e_x=e_x, e_v=e_v, s_x=gains.k_x * e_x + gains.k_v * e_v)


def required_force(s: RigidBodyState, ref: PositionReference, gains: GainSet, p: QuadParams) -> Array:
    """``U = m g E3 - m (k_x/k_v) e_v - a s_x + m x_d''``."""
    err = position_errors(s, ref, gains)
    return p.m * p.g * E3 - p.m * (gains.k_x / gains.k_v) * err.e_v - gains.a * err.s_x + p.m * ref.a


def _force_jet(s: RigidBodyState, ref: PositionReference, alpha: float, beta: float, p: QuadParams):
    """Jet ``(U, U', U'')`` of ``U = m g E3 + m x_d'' - alpha e_x - beta e_v`` along the flow.

    The thrust is ``f = U . R e3``; its rate follows from the current body rate,
    so the derivatives are exact for the continuous-time closed loop.
    """
    e_x = s.x - ref.x
    e_v = s.v - ref.v
    b3 = s.R[:, 2]
    U = p.m * p.g * E3 + p.m * ref.a - alpha * e_x - beta * e_v
    f = float(U @ b3)
    b3_dot = s.R @ cross(s.omega, E3)
    v_dot = (f / p.m) * b3 - p.g * E3
    e_v_dot = v_dot - ref.a
    U_dot = p.m * ref.jerk - alpha * e_v - beta * e_v_dot
    f_dot = float(U_dot @ b3 + U @ b3_dot)
    v_ddot = (f_dot * b3 + f * b3_dot) / p.m
    e_v_ddot = v_ddot - ref.jerk
    U_ddot = p.m * ref.snap - alpha * e_v_dot - beta * e_v_ddot
    return U, U_dot, U_ddot


def _normalize_jet(n, n_dot, n_ddot):
    r = float(np.linalg.norm(n))
    b = n / r
    r_dot = float(b @ n_dot)
    r_ddot = (float(n_dot @ n_dot) + float(n @ n_ddot)) / r - r_dot**2 / r
    b_dot = n_dot / r - n * r_dot / r**2
    b_ddot = n_ddot / r - 2.0 * n_dot * r_dot / r**2 - n * r_ddot / r**2 + 2.0 * n * r_dot**2 / r**3
    return b, b_dot, b_ddot


def _cross_jet(a, a_dot, a_ddot, b, b_dot, b_ddot):
    c = cross(a, b)
    c_dot = cross(a_dot, b) + cross(a, b_dot)
    c_ddot = cross(a_ddot, b) + 2.0 * cross(a_dot, b_dot) + cross(a, b_ddot)
    return c, c_dot, c_ddot


def induced_attitude(U, U_dot, U_ddot, e1d, e1d_dot, e1d_ddot, eps_den: float = EPS_DEN, eps_par: float = EPS_PAR):
    """Attitude ``[e1h, e3x x e1h, e3x]`` with ``e3x = U/|U|`` and its body rate/acceleration.

    Raises:
        DegenerateThrustDirection: if ``|U| < eps_den``.
        HeadingParallel: if ``e1d`` is within ``eps_par`` rad of ``+-e3x``.
    """
    if np.linalg.norm(U) < eps_den:
        raise DegenerateThrustDirection(f"|U| = {np.linalg.norm(U):.3e} N is below {eps_den}")
    b3 = _normalize_jet(U, U_dot, U_ddot)
    if np.linalg.norm(cross(b3[0], e1d)) < np.sin(eps_par):
        raise HeadingParallel("desired heading is parallel to the thrust direction")
    c = _cross_jet(*b3, e1d, e1d_dot, e1d_ddot)
    e1h = _normalize_jet(*_cross_jet(*c, *b3))
    b2 = _cross_jet(*b3, *e1h)
    R = np.column_stack([e1h[0], b2[0], b3[0]])
    R_dot = np.column_stack([e1h[1], b2[1], b3[1]])
    R_ddot = np.column_stack([e1h[2], b2[2], b3[2]])
    W = skew_part(R.T @ R_dot)
    omega = np.array([W[2, 1], W[0, 2], W[1, 0]])
    Wd = skew_part(R.T @ R_ddot - hat(omega) @ hat(omega))
    omega_dot = np.array([Wd[2, 1], Wd[0, 2], Wd[1, 0]])
    return R, omega, omega_dot


def position_induced_attitude(s: RigidBodyState, cmd, gains: GainSet, p: QuadParams, t: float = 0.0):
    """``(R_x, omega_x, omega_x_dot)`` for the proposed position controller (analytic rates)."""
    ref = cmd.at(t) if isinstance(cmd, PositionCommand) else cmd
    alpha = gains.a * gains.k_x
    beta = p.m * gains.k_x / gains.k_v + gains.a * gains.k_v
    jet = _force_jet(s, ref, alpha, beta, p)
    return induced_attitude(*jet, ref.e1d, ref.e1d_dot, ref.e1d_ddot)


def position_control(s: RigidBodyState, cmd, gains: GainSet, p: QuadParams, t: float = 0.0):
    """Stateless ``(f, u)`` of the proposed position controller."""
    ref = cmd.at(t) if isinstance(cmd, PositionCommand) else cmd
    R_x, w_x, w_x_dot = position_induced_attitude(s, ref, gains, p)
    U = required_force(s, ref, gains, p)
    f = float(U @ s.R[:, 2])
    u = surface_moment(s.R, s.omega, R_x, w_x, w_x_dot, gains, p).u
    return f, u


RateMode = Literal["analytic", "finite_difference"]


class _FiniteDifferenceRates:
    """Second-order backward differences of ``R_x`` and ``omega_x`` across controller calls.

    The first two calls after a reset return zero rates.
    """

    def __init__(self, dt: float):
        self.dt = dt
        self.reset()

    def reset(self):
        self._R = deque(maxlen=3)
        self._w = deque(maxlen=3)

    def __call__(self, R_x: Array):
        self._R.append(R_x)
        if len(self._R) < 3:
            w = np.zeros(3)
        else:
            R2, R1, R0 = self._R[0], self._R[1], self._R[2]
            R_dot = (3.0 * R0 - 4.0 * R1 + R2) / (2.0 * self.dt)
            W = skew_part(R0.T @ R_dot)
            w = np.array([W[2, 1], W[0, 2], W[1, 0]])
            self._w.append(w)
        if len(self._w) < 3:
            w_dot = np.zeros(3)
        else:
            w_dot = (3.0 * self._w[2] - 4.0 * self._w[1] + self._w[0]) / (2.0 * self.dt)
        return w, w_dot


@dataclass(frozen=True)
class PositionControlResult:
    f: float
    u: Array
    U: Array
    R_x: Array
    omega_x: Array
    omega_x_dot: Array
    attitude: AttitudeControlResult
    errors: PositionErrorState


class PositionController:
    """Proposed position controller with a selectable source for ``omega_x``.

    ``rate_mode="analytic"`` differentiates ``R_x`` through the force jet;
    ``"finite_difference"`` differences ``R_x`` across calls spaced ``dt``
    apart, which makes the instance single-owner.
    """

    def __init__(self, gains: GainSet, params: QuadParams, rate_mode: RateMode = "analytic", dt: float | None = None):
        if rate_mode not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown rate_mode {rate_mode!r}")
        if rate_mode == "finite_difference" and not dt:
            raise ValueError("finite_difference rates need dt")
        self.gains = gains
        self.params = params
        self.rate_mode = rate_mode
        self._fd = _FiniteDifferenceRates(dt) if rate_mode == "finite_difference" else None

    def reset(self):
        if self._fd is not None:
            self._fd.reset()

    def __call__(self, s: RigidBodyState, ref: PositionReference) -> PositionControlResult:
        g, p = self.gains, self.params
        err = position_errors(s, ref, g)
        U = p.m * p.g * E3 - p.m * (g.k_x / g.k_v) * err.e_v - g.a * err.s_x + p.m * ref.a
        if self._fd is None:
            R_x, w_x, w_x_dot = position_induced_attitude(s, ref, g, p)
        else:
            z = np.zeros(3)
            R_x, _, _ = induced_attitude(U, z, z, ref.e1d, z, z)
            w_x, w_x_dot = self._fd(R_x)
        att = surface_moment(s.R, s.omega, R_x, w_x, w_x_dot, g, p)
        return PositionControlResult(
            f=float(U @ s.R[:, 2]),
            u=att.u,
            U=U,
            R_x=R_x,
            omega_x=w_x,
            omega_x_dot=w_x_dot,
            attitude=att,
            errors=err,
        )


# --- benchmark ---------------------------------------------------------------


def benchmark_moment(R, omega, R_d, omega_d, omega_d_dot, gains: BenchmarkGains, p: QuadParams) -> Array:
    """``u = -K_R e_R - K_w e_w + w x Jw - J a_d`` with matrix gains."""
    e_R = attitude_error_vector(R, R_d)
    e_w = angular_velocity_error(R, omega, R_d, omega_d)
    a_d = feedforward_ad(R, omega, R_d, omega_d, omega_d_dot)
    return -gains.k_R @ e_R - gains.k_omega @ e_w + cross(omega, p.J @ omega) - p.J @ a_d


def benchmark_force(s: RigidBodyState, ref: PositionReference, gains: BenchmarkGains, p: QuadParams) -> Array:
    """``A = -k_x e_x - k_v e_v + m g E3 + m x_d''`` (inertial z axis up)."""
    return -gains.k_x * (s.x - ref.x) - gains.k_v * (s.v - ref.v) + p.m * p.g * E3 + p.m * ref.a


def benchmark_control(s: RigidBodyState, cmd, gains: BenchmarkGains, p: QuadParams, t: float = 0.0):
    """Baseline ``(f, u)``.

    ``cmd`` may be a position command/reference (position mode) or an
    attitude command/reference (attitude mode, returns ``f = 0``).
    """
    if isinstance(cmd, AttitudeCommand):
        cmd = cmd.at(t)
    if isinstance(cmd, AttitudeReference):
        return 0.0, benchmark_moment(s.R, s.omega, cmd.R_d, cmd.omega_d, cmd.omega_d_dot, gains, p)
    ref = cmd.at(t) if isinstance(cmd, PositionCommand) else cmd
    res = benchmark_position(s, ref, gains, p)
    return res.f, res.u


@dataclass(frozen=True)
class BenchmarkPositionResult:
    f: float
    u: Array
    R_c: Array
    omega_c: Array


def benchmark_position(s: RigidBodyState, ref: PositionReference, gains: BenchmarkGains, p: QuadParams):
    """Baseline position mode, returning the commanded attitude alongside ``(f, u)``."""
    U, U_dot, U_ddot = _force_jet(s, ref, gains.k_x, gains.k_v, p)
    R_c, w_c, w_c_dot = induced_attitude(U, U_dot, U_ddot, ref.e1d, ref.e1d_dot, ref.e1d_ddot)
    u = benchmark_moment(s.R, s.omega, R_c, w_c, w_c_dot, gains, p)
    return BenchmarkPositionResult(f=float(U @ s.R[:, 2]), u=u, R_c=R_c, omega_c=w_c)
