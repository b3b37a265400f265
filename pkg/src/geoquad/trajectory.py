"""Reference generation: degree-8 polynomial segments, flip attitude profile and
the multi-phase flight schedules used in the simulation scenarios.

A degree-8 polynomial has nine coefficients.  Each segment matches position,
velocity, acceleration and jerk at both ends and the snap at the start (zero
for rest-to-rest moves), which fixes all nine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .commands import AttitudeCommand, Path, PositionCommand
from .errors import IllConditioned
from .so3 import E1, E2, exp_so3, hat

Array = NDArray[np.float64]

DEGREE = 8
N_COEFFS = DEGREE + 1
MAX_CONDITION = 1e12


def _deriv_row(tau: float, k: int) -> Array:
    """Row of d^k/dtau^k [tau^0 ... tau^8] evaluated at ``tau``."""
    row = np.zeros(N_COEFFS)
    for n in range(k, N_COEFFS):
        row[n] = factorial(n) / factorial(n - k) * tau ** (n - k)
    return row


def _boundary_matrix() -> Array:
    rows = [_deriv_row(0.0, k) for k in range(5)] + [_deriv_row(1.0, k) for k in range(4)]
    return np.array(rows)


_A = _boundary_matrix()
_A_COND = float(np.linalg.cond(_A))


def _as_boundary(b, n_rows: int) -> Array:
    """Pad boundary rows with zeros; 1-D input is one scalar row per derivative."""
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] > n_rows:
        raise ValueError(f"at most {n_rows} boundary rows allowed, got {b.shape[0]}")
    out = np.zeros((n_rows, b.shape[1]))
    out[: b.shape[0]] = b
    return out


@dataclass(frozen=True)
class PolynomialSegment(Path):
    """Per-axis degree-8 polynomial in normalised time ``tau = (t - t_start) / T``.

    Strictly outside ``[t_start, t_end]`` the segment holds its end value with zero
    derivatives, so ``derivatives`` is defined for every ``t``.

    Attributes:
        coeffs: ``(9, dim)`` coefficients, lowest order first.
    """

    coeffs: Array
    t_start: float
    t_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def derivatives(self, t: float, order: int = 4) -> Array:
        T = self.duration
        if t < self.t_start:
            tau, hold = 0.0, True
        elif t > self.t_end:
            tau, hold = 1.0, True
        else:
            tau, hold = (t - self.t_start) / T, False
        out = np.zeros((order + 1, self.coeffs.shape[1]))
        for k in range(order + 1):
            if k > 0 and hold:
                break
            out[k] = (_deriv_row(tau, k) @ self.coeffs) / T**k
        return out

    def __call__(self, t: float) -> Array:
        return self.derivatives(t, 0)[0]


def fit_segment(start, end, t0: float, t1: float) -> PolynomialSegment:
    """Fit a degree-8 polynomial to boundary data.

    Args:
        start: rows ``[x, x', x'', x''', x'''']`` at ``t0``, shape ``(k, dim)``;
            missing rows are zero.  A 1-D array is read as scalar rows.
        end: rows ``[x, x', x'', x''']`` at ``t1`` (missing rows are zero).
        t0, t1: segment bounds, ``t1 > t0``.

    Raises:
        IllConditioned: if the boundary system's condition number exceeds 1e12.
    """
    if not t1 > t0:
        raise ValueError("t1 must be greater than t0")
    s = _as_boundary(start, 5)
    e = _as_boundary(end, 4)
    if s.shape[1] != e.shape[1]:
        raise ValueError("start and end boundary data differ in dimension")
    if _A_COND > MAX_CONDITION:
        raise IllConditioned(f"boundary system condition number {_A_COND:.3e}")
    T = t1 - t0
    scale_s = np.array([T**k for k in range(5)])[:, None]
    scale_e = np.array([T**k for k in range(4)])[:, None]
    rhs = np.vstack([s * scale_s, e * scale_e])
    coeffs = np.linalg.solve(_A, rhs)
    return PolynomialSegment(coeffs=coeffs, t_start=float(t0), t_end=float(t1))


def rest_to_rest(x0, x1, t0: float, t1: float) -> PolynomialSegment:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    return fit_segment(x0[None, :], x1[None, :], t0, t1)


class PiecewisePath(Path):
    """Sequence of segments; before the first/after the last the ends are held."""

    def __init__(self, segments: Sequence[PolynomialSegment]):
        if not segments:
            raise ValueError("at least one segment is required")
        self.segments = list(segments)

    def derivatives(self, t: float, order: int = 4) -> Array:
        for seg in self.segments:
            if t < seg.t_end:
                return seg.derivatives(t, order)
        return self.segments[-1].derivatives(t, order)


def flip_command(
    t0: float,
    t1: float,
    axis=E2,
    total_angle: float = 2.0 * np.pi,
    R0=None,
) -> AttitudeCommand:
    """Rest-to-rest rotation by ``total_angle`` about body ``axis`` over ``[t0, t1]``.

    ``R_d(t) = R0 exp(hat(axis) phi(t))`` with a degree-8 angle profile, so
    ``omega_d = phi' axis`` and ``omega_d_dot = phi'' axis`` in the body frame.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    R0 = np.eye(3) if R0 is None else np.array(R0, dtype=float)
    profile = rest_to_rest(0.0, total_angle, t0, t1)
    K = hat(axis)
    K2 = K @ K

    def fn(t):
        d = profile.derivatives(t, 2)[:, 0]
        phi = d[0]
        R = R0 @ (np.eye(3) + np.sin(phi) * K + (1.0 - np.cos(phi)) * K2)
        return R, d[1] * axis, d[2] * axis

    cmd = AttitudeCommand(fn)
    cmd.profile = profile  # type: ignore[attr-defined]
    return cmd


# --- flight schedules ---------------------------------------------------------

Mode = Literal["attitude", "position"]


@dataclass(frozen=True)
class Refit:
    """Position command built at phase entry from the vehicle state.

    The path starts at the current position and velocity and reaches
    ``target`` at rest after ``duration`` seconds.
    """

    target: Array
    duration: float
    heading: Array = field(default_factory=lambda: E1.copy())

    def build(self, t: float, x, v) -> PositionCommand:
        start = np.zeros((5, 3))
        start[0] = x
        start[1] = v
        end = np.zeros((4, 3))
        end[0] = self.target
        seg = fit_segment(start, end, t, t + self.duration)
        return PositionCommand(seg, self.heading)


@dataclass
class Phase:
    mode: Mode
    t_start: float
    t_end: float
    position: Optional[PositionCommand] = None
    attitude: Optional[AttitudeCommand] = None
    refit: Optional[Refit] = None
    label: str = ""


@dataclass
class FlightSchedule:
    phases: list[Phase]

    def __post_init__(self):
        if not self.phases:
            raise ValueError("schedule needs at least one phase")
        for a, b in zip(self.phases, self.phases[1:]):
            if abs(a.t_end - b.t_start) > 1e-12:
                raise ValueError(f"phases are not contiguous at t={a.t_end} / {b.t_start}")
        for ph in self.phases:
            if not ph.t_end > ph.t_start:
                raise ValueError("empty phase")
            if ph.mode not in ("attitude", "position"):
                raise ValueError(f"unknown mode {ph.mode!r}")
            if ph.position is None and ph.refit is None:
                raise ValueError("every phase needs a position command or a refit rule")
            if ph.mode == "attitude" and ph.attitude is None:
                raise ValueError("attitude phase without attitude command")

    @property
    def t_start(self) -> float:
        return self.phases[0].t_start

    @property
    def t_end(self) -> float:
        return self.phases[-1].t_end

    def boundaries(self) -> list[float]:
        return [self.phases[0].t_start] + [ph.t_end for ph in self.phases]

    def index_at(self, t: float) -> int:
        for i, ph in enumerate(self.phases):
            if t < ph.t_end:
                return i
        return len(self.phases) - 1


def flip_scenario(
    waypoint=(2.0, 0.0, 5.0),
    heading=(1.0, 0.0, 0.0),
    translate_start: float = 0.5,
    translate_end: float = 5.5,
    flip_start: float = 6.0,
    flip_end: float = 7.0,
    t_final: float = 10.0,
    return_duration: float = 2.5,
    flip_axis=E2,
    flip_angle: float = 2.0 * np.pi,
) -> FlightSchedule:
    """Translate to a waypoint, flip about a body axis, then return to the waypoint.

    Phase (c) is re-fitted at the flip exit from the vehicle state.
    """
    waypoint = np.array(waypoint, dtype=float)
    heading = np.array(heading, dtype=float)
    seg = rest_to_rest(np.zeros(3), waypoint, translate_start, translate_end)
    translate = PositionCommand(seg, heading)
    flip = flip_command(flip_start, flip_end, axis=flip_axis, total_angle=flip_angle)
    return FlightSchedule(
        [
            Phase("position", 0.0, flip_start, position=translate, label="translate"),
            Phase(
                "attitude",
                flip_start,
                flip_end,
                position=PositionCommand.hold(waypoint, heading),
                attitude=flip,
                label="flip",
            ),
            Phase(
                "position",
                flip_end,
                t_final,
                refit=Refit(waypoint, min(return_duration, t_final - flip_end), heading),
                label="return",
            ),
        ]
    )


def hover_schedule(t_final: float = 1.0, x=(0.0, 0.0, 0.0)) -> FlightSchedule:
    return FlightSchedule([Phase("position", 0.0, t_final, position=PositionCommand.hold(x), label="hover")])


def attitude_step_schedule(angle: float = np.pi / 2, axis=E2, t_final: float = 2.0) -> FlightSchedule:
    """Attitude mode against a constant rotated attitude, holding the origin for thrust."""
    R_d = exp_so3(np.asarray(axis, dtype=float) / np.linalg.norm(axis) * angle)
    return FlightSchedule(
        [
            Phase(
                "attitude",
                0.0,
                t_final,
                position=PositionCommand.hold(np.zeros(3)),
                attitude=AttitudeCommand.constant(R_d),
                label="step",
            )
        ]
    )


def position_step_schedule(target=(0.01, 0.01, 0.01), t_final: float = 2.0) -> FlightSchedule:
    return FlightSchedule(
        [Phase("position", 0.0, t_final, position=PositionCommand.hold(target), label="step")]
    )
