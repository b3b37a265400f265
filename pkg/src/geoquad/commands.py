"""Reference command types consumed by the controllers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.typing import NDArray

from .so3 import E1

Array = NDArray[np.float64]


@dataclass(frozen=True)
class AttitudeReference:
    R_d: Array
    omega_d: Array
    omega_d_dot: Array


@dataclass(frozen=True)
class PositionReference:
    """Desired position with derivatives up to snap and the desired first body axis.

    ``e1d_dot``/``e1d_ddot`` are the time derivatives of the heading vector.
    """

    x: Array
    v: Array
    a: Array
    jerk: Array
    snap: Array
    e1d: Array
    e1d_dot: Array
    e1d_ddot: Array


class AttitudeCommand:
    """Time-parameterised desired attitude ``(R_d, omega_d, omega_d_dot)``."""

    def __init__(self, fn: Callable[[float], tuple[Array, Array, Array]]):
        self._fn = fn

    def at(self, t: float) -> AttitudeReference:
        R_d, w, w_dot = self._fn(t)
        return AttitudeReference(np.asarray(R_d, float), np.asarray(w, float), np.asarray(w_dot, float))

    @classmethod
    def constant(cls, R_d) -> "AttitudeCommand":
        R_d = np.array(R_d, dtype=float)
        z = np.zeros(3)
        return cls(lambda t: (R_d, z, z))


class Path:
    """Anything that yields ``derivatives(t, order) -> (order + 1, 3)`` arrays."""

    def derivatives(self, t: float, order: int = 4) -> Array:  # pragma: no cover - interface
        raise NotImplementedError


class ConstantPath(Path):
    def __init__(self, x):
        self.x = np.array(x, dtype=float)

    def derivatives(self, t: float, order: int = 4) -> Array:
        out = np.zeros((order + 1, 3))
        out[0] = self.x
        return out


HeadingFn = Callable[[float], tuple[Array, Array, Array]]


class PositionCommand:
    """Desired position path plus a heading direction ``e_1d``.

    ``heading`` is either a fixed unit vector or a callable returning
    ``(e1d, e1d_dot, e1d_ddot)``.
    """

    def __init__(self, path: Union[Path, Array, list, tuple], heading: Union[Array, HeadingFn, None] = None):
        self.path = path if isinstance(path, Path) else ConstantPath(path)
        if heading is None:
            heading = E1
        if callable(heading):
            self._heading = heading
        else:
            e = np.array(heading, dtype=float)
            e = e / np.linalg.norm(e)
            z = np.zeros(3)
            self._heading = lambda t: (e, z, z)

    def at(self, t: float) -> PositionReference:
        d = self.path.derivatives(t, 4)
        e1d, e1d_dot, e1d_ddot = self._heading(t)
        return PositionReference(d[0], d[1], d[2], d[3], d[4], e1d, e1d_dot, e1d_ddot)

    @classmethod
    def hold(cls, x, heading=None) -> "PositionCommand":
        return cls(ConstantPath(x), heading)
