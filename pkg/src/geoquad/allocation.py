"""Rotor thrust allocation.

Position mode inverts the 4x4 mixer.  Attitude mode realises the moment with
the pseudoinverse of the 3x4 moment map and spends the remaining (collective)
degree of freedom on a vector ``xi`` projected into its null space::

    F = A# u + (I - A# A) xi
    xi = integral(-grad H(F)) + M^-1 [f_p, 0, 0, 0]

The barrier ``H`` grows without bound at the rotor limits, so the integral
term steers the collective away from them, while the ``f_p`` term asks for a
collective thrust that holds the desired position when the limits allow.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .commands import PositionReference
from .controllers import GainSet, position_errors
from .dynamics import QuadParams, RigidBodyState
from .errors import OutOfBarrierDomain
from .so3 import E3

Array = NDArray[np.float64]


def mixer_matrix(p: QuadParams) -> tuple[Array, Array]:
    """Map ``F -> (f, u1, u2, u3)`` and its inverse."""
    d, b = p.d, p.b_T
    M = np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [0.0, d, 0.0, -d],
            [-d, 0.0, d, 0.0],
            [-b, b, -b, b],
        ]
    )
    return M, np.linalg.inv(M)


def moment_matrix(p: QuadParams) -> Array:
    return mixer_matrix(p)[0][1:]


def moment_pseudoinverse(p: QuadParams) -> Array:
    """Right inverse ``A^T (A A^T)^-1`` of the moment rows."""
    A = moment_matrix(p)
    return A.T @ np.linalg.inv(A @ A.T)


def null_space_projector(p: QuadParams) -> Array:
    A = moment_matrix(p)
    return np.eye(4) - moment_pseudoinverse(p) @ A


def position_mode_thrusts(f: float, u, p: QuadParams) -> Array:
    return mixer_matrix(p)[1] @ np.concatenate([[f], np.asarray(u, dtype=float)])


@dataclass(frozen=True)
class AllocationConfig:
    """Rotor limits and null-space task settings.

    Attributes:
        f_idl: barrier minimum; ``None`` means the hover share ``m g / 4``.
        gradient_step: accumulation step; ``None`` uses the simulation step.
        gradient_sign: ``-1`` descends the barrier (pushes thrusts toward
            ``f_idl``); ``+1`` ascends it.
        g_clamp: bound on each gradient component [N/s]; thrusts outside the
            barrier domain get ``+-g_clamp`` pointing back inside.
    """

    f_min: float = 0.0
    f_max: float = 20.0
    f_idl: Optional[float] = None
    k_h1: float = 2.0
    k_h2: float = 3.0
    k_xi: float = 0.0028
    iota: Array = field(default_factory=lambda: np.array([1.0, 1.0, 2.3]))
    gradient_step: Optional[float] = None
    gradient_sign: float = -1.0
    g_clamp: float = 1e4

    def __post_init__(self):
        object.__setattr__(self, "iota", np.array(self.iota, dtype=float))
        if self.f_idl is not None and not (0.0 <= self.f_min < self.f_idl < self.f_max):
            raise ValueError("need 0 <= f_min < f_idl < f_max")
        if not (0.0 <= self.f_min < self.f_max):
            raise ValueError("need 0 <= f_min < f_max")

    def resolved(self, p: QuadParams) -> "AllocationConfig":
        """Copy with ``f_idl`` filled in from the hover share."""
        if self.f_idl is not None:
            return self
        return replace(self, f_idl=p.m * p.g / 4.0)

    @classmethod
    def from_gains(cls, gains: GainSet, **kw) -> "AllocationConfig":
        return cls(k_h1=gains.k_h1, k_h2=gains.k_h2, k_xi=gains.k_xi, iota=gains.iota, **kw)


def _require_idle(cfg: AllocationConfig) -> float:
    if cfg.f_idl is None:
        raise ValueError("f_idl is unresolved; call cfg.resolved(params) first")
    return cfg.f_idl


def _check_domain(F: Array, cfg: AllocationConfig) -> Array:
    a = np.abs(F)
    if np.any(a <= cfg.f_min) or np.any(a >= cfg.f_max):
        raise OutOfBarrierDomain(f"thrusts {F} outside ({cfg.f_min}, {cfg.f_max})")
    return a


def barrier_value(F, cfg: AllocationConfig) -> float:
    """``H(F) = sum h(f_i)``.

    ``h`` is ``k_h1 tan^2(pi (|f| - f_idl) / (2 (f_idl - f_min)))`` up to the
    idle thrust and ``k_h2/2 (|f| - f_idl)^2 + (|f| - f_idl)^2 / (f_max - |f|)``
    above it.
    """
    f_idl = _require_idle(cfg)
    a = _check_domain(np.asarray(F, dtype=float), cfg)
    e = a - f_idl
    low = cfg.k_h1 * np.tan(np.pi * e / (2.0 * (f_idl - cfg.f_min))) ** 2
    high = 0.5 * cfg.k_h2 * e**2 + e**2 / (cfg.f_max - a)
    return float(np.sum(np.where(a <= f_idl, low, high)))


def _gradient_abs(a: Array, cfg: AllocationConfig, f_idl: float) -> Array:
    """``dh/d|f|`` on the interior."""
    e = a - f_idl
    c = np.pi / (2.0 * (f_idl - cfg.f_min))
    with np.errstate(all="ignore"):
        tn = np.tan(c * e)
        low = 2.0 * cfg.k_h1 * tn * (1.0 + tn**2) * c
        gap = cfg.f_max - a
        high = cfg.k_h2 * e + 2.0 * e / gap + e**2 / gap**2
    return np.where(a <= f_idl, low, high)


def barrier_gradient(F, cfg: AllocationConfig) -> Array:
    """Component-wise ``dh/df_i``.

    Raises:
        OutOfBarrierDomain: if any ``|f_i|`` is outside ``(f_min, f_max)``.
    """
    F = np.asarray(F, dtype=float)
    f_idl = _require_idle(cfg)
    a = _check_domain(F, cfg)
    return np.sign(F) * _gradient_abs(a, cfg, f_idl)


def clamped_barrier_gradient(F, cfg: AllocationConfig) -> Array:
    """Barrier gradient bounded by ``g_clamp``; never raises.

    A thrust at or below ``f_min`` (negative thrusts included) gets
    ``-g_clamp`` and one at or above ``f_max`` gets ``+g_clamp``, the signs
    of the nearby poles.
    """
    F = np.asarray(F, dtype=float)
    f_idl = _require_idle(cfg)
    inside = (F > cfg.f_min) & (F < cfg.f_max)
    g = np.where(inside, _gradient_abs(np.where(inside, F, f_idl), cfg, f_idl), 0.0)
    g = np.where(F <= cfg.f_min, -cfg.g_clamp, g)
    g = np.where(F >= cfg.f_max, cfg.g_clamp, g)
    return np.clip(g, -cfg.g_clamp, cfg.g_clamp)


def secondary_thrust_fp(
    s: RigidBodyState,
    ref: PositionReference,
    gains: GainSet,
    p: QuadParams,
    k_xi: Optional[float] = None,
    iota=None,
) -> float:
    """``f_p = (diag(iota) (m g E3 - m (k_x/k_v) e_v - k_xi s_x + m x_d''))^T R e3``."""
    k_xi = gains.k_xi if k_xi is None else k_xi
    iota = gains.iota if iota is None else np.asarray(iota, dtype=float)
    err = position_errors(s, ref, gains)
    U = p.m * p.g * E3 - p.m * (gains.k_x / gains.k_v) * err.e_v - k_xi * err.s_x + p.m * ref.a
    return float((iota * U) @ s.R[:, 2])


@dataclass(frozen=True)
class AllocatorState:
    """Running integral of the barrier gradient and the last realised thrusts."""

    xi_accum: Array = field(default_factory=lambda: np.zeros(4))
    F_prev: Optional[Array] = None

    @classmethod
    def reset(cls) -> "AllocatorState":
        return cls()


def allocate_with_constraints(
    u,
    s: RigidBodyState,
    ref: PositionReference,
    gains: GainSet,
    p: QuadParams,
    cfg: AllocationConfig,
    st: AllocatorState,
    dt: float,
    fp_enabled: bool = True,
) -> tuple[Array, AllocatorState]:
    """Null-space allocation for attitude mode.

    The integral is advanced with the gradient at the previous step's thrusts
    (rectangle rule) before the new thrusts are formed, so ``A F == u`` holds
    for every ``xi``.
    """
    cfg = cfg.resolved(p)
    u = np.asarray(u, dtype=float)
    A_pinv = moment_pseudoinverse(p)
    N = null_space_projector(p)
    M_inv = mixer_matrix(p)[1]

    accum = st.xi_accum
    if st.F_prev is not None:
        step = cfg.gradient_step if cfg.gradient_step is not None else dt
        accum = accum + cfg.gradient_sign * clamped_barrier_gradient(st.F_prev, cfg) * step
    f_p = secondary_thrust_fp(s, ref, gains, p, cfg.k_xi, cfg.iota) if fp_enabled else 0.0
    xi = accum + M_inv[:, 0] * f_p
    F = A_pinv @ u + N @ xi
    return F, AllocatorState(xi_accum=accum, F_prev=F)
