"""Numerical evaluation of the stability certificates.

Everything here is a pure evaluator: basins of attraction for the attitude
and position controllers, the 2x2 certificate matrices behind them, the
admissible attitude-error bound ``theta_max`` and Lyapunov diagnostics along
simulated trajectories.  Positive-definiteness is checked twice, with a
symmetric eigenvalue solver and with leading principal minors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from numpy.typing import NDArray

from .commands import AttitudeCommand, PositionCommand
from .controllers import GainSet, position_induced_attitude
from .dynamics import QuadParams, RigidBodyState
from .errors import DomainViolation, InvalidPsiCap, InvalidVariant
from .so3 import E3, angular_velocity_error, attitude_error_vector, psi_error

Array = NDArray[np.float64]

Variant = Literal["position-free", "position-bounded", "velocity-bounded"]
VARIANTS = ("position-free", "position-bounded", "velocity-bounded")


def is_positive_definite(M, tol: float = 0.0) -> bool:
    """Eigenvalue test cross-checked against Sylvester's criterion."""
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    by_eig = bool(np.linalg.eigvalsh(S)[0] > tol)
    by_minors = all(np.linalg.det(S[:k, :k]) > tol for k in range(1, S.shape[0] + 1))
    return by_eig and by_minors


def lambda_min(M) -> float:
    return float(np.linalg.eigvalsh(0.5 * (np.asarray(M) + np.asarray(M).T))[0])


def lambda_max(M) -> float:
    return float(np.linalg.eigvalsh(0.5 * (np.asarray(M) + np.asarray(M).T))[-1])


# --- attitude mode -----------------------------------------------------------


@dataclass(frozen=True)
class AttitudeBasinReport:
    psi0: float
    e_omega0_normsq: float
    bound: float
    inside: bool


def attitude_basin(s0: RigidBodyState, cmd, gains: GainSet, t: float = 0.0) -> AttitudeBasinReport:
    """Check ``Psi(0) < 2`` and ``|e_w(0)|^2 < 2 eta k_R (2 - Psi(0))``."""
    ref = cmd.at(t) if isinstance(cmd, AttitudeCommand) else cmd
    psi0 = psi_error(s0.R, ref.R_d)
    e_w = angular_velocity_error(s0.R, s0.omega, ref.R_d, ref.omega_d)
    n2 = float(e_w @ e_w)
    bound = 2.0 * gains.eta * gains.k_R * (2.0 - psi0)
    return AttitudeBasinReport(psi0=psi0, e_omega0_normsq=n2, bound=bound, inside=bool(psi0 < 2.0 and n2 < bound))


@dataclass(frozen=True)
class CertificateMatrices:
    W1: Array
    W2: Array
    W3: Array
    tau: float
    psi_cap: float
    Pi1: Optional[Array] = None
    Pi2: Optional[Array] = None
    Pi3: Optional[Array] = None
    Pi4: Optional[Array] = None
    Pi5: Optional[Array] = None


def attitude_w_matrices(gains: GainSet, psi_cap: float) -> tuple[Array, Array, Array]:
    kR, kw, eta = gains.k_R, gains.k_omega, gains.eta
    W1 = np.array([[kR**2 / (2 * kw) + eta * kR * kw, -kR / 2], [-kR / 2, kw / 2]])
    W2 = np.array([[kR**2 / (2 * kw) + 2.0 / (2.0 - psi_cap) * eta * kR * kw, kR / 2], [kR / 2, kw / 2]])
    W3 = np.diag([kR**2, kw**2])
    return W1, W2, W3


def certificate_matrices_attitude(gains: GainSet, psi_cap: float) -> CertificateMatrices:
    """``W1 <= V <= W2`` sandwich, ``V' = -eta z^T W3 z`` and rate ``tau``.

    Raises:
        InvalidPsiCap: unless ``0 < psi_cap < 2``.
    """
    if not 0.0 < psi_cap < 2.0:
        raise InvalidPsiCap(f"psi_cap must lie in (0, 2), got {psi_cap}")
    W1, W2, W3 = attitude_w_matrices(gains, psi_cap)
    tau = gains.eta * lambda_min(W3) / lambda_max(W2)
    return CertificateMatrices(W1=W1, W2=W2, W3=W3, tau=tau, psi_cap=psi_cap)


# --- position mode -----------------------------------------------------------


def delta_terms(gains: GainSet, p: QuadParams) -> tuple[float, float]:
    a, kx, kv, m = gains.a, gains.k_x, gains.k_v, p.m
    rad = 4 * kx**4 * kv**4 * a**4 + 4 * kx**5 * kv**2 * a**3 * m + 2 * kx**6 * m**2 * a**2
    d1 = 2.0 * kv**2 * np.sqrt(rad) / (kx**4 * m**2)
    d2 = -4.0 * a**2 * kv**4 / (m**2 * kx**2) - 2.0 * a * kv**2 / (m * kx)
    return float(d1), float(d2)


def theta_max_bounded(gains: GainSet, p: QuadParams) -> float:
    """Bound used when the initial position or velocity error is restricted."""
    akv2 = gains.a * gains.k_v**2
    return akv2 / (akv2 + p.m * gains.k_x)


def theta_max_position_free(gains: GainSet, p: QuadParams) -> float:
    d1, d2 = delta_terms(gains, p)
    return min(theta_max_bounded(gains, p), d1 + d2)


def psi_from_theta(theta: float) -> float:
    """Invert ``theta = sqrt(psi (2 - psi))`` on the branch ``psi <= 1``."""
    if not 0.0 <= theta <= 1.0:
        raise DomainViolation(f"theta must lie in [0, 1], got {theta}")
    return 1.0 - float(np.sqrt(1.0 - theta**2))


def theta_from_psi(psi: float) -> float:
    return float(np.sqrt(max(psi * (2.0 - psi), 0.0)))


def pi_matrices(
    gains: GainSet,
    p: QuadParams,
    B: float,
    theta: float,
    variant: Variant = "position-free",
    e_bound: Optional[float] = None,
) -> tuple[Array, Array]:
    """``(Pi1, Pi2)`` of the translational Lyapunov derivative bound."""
    if variant not in VARIANTS:
        raise InvalidVariant(f"unknown variant {variant!r}")
    a, kx, kv, m = gains.a, gains.k_x, gains.k_v, p.m
    p22 = a * kv**2 - theta * (m * kx + a * kv**2)
    if variant == "position-free":
        off = -a * kx * kv * theta - m * kx**2 * theta / (2 * kv)
        Pi1 = np.array([[a * kx**2 * (1 - theta), off], [off, p22]])
        Pi2 = np.array([[B * kx, 0.0], [B * kv, 0.0]])
        return Pi1, Pi2
    if e_bound is None:
        raise InvalidVariant(f"variant {variant!r} needs e_bound")
    Pi1 = np.diag([a * kx**2 * (1 - theta), p22])
    extra = (2 * a * kx * kv + m * kx**2 / kv) * e_bound
    if variant == "position-bounded":
        Pi2 = np.array([[B * kx, 0.0], [B * kv + extra, 0.0]])
    else:
        Pi2 = np.array([[B * kx + extra, 0.0], [B * kv, 0.0]])
    return Pi1, Pi2


def pi3_pi4(gains: GainSet, p: QuadParams) -> tuple[Array, Array]:
    a, kx, kv, m = gains.a, gains.k_x, gains.k_v, p.m
    d = a * kx * kv + m * kx**2 / (2 * kv)
    Pi3 = np.array([[d, -m * kx / 2], [-m * kx / 2, m * kv / 2]])
    Pi4 = np.array([[d, m * kx / 2], [m * kx / 2, m * kv / 2]])
    return Pi3, Pi4


def pi5(Pi1, Pi2, gains: GainSet) -> Array:
    n2 = float(np.linalg.norm(Pi2, 2))
    W3 = np.diag([gains.k_R**2, gains.k_omega**2])
    return np.array([[lambda_min(Pi1), -0.5 * n2], [-0.5 * n2, gains.eta * lambda_min(W3)]])


def w3_margin(Pi1, Pi2, gains: GainSet) -> float:
    """``lambda_min(W3) - |Pi2|_2^2 / (4 eta lambda_min(Pi1))``; positive means the gain condition holds."""
    lm = lambda_min(Pi1)
    if lm <= 0.0:
        return -np.inf
    return min(gains.k_R**2, gains.k_omega**2) - float(np.linalg.norm(Pi2, 2)) ** 2 / (4.0 * gains.eta * lm)


def certificate_matrices_position(
    gains: GainSet,
    p: QuadParams,
    B: float,
    theta: float,
    psi_cap: float,
    variant: Variant = "position-free",
    e_bound: Optional[float] = None,
) -> CertificateMatrices:
    att = certificate_matrices_attitude(gains, psi_cap)
    Pi1, Pi2 = pi_matrices(gains, p, B, theta, variant, e_bound)
    Pi3, Pi4 = pi3_pi4(gains, p)
    return CertificateMatrices(
        W1=att.W1, W2=att.W2, W3=att.W3, tau=att.tau, psi_cap=psi_cap,
        Pi1=Pi1, Pi2=Pi2, Pi3=Pi3, Pi4=Pi4, Pi5=pi5(Pi1, Pi2, gains),
    )


def theta_max_for(gains: GainSet, p: QuadParams, variant: Variant) -> float:
    if variant == "position-free":
        return theta_max_position_free(gains, p)
    return theta_max_bounded(gains, p)


def admissible_theta(
    gains: GainSet,
    p: QuadParams,
    B: float,
    variant: Variant = "position-free",
    e_bound: Optional[float] = None,
    iters: int = 200,
) -> float:
    """Supremum of ``theta < theta_max`` at which the gain condition still holds.

    ``lambda_min(Pi1)`` decreases with ``theta``, so the admissible set is an
    interval ``[0, theta*)`` found by bisection.  Returns 0 if it is empty.
    """
    th_max = min(theta_max_for(gains, p, variant), 1.0)

    def ok(th):
        Pi1, Pi2 = pi_matrices(gains, p, B, th, variant, e_bound)
        return w3_margin(Pi1, Pi2, gains) > 0.0

    if not ok(0.0):
        return 0.0
    if ok(th_max):
        return th_max
    lo, hi = 0.0, th_max
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return lo


def acceleration_bound(cmd: PositionCommand, p: QuadParams, t0: float, t1: float, dt: float = 1e-3, margin: float = 0.01) -> float:
    """Sampled ``max |m g E3 + m x_d''|`` over ``[t0, t1]`` plus a relative margin."""
    ts = np.arange(t0, t1 + 0.5 * dt, dt)
    peak = max(float(np.linalg.norm(p.m * p.g * E3 + p.m * cmd.at(t).a)) for t in ts)
    return peak * (1.0 + margin)


@dataclass(frozen=True)
class PositionBasinReport:
    psi0: float
    psi_p: float
    theta: float
    theta_max: float
    w3_ok: bool
    e_omega_bound_ok: bool
    variant: str
    e_xv_max: Optional[float]
    B: float
    inside: bool
    attractive: bool
    e_bound_ok: bool = True
    w3_margin: float = float("nan")
    e_omega0_normsq: float = float("nan")
    notes: tuple = field(default_factory=tuple)


def position_basin(
    s0: RigidBodyState,
    cmd,
    gains: GainSet,
    p: QuadParams,
    B: float,
    variant: Variant = "position-free",
    e_bound: Optional[float] = None,
    psi_p: Optional[float] = None,
    t: float = 0.0,
) -> PositionBasinReport:
    """Exponential-stability region of the position controller at ``s0``.

    Without ``psi_p`` the largest bound compatible with ``theta_max`` and the
    gain condition is used.  ``attractive`` reports the weaker almost-global
    attractiveness condition ``Psi(0) < 2`` with the attitude-mode rate bound.

    Raises:
        InvalidVariant: for an unknown variant or a bounded variant without ``e_bound``.
    """
    if variant not in VARIANTS:
        raise InvalidVariant(f"unknown variant {variant!r}")
    if variant != "position-free" and e_bound is None:
        raise InvalidVariant(f"variant {variant!r} needs e_bound")
    ref = cmd.at(t) if isinstance(cmd, PositionCommand) else cmd
    R_x, w_x, _ = position_induced_attitude(s0, ref, gains, p)
    psi0 = psi_error(s0.R, R_x)
    e_w = angular_velocity_error(s0.R, s0.omega, R_x, w_x)
    n2 = float(e_w @ e_w)
    th_max = theta_max_for(gains, p, variant)
    notes = []
    if psi_p is None:
        psi_p = psi_from_theta(admissible_theta(gains, p, B, variant, e_bound))
        notes.append("psi_p chosen as the largest admissible bound")
    theta_p = theta_from_psi(psi_p)
    Pi1, Pi2 = pi_matrices(gains, p, B, theta_p, variant, e_bound)
    margin = w3_margin(Pi1, Pi2, gains)
    w3_ok = bool(margin > 0.0 and theta_p <= th_max + 1e-12)
    e_w_ok = bool(n2 < 2.0 * gains.eta * gains.k_R * (psi_p - psi0))
    e_bound_ok = True
    if variant == "position-bounded":
        e_bound_ok = bool(np.linalg.norm(s0.x - ref.x) < e_bound)
    elif variant == "velocity-bounded":
        e_bound_ok = bool(np.linalg.norm(s0.v - ref.v) < e_bound)
    inside = bool(psi0 < psi_p < 1.0 and w3_ok and e_w_ok and e_bound_ok)
    attractive = bool(psi0 < 2.0 and n2 < 2.0 * gains.eta * gains.k_R * (2.0 - psi0))
    notes.append("|Pi2| evaluated as the spectral norm")
    return PositionBasinReport(
        psi0=psi0,
        psi_p=psi_p,
        theta=theta_from_psi(psi0),
        theta_max=th_max,
        w3_ok=w3_ok,
        e_omega_bound_ok=e_w_ok,
        variant=variant,
        e_xv_max=e_bound,
        B=B,
        inside=inside,
        attractive=attractive,
        e_bound_ok=e_bound_ok,
        w3_margin=margin,
        e_omega0_normsq=n2,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class PropABounds:
    cos_lb_ok: bool
    sine_le_eR: bool


def prop_a_bounds(R, R_x, tol: float = 1e-9) -> PropABounds:
    """Thrust-axis cosine/sine bounds between ``R e3`` and ``R_x e3``.

    Raises:
        DomainViolation: if ``Psi(R, R_x) >= 1``.
    """
    psi = psi_error(R, R_x)
    if psi >= 1.0:
        raise DomainViolation(f"Psi={psi} must be below 1")
    b3, b3x = np.asarray(R)[:, 2], np.asarray(R_x)[:, 2]
    c = float(b3x @ b3)
    sine = np.linalg.norm(c * b3 - b3x)
    e_R = attitude_error_vector(R, R_x)
    return PropABounds(cos_lb_ok=bool(c >= 1.0 - psi - tol and 1.0 - psi > 0.0), sine_le_eR=bool(sine <= np.linalg.norm(e_R) + tol))


# --- Lyapunov diagnostics ----------------------------------------------------


@dataclass(frozen=True)
class ErrorSample:
    psi: float
    e_R: Array
    e_omega: Array
    e_x: Array
    e_v: Array


def _as_error_array(trajectory) -> Array:
    if isinstance(trajectory, np.ndarray):
        arr = np.asarray(trajectory, dtype=float)
    else:
        arr = np.array(
            [np.concatenate([[s.psi], s.e_R, s.e_omega, s.e_x, s.e_v]) for s in trajectory], dtype=float
        )
    if arr.ndim != 2 or arr.shape[1] != 13:
        raise ValueError("trajectory rows must be [psi, e_R(3), e_omega(3), e_x(3), e_v(3)]")
    return arr


def lyapunov_trace(trajectory, gains: GainSet, p: QuadParams, psi_cap: Optional[float] = None) -> dict[str, Array]:
    """Evaluate the Lyapunov candidates and the ``V_g`` sandwich at every sample.

    ``trajectory`` is a sequence of :class:`ErrorSample` or an ``(n, 13)``
    array with rows ``[psi, e_R, e_omega, e_x, e_v]``.  Without ``psi_cap``
    the bounds are returned as NaN.
    """
    arr = _as_error_array(trajectory)
    psi = arr[:, 0]
    e_R, e_w, e_x, e_v = arr[:, 1:4], arr[:, 4:7], arr[:, 7:10], arr[:, 10:13]
    kR, kw, eta = gains.k_R, gains.k_omega, gains.eta
    s_R = kR * e_R + kw * e_w
    V = np.einsum("ij,ij->i", s_R, s_R) / (2 * kw) + 2 * eta * kR * kw * psi
    V_psi = 0.5 * np.einsum("ij,ij->i", e_w, e_w) + eta * kR * psi
    s_x = gains.k_x * e_x + gains.k_v * e_v
    V_x = p.m / (2 * gains.k_v) * np.einsum("ij,ij->i", s_x, s_x) + gains.a * gains.k_x * gains.k_v * np.einsum(
        "ij,ij->i", e_x, e_x
    )
    out = {"V": V, "V_psi": V_psi, "V_x": V_x, "V_g": V_x + V}
    if psi_cap is None:
        nan = np.full_like(V, np.nan)
        out["bound_lhs"], out["bound_rhs"] = nan, nan.copy()
        return out
    W1, W2, _ = attitude_w_matrices(gains, psi_cap)
    Pi3, Pi4 = pi3_pi4(gains, p)
    z_R = np.column_stack([np.linalg.norm(e_R, axis=1), np.linalg.norm(e_w, axis=1)])
    z_x = np.column_stack([np.linalg.norm(e_x, axis=1), np.linalg.norm(e_v, axis=1)])

    def quad(z, M):
        return np.einsum("ij,jk,ik->i", z, M, z)

    out["bound_lhs"] = quad(z_R, W1) + quad(z_x, Pi3)
    out["bound_rhs"] = quad(z_R, W2) + quad(z_x, Pi4)
    return out


def psi_a_candidates(V0: float, V_psi0: float, gains: GainSet) -> dict[str, float]:
    """Both readings of the attitude bound ``psi_a``: from ``V(0)`` and from ``V_psi(0)``."""
    d = gains.eta * gains.k_R
    return {"from_V": V0 / d, "from_V_psi": V_psi0 / d}


def exponential_envelope(psi0_V0: float, gains: GainSet, psi_cap: float) -> tuple[float, float]:
    """``(mu, tau)`` with ``Psi(t) <= mu exp(-tau t)`` from ``(2 - psi_a) lambda_min(W1) Psi <= V(0) e^{-tau t}``."""
    cert = certificate_matrices_attitude(gains, psi_cap)
    mu = psi0_V0 / ((2.0 - psi_cap) * lambda_min(cert.W1))
    return mu, cert.tau
