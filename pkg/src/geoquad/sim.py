"""Closed-loop scenario runner, run logs and comparison metrics."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .allocation import (
    AllocatorState,
    allocate_with_constraints,
    mixer_matrix,
    position_mode_thrusts,
)
from .config import ScenarioConfig
from .controllers import (
    BenchmarkGains,
    PositionController,
    benchmark_force,
    benchmark_moment,
    benchmark_position,
    required_force,
    surface_moment,
)
from .dynamics import ControlOutput, RigidBodyState, step
from .errors import NumericalBlowup, OutsideL2
from .roa import (
    acceleration_bound,
    attitude_basin,
    position_basin,
    lyapunov_trace,
)
from .so3 import angular_velocity_error, attitude_error_vector, psi_error

Array = NDArray[np.float64]

COLUMNS: tuple[str, ...] = (
    ("t", "x1", "x2", "x3", "v1", "v2", "v3")
    + tuple(f"R{i}{j}" for i in range(1, 4) for j in range(1, 4))
    + ("w1", "w2", "w3", "f", "u1", "u2", "u3", "F1", "F2", "F3", "F4")
    + ("psi", "eR", "ew", "ex", "ev", "V", "V_psi", "V_x", "V_g", "mode", "sat")
)
_IDX = {name: i for i, name in enumerate(COLUMNS)}

MODE_POSITION = 0
MODE_ATTITUDE = 1


@dataclass
class RunLog:
    """One row per integration step: the state at the start of the step and
    the control held over it.

    ``errors`` keeps the full error vectors ``[psi, e_R, e_omega, e_x, e_v]``
    behind the norm columns.
    """

    data: Array
    errors: Optional[Array] = None
    phase_starts: list = field(default_factory=list)
    dt: float = 0.0

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, name: str) -> Array:
        return self.data[:, _IDX[name]]

    def cols(self, *names: str) -> Array:
        return self.data[:, [_IDX[n] for n in names]]

    @property
    def t(self) -> Array:
        return self["t"]

    @property
    def thrusts(self) -> Array:
        return self.cols("F1", "F2", "F3", "F4")

    @property
    def positions(self) -> Array:
        return self.cols("x1", "x2", "x3")

    def window(self, t0: float, t1: float) -> Array:
        """Boolean mask of rows with ``t0 <= t < t1``."""
        t = self.t
        return (t >= t0 - 1e-12) & (t < t1 - 1e-12)

    def to_csv(self, dest=None) -> str:
        """Write the log with 17 significant digits; returns the text when ``dest`` is None."""
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        np.savetxt(buf, self.data, fmt="%.17g", delimiter=",")
        text = buf.getvalue()
        if dest is None:
            return text
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "RunLog":
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        if tuple(rows[0]) != COLUMNS:
            raise ValueError("unexpected CSV header")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        dt = float(data[1, 0] - data[0, 0]) if len(data) > 1 else 0.0
        return cls(data=data, dt=dt)


def _errors_against(s: RigidBodyState, R_ref, w_ref, x_ref, v_ref) -> Array:
    return np.concatenate(
        [
            [psi_error(s.R, R_ref)],
            attitude_error_vector(s.R, R_ref),
            angular_velocity_error(s.R, s.omega, R_ref, w_ref),
            s.x - x_ref,
            s.v - v_ref,
        ]
    )


def run(cfg: ScenarioConfig, progress=None, state0: Optional[RigidBodyState] = None) -> RunLog:
    """Simulate ``cfg`` with fixed-step RK4; the control is held over each step.

    ``state0`` overrides the configured initial state.

    Controller history and the allocator integral are reset whenever the
    flight mode phase changes; phases with a refit rule build their position
    command from the state at entry.

    Raises:
        NumericalBlowup: propagated from the integrator with the failing time.
    """
    p, g, alloc = cfg.params, cfg.gains, cfg.allocation.resolved(cfg.params)
    schedule = cfg.schedule()
    dt = cfg.dt
    n = int(round(cfg.t_final / dt))
    M, M_inv = mixer_matrix(p)
    pos_ctrl = PositionController(g, p, cfg.rate_mode, dt)
    bench = cfg.benchmark

    s = cfg.initial_state() if state0 is None else state0
    data = np.zeros((n, len(COLUMNS)))
    errs = np.zeros((n, 13))
    phase_idx = -1
    pos_cmd = None
    st = AllocatorState()
    phase_starts = []

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutsideL2)
        for k in range(n):
            t = k * dt
            idx = schedule.index_at(t)
            if idx != phase_idx:
                phase_idx = idx
                phase = schedule.phases[idx]
                pos_cmd = phase.refit.build(t, s.x, s.v) if phase.refit is not None else phase.position
                pos_ctrl.reset()
                st = AllocatorState()
                phase_starts.append(t)
            pref = pos_cmd.at(t)

            if phase.mode == "position":
                mode = MODE_POSITION
                if cfg.controller == "proposed":
                    res = pos_ctrl(s, pref)
                    f, u, R_ref, w_ref = res.f, res.u, res.R_x, res.omega_x
                else:
                    res = benchmark_position(s, pref, bench, p)
                    f, u, R_ref, w_ref = res.f, res.u, res.R_c, res.omega_c
                F = position_mode_thrusts(f, u, p)
            else:
                mode = MODE_ATTITUDE
                aref = phase.attitude.at(t)
                R_ref, w_ref = aref.R_d, aref.omega_d
                if cfg.controller == "proposed":
                    u = surface_moment(s.R, s.omega, aref.R_d, aref.omega_d, aref.omega_d_dot, g, p, warn=False).u
                else:
                    u = benchmark_moment(s.R, s.omega, aref.R_d, aref.omega_d, aref.omega_d_dot, bench, p)
                if cfg.strategy_enabled:
                    F, st = allocate_with_constraints(u, s, pref, g, p, alloc, st, dt, cfg.fp_enabled)
                    f = float(F.sum())
                else:
                    if cfg.controller == "proposed":
                        U = required_force(s, pref, g, p)
                    else:
                        U = benchmark_force(s, pref, bench, p)
                    f = float(U @ s.R[:, 2])
                    F = position_mode_thrusts(f, u, p)

            sat = bool(np.any(F < alloc.f_min) or np.any(F > alloc.f_max))
            F_applied = np.clip(F, alloc.f_min, alloc.f_max) if cfg.clip_thrusts else F
            wrench = M @ F_applied

            e = _errors_against(s, R_ref, w_ref, pref.x, pref.v)
            errs[k] = e
            row = data[k]
            row[0] = t
            row[1:4] = s.x
            row[4:7] = s.v
            row[7:16] = s.R.ravel()
            row[16:19] = s.omega
            row[19] = f
            row[20:23] = u
            row[23:27] = F
            row[27] = e[0]
            row[28] = np.linalg.norm(e[1:4])
            row[29] = np.linalg.norm(e[4:7])
            row[30] = np.linalg.norm(e[7:10])
            row[31] = np.linalg.norm(e[10:13])
            row[36] = mode
            row[37] = float(sat)

            try:
                s = step(s, ControlOutput(f=float(wrench[0]), u=wrench[1:], F=F_applied), p, dt)
            except NumericalBlowup as exc:
                raise NumericalBlowup(f"{exc} at t={t:.6g} s", t=t) from exc
            if progress is not None:
                progress(k, n)

    lyap = lyapunov_trace(errs, g, p)
    data[:, _IDX["V"]] = lyap["V"]
    data[:, _IDX["V_psi"]] = lyap["V_psi"]
    data[:, _IDX["V_x"]] = lyap["V_x"]
    data[:, _IDX["V_g"]] = lyap["V_g"]
    return RunLog(data=data, errors=errs, phase_starts=phase_starts, dt=dt)


# --- metrics -----------------------------------------------------------------


def rms_effort(log: RunLog, t: float) -> float:
    """``sqrt((1/t) int_0^t sum_i f_i^2)`` by the rectangle rule over the logged steps."""
    if not t > 0:
        raise ValueError("t must be positive")
    dt = log.dt if log.dt > 0 else float(log.t[1] - log.t[0])
    n = int(round(t / dt))
    if n > len(log):
        raise ValueError(f"t={t} exceeds the logged horizon")
    F = log.thrusts[:n]
    return float(np.sqrt(np.sum(F * F) * dt / (n * dt)))


def settle_time(log: RunLog, column: str = "psi", tol: float = 1e-3) -> float:
    """First time after which ``column`` stays at or below ``tol``; ``inf`` if never."""
    y = log[column]
    above = np.nonzero(y > tol)[0]
    if above.size == 0:
        return float(log.t[0])
    last = above[-1]
    if last + 1 >= len(y):
        return float("inf")
    return float(log.t[last + 1])


@dataclass(frozen=True)
class RunMetrics:
    rms: float
    psi_max: float
    psi_final: float
    psi_iae: float
    settle_time: float
    ex_max: float
    ex_final: float
    sat_count: int

    @classmethod
    def of(cls, log: RunLog, settle_tol: float = 1e-3) -> "RunMetrics":
        t_end = len(log) * log.dt
        return cls(
            rms=rms_effort(log, t_end),
            psi_max=float(log["psi"].max()),
            psi_final=float(log["psi"][-1]),
            psi_iae=float(log["psi"].sum() * log.dt),
            settle_time=settle_time(log, "psi", settle_tol),
            ex_max=float(log["ex"].max()),
            ex_final=float(log["ex"][-1]),
            sat_count=int(log["sat"].sum()),
        )


@dataclass(frozen=True)
class Comparison:
    a: RunMetrics
    b: RunMetrics
    labels: tuple = ("A", "B")

    @property
    def faster_settling(self) -> str:
        if self.a.settle_time == self.b.settle_time:
            return "tie"
        return self.labels[0] if self.a.settle_time < self.b.settle_time else self.labels[1]

    @property
    def lower_error(self) -> str:
        """Lower integrated attitude error plus peak position error."""
        ea = self.a.psi_iae + self.a.ex_max
        eb = self.b.psi_iae + self.b.ex_max
        if ea == eb:
            return "tie"
        return self.labels[0] if ea < eb else self.labels[1]

    def as_dict(self) -> dict:
        out = {}
        for label, m in zip(self.labels, (self.a, self.b)):
            out[label] = dict(m.__dict__)
        out["faster_settling"] = self.faster_settling
        out["lower_error"] = self.lower_error
        return out


def _label(cfg: ScenarioConfig) -> str:
    return cfg.controller + ("+strategy" if cfg.strategy_enabled else "")


def compare(cfg_a: ScenarioConfig, cfg_b: ScenarioConfig, settle_tol: float = 1e-3) -> Comparison:
    """Run two configurations on the same schedule and compare their metrics."""
    if cfg_a.scenario != cfg_b.scenario or cfg_a.t_final != cfg_b.t_final or cfg_a.dt != cfg_b.dt:
        raise ValueError("compare() needs identical schedules, horizons and steps")
    la, lb = _label(cfg_a), _label(cfg_b)
    if la == lb:
        la, lb = la + "#A", lb + "#B"
    ma = RunMetrics.of(run(cfg_a), settle_tol)
    mb = RunMetrics.of(run(cfg_b), settle_tol)
    return Comparison(ma, mb, (la, lb))


def scale_benchmark_attitude(gains: BenchmarkGains, c: float) -> BenchmarkGains:
    """Scale the attitude bandwidth by ``c`` (``k_R * c^2``, ``k_omega * c``)."""
    return replace(gains, k_R=gains.k_R * c * c, k_omega=gains.k_omega * c)


def match_effort(
    cfg_ref: ScenarioConfig,
    cfg_tune: ScenarioConfig,
    rel_tol: float = 1e-3,
    bracket: tuple[float, float] = (0.25, 4.0),
    max_iter: int = 60,
) -> ScenarioConfig:
    """Rescale ``cfg_tune``'s benchmark attitude gains until its RMS effort equals ``cfg_ref``'s.

    Bisection on ``log c`` assuming the effort grows with the bandwidth ``c``.
    """
    if cfg_tune.controller != "benchmark":
        raise ValueError("only benchmark gains are rescaled")
    t_end = cfg_ref.t_final
    target = rms_effort(run(cfg_ref), t_end)
    base = cfg_tune.benchmark

    def effort(c):
        return rms_effort(run(replace(cfg_tune, benchmark=scale_benchmark_attitude(base, c))), t_end)

    lo, hi = np.log(bracket[0]), np.log(bracket[1])
    if not (effort(np.exp(lo)) <= target <= effort(np.exp(hi))):
        raise ValueError("target effort is outside the scaling bracket")
    c = 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        c = float(np.exp(mid))
        e = effort(c)
        if abs(e - target) <= rel_tol * target:
            break
        if e < target:
            lo = mid
        else:
            hi = mid
    return replace(cfg_tune, benchmark=scale_benchmark_attitude(base, c))


# --- basin reports ------------------------------------------------------------


def _report_dict(obj) -> dict:
    out = {}
    for k, v in obj.__dict__.items():
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, (np.floating, np.bool_)):
            v = v.item()
        out[k] = v
    return out


def basin_report(cfg: ScenarioConfig, log: Optional[RunLog] = None) -> list[dict]:
    """Basin reports at the initial condition and at every mode switch.

    States at later switches come from ``log`` (simulated when omitted).
    Attitude-mode entries get an attitude basin report against the attitude
    command; position-mode entries get a position-free basin report whose
    ``attractive`` flag covers the ``psi_p <= Psi(0) < 2`` case.
    """
    p, g = cfg.params, cfg.gains
    schedule = cfg.schedule()
    reports = []
    need_log = len(schedule.phases) > 1
    if need_log and log is None:
        log = run(cfg)
    for i, phase in enumerate(schedule.phases):
        if i == 0:
            s = cfg.initial_state()
        else:
            k = int(round(phase.t_start / cfg.dt))
            row = log.data[k]
            s = RigidBodyState(
                x=row[1:4].copy(), v=row[4:7].copy(), R=row[7:16].reshape(3, 3).copy(), omega=row[16:19].copy()
            )
        t = phase.t_start
        entry = {"phase": phase.label or str(i), "mode": phase.mode, "t": t}
        if phase.mode == "attitude":
            entry["attitude"] = _report_dict(attitude_basin(s, phase.attitude, g, t))
        else:
            cmd = phase.refit.build(t, s.x, s.v) if phase.refit is not None else phase.position
            B = acceleration_bound(cmd, p, t, phase.t_end, cfg.dt)
            entry["position"] = _report_dict(position_basin(s, cmd, g, p, B, "position-free", t=t))
        reports.append(entry)
    return reports
