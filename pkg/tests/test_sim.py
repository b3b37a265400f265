from __future__ import annotations

import io
from dataclasses import replace

import numpy as np
import pytest

from geoquad import preset, rms_effort, run
from geoquad.errors import NumericalBlowup
from geoquad.sim import (
    COLUMNS,
    MODE_ATTITUDE,
    MODE_POSITION,
    RunLog,
    RunMetrics,
    basin_report,
    compare,
    match_effort,
    scale_benchmark_attitude,
    settle_time,
)

GOLDEN_HEADER = (
    "t,x1,x2,x3,v1,v2,v3,R11,R12,R13,R21,R22,R23,R31,R32,R33,w1,w2,w3,f,u1,u2,u3,"
    "F1,F2,F3,F4,psi,eR,ew,ex,ev,V,V_psi,V_x,V_g,mode,sat"
)


def constant_log(F, n=1000, dt=1e-3) -> RunLog:
    data = np.zeros((n, len(COLUMNS)))
    data[:, 0] = np.arange(n) * dt
    data[:, COLUMNS.index("F1") : COLUMNS.index("F4") + 1] = F
    return RunLog(data=data, dt=dt)


@pytest.mark.parametrize("c", [0.0, 1.0, 3.28635, 19.5])
def test_rms_constant_thrust(c):
    log = constant_log([c, c, c, c])
    assert rms_effort(log, 1.0) == pytest.approx(2.0 * c, rel=1e-15, abs=0.0)


def test_rms_mixed_thrust():
    log = constant_log([1.0, 2.0, 3.0, 4.0])
    assert rms_effort(log, 0.5) == pytest.approx(np.sqrt(30.0), rel=1e-15)
    with pytest.raises(ValueError):
        rms_effort(log, 2.0)
    with pytest.raises(ValueError):
        rms_effort(log, 0.0)


def test_settle_time():
    log = constant_log([0, 0, 0, 0], n=10)
    log.data[:, COLUMNS.index("psi")] = [1, 1, 0.5, 0, 0, 0.2, 0, 0, 0, 0]
    assert settle_time(log, "psi", 0.1) == pytest.approx(0.006)
    assert settle_time(log, "psi", 2.0) == 0.0
    log.data[-1, COLUMNS.index("psi")] = 1.0
    assert settle_time(log, "psi", 0.1) == float("inf")


def test_golden_header():
    assert ",".join(COLUMNS) == GOLDEN_HEADER


def test_hover_run_is_quiet():
    log = run(preset("hover"))
    assert len(log) == 1000
    assert np.allclose(log.thrusts, 3.28635, atol=1e-9)
    assert np.all(log["mode"] == MODE_POSITION)
    assert log["ex"].max() < 1e-12
    assert rms_effort(log, 1.0) == pytest.approx(2.0 * 3.28635, rel=1e-9)


def test_csv_round_trip(tmp_path):
    log = run(replace(preset("step90"), t_final=0.2))
    path = tmp_path / "log.csv"
    text = log.to_csv(path)
    assert text.splitlines()[0] == GOLDEN_HEADER
    back = RunLog.from_csv(path)
    assert np.array_equal(back.data, log.data)
    buf = io.StringIO()
    log.to_csv(buf)
    assert buf.getvalue() == text
    with pytest.raises(ValueError):
        RunLog.from_csv(io.StringIO("a,b\n1,2\n"))


def test_step90_converges():
    log = run(preset("step90"))
    assert np.all(log["mode"] == MODE_ATTITUDE)
    assert log["psi"][0] == pytest.approx(1.0)
    assert log["psi"][-1] < 1e-8
    V = log["V"]
    assert np.all(np.diff(V) <= 1e-8)


def test_position_step_converges():
    log = run(preset("step_position_1cm"))
    assert log["ex"][0] == pytest.approx(np.sqrt(3) * 0.01)
    assert log["ex"][-1] < 1e-5


def test_runs_are_deterministic():
    cfg = replace(preset("step90"), t_final=0.3)
    assert run(cfg).to_csv() == run(cfg).to_csv()


def test_progress_callback():
    seen = []
    run(replace(preset("hover"), t_final=0.01), progress=lambda k, n: seen.append((k, n)))
    assert seen[-1] == (9, 10)


def test_blowup_is_reported():
    cfg = replace(preset("step90"), dt=0.05)
    with pytest.raises(NumericalBlowup):
        run(cfg)


def test_metrics_and_compare():
    a = replace(preset("step90"), t_final=0.5)
    b = replace(a, controller="benchmark")
    cmp = compare(a, b)
    assert cmp.labels == ("proposed", "benchmark")
    d = cmp.as_dict()
    assert set(d) == {"proposed", "benchmark", "faster_settling", "lower_error"}
    assert isinstance(cmp.a, RunMetrics) and cmp.a.sat_count >= 0
    with pytest.raises(ValueError):
        compare(a, replace(b, t_final=0.4))


def test_scale_benchmark_attitude():
    g = preset("step90").benchmark
    s = scale_benchmark_attitude(g, 2.0)
    assert np.allclose(s.k_R, 4.0 * g.k_R)
    assert np.allclose(s.k_omega, 2.0 * g.k_omega)
    assert s.k_x == g.k_x


def test_match_effort_hits_target():
    a = replace(preset("step90"), t_final=0.5)
    b = match_effort(a, replace(a, controller="benchmark"), rel_tol=1e-4)
    target = rms_effort(run(a), 0.5)
    assert rms_effort(run(b), 0.5) == pytest.approx(target, rel=1e-4)
    with pytest.raises(ValueError):
        match_effort(a, a)


def test_basin_report_single_phase():
    rep = basin_report(preset("hover"))
    assert len(rep) == 1
    assert rep[0]["position"]["inside"]
    rep = basin_report(preset("step90"))
    assert rep[0]["attitude"]["inside"]


def test_basin_report_flip(flip_log):
    rep = basin_report(preset("flip_full"), flip_log)
    assert [r["phase"] for r in rep] == ["translate", "flip", "return"]
    assert rep[1]["attitude"]["inside"]
    assert all(r["position"]["attractive"] for r in (rep[0], rep[2]))
