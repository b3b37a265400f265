from __future__ import annotations

import sys
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from geoquad import GainSet, QuadParams, preset, run

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def params() -> QuadParams:
    return QuadParams()


@pytest.fixture(scope="session")
def gains() -> GainSet:
    return GainSet()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# Full-scenario runs are shared across test modules; each takes a few seconds.


@pytest.fixture(scope="session")
def flip_timed():
    """The nominal flip run and its wall-clock duration in seconds."""
    t0 = time.perf_counter()
    log = run(preset("flip_full"))
    return log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def flip_log(flip_timed):
    return flip_timed[0]


@pytest.fixture(scope="session")
def flip_log_no_fp():
    return run(replace(preset("flip_full"), fp_enabled=False))


@pytest.fixture(scope="session")
def flip_log_no_strategy():
    return run(replace(preset("flip_full"), strategy_enabled=False))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
