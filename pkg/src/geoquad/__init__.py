"""Geometric quadrotor control on SO(3) with null-space thrust allocation."""

from .dynamics import QuadParams, RigidBodyState, ControlOutput, step
from .controllers import GainSet, BenchmarkGains, PositionController, attitude_control, position_control, benchmark_control
from .allocation import AllocationConfig, AllocatorState, allocate_with_constraints, mixer_matrix
from .config import ScenarioConfig, preset
from .sim import RunLog, run, rms_effort, compare, basin_report

__all__ = [
    "QuadParams",
    "RigidBodyState",
    "ControlOutput",
    "step",
    "GainSet",
    "BenchmarkGains",
    "PositionController",
    "attitude_control",
    "position_control",
    "benchmark_control",
    "AllocationConfig",
    "AllocatorState",
    "allocate_with_constraints",
    "mixer_matrix",
    "ScenarioConfig",
    "preset",
    "RunLog",
    "run",
    "rms_effort",
    "compare",
    "basin_report",
]

__version__ = "0.1.0"
