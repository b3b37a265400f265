"""Command line entry point: ``geoquad {run,compare,basin,sweep,preset}``.

Exit codes: 0 success, 2 configuration error, 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from . import config as config_mod
from .config import SCENARIOS, ScenarioConfig
from .errors import ConfigError, GeoquadError, NumericalBlowup

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def _load(path: Optional[str], sets: Sequence[str]) -> ScenarioConfig:
    """Config from a file, or from a preset name when no such file exists."""
    if path is None:
        cfg = config_mod.preset("flip_full")
    elif os.path.exists(path):
        cfg = config_mod.load(path)
    elif path in SCENARIOS:
        cfg = config_mod.preset(path)
    else:
        raise ConfigError(f"no config file or preset named {path!r}")
    return config_mod.apply_overrides(cfg, config_mod.parse_set(list(sets)))


def _emit(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        return str(o)

    return json.dumps(obj, indent=2, default=default, allow_nan=True) + "\n"


# --- verbs -------------------------------------------------------------------


def cmd_run(args) -> int:
    from .sim import RunMetrics, run

    cfg = _load(args.config, args.set)
    log = run(cfg)
    _emit(log.to_csv(), args.out)
    if args.out not in (None, "-"):
        m = RunMetrics.of(log)
        print(
            f"{len(log)} steps  rms={m.rms:.6g} N  psi_max={m.psi_max:.3e}  "
            f"ex_max={m.ex_max:.4g} m  saturated_steps={m.sat_count}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_compare(args) -> int:
    from .sim import compare, match_effort

    cfg_a = _load(args.config, args.set)
    if args.other is not None:
        cfg_b = _load(args.other, args.set_other)
    else:
        cfg_b = config_mod.apply_overrides(
            replace(cfg_a, controller="benchmark"), config_mod.parse_set(list(args.set_other))
        )
    if args.match_effort:
        cfg_b = match_effort(cfg_a, cfg_b)
    report = compare(cfg_a, cfg_b, settle_tol=args.settle_tol).as_dict()
    if args.match_effort:
        report["benchmark_gains_after_matching"] = {
            "k_R": np.diag(cfg_b.benchmark.k_R).tolist(),
            "k_omega": np.diag(cfg_b.benchmark.k_omega).tolist(),
        }
    _emit(_json(report), args.out)
    return EXIT_OK


def cmd_basin(args) -> int:
    from .sim import basin_report

    cfg = _load(args.config, args.set)
    _emit(_json(basin_report(cfg)), args.out)
    return EXIT_OK


def _parse_grid(items: Sequence[str]) -> list[tuple[str, list[str]]]:
    grid = []
    for item in items:
        if "=" not in item:
            raise ConfigError(f"grid entry must look like section.key=v1,v2,..., got {item!r}")
        key, values = item.split("=", 1)
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"grid entry {key!r} has no values")
        grid.append((key.strip(), vals))
    return grid


SWEEP_FIELDS = (
    "theta_max",
    "theta_admissible",
    "psi_p",
    "w3_margin_at_zero",
    "tau_psi_a_1",
    "W1_pd",
    "W2_pd",
)


def _certificate_row(cfg: ScenarioConfig, B: float) -> dict:
    from .roa import (
        admissible_theta,
        certificate_matrices_attitude,
        is_positive_definite,
        pi_matrices,
        psi_from_theta,
        theta_max_position_free,
        w3_margin,
    )

    g, p = cfg.gains, cfg.params
    th = admissible_theta(g, p, B)
    Pi1, Pi2 = pi_matrices(g, p, B, 0.0)
    cert = certificate_matrices_attitude(g, 1.0)
    return {
        "theta_max": theta_max_position_free(g, p),
        "theta_admissible": th,
        "psi_p": psi_from_theta(min(th, 1.0)),
        "w3_margin_at_zero": w3_margin(Pi1, Pi2, g),
        "tau_psi_a_1": cert.tau,
        "W1_pd": is_positive_definite(cert.W1),
        "W2_pd": is_positive_definite(cert.W2),
    }


def _sweep_one(job):
    text, overrides, B = job
    cfg = config_mod.apply_overrides(config_mod.loads(text), overrides)
    try:
        return _certificate_row(cfg, B)
    except GeoquadError as exc:
        return {k: "" for k in SWEEP_FIELDS} | {"error": str(exc)}


def cmd_sweep(args) -> int:
    from .roa import acceleration_bound

    cfg = _load(args.config, args.set)
    grid = _parse_grid(args.grid)
    if not grid:
        raise ConfigError("sweep needs at least one --grid section.key=v1,v2,...")
    phase = next(ph for ph in cfg.schedule().phases if ph.position is not None)
    B = acceleration_bound(phase.position, cfg.params, phase.t_start, phase.t_end, cfg.dt)
    keys = [k for k, _ in grid]
    combos = list(itertools.product(*[v for _, v in grid]))
    base_text = config_mod.dumps(cfg)
    jobs = []
    for combo in combos:
        overrides = config_mod.parse_set([f"{k}={v}" for k, v in zip(keys, combo)])
        config_mod.apply_overrides(cfg, overrides)  # validate before fanning out
        jobs.append((base_text, overrides, B))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys + ["B"] + list(SWEEP_FIELDS) + ["error"])
    for combo, row in zip(combos, rows):
        vals = [row.get(f, "") for f in SWEEP_FIELDS]
        writer.writerow(list(combo) + [repr(B)] + [repr(v) if isinstance(v, float) else v for v in vals] + [row.get("error", "")])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_preset(args) -> int:
    _emit(config_mod.dumps(config_mod.apply_overrides(config_mod.preset(args.name), config_mod.parse_set(args.set))), args.out)
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoquad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("--config", help=f"scenario file or preset name ({', '.join(SCENARIOS)})")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config value")

    p = sub.add_parser("run", help="simulate a scenario and write the CSV log")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run two configurations and compare metrics")
    common(p)
    p.add_argument("--other", help="second scenario (default: the first with the benchmark controller)")
    p.add_argument("--set-other", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--match-effort", action="store_true", help="rescale benchmark attitude gains to equal RMS effort")
    p.add_argument("--settle-tol", type=float, default=1e-3, help="Psi level used for the settling time")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("basin", help="basin-of-attraction reports at the start and each mode switch")
    common(p)
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("sweep", help="evaluate basin certificates over a gain grid")
    common(p)
    p.add_argument("--grid", action="append", default=[], metavar="SECTION.KEY=V1,V2,...")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preset", help="print a shipped scenario as a config file")
    p.add_argument("name", choices=SCENARIOS)
    common(p, with_config=False)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowup as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
