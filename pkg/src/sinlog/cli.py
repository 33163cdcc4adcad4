"""Command-line driver.

Commands: construct | sample | probe | verify | report.  All data files
are written under the output directory and are byte-identical across
runs with the same configuration and seed; timings go to stdout only.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    build_solution,
    config_to_text,
    load_config,
)
from .field import validate_schedule
from .quadrature import dirichlet_energy, domination_constants, envelope_l1_norm
from .reporting import (
    grid_rows,
    render_cutoff_figure,
    render_probe_figure,
    render_set_figure,
    render_solution_figure,
    render_suite_figure,
    suite_report_rows,
    suite_report_text,
    write_csv,
)
from .solution import ProbeFrame, radial_probe
from .verify import SuiteOptions, run_verification_suite


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: Path) -> None:
    (out / "config_echo.ini").write_text(config_to_text(cfg), encoding="utf-8")


def cmd_construct(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    sol, shift = build_solution(cfg)
    out = _out_dir(cfg)
    enum = sol.potential.enumeration
    write_csv(out / "enumeration.csv",
              ["index", "x1", "x2", "density_radius"], enum.csv_rows())
    rep = validate_schedule(cfg.schedule)
    write_csv(out / "schedule.csv", ["quantity", "value"],
              [("C_half", rep.C_half), ("C_third", rep.C_third),
               ("C_beta", rep.C_beta)])
    params = domination_constants(cfg.schedule, sol.potential)
    write_csv(out / "constants.csv", ["quantity", "value"],
              [("C", params.C), ("lambda", params.lam),
               ("K_general", params.K_general), ("K_first", params.K_first),
               ("C_tilde", params.C_tilde), ("exponent", params.exponent),
               ("translation_x1", shift[0]), ("translation_x2", shift[1])])
    print(f"construct: {len(enum)} points -> {out} "
          f"[{time.perf_counter() - t0:.2f}s]")
    return 0


def cmd_sample(cfg: RunConfig, grid_n: int) -> int:
    if grid_n < 2:
        raise ConfigError("grid size must be >= 2")
    t0 = time.perf_counter()
    sol, _ = build_solution(cfg)
    out = _out_dir(cfg)
    sol_rows, field_rows = grid_rows(sol, grid_n)
    write_csv(out / "solution_grid.csv",
              ["x1", "x2", "u1", "u2", "grad_norm_sq", "F1", "F2"], sol_rows)
    write_csv(out / "field_grid.csv",
              ["x1", "x2", "f", "d1f", "d2f"], field_rows)
    print(f"sample: {len(sol_rows)} grid rows -> {out} "
          f"[{time.perf_counter() - t0:.2f}s]")
    return 0


def cmd_probe(cfg: RunConfig, index: int, t_lo: float, t_hi: float,
              samples: int) -> int:
    if t_lo < 1.0:
        raise ConfigError("t must be >= 1")
    if t_hi <= t_lo:
        raise ConfigError("t range must be increasing")
    t0 = time.perf_counter()
    sol, _ = build_solution(cfg)
    out = _out_dir(cfg)
    ts = np.linspace(t_lo, t_hi, samples)
    rows = []
    for t in ts:
        res = radial_probe(sol, ProbeFrame(index=index, t=float(t)))
        rows.append((t, 0.0, res.u1, res.u2, res.rest_error_bound))
    write_csv(out / "probe.csv", ["t", "theta", "u1", "u2", "rest_error_bound"],
              rows)
    arr = np.asarray(rows)
    summary = [("point_index", index),
               ("t_lo", t_lo), ("t_hi", t_hi), ("samples", samples),
               ("min_u1", arr[:, 2].min()), ("max_u1", arr[:, 2].max()),
               ("min_u2", arr[:, 3].min()), ("max_u2", arr[:, 3].max())]
    if t_hi - t_lo < 2.0 * math.pi:
        summary.append(("warning",
                        "window shorter than 2*pi; extrema not guaranteed"))
    write_csv(out / "probe_summary.csv", ["quantity", "value"], summary)
    print(f"probe: point {index}, {samples} samples -> {out} "
          f"[{time.perf_counter() - t0:.2f}s]")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    sol, _ = build_solution(cfg)
    out = _out_dir(cfg)
    _echo_config(cfg, out)
    options = SuiteOptions(items=cfg.suite_items, bumps=cfg.bumps,
                           seed=cfg.seed, fault_inject=cfg.fault_inject,
                           identity_samples=cfg.identity_samples,
                           classical_samples=cfg.classical_samples)
    report = run_verification_suite(sol, cfg.policy, options)
    write_csv(out / "suite_report.csv",
              ["item", "description", "measured", "threshold", "status"],
              suite_report_rows(report))
    (out / "suite_report.txt").write_text(suite_report_text(report),
                                          encoding="utf-8")
    energy = dirichlet_energy(sol, cfg.policy)
    params = domination_constants(cfg.schedule, sol.potential)
    write_csv(out / "quadrature_results.csv",
              ["quantity", "value", "error_estimate", "cells"],
              [("dirichlet_energy", energy.value, energy.error_estimate,
                energy.cells_used),
               ("envelope_l1_norm", envelope_l1_norm(sol.potential, params),
                0.0, 0)])
    print(suite_report_text(report))
    print(f"verify: -> {out} [{time.perf_counter() - t0:.2f}s]")
    return 0 if report.passed else 1


def cmd_report(cfg: RunConfig, grid_n: int, index: int, t_lo: float,
               t_hi: float, samples: int) -> int:
    t0 = time.perf_counter()
    cmd_construct(cfg)
    cmd_sample(cfg, grid_n)
    cmd_probe(cfg, index, t_lo, t_hi, samples)
    sol, _ = build_solution(cfg)
    out = _out_dir(cfg)
    figs = out / "figures"
    figs.mkdir(parents=True, exist_ok=True)
    render_set_figure(sol, figs / "singular_set.png")
    render_solution_figure(sol, max(grid_n, 161), figs / "solution.png")
    probe_rows = np.loadtxt(out / "probe.csv", delimiter=",", skiprows=1)
    render_probe_figure(probe_rows, figs / "probe.png")
    render_cutoff_figure(figs / "cutoff_decay.png")
    suite_csv = out / "suite_report.csv"
    if suite_csv.exists():
        items = [line.split(",") for line in
                 suite_csv.read_text().strip().splitlines()[1:]]
        render_suite_figure(items, figs / "suite.png")
    print(f"report: figures -> {figs} [{time.perf_counter() - t0:.2f}s]")
    return 0


def _parse_t_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError as exc:
        raise ConfigError(f"--t-range expects LO:HI, got {text!r}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sinlog",
        description="Construct and verify bounded planar elliptic solutions "
                    "with prescribed singular sets.")
    parser.add_argument("command",
                        choices=["construct", "sample", "probe", "verify",
                                 "report"])
    parser.add_argument("--config", metavar="PATH", default=None)
    parser.add_argument("--out", metavar="DIR", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--grid", type=int, default=41, metavar="N")
    parser.add_argument("--point-index", type=int, default=1, metavar="I")
    parser.add_argument("--t-range", default="10:16.2832", metavar="LO:HI")
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("--fault-inject", default=None, metavar="NAME",
                        help="test instrumentation; corrupts the named "
                             "quantity to demonstrate failure detection")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, seed=args.seed, out_dir=args.out,
                              fault_inject=args.fault_inject)
        t_lo, t_hi = _parse_t_range(args.t_range)
        if args.command == "construct":
            return cmd_construct(cfg)
        if args.command == "sample":
            return cmd_sample(cfg, args.grid)
        if args.command == "probe":
            return cmd_probe(cfg, args.point_index, t_lo, t_hi, args.samples)
        if args.command == "verify":
            return cmd_verify(cfg)
        return cmd_report(cfg, args.grid, args.point_index, t_lo, t_hi,
                          args.samples)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
