"""Command-line entry point.

Subcommands:
    sweep       angular sweep from a TOML config, write CSV + SVG
    reproduce   run a built-in figure preset by name
    negativity  time series of the entanglement negativity for a config
    scan        threshold scan over k / noise / dephasing rates
    validate    parse and validate a config file

All output lands under --out; exit status is 0 on success, 1 on any error,
2 on usage errors.  The pipeline is deterministic (no RNG anywhere), so
repeated runs produce identical files.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .dynamics import evolve
from .experiments import (FIGURES, ScenarioConfig, angular_sweep,
                          default_angle_grid, preset_tables,
                          sweep_with_reference, threshold_scan)
from .observables import negativity
from .output import (Table, render_plot, scan_table, sweep_table,
                     trajectory_table, write_csv, write_figure)
from .spin import initial_state

_SCAN_AXES = {"k": "k", "noise": "gamma_noise", "dephasing": "gamma_z"}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rpcompass",
        description="radical-pair compass simulator: singlet yields, noise "
                    "robustness and entanglement")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="angular yield sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("reproduce", help="run a built-in figure preset")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--out", default="out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--angles", type=int, default=91,
                   help="angle grid size for the preset sweeps")

    p = sub.add_parser("negativity",
                       help="negativity time series at the configured angle")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")

    p = sub.add_parser("scan", help="threshold scan along one rate axis")
    p.add_argument("--axis", choices=sorted(_SCAN_AXES), required=True)
    p.add_argument("--grid", required=True,
                   help="comma-separated rate values, e.g. 1e3,1e4,1e5")
    p.add_argument("--config", default=None,
                   help="scenario config; default: reference model with "
                        "perpendicular rf on a 31-angle grid")
    p.add_argument("--out", default="out")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("validate", help="validate a config file")
    p.add_argument("--config", required=True)
    return parser


def _cmd_sweep(args):
    cfg = load_config(args.config)
    if cfg.rf_mode != "off":
        result = sweep_with_reference(cfg, args.threads)
    else:
        result = angular_sweep(cfg, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(sweep_table(result), out / f"{cfg.name}.csv")
    svg_path = render_plot(sweep_table(result), "sweep",
                           out / f"{cfg.name}.svg")
    print(csv_path)
    print(svg_path)
    return 0


def _cmd_reproduce(args):
    for stem, comments, columns, style in preset_tables(
            args.figure, threads=args.threads, angles=args.angles):
        for path in write_figure(stem, comments, columns, style, args.out):
            print(path)
    return 0


def _cmd_negativity(args):
    cfg = load_config(args.config)
    solver = replace(cfg.solver, store_trajectory=True)
    f = cfg.field_for_angle(cfg.field_spec.theta_static)
    if not f.has_rf:
        # exact propagation; rk4 states are not negativity-grade
        solver = replace(solver, method="expm-piecewise")
    rho0 = initial_state(cfg.model, cfg.initial_kind)
    traj = evolve(rho0, cfg.model, f, solver,
                  noise=cfg.noise_on, dephasing=cfg.dephasing_on)
    n_nuc = cfg.model.n_nuclei
    table = trajectory_table(traj)
    table.columns["negativity_standard"] = [
        negativity(rho, n_nuc) for rho in traj.states]
    table.columns["negativity_paper"] = [
        negativity(rho, n_nuc, convention="paper") for rho in traj.states]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(write_csv(table, out / f"{cfg.name}-negativity.csv"))
    neg_only = Table(columns={"time_s": table.columns["time_s"],
                              "negativity_standard":
                                  table.columns["negativity_standard"],
                              "negativity_paper":
                                  table.columns["negativity_paper"]},
                     comments=table.comments)
    print(render_plot(neg_only, {"kind": "trajectory", "ylabel": "negativity"},
                      out / f"{cfg.name}-negativity.svg"))
    return 0


def _cmd_scan(args):
    try:
        grid = [float(x) for x in args.grid.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--grid is not a comma-separated number list: "
                          f"{args.grid!r}") from None
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ScenarioConfig(name=f"scan-{args.axis}",
                             angle_grid=default_angle_grid(31),
                             rf_mode="perpendicular")
    scan = threshold_scan(_SCAN_AXES[args.axis], grid, cfg, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(write_csv(scan_table(scan), out / f"scan-{args.axis}.csv"))
    for key, val in scan.summary.items():
        print(f"{key} = {val:.6g}")
    return 0


def _cmd_validate(args):
    cfg = load_config(args.config)
    print(f"ok: scenario {cfg.name!r}, {len(cfg.angle_grid)} angles, "
          f"channels {cfg.channels}, rf_mode {cfg.rf_mode}")
    return 0


_COMMANDS = {"sweep": _cmd_sweep, "reproduce": _cmd_reproduce,
             "negativity": _cmd_negativity, "scan": _cmd_scan,
             "validate": _cmd_validate}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run():
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
