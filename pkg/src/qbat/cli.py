"""Command-line entry point: ``qbat <subcommand> [options]``.

Failures print exactly one line ``qbat: error: <kind>: <message>`` to
stderr and exit nonzero (2 for bad input, 1 for runtime failures).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import io
from .core import DomainError, LabFrameDrive, PulseShape
from .dynamics import IntegrationDiverged, evolve_lab_frame_equivalence, evolve_schedule
from .metrics import ChargingReport, trajectory_table
from .spectral import is_adiabatic
from .sweeps import baseline_ratio, contour, sweep_phi, sweep_tau

COMMANDS = ("simulate", "sweep-tau", "sweep-phi", "contour", "ratio", "validate")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--shape13", help="zero | sin | one_minus_cos_pow")
    common.add_argument("--n", type=int, help="exponent for one_minus_cos_pow")
    common.add_argument("--phi", type=float, help="global drive phase in radians")
    common.add_argument("--tau", type=float, help="protocol duration in 1/Omega0")
    common.add_argument("--grid-points", type=int, help="points in the swept grid(s)")

    parser = _Parser(prog="qbat", description="Closed-loop three-level quantum battery simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="time series of one charging run")
    sub.add_parser("sweep-tau", parents=[common], help="ergotropy and power versus Omega0*tau")
    sub.add_parser("sweep-phi", parents=[common], help="maximum power versus phase")
    sub.add_parser("contour", parents=[common], help="energy and power over (phi, Omega0*tau)")
    sub.add_parser("ratio", parents=[common], help="closed/open maximum power ratio")
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    return parser


def load_config(args) -> io.RunConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = io.parse_config(fh.read())
    else:
        cfg = io.RunConfig()
    sched = cfg.schedule
    if args.shape13 is not None or args.n is not None:
        name = args.shape13 if args.shape13 is not None else sched.shape13.kind.value
        n = args.n if args.n is not None else sched.shape13.n
        sched = replace(sched, shape13=io.parse_shape(name, "--shape13", n))
    if args.phi is not None:
        sched = replace(sched, phi=io._number(args.phi, "--phi"))
    if args.tau is not None:
        sched = replace(sched, tau=io._number(args.tau, "--tau", positive=True))
    cfg = replace(cfg, schedule=sched)
    if args.grid_points is not None:
        pts = io._integer(args.grid_points, "--grid-points")
        tg = cfg.tau_grid if isinstance(cfg.tau_grid, dict) else io.DEFAULT_TAU_GRID
        pg = cfg.phi_grid if isinstance(cfg.phi_grid, dict) else io.DEFAULT_PHI_GRID
        if args.command in ("sweep-tau", "contour"):
            cfg = replace(cfg, tau_grid={**tg, "points": pts})
        if args.command in ("sweep-phi", "contour"):
            cfg = replace(cfg, phi_grid={**pg, "points": pts})
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def _emit(header, rows, out, stdout):
    if out:
        io.write_csv(header, rows, out)
    else:
        stdout.write(io.csv_text(header, rows))


def run(argv, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        return _dispatch(args.command, cfg, stdout, stderr)
    except (UsageError, io.ConfigError, DomainError) as exc:
        kind = getattr(exc, "kind", "usage" if isinstance(exc, UsageError) else "validation")
        stderr.write(f"qbat: error: {kind}: {_one_line(exc)}\n")
        return 2
    except FileNotFoundError as exc:
        stderr.write(f"qbat: error: io: {_one_line(exc)}\n")
        return 2
    except IntegrationDiverged as exc:
        stderr.write(f"qbat: error: integration-diverged: {_one_line(exc)}\n")
        return 1
    except (OSError, ArithmeticError, ValueError) as exc:
        stderr.write(f"qbat: error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 1


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


def _dispatch(command, cfg: io.RunConfig, stdout, stderr) -> int:
    sp, sched = cfg.spectrum, cfg.schedule
    if command == "simulate":
        if cfg.integrator.picture == "lab":
            drive = LabFrameDrive.resonant(sched, sp)
            traj, _ = evolve_lab_frame_equivalence(sp, drive, config=cfg.integrator)
        else:
            traj = evolve_schedule(sched, config=cfg.integrator)
        rep = ChargingReport.from_trajectory(traj, sp)
        _emit(io.SIMULATE_HEADER, trajectory_table(traj, sp), cfg.out, stdout)
        note = "" if is_adiabatic(sched) else " (non-adiabatic: Omega0*tau < 10)"
        stderr.write(
            f"omega0_tau={io.format_value(sched.omega0_tau)} ergotropy={io.format_value(rep.ergotropy)} "
            f"power={io.format_value(rep.avg_power)}{note}\n"
        )
    elif command == "sweep-tau":
        res = sweep_tau(sched, sp, cfg.tau_values(), cfg.integrator)
        _emit(io.TAU_SWEEP_HEADER, res.rows(), cfg.out, stdout)
    elif command == "sweep-phi":
        res = sweep_phi(sched, sp, cfg.phi_values(), cfg.search, cfg.integrator)
        _emit(io.PHI_SWEEP_HEADER, res.rows(), cfg.out, stdout)
    elif command == "contour":
        res = contour(sched, sp, cfg.phi_values(), cfg.tau_values(), cfg.integrator)
        _emit(io.CONTOUR_HEADER, res.rows(), cfg.out, stdout)
    elif command == "ratio":
        shape = sched.shape13
        if shape == PulseShape.zero():
            shape = PulseShape.sin_pi()
        res = baseline_ratio(shape, sp, sched, cfg.search, cfg.integrator)
        stdout.write(io.format_value(res.ratio) + "\n")
        stderr.write(
            f"closed p_max={io.format_value(res.closed.p_max)} at omega0_tau={io.format_value(res.closed.tau_star)}; "
            f"open p_max={io.format_value(res.open.p_max)} at omega0_tau={io.format_value(res.open.tau_star)}\n"
        )
    elif command == "validate":
        from .checks import run_checks

        results = run_checks()
        for r in results:
            stdout.write(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}\n")
        return 0 if all(r.passed for r in results) else 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
