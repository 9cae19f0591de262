"""Command line interface."""

from __future__ import annotations
from argparse import ArgumentParser, Namespace
from dataclasses import dataclass, field
from logging import DEBUG, INFO, basicConfig
from os import cpu_count
from pathlib import Path
from time import perf_counter
from typing import Any, Sequence

import numpy as np

from photoemit.common import BOHR_NM, LOG_FORMAT, LOGGER
from photoemit.config import ConfigFile, keldysh
from photoemit.config import load_config, thresholds
from photoemit.exceptions import AccuracyError, SolverError, ValidationError
from photoemit.export import write_csv, write_manifest
from photoemit.figures import FIGURES, FigureOptions, FigureResult
from photoemit.figures import compare_cn, decay_table, reproduce
from photoemit.floquet import solve as solve_floquet
from photoemit.lock import Locked
from photoemit.observables import CurrentSeries, omega_scan
from photoemit.oracles import run_oracles
from photoemit.reference_cn import CNGrid
from photoemit.types import RunManifest
from photoemit.volterra import convergence_study, residual, solve
from photoemit.wavefield import rows as field_rows, sample_grid


__all__ = ["main"]


DESCRIPTION = "Exact one-dimensional photoemission from a flat metal surface."
FIELD_SAMPLES = 64
ERRORS = {
    KeyboardInterrupt: lambda error: ("Interrupted.", 1),
    ValidationError: lambda error: (str(error), 2),
    AccuracyError: lambda error: (str(error), 3),
    SolverError: lambda error: (str(error), 4),
    Locked: lambda error: (str(error), 4),
}


def float_list(text: str) -> list[float]:
    """Parse a comma-separated list of numbers."""

    return [float(item) for item in text.split(",") if item.strip()]


def get_args(argv: Sequence[str] | None = None) -> Namespace:
    """Returns the command line arguments."""

    common = ArgumentParser(add_help=False)
    common.add_argument(
        "-o", "--out", type=Path, default=Path.cwd(), metavar="dir",
        help="output directory",
    )
    common.add_argument(
        "-t", "--threads", type=int, default=cpu_count(), metavar="n",
        help="maximum number of worker threads",
    )
    common.add_argument(
        "-r", "--refine", action="store_true",
        help="double all resolutions",
    )
    common.add_argument(
        "-v", "--verbose", action="store_true", help="turn on verbose logging"
    )
    configured = ArgumentParser(add_help=False, parents=[common])
    configured.add_argument(
        "-c", "--config", type=Path, required=True, metavar="file",
        help="TOML configuration file",
    )
    configured.add_argument(
        "-p", "--periods", type=int, metavar="n", help="number of periods"
    )

    parser = ArgumentParser(description=DESCRIPTION)
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    subparsers.add_parser(
        "solve", parents=[configured], help="solve for the boundary trace"
    )
    field_parser = subparsers.add_parser(
        "field", parents=[configured], help="reconstruct ψ(x,t)"
    )
    field_parser.add_argument(
        "-x", "--x-nm", type=float_list, default=[0.0], metavar="list",
        help="comma-separated positions in nm",
    )
    floquet_parser = subparsers.add_parser(
        "floquet", parents=[configured], help="match the periodic state"
    )
    floquet_parser.add_argument(
        "-n", "--channels", type=int, metavar="N",
        help="truncation order, automatic if omitted",
    )
    subparsers.add_parser(
        "compare-cn", parents=[configured],
        help="compare against Crank–Nicolson",
    )
    scan_parser = subparsers.add_parser(
        "scan", parents=[configured], help="double average over ħω"
    )
    scan_parser.add_argument(
        "-w", "--omegas", type=float_list, required=True, metavar="list",
        help="comma-separated photon energies in eV",
    )
    subparsers.add_parser(
        "decay", parents=[configured], help="decay rate of ⟨j⟩_t"
    )
    reproduce_parser = subparsers.add_parser(
        "reproduce", parents=[common], help="reproduce a published figure"
    )
    reproduce_parser.add_argument(
        "figure", choices=sorted(FIGURES), help="figure name"
    )
    reproduce_parser.add_argument(
        "-p", "--periods", type=int, metavar="n", help="override the periods"
    )
    subparsers.add_parser(
        "oracles", parents=[common], help="run the reference checks"
    )
    return parser.parse_args(argv)


@dataclass
class Outcome:
    """Exit code and message of a run with exception mapping."""

    exit_code: int = 0
    message: str | None = None
    outputs: list[str] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __enter__(self):
        """Enters a context and returns itself."""
        return self

    def __exit__(self, typ, value, traceback):
        """Maps the respective exceptions onto exit codes."""
        if typ is None:
            return False

        for base in typ.__mro__:
            if (function := ERRORS.get(base)) is not None:
                self.message, self.exit_code = function(value)
                LOGGER.error("%s", self.message)
                return True

        if issubclass(typ, Exception):
            LOGGER.critical("Internal error.", exc_info=(typ, value,
                                                         traceback))
            self.message, self.exit_code = str(value), 5
            return True

        return False

    def write(self, directory: Path, name: str, header: list[str],
              rows) -> None:
        """Write a CSV file and remember it."""
        write_csv(directory / name, header, rows)
        self.outputs.append(name)


def _materialized(config: ConfigFile, args: Namespace) -> ConfigFile:
    """Apply command line overrides to the configuration."""

    solver = config.solver.refined() if args.refine else config.solver
    floquet = config.floquet

    if getattr(args, "channels", None) is not None:
        floquet = floquet._replace(channels=args.channels)

    return config._replace(solver=solver, floquet=floquet)


def _config_json(config: ConfigFile) -> dict[str, Any]:
    """Resolved configuration with all defaults."""

    return {
        "physical": config.physical.to_json(),
        "solver": config.solver._asdict(),
        "floquet": config.floquet._asdict(),
        "grid": CNGrid.from_dict(config.grid)._asdict(),
    }


def _periods(args: Namespace, default: int) -> int:
    """Number of periods requested or the default."""

    if (periods := args.periods) is None:
        return default

    if periods < 1:
        raise ValidationError(f"number of periods must be positive: {periods}")

    return periods


def _options(config: ConfigFile, args: Namespace,
             periods: int | None = None) -> FigureOptions:
    return FigureOptions(periods, config.solver,
                         CNGrid.from_dict(config.grid), args.threads)


def _add_result(outcome: Outcome, directory: Path,
                result: FigureResult) -> None:
    outcome.write(directory, f"{result.name}.csv", result.header,
                  result.rows)
    outcome.diagnostics[result.name] = result.diagnostics


def run_solve(config: ConfigFile, args: Namespace, outcome: Outcome):
    """Solve for ψ₀ and write the trace and the interface current."""

    physical = config.physical
    final_time = _periods(args, 3) * physical.period_au
    trace = solve(physical, final_time, config.solver)
    series = CurrentSeries.from_trace(trace, final_time)
    outcome.write(args.out, "trace.csv",
                  ["t", "t_over_tau", "re_psi0", "im_psi0", "re_dpsi0",
                   "im_dpsi0"], trace.rows(series.times))
    outcome.write(args.out, "current.csv", ["t", "t_over_tau", "j_over_k"],
                  series.normalized(physical.k).rows())
    checkpoints = np.linspace(0, final_time, 9)[1:]
    outcome.diagnostics.update(
        windows=len(trace),
        residual=residual(trace, checkpoints),
        thresholds=thresholds(physical)._asdict(),
        keldysh=keldysh(physical) if physical.E_au else None,
    )

    if args.refine:
        report = convergence_study(physical, final_time, config.solver)
        outcome.diagnostics["convergence"] = report._asdict()


def run_field(config: ConfigFile, args: Namespace, outcome: Outcome):
    """Reconstruct the wave field at the requested positions."""

    physical = config.physical
    final_time = _periods(args, 3) * physical.period_au
    trace = solve(physical, final_time, config.solver)
    step = physical.period_au / FIELD_SAMPLES
    times = np.arange(round(final_time / step) + 1) * step
    positions = [x / BOHR_NM for x in args.x_nm]
    samples = sample_grid(trace, positions, times, threads=args.threads)
    outcome.write(args.out, "field.csv",
                  ["x", "x_nm", "t", "t_over_tau", "re_psi", "im_psi",
                   "j_over_k"],
                  field_rows(samples, physical.period_au, physical.k))
    outcome.diagnostics["windows"] = len(trace)


def run_floquet(config: ConfigFile, args: Namespace, outcome: Outcome):
    """Match the periodic state and write the channel table."""

    solution = solve_floquet(config.physical, config.floquet)
    outcome.write(args.out, "floquet.csv",
                  ["m", "re_kappa", "im_kappa", "re_r", "im_r", "re_t",
                   "im_t", "open", "current"], solution.rows())
    outcome.diagnostics.update(
        order=solution.order,
        condition=solution.condition,
        digits=solution.digits,
        flux_defect=solution.flux_defect,
        transmitted_flux=solution.transmitted_flux,
        reflected_flux=solution.reflected_flux,
        left_current=solution.left_current,
    )


def run_compare_cn(config: ConfigFile, args: Namespace, outcome: Outcome):
    """Compare the interface current against Crank–Nicolson."""

    _add_result(outcome, args.out, compare_cn(
        "compare_cn", config.physical, _periods(args, 1),
        _options(config, args)))


def run_scan(config: ConfigFile, args: Namespace, outcome: Outcome):
    """Double average of the current over a list of photon energies."""

    points = omega_scan(config.physical, args.omegas,
                        periods=_periods(args, 12), settings=config.solver,
                        threads=args.threads)
    outcome.write(args.out, "scan.csv",
                  ["photon_energy_ev", "detuning_ev", "double_average",
                   "double_average_over_eps2", "error"],
                  (point.to_row() for point in points))
    outcome.diagnostics["failed"] = sum(
        point.error is not None for point in points)


def run_decay(config: ConfigFile, args: Namespace, outcome: Outcome):
    """Per-period spread of the running average and its power law."""

    _add_result(outcome, args.out, decay_table(
        "decay", config.physical, _periods(args, 48),
        _options(config, args)))


def run_reproduce(args: Namespace, outcome: Outcome) -> dict[str, Any]:
    """Reproduce one registered figure."""

    settings = FigureOptions().settings
    options = FigureOptions(
        _periods(args, FIGURES[args.figure].periods),
        settings.refined() if args.refine else settings,
        threads=args.threads,
    )
    result = reproduce(args.figure, options)
    _add_result(outcome, args.out, result)
    return {"figure": args.figure, "parameters": result.parameters,
            "solver": options.settings._asdict(),
            "periods": options.periods}


def run_oracles_command(args: Namespace, outcome: Outcome) -> None:
    """Run the reference checks and write the report."""

    reports = run_oracles()
    outcome.write(args.out, "oracles.csv",
                  ["name", "re_oracle", "im_oracle", "re_production",
                   "im_production", "abs_error", "rel_error", "tolerance",
                   "passed"], (report.to_row() for report in reports))
    failed = [report.name for report in reports if not report.passed]
    outcome.diagnostics["failed"] = failed

    for name in failed:
        LOGGER.error("Oracle failed: %s", name)

    if failed:
        outcome.exit_code = 3


COMMANDS = {
    "solve": run_solve,
    "field": run_field,
    "floquet": run_floquet,
    "compare-cn": run_compare_cn,
    "scan": run_scan,
    "decay": run_decay,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Main method to run."""

    args = get_args(argv)
    basicConfig(level=DEBUG if args.verbose else INFO, format=LOG_FORMAT)
    start = perf_counter()
    resolved: dict[str, Any] = {}

    with Outcome() as outcome:
        if args.threads is not None and args.threads < 1:
            raise ValidationError(f"thread count must be positive: "
                                  f"{args.threads}")

        if args.subcommand == "reproduce":
            resolved = run_reproduce(args, outcome)
        elif args.subcommand == "oracles":
            run_oracles_command(args, outcome)
        else:
            config = _materialized(load_config(args.config), args)
            resolved = _config_json(config)
            COMMANDS[args.subcommand](config, args, outcome)

    wall_time = perf_counter() - start

    if outcome.exit_code in {0, 3} and outcome.outputs:
        write_manifest(args.out, RunManifest(
            args.subcommand, resolved, outcome.outputs, outcome.diagnostics,
            {"wall_time_s": wall_time}))

    LOGGER.info("Finished %s with exit code %i after %.1f s.",
                args.subcommand, outcome.exit_code, wall_time)
    return outcome.exit_code
