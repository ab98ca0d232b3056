"""
Command-line entry point.

    python cli.py spectrum   --config configs/reference.toml --out spectrum.csv
    python cli.py map        --config configs/reference.toml --mode numeric
    python cli.py extinction --config configs/reference.toml
    python cli.py evolve     --config configs/reference.toml
    python cli.py fit        --config configs/reference.toml --trace spectrum.csv
    python cli.py control    --config configs/reference.toml
    python cli.py atom-info  --config configs/reference.toml

Every data file starts with ``#`` lines echoing the resolved configuration.
Exit codes: 0 ok, 2 configuration error, 3 domain error, 4 I/O error. On
failure a single ``error: <ErrorClass>: <message>`` line goes to stderr.
"""

import argparse
import logging
import math
import sys
from typing import Callable, Optional

import numpy as np
import pandas as pd

from config import RunConfig, load_config
from core.atom import basis_state, positivity_caveats, validate_atom
from core.errors import ConfigError, EITError, GridTooCoarse, IoError
from core.experiments import (
    DipSplitting,
    contrast,
    control_ladder,
    dip_splitting,
    extinction_curve,
    sweep_control,
    sweep_map,
    sweep_probe,
)
from core.fit import Trace, fit_eit, fit_two_level, parametric_bootstrap
from core.scattering import coupling_to_rate, rate_to_coupling
from core.solver import EvolveConfig, stability_bound, trajectory
from settings import configure_logging
from utils.csv_io import format_value, read_trace_csv, render_table, write_text
from utils.units import angular_to_hz, angular_to_mhz

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4


def _spectrum_frame(result) -> pd.DataFrame:
    t = result.transmission()
    return pd.DataFrame({
        "delta_p_over_2pi_hz": angular_to_hz(result.grid.values1),
        "re_t": t.real,
        "im_t": t.imag,
        "T": result.power(),
    })


def _splitting_footer(result) -> list[str]:
    if result.base_drive.delta_c != 0:
        return []
    try:
        found = dip_splitting(result)
    except GridTooCoarse as exc:
        return [f"dip_splitting = unresolved ({exc})"]
    if not isinstance(found, DipSplitting):
        return [f"dip_splitting = none ({found.minima} minimum)"]
    low, high = angular_to_hz(np.array(found.positions))
    return [
        f"dip_positions_over_2pi_hz = {format_value(low)}, {format_value(high)}",
        f"dip_splitting_over_2pi_hz = {format_value(high - low)}",
    ]


def cmd_spectrum(config: RunConfig) -> str:
    """Probe spectrum; with grid.control_ladder set, one block per Ω_c."""
    atom = config.atom_spec()
    drive = config.drive_spec(atom)
    delta_p = config.grid.delta_p_values()
    mode = config.sweep_mode

    footer = []
    if config.grid.control_ladder is None:
        result = sweep_probe(atom, drive, delta_p, mode)
        frame = _spectrum_frame(result)
        footer = _splitting_footer(result)
    else:
        blocks = []
        for result in control_ladder(atom, drive, delta_p, config.control_ladder(), mode):
            block = _spectrum_frame(result)
            block.insert(0, "omega_c_over_2pi_hz", angular_to_hz(result.base_drive.omega_c_rabi))
            blocks.append(block)
        frame = pd.concat(blocks, ignore_index=True)
    return render_table(frame, header=config.echo(), footer=footer)


def cmd_map(config: RunConfig) -> str:
    """Power transmission over (Ω_c, δω_p) in long format."""
    atom = config.atom_spec()
    result = sweep_map(
        atom, config.drive_spec(atom), config.grid.delta_p_values(),
        config.grid.omega_c_values(), config.sweep_mode,
    )
    delta_p, omega_c = np.meshgrid(result.grid.values1, result.grid.values2)
    frame = pd.DataFrame({
        "omega_c_over_2pi_hz": angular_to_hz(omega_c.ravel()),
        "delta_p_over_2pi_hz": angular_to_hz(delta_p.ravel()),
        "T": result.power().ravel(),
    })
    return render_table(frame, header=config.echo())


def cmd_extinction(config: RunConfig) -> str:
    """Resonant T(Ω_c) with the ideal-limit companion and a contrast summary."""
    atom = config.atom_spec()
    result = extinction_curve(atom, config.grid.omega_c_values(), config.sweep_mode, config.drive_spec(atom))
    t = result.transmission()
    frame = pd.DataFrame({
        "omega_c_over_2pi_hz": angular_to_hz(result.grid.values1),
        "re_t": t.real,
        "im_t": t.imag,
        "T": result.power(),
        "T_ideal": result.ideal,
    })
    footer = [
        f"contrast = {format_value(contrast(result))}",
        f"contrast_ideal = {format_value(contrast(result, which='ideal'))}",
    ]
    return render_table(frame, header=config.echo(), footer=footer)


def cmd_control(config: RunConfig) -> str:
    """|t/t₀| of the fixed probe against control detuning."""
    atom = config.atom_spec()
    result = sweep_control(atom, config.drive_spec(atom), config.grid.delta_c_values(), config.sweep_mode)
    frame = pd.DataFrame({
        "delta_c_over_2pi_hz": angular_to_hz(result.grid.values1),
        "abs_t_over_t0": result.ratio(),
    })
    return render_table(frame, header=config.echo())


def cmd_evolve(config: RunConfig) -> str:
    """Populations and |ρ₂₁| against time from a basis state."""
    atom = config.atom_spec()
    drive = config.drive_spec(atom)
    section = config.evolve
    if section.step is None:
        cfg = EvolveConfig.for_system(atom, drive, section.t_final)
    else:
        cfg = EvolveConfig(step=section.step, t_final=section.t_final)
    result = trajectory(atom, drive, basis_state(section.initial_level), cfg, samples=section.samples)
    populations = result.populations()
    frame = pd.DataFrame({
        "time_s": result.times,
        "rho11": populations[:, 0],
        "rho22": populations[:, 1],
        "rho33": populations[:, 2],
        "abs_rho21": np.abs(result.coherence(2, 1)),
    })
    footer = [f"step = {format_value(cfg.step)}",
              f"stability_bound = {format_value(stability_bound(atom, drive))}"]
    return render_table(frame, header=config.echo(), footer=footer)


def _fit(config: RunConfig, trace: Trace):
    if config.fit.model == "eit":
        atom = config.atom_spec()
        known = {"gamma_rel_21": atom.gamma_rel_21, "gamma_deph_21": atom.gamma_deph_21}
        return fit_eit(trace, known, delta_c=config.drive.delta_c)
    return fit_two_level(trace)


def cmd_fit(config: RunConfig, trace_path: Optional[str] = None) -> str:
    """
    Fit a trace CSV; human-readable summary followed by a key=value block.
    """
    path = trace_path or config.fit.trace
    if path is None:
        raise ConfigError("fit needs a trace: pass --trace PATH or set fit.trace")
    trace = read_trace_csv(path)
    if config.fit.residual == "magnitude" and not trace.magnitude_only:
        trace = Trace.from_magnitude(trace.detunings, trace.magnitude, trace.weights)
    report = _fit(config, trace)

    lines = [f"# {line}" for line in config.echo()]
    lines.append(f"# trace = {path} ({len(trace)} points, {report.residual_kind} residuals)")
    lines.append(f"Fit of the {report.model.replace('_', '-')} line shape")
    for name, value in report.estimates.items():
        sigma = report.uncertainties.get(name, math.nan)
        lines.append(f"  {name:<16s} {value:.6e} +/- {sigma:.2e}  (2pi x {angular_to_mhz(value):.4f} MHz)")
    lines.append(f"  uncertainties: {report.uncertainty_method}")
    lines.append(f"  {'converged' if report.converged else 'NOT converged'} after "
                 f"{report.iterations} iteration(s), residual norm {report.residual_norm:.3e}")
    for note in report.warnings:
        lines.append(f"  warning: {note}")

    lines.append("[result]")
    lines.extend(report.as_key_values())

    if config.fit.bootstrap_runs > 0:
        rng = np.random.default_rng(config.seed if config.seed is not None else 0)
        summary = parametric_bootstrap(report, trace, config.fit.bootstrap_runs, rng)
        lines.append("[bootstrap]")
        lines.append(f"runs={summary.runs}")
        lines.append(f"failures={summary.failures}")
        lines.append(f"noise={format_value(summary.noise)}")
        for name in report.estimates:
            lines.append(f"{name}_mean={format_value(summary.mean[name])}")
            lines.append(f"{name}_std={format_value(summary.std[name])}")
    return "\n".join(lines) + "\n"


def cmd_atom_info(config: RunConfig) -> str:
    """Derived quantities of the configured atom."""
    atom = config.atom_spec()
    lines = [f"# {line}" for line in config.echo()]

    coupling = rate_to_coupling(atom.gamma_rel_21, atom.persistent_current, atom.omega21,
                                atom.line_impedance) if atom.gamma_rel_21 > 0 else 0.0
    lines.append(f"mutual_inductance_from_gamma_rel_21={format_value(coupling)}")
    if atom.mutual_inductance > 0 and atom.persistent_current > 0:
        rate = coupling_to_rate(atom.mutual_inductance, atom.persistent_current, atom.omega21,
                                atom.line_impedance)
        lines.append(f"gamma_rel_21_from_mutual_inductance={format_value(rate)}")
    lines.append(f"radiative_bound_21={format_value(atom.gamma_rel_21 / 2)}")
    lines.append(f"radiative_bound_32={format_value((atom.gamma_rel_21 + atom.gamma_rel_32) / 2)}")
    violations = validate_atom(atom)
    lines.append(f"bounds_ok={'true' if not violations else 'false'}")
    lines.extend(f"violation={v}" for v in violations)
    lines.append(f"defaulted={','.join(atom.defaulted) if atom.defaulted else 'none'}")
    for name in atom.defaulted:
        lines.append(f"{name}={format_value(getattr(atom, name))}")
    lines.extend(f"caveat={c}" for c in positivity_caveats(atom))
    return "\n".join(lines) + "\n"


COMMANDS: dict[str, Callable[..., str]] = {
    "spectrum": cmd_spectrum,
    "map": cmd_map,
    "extinction": cmd_extinction,
    "evolve": cmd_evolve,
    "fit": cmd_fit,
    "control": cmd_control,
    "atom-info": cmd_atom_info,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eit-ladder",
        description="Single-atom EIT in an open transmission line: spectra, maps, fits.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (default: reference values)")
    common.add_argument("--out", help="output file (default: fit/output.path or stdout)")
    common.add_argument("--mode", choices=("analytic", "numeric"), help="override the evaluation mode")
    common.add_argument("--seed", type=int, help="override the random seed")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        command = sub.add_parser(name, parents=[common], help=(handler.__doc__ or "").strip().splitlines()[0])
        if name == "fit":
            command.add_argument("--trace", help="trace CSV (default: fit.trace)")
    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    changes = {}
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.seed is not None:
        changes["seed"] = args.seed
    return config.model_copy(update=changes) if changes else config


def run(argv: Optional[list[str]] = None) -> int:
    """Run the CLI and return the exit code."""
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else None)

    try:
        config = _apply_overrides(load_config(args.config), args)
        if args.command == "fit":
            text = cmd_fit(config, args.trace)
        else:
            text = COMMANDS[args.command](config)
        destination = args.out or config.output.path
        write_text(text, destination)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except IoError as exc:
        return _fail(exc, EXIT_IO)
    except EITError as exc:
        return _fail(exc, EXIT_DOMAIN)
    except ValueError as exc:
        logger.debug("Command failed", exc_info=exc)
        print(f"error: ValueError: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def _fail(exc: EITError, code: int) -> int:
    logger.debug("Command failed", exc_info=exc)
    print(f"error: {exc.error_class}: {exc}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
