"""
Run configuration.

A run is described by a TOML file with the sections [atom], [drive], [grid],
[evolve], [fit] and [output], plus the top-level keys ``mode`` and ``seed``.
Values are SI and angular (rad/s). Any frequency or rate key may instead be
given as ``<key>_mhz``, meaning value/2π in MHz:

    [drive]
    omega_c_rabi_mhz = 44.0     # Ω_c = 2π·44 MHz

Unknown keys are rejected. Errors name the offending field and, where the
key can be found in the file, its line.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, ClassVar, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core import __version__
from core.atom import AtomSpec, DriveSpec, positivity_caveats, validate_atom
from core.errors import ConfigError, IoError
from core.experiments import DEFAULT_CONTROL_LADDER_MHZ, DEFAULT_PROBE_FRACTION, SweepMode
from utils.csv_io import format_value
from utils.units import mhz_to_angular

logger = logging.getLogger(__name__)


def _convert_mhz(key: str, value: Any) -> Any:
    if isinstance(value, bool):
        raise ValueError(f"{key} must be a number")
    if isinstance(value, (int, float)):
        return mhz_to_angular(value)
    if isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return [mhz_to_angular(v) for v in value]
    raise ValueError(f"{key} must be a number or a list of numbers")


class _Section(BaseModel):
    """Config section accepting ``<field>_mhz`` for its frequency fields."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    FREQUENCY_FIELDS: ClassVar[tuple[str, ...]] = ()

    @model_validator(mode="before")
    @classmethod
    def _accept_mhz(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        converted = dict(data)
        for key in list(data):
            if not key.endswith("_mhz") or key[:-4] not in cls.FREQUENCY_FIELDS:
                continue
            stem = key[:-4]
            if stem in data:
                raise ValueError(f"give either {stem} or {key}, not both")
            converted[stem] = _convert_mhz(key, converted.pop(key))
        return converted


class AtomConfig(_Section):
    """Atomic parameters; unset fields take the reference-device values."""
    FREQUENCY_FIELDS: ClassVar[tuple[str, ...]] = (
        "gamma_rel_21", "gamma_deph_21", "gamma_deph_31", "gamma_rel_32", "gamma_deph_32",
        "omega21", "omega32",
    )

    gamma_rel_21: Optional[float] = Field(default=None, description="Relaxation rate Γ21 (1/s)")
    gamma_deph_21: Optional[float] = Field(default=None, description="Damping rate γ21 (1/s)")
    gamma_deph_31: Optional[float] = Field(default=None, description="Damping rate γ31 (1/s)")
    gamma_rel_32: Optional[float] = Field(default=None, description="Relaxation rate Γ32 (1/s); default 2·Γ21")
    gamma_deph_32: Optional[float] = Field(default=None, description="Damping rate γ32 (1/s); derived by default")
    omega21: Optional[float] = Field(default=None, description="Transition frequency ω21 (rad/s)")
    omega32: Optional[float] = Field(default=None, description="Transition frequency ω32 (rad/s)")
    zeta_21: Optional[float] = Field(default=None, description="Matrix element ζ21")
    zeta_32: Optional[float] = Field(default=None, description="Matrix element ζ32")
    mutual_inductance: Optional[float] = Field(default=None, description="Mutual inductance M (H)")
    persistent_current: Optional[float] = Field(default=None, description="Persistent current i_PC (A)")
    line_impedance: Optional[float] = Field(default=None, description="Line impedance Z (Ω)")

    def to_spec(self) -> AtomSpec:
        """
        Build the AtomSpec.

        Raises:
            ConfigError: If the record violates the rate bounds
        """
        spec = AtomSpec(**self.model_dump(exclude_none=True))
        violations = validate_atom(spec)
        if violations:
            raise ConfigError("invalid [atom] section: " + "; ".join(violations))
        for name in spec.defaulted:
            logger.info("atom.%s not given; using %s 1/s", name, format_value(getattr(spec, name)))
        return spec


class DriveConfig(_Section):
    FREQUENCY_FIELDS: ClassVar[tuple[str, ...]] = ("omega_p_rabi", "omega_c_rabi", "delta_p", "delta_c")

    omega_p_rabi: Optional[float] = Field(
        default=None, ge=0.0, description="Probe Rabi amplitude (rad/s); default γ21/1000",
    )
    omega_c_rabi: float = Field(default=0.0, ge=0.0, description="Control Rabi amplitude (rad/s)")
    delta_p: float = Field(default=0.0, description="Probe detuning (rad/s)")
    delta_c: float = Field(default=0.0, description="Control detuning (rad/s)")

    def to_spec(self, atom: AtomSpec) -> DriveSpec:
        omega_p = self.omega_p_rabi
        if omega_p is None:
            omega_p = DEFAULT_PROBE_FRACTION * atom.gamma_deph_21
        return DriveSpec(
            omega_p_rabi=omega_p, omega_c_rabi=self.omega_c_rabi,
            delta_p=self.delta_p, delta_c=self.delta_c,
        )


def _linspace(lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(lo, hi, points) if points > 1 else np.array([lo])


class GridConfig(_Section):
    """Sweep axes, each given by min, max and a point count."""
    FREQUENCY_FIELDS: ClassVar[tuple[str, ...]] = (
        "delta_p_min", "delta_p_max", "omega_c_min", "omega_c_max",
        "delta_c_min", "delta_c_max", "control_ladder",
    )

    delta_p_min: float = mhz_to_angular(-80.0)
    delta_p_max: float = mhz_to_angular(80.0)
    delta_p_points: int = Field(default=641, ge=1)
    omega_c_min: float = Field(default=0.0, ge=0.0)
    omega_c_max: float = Field(default=mhz_to_angular(100.0), ge=0.0)
    omega_c_points: int = Field(default=101, ge=1)
    delta_c_min: float = mhz_to_angular(-100.0)
    delta_c_max: float = mhz_to_angular(100.0)
    delta_c_points: int = Field(default=201, ge=1)
    control_ladder: Optional[list[float]] = Field(
        default=None, description="Ω_c values of the spectrum family (rad/s)",
    )

    @model_validator(mode="after")
    def _check_ranges(self) -> "GridConfig":
        for axis in ("delta_p", "omega_c", "delta_c"):
            lo, hi = getattr(self, f"{axis}_min"), getattr(self, f"{axis}_max")
            if getattr(self, f"{axis}_points") > 1 and not hi > lo:
                raise ValueError(f"{axis}_max must exceed {axis}_min")
        if self.control_ladder is not None:
            ladder = np.asarray(self.control_ladder, dtype=float)
            if ladder.size == 0 or np.any(ladder < 0) or np.any(np.diff(ladder) <= 0):
                raise ValueError("control_ladder must be non-empty, non-negative and strictly increasing")
        return self

    def delta_p_values(self) -> np.ndarray:
        return _linspace(self.delta_p_min, self.delta_p_max, self.delta_p_points)

    def omega_c_values(self) -> np.ndarray:
        return _linspace(self.omega_c_min, self.omega_c_max, self.omega_c_points)

    def delta_c_values(self) -> np.ndarray:
        return _linspace(self.delta_c_min, self.delta_c_max, self.delta_c_points)


class EvolveSection(_Section):
    t_final: float = Field(default=1e-6, ge=0.0, description="Evolution time (s)")
    step: Optional[float] = Field(default=None, gt=0.0, description="Step (s); default 0.05/max rate")
    samples: int = Field(default=201, ge=1, description="Output rows including t=0")
    initial_level: Literal[1, 2, 3] = 1


class FitSection(_Section):
    model: Literal["two_level", "eit"] = "two_level"
    trace: Optional[str] = Field(default=None, description="Trace CSV path")
    residual: Literal["auto", "magnitude"] = Field(
        default="auto", description="'magnitude' fits |t| even when phase is present",
    )
    bootstrap_runs: int = Field(default=0, ge=0)


class OutputSection(_Section):
    path: Optional[str] = None


class RunConfig(BaseModel):
    """Complete, validated run description."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Literal["analytic", "numeric", "weak_probe_analytic", "full_numeric"] = "analytic"
    seed: Optional[int] = None
    atom: AtomConfig = AtomConfig()
    drive: DriveConfig = DriveConfig()
    grid: GridConfig = GridConfig()
    evolve: EvolveSection = EvolveSection()
    fit: FitSection = FitSection()
    output: OutputSection = OutputSection()

    @property
    def sweep_mode(self) -> SweepMode:
        return SweepMode.parse(self.mode)

    def atom_spec(self) -> AtomSpec:
        return self.atom.to_spec()

    def drive_spec(self, atom: Optional[AtomSpec] = None) -> DriveSpec:
        return self.drive.to_spec(atom or self.atom_spec())

    def control_ladder(self) -> list[float]:
        if self.grid.control_ladder is not None:
            return list(self.grid.control_ladder)
        return [mhz_to_angular(v) for v in DEFAULT_CONTROL_LADDER_MHZ]

    def echo(self) -> list[str]:
        """
        The resolved configuration as ``key = value`` lines.

        Atom fields filled in by default are marked ``(defaulted)``.
        """
        atom = self.atom_spec()
        drive = self.drive_spec(atom)
        lines = [f"eit-ladder {__version__}", f"mode = {self.sweep_mode.value}",
                 f"seed = {format_value(self.seed) if self.seed is not None else 'none'}"]
        for name in AtomConfig.model_fields:
            value = format_value(getattr(atom, name))
            lines.append(f"atom.{name} = {value}" + (" (defaulted)" if name in atom.defaulted else ""))
        for name in ("omega_p_rabi", "omega_c_rabi", "delta_p", "delta_c"):
            lines.append(f"drive.{name} = {format_value(getattr(drive, name))}")
        for section in ("grid", "evolve", "fit"):
            for name, value in getattr(self, section).model_dump().items():
                if isinstance(value, list):
                    value = "[" + ", ".join(format_value(v) for v in value) + "]"
                elif value is None:
                    value = "none"
                else:
                    value = format_value(value)
                lines.append(f"{section}.{name} = {value}")
        for caveat in positivity_caveats(atom):
            lines.append(f"caveat: {caveat}")
        return lines


def _locate(text: str, location: tuple) -> Optional[int]:
    """Line number of a ``(section, key)`` or ``(section,)`` location in TOML text."""
    keys = [str(part) for part in location if isinstance(part, str)]
    if not keys:
        return None
    section, key = (keys[0], keys[1]) if len(keys) > 1 else (None, keys[0])
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line.strip("[] ")
            if section is None and current == key:
                return number
            continue
        if current == section and line.split("=", 1)[0].strip() in (key, f"{key}_mhz"):
            return number
    return None


def _format_errors(exc: ValidationError, text: str, origin: str) -> str:
    messages = []
    for error in exc.errors():
        field = ".".join(str(part) for part in error["loc"]) or "(root)"
        line = _locate(text, error["loc"])
        where = f"{origin}:{line}: " if line else f"{origin}: "
        messages.append(f"{where}{field}: {error['msg']}")
    return "; ".join(messages)


def parse_config(text: str, origin: str = "<config>") -> RunConfig:
    """
    Parse and validate TOML text.

    Raises:
        ConfigError: On TOML syntax errors, unknown keys, or invalid values
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return config_from_dict(raw, text, origin)


def config_from_dict(raw: dict, text: str = "", origin: str = "<config>") -> RunConfig:
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, text, origin)) from exc
    config.atom_spec()
    return config


def load_config(path: Optional[Union[str, Path]]) -> RunConfig:
    """
    Load a config file; None gives the reference configuration defaults.

    Raises:
        IoError: If the file cannot be read
        ConfigError: If it does not parse or validate
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    logger.debug("Loaded config %s", path)
    return parse_config(text, origin=str(path))
