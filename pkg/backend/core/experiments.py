"""
Parameter-sweep engine.

Each sweep evaluates the scattering model on a grid of drive parameters and
returns a SweepResult: one record per grid point plus the provenance needed
to reproduce it. A point that fails (singular system, pole of the closed
form, ...) is stored as an error record; the rest of the sweep carries on.

Grid points are independent, so sweeps can be spread over a process pool
(``workers`` argument or the EIT_WORKERS setting). Pool.map keeps the input
order and every point runs the same code on the same inputs, so results do
not depend on the degree of parallelism.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from multiprocessing import Pool
from typing import Literal, Optional, Sequence, Union

import numpy as np

from settings import get_settings
from utils.lineshape import local_minima, parabolic_vertex
from utils.units import mhz_to_angular

from . import __version__
from .atom import AtomSpec, DriveSpec
from .errors import DegenerateDenominator, EmptySweep, GridTooCoarse, SimulationError
from .scattering import (
    ScatteringPoint,
    power_transmission_ideal,
    transmission_numeric,
    transmission_weak_probe,
)

logger = logging.getLogger(__name__)

# Control amplitudes (×2π MHz) of the standard spectrum family.
DEFAULT_CONTROL_LADDER_MHZ = (0.0, 11.0, 22.0, 44.0)

# Probe amplitude, as a fraction of γ₂₁, used when none is given: deep in the
# weak-probe regime.
DEFAULT_PROBE_FRACTION = 1e-3

# Minima closer than this many grid steps cannot be told apart.
MIN_DIP_SEPARATION_STEPS = 2

# DriveSpec fields a grid axis may sweep.
SWEEPABLE = ("delta_p", "delta_c", "omega_c_rabi", "omega_p_rabi")


class SweepMode(str, Enum):
    """How each grid point is evaluated."""
    WEAK_PROBE_ANALYTIC = "weak_probe_analytic"
    FULL_NUMERIC = "full_numeric"

    @classmethod
    def parse(cls, value: Union[str, "SweepMode"]) -> "SweepMode":
        """Accept enum values, their names, or the short forms ``analytic`` / ``numeric``."""
        if isinstance(value, cls):
            return value
        short = {"analytic": cls.WEAK_PROBE_ANALYTIC, "numeric": cls.FULL_NUMERIC}
        if value in short:
            return short[value]
        try:
            return cls(value)
        except ValueError:
            raise ValueError(
                f"mode must be one of analytic, numeric, {', '.join(m.value for m in cls)}; got {value!r}"
            ) from None


def transmission(atom: AtomSpec, drive: DriveSpec, mode: SweepMode) -> ScatteringPoint:
    """Evaluate one point with the path selected by ``mode``."""
    if mode is SweepMode.FULL_NUMERIC:
        return transmission_numeric(atom, drive)
    return transmission_weak_probe(atom, drive)


def _axis_values(name: str, values: Sequence[float]) -> np.ndarray:
    if name not in SWEEPABLE:
        raise ValueError(f"axis must be one of {SWEEPABLE}, got {name!r}")
    array = np.array(values, dtype=float).ravel()
    if array.size == 0:
        raise ValueError(f"{name} grid is empty")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} grid contains non-finite values")
    if array.size > 1 and not np.all(np.diff(array) > 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """
    One- or two-axis grid over DriveSpec fields.

    Points are ordered with axis1 varying fastest, i.e. the 2-D layout is
    (len(values2), len(values1)).

    Raises:
        ValueError: If an axis is empty, not strictly increasing, or names
                    a field that cannot be swept
    """
    axis1: str
    values1: np.ndarray
    mode: SweepMode = SweepMode.WEAK_PROBE_ANALYTIC
    axis2: Optional[str] = None
    values2: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "values1", _axis_values(self.axis1, self.values1))
        object.__setattr__(self, "mode", SweepMode.parse(self.mode))
        if (self.axis2 is None) != (self.values2 is None):
            raise ValueError("axis2 and values2 must be given together")
        if self.axis2 is not None:
            if self.axis2 == self.axis1:
                raise ValueError(f"axis2 must differ from axis1 ({self.axis1!r})")
            object.__setattr__(self, "values2", _axis_values(self.axis2, self.values2))

    @property
    def shape(self) -> tuple[int, ...]:
        if self.values2 is None:
            return (self.values1.size,)
        return (self.values2.size, self.values1.size)

    def __len__(self) -> int:
        return int(np.prod(self.shape))

    def coordinates(self) -> list[tuple[float, ...]]:
        """Grid points in record order."""
        if self.values2 is None:
            return [(float(v),) for v in self.values1]
        return [(float(v1), float(v2)) for v2 in self.values2 for v1 in self.values1]

    def drive_at(self, base: DriveSpec, coordinates: tuple[float, ...]) -> DriveSpec:
        changes = {self.axis1: coordinates[0]}
        if self.axis2 is not None:
            changes[self.axis2] = coordinates[1]
        return base.replace(**changes)


@dataclass(frozen=True)
class SweepRecord:
    """
    Result at one grid point.

    Exactly one of ``point`` and ``error`` is set; ``error`` reads
    ``"<ErrorClass>: <message>"``.
    """
    coordinates: tuple[float, ...]
    point: Optional[ScatteringPoint] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.point is not None


@dataclass(frozen=True, eq=False)
class SweepResult:
    """
    Records of a sweep with its provenance.

    Attributes:
        grid: The evaluated grid
        records: One record per grid point, in grid order
        atom: Atomic parameters used
        base_drive: Drive the grid values were applied to
        mode: Evaluation path
        version: Package version that produced the result
        ideal: Companion ideal-limit power transmission, same layout as the grid
        reference: Control-off transmission that ``ratio`` normalises by
    """
    grid: SweepGrid
    records: tuple[SweepRecord, ...]
    atom: AtomSpec
    base_drive: DriveSpec
    mode: SweepMode
    version: str = __version__
    ideal: Optional[np.ndarray] = field(default=None, repr=False)
    reference: Optional[ScatteringPoint] = None

    def __post_init__(self):
        if len(self.records) != len(self.grid):
            raise ValueError(f"expected {len(self.grid)} records, got {len(self.records)}")

    def transmission(self) -> np.ndarray:
        """Complex t in grid layout; NaN where the point failed."""
        values = np.array([r.point.t if r.ok else complex(np.nan, np.nan) for r in self.records])
        return values.reshape(self.grid.shape)

    def power(self) -> np.ndarray:
        """Power transmission T in grid layout; NaN where the point failed."""
        values = np.array([r.point.T if r.ok else np.nan for r in self.records])
        return values.reshape(self.grid.shape)

    def ratio(self) -> np.ndarray:
        """|t / t₀| against the reference point."""
        if self.reference is None:
            raise ValueError("result has no reference point")
        return np.abs(self.transmission() / self.reference.t)

    @property
    def errors(self) -> list[SweepRecord]:
        return [r for r in self.records if not r.ok]


def _evaluate(task: tuple[AtomSpec, DriveSpec, SweepMode, tuple[float, ...]]) -> SweepRecord:
    """Worker entry point; module level so it pickles."""
    atom, drive, mode, coordinates = task
    try:
        point = transmission(atom, drive, mode)
    except SimulationError as exc:
        return SweepRecord(coordinates=coordinates, error=f"{exc.error_class}: {exc}")
    return SweepRecord(coordinates=coordinates, point=point)


def _evaluate_all(tasks: list, workers: Optional[int]) -> list[SweepRecord]:
    if workers is None:
        workers = get_settings().workers
    if workers > 1 and len(tasks) > 1:
        logger.debug("Evaluating %d points on %d workers", len(tasks), workers)
        with Pool(workers) as pool:
            return pool.map(_evaluate, tasks)
    return [_evaluate(task) for task in tasks]


def run_grid(
    atom: AtomSpec,
    base_drive: DriveSpec,
    grid: SweepGrid,
    workers: Optional[int] = None,
) -> SweepResult:
    """
    Evaluate every point of ``grid``.

    Args:
        atom: Atomic parameters
        base_drive: Drive whose swept fields are overridden per point
        grid: Grid and evaluation mode
        workers: Process count; None uses the EIT_WORKERS setting

    Returns:
        SweepResult with one record per point
    """
    coordinates = grid.coordinates()
    tasks = [(atom, grid.drive_at(base_drive, c), grid.mode, c) for c in coordinates]
    logger.info("Sweeping %d point(s) over %s in %s mode", len(tasks),
                grid.axis1 if grid.axis2 is None else f"{grid.axis1} x {grid.axis2}", grid.mode.value)
    records = tuple(_evaluate_all(tasks, workers))

    failed = [r for r in records if not r.ok]
    if failed:
        logger.warning("%d of %d point(s) failed; first: %s", len(failed), len(records), failed[0].error)
    return SweepResult(grid=grid, records=records, atom=atom, base_drive=base_drive, mode=grid.mode)


def sweep_probe(
    atom: AtomSpec,
    base_drive: DriveSpec,
    delta_p_grid: Sequence[float],
    mode: Union[SweepMode, str] = SweepMode.WEAK_PROBE_ANALYTIC,
    workers: Optional[int] = None,
) -> SweepResult:
    """Transmission spectrum against probe detuning."""
    grid = SweepGrid("delta_p", delta_p_grid, mode=mode)
    return run_grid(atom, base_drive, grid, workers)


def sweep_map(
    atom: AtomSpec,
    base_drive: DriveSpec,
    delta_p_grid: Sequence[float],
    omega_c_grid: Sequence[float],
    mode: Union[SweepMode, str] = SweepMode.WEAK_PROBE_ANALYTIC,
    workers: Optional[int] = None,
) -> SweepResult:
    """Transmission over probe detuning × control amplitude; layout (Ω_c, δω_p)."""
    grid = SweepGrid("delta_p", delta_p_grid, mode=mode, axis2="omega_c_rabi", values2=omega_c_grid)
    return run_grid(atom, base_drive, grid, workers)


def _ideal_power(omega_c: float, atom: AtomSpec) -> float:
    try:
        return power_transmission_ideal(omega_c, atom.gamma_rel_21, atom.gamma_deph_31)
    except DegenerateDenominator:
        return np.nan


def extinction_curve(
    atom: AtomSpec,
    omega_c_grid: Sequence[float],
    mode: Union[SweepMode, str] = SweepMode.WEAK_PROBE_ANALYTIC,
    base_drive: Optional[DriveSpec] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """
    Resonant transmission against control amplitude.

    Both detunings are forced to zero. The result carries the ideal-limit
    curve T = (Ω_c²/(2Γ₂₁γ₃₁ + Ω_c²))² in ``ideal``.

    Args:
        atom: Atomic parameters
        omega_c_grid: Control amplitudes (rad/s)
        mode: Evaluation path
        base_drive: Source of the probe amplitude for the numeric path; None
            uses Ω_p = γ₂₁ · DEFAULT_PROBE_FRACTION
        workers: Process count; None uses the EIT_WORKERS setting
    """
    if base_drive is None:
        base_drive = DriveSpec(omega_p_rabi=DEFAULT_PROBE_FRACTION * atom.gamma_deph_21)
    base = base_drive.replace(delta_p=0.0, delta_c=0.0)
    grid = SweepGrid("omega_c_rabi", omega_c_grid, mode=mode)
    result = run_grid(atom, base, grid, workers)
    ideal = np.array([_ideal_power(v, atom) for v in grid.values1])
    return SweepResult(
        grid=result.grid, records=result.records, atom=atom, base_drive=base,
        mode=result.mode, ideal=ideal,
    )


def sweep_control(
    atom: AtomSpec,
    base_drive: DriveSpec,
    delta_c_grid: Sequence[float],
    mode: Union[SweepMode, str] = SweepMode.WEAK_PROBE_ANALYTIC,
    workers: Optional[int] = None,
) -> SweepResult:
    """
    Transmission of a fixed probe while the control detuning is swept.

    The reference is the transmission with the control off, so
    ``result.ratio()`` gives |t/t₀|: the 2↔3 line seen through the probe.
    """
    grid = SweepGrid("delta_c", delta_c_grid, mode=mode)
    result = run_grid(atom, base_drive, grid, workers)
    reference = transmission(atom, base_drive.replace(omega_c_rabi=0.0), grid.mode)
    return SweepResult(
        grid=result.grid, records=result.records, atom=atom, base_drive=base_drive,
        mode=result.mode, reference=reference,
    )


def control_ladder(
    atom: AtomSpec,
    base_drive: DriveSpec,
    delta_p_grid: Sequence[float],
    omega_c_values: Optional[Sequence[float]] = None,
    mode: Union[SweepMode, str] = SweepMode.WEAK_PROBE_ANALYTIC,
    workers: Optional[int] = None,
) -> list[SweepResult]:
    """
    Family of probe spectra, one per control amplitude.

    Defaults to Ω_c/2π = 0, 11, 22, 44 MHz.
    """
    if omega_c_values is None:
        omega_c_values = [mhz_to_angular(v) for v in DEFAULT_CONTROL_LADDER_MHZ]
    return [
        sweep_probe(atom, base_drive.replace(omega_c_rabi=float(omega_c)), delta_p_grid, mode, workers)
        for omega_c in omega_c_values
    ]


def contrast(result: SweepResult, which: Literal["model", "ideal"] = "model") -> float:
    """
    Transmitted-power contrast C = (T_max − T_min) / T_max over the sweep.

    Args:
        result: Usually from extinction_curve
        which: ``"model"`` for the computed points, ``"ideal"`` for the
               companion ideal-limit curve

    Returns:
        C in [0, 1]; 0 when T_max is 0

    Raises:
        EmptySweep: If no point holds a valid value
    """
    if which == "ideal":
        if result.ideal is None:
            raise ValueError("result carries no ideal-limit curve")
        values = np.asarray(result.ideal, dtype=float).ravel()
    elif which == "model":
        values = result.power().ravel()
    else:
        raise ValueError(f"which must be 'model' or 'ideal', got {which!r}")

    values = values[np.isfinite(values)]
    if values.size == 0:
        raise EmptySweep("sweep has no valid points")
    t_max, t_min = float(values.max()), float(values.min())
    if t_max == 0.0:
        return 0.0
    return (t_max - t_min) / t_max


@dataclass(frozen=True)
class DipSplitting:
    """Two refined transmission minima, positions in rad/s (ascending)."""
    positions: tuple[float, float]
    depths: tuple[float, float]

    @property
    def splitting(self) -> float:
        return self.positions[1] - self.positions[0]


@dataclass(frozen=True)
class NoSplit:
    """Fewer than two interior minima were found."""
    minima: int = 0


def dip_splitting(result: SweepResult) -> Union[DipSplitting, NoSplit]:
    """
    Locate the two deepest transmission minima of a probe spectrum.

    Minima are found by a neighbourhood test on T and refined with a
    three-point parabola.

    Args:
        result: 1-D sweep over delta_p

    Returns:
        DipSplitting with ascending positions, or NoSplit

    Raises:
        ValueError: If the result is not a probe-detuning spectrum
        GridTooCoarse: If the two deepest minima are within 2 grid steps
    """
    grid = result.grid
    if grid.axis1 != "delta_p" or grid.axis2 is not None:
        raise ValueError("dip_splitting needs a 1-D sweep over delta_p")
    if result.base_drive.delta_c != 0:
        logger.warning("dip_splitting on a spectrum with delta_c = %g; dips are not symmetric",
                       result.base_drive.delta_c)

    x = grid.values1
    power = result.power()
    minima = local_minima(power)
    if minima.size < 2:
        return NoSplit(minima=int(minima.size))

    deepest = minima[np.argsort(power[minima], kind="stable")[:2]]
    first, second = sorted(int(i) for i in deepest)
    if second - first <= MIN_DIP_SEPARATION_STEPS:
        raise GridTooCoarse(
            f"minima at grid indices {first} and {second} are within "
            f"{MIN_DIP_SEPARATION_STEPS} steps; refine the delta_p grid"
        )
    (x1, y1), (x2, y2) = parabolic_vertex(x, power, first), parabolic_vertex(x, power, second)
    return DipSplitting(positions=(x1, x2), depths=(y1, y2))
