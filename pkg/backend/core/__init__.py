"""
Core simulation components for a single three-level ladder atom in an open
transmission line: master equation, steady-state and time-domain solvers,
scattering observables, parameter sweeps and line-shape fitting.
"""

__version__ = "1.0.0"

from .errors import (
    EITError,
    SimulationError,
    SingularSystem,
    StepTooLarge,
    PositivityLost,
    ZeroProbe,
    DegenerateDenominator,
    EmptySweep,
    GridTooCoarse,
    BadTrace,
    ConfigError,
    IoError,
    IdentifiabilityWarning,
    NotConvergedWarning,
    PositivityWarning,
)
from .atom import (
    AtomSpec,
    DriveSpec,
    DensityMatrix,
    basis_state,
    reference_atom,
    build_hamiltonian,
    lindblad_apply,
    master_rhs,
    validate_atom,
    positivity_caveats,
)
from .solver import (
    Liouvillian,
    EvolveConfig,
    Trajectory,
    build_liouvillian,
    steady_state,
    evolve,
    trajectory,
)
from .scattering import (
    ScatteringPoint,
    transmission_numeric,
    transmission_weak_probe,
    transmission_saturated_two_level,
    power_transmission_ideal,
    coupling_to_rate,
    rate_to_coupling,
    rabi_from_current,
    rabi_from_power,
)
from .experiments import (
    SweepMode,
    SweepGrid,
    SweepRecord,
    SweepResult,
    DipSplitting,
    NoSplit,
    sweep_probe,
    sweep_map,
    extinction_curve,
    sweep_control,
    control_ladder,
    contrast,
    dip_splitting,
)
from .fit import (
    Trace,
    FitReport,
    BootstrapSummary,
    fit_two_level,
    fit_eit,
    synthesize_trace,
    parametric_bootstrap,
)

__all__ = [
    '__version__',
    # Errors
    'EITError',
    'SimulationError',
    'SingularSystem',
    'StepTooLarge',
    'PositivityLost',
    'ZeroProbe',
    'DegenerateDenominator',
    'EmptySweep',
    'GridTooCoarse',
    'BadTrace',
    'ConfigError',
    'IoError',
    'IdentifiabilityWarning',
    'NotConvergedWarning',
    'PositivityWarning',
    # Atom model
    'AtomSpec',
    'DriveSpec',
    'DensityMatrix',
    'basis_state',
    'reference_atom',
    'build_hamiltonian',
    'lindblad_apply',
    'master_rhs',
    'validate_atom',
    'positivity_caveats',
    # Solvers
    'Liouvillian',
    'EvolveConfig',
    'Trajectory',
    'build_liouvillian',
    'steady_state',
    'evolve',
    'trajectory',
    # Scattering
    'ScatteringPoint',
    'transmission_numeric',
    'transmission_weak_probe',
    'transmission_saturated_two_level',
    'power_transmission_ideal',
    'coupling_to_rate',
    'rate_to_coupling',
    'rabi_from_current',
    'rabi_from_power',
    # Sweeps
    'SweepMode',
    'SweepGrid',
    'SweepRecord',
    'SweepResult',
    'DipSplitting',
    'NoSplit',
    'sweep_probe',
    'sweep_map',
    'extinction_curve',
    'sweep_control',
    'control_ladder',
    'contrast',
    'dip_splitting',
    # Fitting
    'Trace',
    'FitReport',
    'BootstrapSummary',
    'fit_two_level',
    'fit_eit',
    'synthesize_trace',
    'parametric_bootstrap',
]
