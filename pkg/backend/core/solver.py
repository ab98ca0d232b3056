"""
Steady-state and time-domain solvers for the ladder-atom master equation.

The density matrix is vectorized column-major (ρ_ij sits at index i + 3j),
so that vec(AρB) = (Bᵀ ⊗ A) vec(ρ). The Liouvillian is the 9×9 matrix of
dρ/dt in that basis.

Two independent routes to the stationary state are provided:
- steady_state: direct linear solve with one row replaced by the trace constraint
- evolve: fixed-step classical RK4 integration from an initial state
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .atom import (
    LEVELS,
    POSITIVITY_TOL,
    AtomSpec,
    DensityMatrix,
    DriveSpec,
    OperatorMatrix,
    RhoLike,
    as_array,
    build_hamiltonian,
    lindblad_apply,
    positivity_caveats,
)
from .errors import PositivityLost, PositivityWarning, SingularSystem, StepTooLarge

logger = logging.getLogger(__name__)

DIM = LEVELS * LEVELS

# Indices of ρ11, ρ22, ρ33 in the column-major vector.
_DIAGONAL = np.array([i + LEVELS * i for i in range(LEVELS)])
# vec(ρ)[_TRANSPOSE] is vec(ρᵀ).
_TRANSPOSE = np.array([(k // LEVELS) + LEVELS * (k % LEVELS) for k in range(DIM)])

STABILITY_FACTOR = 0.05
SINGULAR_CONDITION = 1e12
EVOLVE_POSITIVITY_TOL = 1e-6
EVOLVE_TRACE_TOL = 1e-9
# Full eigenvalue check cadence; the diagonal is checked every step.
_EIGEN_CHECK_EVERY = 64


def vectorize(rho: RhoLike) -> np.ndarray:
    """Column-major vectorization vec(ρ)."""
    return as_array(rho).reshape(DIM, order="F")


def unvectorize(vector: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    return np.asarray(vector).reshape(LEVELS, LEVELS, order="F")


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """
    Linear generator of the master equation acting on vec(ρ).

    Attributes:
        matrix: 9×9 complex matrix (1/s), column-major vectorization
        atom: Rates the dissipator was built from, if known
    """
    matrix: np.ndarray
    atom: Optional[AtomSpec] = None

    def apply(self, rho: RhoLike) -> OperatorMatrix:
        """dρ/dt as a 3×3 matrix."""
        return unvectorize(self.matrix @ vectorize(rho))

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted by increasing magnitude."""
        values = linalg.eigvals(self.matrix)
        return values[np.argsort(np.abs(values))]

    def kernel_state(self) -> DensityMatrix:
        """
        Eigenvector of the eigenvalue closest to zero, normalised to unit trace.

        Positivity is judged as in :func:`steady_state`.

        Raises:
            SingularSystem: If that eigenvector has zero trace
            PositivityLost: If the state is not physical for an atom without caveats
        """
        values, vectors = linalg.eig(self.matrix)
        index = int(np.argmin(np.abs(values)))
        rho = unvectorize(vectors[:, index])
        trace = np.trace(rho)
        if abs(trace) < 1e-14:
            raise SingularSystem("Zero-eigenvalue mode of the Liouvillian is traceless")
        rho = rho / trace
        return _stationary_density_matrix(0.5 * (rho + rho.conj().T), self.atom)


def liouvillian_matrix(atom: AtomSpec, hamiltonian: np.ndarray) -> np.ndarray:
    """
    9×9 generator for an arbitrary Hamiltonian H/ħ and the atom's dissipator.

    The coherent part is −i(I⊗H − Hᵀ⊗I). The dissipator is assembled column by
    column from its action on the basis matrices, so it agrees with
    :func:`core.atom.lindblad_apply` by construction.
    """
    eye = np.eye(LEVELS)
    coherent = -1j * (np.kron(eye, hamiltonian) - np.kron(hamiltonian.T, eye))
    dissipative = np.zeros((DIM, DIM), dtype=complex)
    for k in range(DIM):
        unit = np.zeros(DIM, dtype=complex)
        unit[k] = 1.0
        dissipative[:, k] = vectorize(lindblad_apply(atom, unvectorize(unit)))
    return coherent + dissipative


def build_liouvillian(atom: AtomSpec, drive: DriveSpec) -> Liouvillian:
    """
    Vectorized master-equation generator.

    Args:
        atom: Atomic rates
        drive: Drive parameters

    Returns:
        Liouvillian whose action matches master_rhs
    """
    return Liouvillian(liouvillian_matrix(atom, build_hamiltonian(drive)), atom=atom)


def solve_stationary(matrix: np.ndarray) -> np.ndarray:
    """
    Stationary state of a 9×9 generator by trace-row replacement.

    The equation for dρ₁₁/dt is redundant (the generator is trace
    preserving) and is replaced by tr ρ = 1.

    Raises:
        SingularSystem: If the constrained system is rank-deficient
    """
    scale = float(np.max(np.abs(matrix)))
    if scale == 0.0:
        raise SingularSystem("Liouvillian is identically zero: no drive and no dissipation")

    system = matrix / scale
    system[0, :] = 0.0
    system[0, _DIAGONAL] = 1.0
    rhs = np.zeros(DIM, dtype=complex)
    rhs[0] = 1.0

    condition = np.linalg.cond(system)
    logger.debug("Steady-state system condition number %.3e", condition)
    if not np.isfinite(condition) or condition > SINGULAR_CONDITION:
        raise SingularSystem(
            f"Steady-state system is rank-deficient (condition number {condition:.3e}); "
            "check that relaxation and damping rates are non-zero"
        )

    solution = linalg.lu_solve(linalg.lu_factor(system), rhs)
    rho = unvectorize(solution)
    return 0.5 * (rho + rho.conj().T)


def steady_state(atom: AtomSpec, drive: DriveSpec) -> DensityMatrix:
    """
    Stationary solution of the master equation (dρ/dt = 0).

    For an atom with positivity caveats (γ₃₁ < Γ₃₂/2) the dissipator is not
    completely positive and the stationary state can carry a negative
    eigenvalue under strong drive. That state is still the model's answer:
    it is returned unprojected and a PositivityWarning is issued.

    Args:
        atom: Atomic rates; Γ₂₁ > 0 for a unique solution
        drive: Drive parameters

    Returns:
        Steady-state density matrix

    Raises:
        SingularSystem: If the parameters do not determine a unique steady state
        PositivityLost: If the solution is not a physical state for an atom
                        without caveats
    """
    liouvillian = build_liouvillian(atom, drive)
    rho = solve_stationary(liouvillian.matrix)

    residual = float(np.max(np.abs(liouvillian.apply(rho))))
    tolerance = 1e-10 * max(atom.gamma_rel_21, 1.0)
    if residual > tolerance:
        logger.warning("Steady-state residual %.3e exceeds %.3e", residual, tolerance)

    return _stationary_density_matrix(rho, atom)


def _stationary_density_matrix(rho: np.ndarray, atom: Optional[AtomSpec]) -> DensityMatrix:
    caveats = positivity_caveats(atom) if atom is not None else []
    if caveats:
        smallest = float(np.min(np.linalg.eigvalsh(rho)))
        if smallest < -POSITIVITY_TOL:
            logger.debug("Stationary state has eigenvalue %.3e", smallest)
            warnings.warn(
                f"stationary state leaves the physical state space: {caveats[0]}",
                PositivityWarning,
                stacklevel=3,
            )
        return DensityMatrix(rho, positivity_tol=math.inf)
    try:
        return DensityMatrix(rho)
    except ValueError as exc:
        raise PositivityLost(f"Steady state is not a physical density matrix: {exc}") from exc


def max_rate(atom: AtomSpec, drive: DriveSpec) -> float:
    """Largest rate, amplitude or detuning magnitude of the problem (1/s)."""
    return max(max(atom.rates.values()), drive.max_frequency)


def stability_bound(atom: AtomSpec, drive: DriveSpec) -> float:
    """Largest allowed integrator step, 0.05 / max_rate (s)."""
    rate = max_rate(atom, drive)
    return math.inf if rate == 0 else STABILITY_FACTOR / rate


@dataclass(frozen=True)
class EvolveConfig:
    """
    Fixed-step integration settings.

    Attributes:
        step: Maximum time step (s); the run uses t_final / ceil(t_final / step)
        t_final: Total evolution time (s)

    Raises:
        ValueError: If step <= 0 or t_final < 0
    """
    step: float
    t_final: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if not self.t_final >= 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")

    @classmethod
    def for_system(cls, atom: AtomSpec, drive: DriveSpec, t_final: float) -> "EvolveConfig":
        """Config using the largest stable step for the given problem."""
        bound = stability_bound(atom, drive)
        step = t_final if math.isinf(bound) else bound
        return cls(step=step if step > 0 else 1.0, t_final=t_final)

    def check_stability(self, atom: AtomSpec, drive: DriveSpec) -> None:
        """
        Raises:
            StepTooLarge: If step exceeds 0.05 / max_rate
        """
        bound = stability_bound(atom, drive)
        if self.step > bound * (1.0 + 1e-12):
            raise StepTooLarge(
                f"step {self.step:.3e} s exceeds stability bound {bound:.3e} s "
                f"(0.05 / max rate {max_rate(atom, drive):.3e} 1/s)"
            )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Sampled time series of density matrices.

    ``positivity_tol`` is the tolerance :meth:`final` validates against; it is
    unbounded when the atom's rates let the state leave the physical space.
    """
    times: np.ndarray
    states: np.ndarray
    positivity_tol: float = EVOLVE_POSITIVITY_TOL

    def populations(self) -> np.ndarray:
        """(n, 3) array of ρ₁₁, ρ₂₂, ρ₃₃."""
        return np.real(np.diagonal(self.states, axis1=1, axis2=2))

    def coherence(self, i: int, j: int) -> np.ndarray:
        """Time series of ρ_ij for 1-based levels."""
        return self.states[:, i - 1, j - 1]

    def final(self) -> DensityMatrix:
        return DensityMatrix(
            self.states[-1], trace_tol=EVOLVE_TRACE_TOL, positivity_tol=self.positivity_tol
        )


def _smallest_eigenvalue(vector: np.ndarray) -> float:
    return float(np.min(np.linalg.eigvalsh(unvectorize(vector))))


class _PositivityMonitor:
    """
    Positivity checks along one integration.

    For an atom without caveats a breach is an integration error and raises.
    For an atom with caveats the dissipator itself drives the state out of the
    physical space; the first breach issues one warning and checking stops.
    """

    def __init__(self, atom: AtomSpec):
        self.caveats = positivity_caveats(atom)
        self.breached = False

    def check(self, vector: np.ndarray, time: float, every_eigenvalue: bool) -> None:
        if self.breached:
            return
        if vector.real[_DIAGONAL].min() < -EVOLVE_POSITIVITY_TOL:
            self._breach(f"Negative population at t = {time:.6e} s")
        elif every_eigenvalue:
            smallest = _smallest_eigenvalue(vector)
            if smallest < -EVOLVE_POSITIVITY_TOL:
                self._breach(f"Eigenvalue {smallest:.3e} below -1e-6 at t = {time:.6e} s")

    def _breach(self, message: str) -> None:
        if not self.caveats:
            raise PositivityLost(f"{message}; integration error, reduce the step")
        self.breached = True
        logger.warning("%s; %s", message, self.caveats[0])
        warnings.warn(
            f"evolved state leaves the physical state space: {self.caveats[0]}",
            PositivityWarning,
            stacklevel=5,
        )


def _integrate(
    atom: AtomSpec,
    drive: DriveSpec,
    rho0: RhoLike,
    cfg: EvolveConfig,
    samples: int,
) -> Trajectory:
    cfg.check_stability(atom, drive)
    vector = vectorize(rho0).astype(complex)
    initial = _smallest_eigenvalue(vector)
    if initial < -EVOLVE_POSITIVITY_TOL:
        raise PositivityLost(f"Initial state has eigenvalue {initial:.3e} below -1e-6")
    monitor = _PositivityMonitor(atom)

    n_steps = math.ceil(cfg.t_final / cfg.step - 1e-9) if cfg.t_final > 0 else 0
    h = cfg.t_final / n_steps if n_steps else 0.0

    # One classical RK4 step of the linear system dv/dt = Lv, written as a matrix.
    hl = h * build_liouvillian(atom, drive).matrix
    hl2 = hl @ hl
    propagator = np.eye(DIM) + hl + hl2 / 2.0 + hl2 @ hl / 6.0 + hl2 @ hl2 / 24.0

    sample_steps = np.unique(np.round(np.linspace(0, n_steps, max(samples, 1))).astype(int))
    if samples == 1:
        sample_steps = np.array([n_steps])
    sample_set = set(sample_steps.tolist())
    times, states = [], []
    if 0 in sample_set:
        times.append(0.0)
        states.append(unvectorize(vector).copy())

    logger.debug("Integrating %d RK4 steps of %.3e s", n_steps, h)
    for n in range(1, n_steps + 1):
        vector = propagator @ vector
        vector = 0.5 * (vector + vector[_TRANSPOSE].conj())
        monitor.check(vector, n * h, every_eigenvalue=n % _EIGEN_CHECK_EVERY == 0)
        if n in sample_set:
            times.append(n * h)
            states.append(unvectorize(vector).copy())

    monitor.check(vector, cfg.t_final, every_eigenvalue=True)
    drift = abs(vector[_DIAGONAL].sum() - np.trace(as_array(rho0)))
    if drift > EVOLVE_TRACE_TOL:
        logger.warning("Trace drifted by %.3e over %d steps", drift, n_steps)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        positivity_tol=math.inf if monitor.breached else EVOLVE_POSITIVITY_TOL,
    )


def evolve(atom: AtomSpec, drive: DriveSpec, rho0: RhoLike, cfg: EvolveConfig) -> DensityMatrix:
    """
    Time-evolve ρ with fixed-step classical RK4.

    Hermiticity is restored after each step with (ρ+ρ†)/2; positivity is
    checked, never projected.

    Args:
        atom: Atomic rates
        drive: Drive parameters (continuous wave)
        rho0: Initial state
        cfg: Step and final time

    Returns:
        State at cfg.t_final

    Raises:
        StepTooLarge: If cfg.step violates the stability bound
        PositivityLost: If rho0 is not positive, or an eigenvalue drops below
                        −1e-6 for an atom without positivity caveats. With
                        caveats a PositivityWarning is issued instead.
    """
    return _integrate(atom, drive, rho0, cfg, samples=1).final()


def trajectory(
    atom: AtomSpec,
    drive: DriveSpec,
    rho0: RhoLike,
    cfg: EvolveConfig,
    samples: Optional[int] = None,
) -> Trajectory:
    """
    Same integration as :func:`evolve`, keeping ``samples`` evenly spaced states.

    ``samples`` includes both t=0 and t_final; by default every step is kept.
    """
    if samples is None:
        samples = (math.ceil(cfg.t_final / cfg.step - 1e-9) if cfg.t_final > 0 else 0) + 1
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    return _integrate(atom, drive, rho0, cfg, samples=samples)
