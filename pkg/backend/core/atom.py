"""
Three-level ladder atom model.

Defines the physical parameter records of a single artificial atom coupled
to an open transmission line, and the pieces of its master equation:

1. Rotating-frame Hamiltonian H/ħ for a probe on |1⟩↔|2⟩ and a control on |2⟩↔|3⟩
2. Dissipator L[ρ]: cascade relaxation 3→2→1 plus damping of the coherences
3. Right-hand side dρ/dt = −i[H/ħ, ρ] + L[ρ]

Levels are numbered 1, 2, 3 in the physics and stored at array indices
0, 1, 2. All frequencies and rates are angular (rad/s).
"""

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Optional, Union

import numpy as np

from utils.units import ghz_to_angular

logger = logging.getLogger(__name__)

# H/ħ and dissipator outputs are plain 3×3 complex arrays in units of 1/s.
OperatorMatrix = np.ndarray

LEVELS = 3

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10

# Relative slack on the radiative bounds so that γ = Γ/2 computed in floating point passes.
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class AtomSpec:
    """
    Rates and coupling constants of the ladder atom.

    The defaults describe the reference device (flux-qubit loop at its
    degeneracy point). ``gamma_rel_32`` and ``gamma_deph_32`` are not
    measured there; when left as ``None`` they are filled in:

    - Γ₃₂ = 2·Γ₂₁ (harmonic scaling of the matrix element)
    - γ₃₂ = max(γ₂₁ + γ₃₁ − Γ₂₁/2, (Γ₂₁ + Γ₃₂)/2)

    The names of filled-in fields are listed in ``defaulted``.

    Attributes:
        gamma_rel_21: Relaxation rate Γ₂₁ (1/s)
        gamma_deph_21: Damping rate γ₂₁ of ρ₂₁ (1/s)
        gamma_deph_31: Damping rate γ₃₁ of ρ₃₁ (1/s)
        gamma_rel_32: Relaxation rate Γ₃₂ (1/s)
        gamma_deph_32: Damping rate γ₃₂ of ρ₃₂ (1/s)
        omega21: Transition frequency ω₂₁ (rad/s)
        omega32: Transition frequency ω₃₂ (rad/s)
        zeta_21: Dimensionless dipole matrix element ζ₂₁
        zeta_32: Dimensionless dipole matrix element ζ₃₂
        mutual_inductance: Loop-to-line mutual inductance M (H)
        persistent_current: Persistent current amplitude i_PC (A)
        line_impedance: Characteristic line impedance Z (Ω)
    """
    gamma_rel_21: float = 6.9e7
    gamma_deph_21: float = 4.5e7
    gamma_deph_31: float = 4.3e7
    gamma_rel_32: Optional[float] = None
    gamma_deph_32: Optional[float] = None
    omega21: float = ghz_to_angular(10.165)
    omega32: float = ghz_to_angular(24.465)
    zeta_21: float = 1.0
    zeta_32: float = 1.0
    mutual_inductance: float = 12e-12
    persistent_current: float = 200e-9
    line_impedance: float = 50.0
    defaulted: tuple = field(init=False, default=(), compare=False)

    def __post_init__(self):
        filled = []
        if self.gamma_rel_32 is None:
            object.__setattr__(self, "gamma_rel_32", 2.0 * self.gamma_rel_21)
            filled.append("gamma_rel_32")
        if self.gamma_deph_32 is None:
            additive = self.gamma_deph_21 + self.gamma_deph_31 - self.gamma_rel_21 / 2.0
            radiative = (self.gamma_rel_21 + self.gamma_rel_32) / 2.0
            object.__setattr__(self, "gamma_deph_32", max(additive, radiative))
            filled.append("gamma_deph_32")
        object.__setattr__(self, "defaulted", tuple(filled))

    def replace(self, **changes) -> "AtomSpec":
        """
        Return a copy with some fields changed.

        Fields that were filled in by default are re-derived from the new
        values unless they are given explicitly.
        """
        values = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        for name in self.defaulted:
            values[name] = None
        values.update(changes)
        return AtomSpec(**values)

    def scaled(self, factor: float) -> "AtomSpec":
        """Return a copy with every relaxation and damping rate multiplied by ``factor``."""
        return AtomSpec(
            gamma_rel_21=self.gamma_rel_21 * factor,
            gamma_deph_21=self.gamma_deph_21 * factor,
            gamma_deph_31=self.gamma_deph_31 * factor,
            gamma_rel_32=self.gamma_rel_32 * factor,
            gamma_deph_32=self.gamma_deph_32 * factor,
            omega21=self.omega21,
            omega32=self.omega32,
            zeta_21=self.zeta_21,
            zeta_32=self.zeta_32,
            mutual_inductance=self.mutual_inductance,
            persistent_current=self.persistent_current,
            line_impedance=self.line_impedance,
        )

    @property
    def rates(self) -> dict[str, float]:
        """All relaxation and damping rates keyed by field name."""
        return {
            "gamma_rel_21": self.gamma_rel_21,
            "gamma_rel_32": self.gamma_rel_32,
            "gamma_deph_21": self.gamma_deph_21,
            "gamma_deph_31": self.gamma_deph_31,
            "gamma_deph_32": self.gamma_deph_32,
        }

    @property
    def dephasing_matrix(self) -> np.ndarray:
        """Symmetric matrix of coherence damping rates γ_ij with a zero diagonal."""
        g21, g31, g32 = self.gamma_deph_21, self.gamma_deph_31, self.gamma_deph_32
        return np.array([
            [0.0, g21, g31],
            [g21, 0.0, g32],
            [g31, g32, 0.0],
        ])


@dataclass(frozen=True)
class DriveSpec:
    """
    Probe and control drive parameters.

    Both Rabi amplitudes are real and non-negative; drive phases are absorbed
    into the basis and do not change |t|.

    Attributes:
        omega_p_rabi: Probe Rabi amplitude Ω_p (rad/s)
        omega_c_rabi: Control Rabi amplitude Ω_c (rad/s)
        delta_p: Probe detuning δω_p = ω_p − ω₂₁ (rad/s)
        delta_c: Control detuning δω_c = ω_c − ω₃₂ (rad/s)
    """
    omega_p_rabi: float = 0.0
    omega_c_rabi: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0

    def __post_init__(self):
        if self.omega_p_rabi < 0:
            raise ValueError(f"omega_p_rabi must be >= 0, got {self.omega_p_rabi}")
        if self.omega_c_rabi < 0:
            raise ValueError(f"omega_c_rabi must be >= 0, got {self.omega_c_rabi}")

    def replace(self, **changes) -> "DriveSpec":
        """Return a copy with some fields changed."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return DriveSpec(**values)

    def scaled(self, factor: float) -> "DriveSpec":
        """Return a copy with amplitudes and detunings multiplied by ``factor``."""
        return DriveSpec(
            omega_p_rabi=self.omega_p_rabi * factor,
            omega_c_rabi=self.omega_c_rabi * factor,
            delta_p=self.delta_p * factor,
            delta_c=self.delta_c * factor,
        )

    @property
    def max_frequency(self) -> float:
        """Largest amplitude or detuning magnitude, used for step-size bounds."""
        return max(
            abs(self.delta_p), abs(self.delta_p + self.delta_c),
            self.omega_p_rabi, self.omega_c_rabi,
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Validated 3×3 density matrix.

    The trace and positivity tolerances can be loosened by callers whose
    numerics accumulate rounding error, such as the time integrator.

    Raises:
        ValueError: If the matrix is not 3×3, not Hermitian, not unit trace
                    or has an eigenvalue below −positivity_tol
    """
    rho: np.ndarray
    trace_tol: float = field(default=TRACE_TOL, repr=False)
    positivity_tol: float = field(default=POSITIVITY_TOL, repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (LEVELS, LEVELS):
            raise ValueError(f"Density matrix must be 3x3, got shape {rho.shape}")
        asymmetry = np.max(np.abs(rho - rho.conj().T))
        if asymmetry > HERMITIAN_TOL:
            raise ValueError(f"Density matrix is not Hermitian (max |ρ - ρ†| = {asymmetry:.3e})")
        trace = np.trace(rho)
        if abs(trace - 1.0) > self.trace_tol:
            raise ValueError(f"Density matrix trace must be 1, got {trace:.12g}")
        smallest = float(np.min(np.linalg.eigvalsh(rho)))
        if smallest < -self.positivity_tol:
            raise ValueError(f"Density matrix is not positive semidefinite (min eigenvalue {smallest:.3e})")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def __getitem__(self, index):
        """Index with 1-based level labels: ``dm[2, 1]`` is ρ₂₁."""
        i, j = index
        return self.rho[i - 1, j - 1]

    @property
    def populations(self) -> np.ndarray:
        """Level populations (ρ₁₁, ρ₂₂, ρ₃₃)."""
        return np.real(np.diag(self.rho)).copy()

    def coherence(self, i: int, j: int) -> complex:
        """Matrix element ρ_ij for 1-based levels."""
        return complex(self.rho[i - 1, j - 1])

    def __repr__(self) -> str:
        p1, p2, p3 = self.populations
        return f"DensityMatrix(populations=({p1:.6g}, {p2:.6g}, {p3:.6g}), rho21={self.coherence(2, 1):.6g})"


RhoLike = Union[DensityMatrix, np.ndarray]


def as_array(rho: RhoLike) -> np.ndarray:
    """Return the 3×3 complex array behind a density matrix or array-like input."""
    if isinstance(rho, DensityMatrix):
        return rho.rho
    array = np.asarray(rho, dtype=complex)
    if array.shape != (LEVELS, LEVELS):
        raise ValueError(f"Expected a 3x3 matrix, got shape {array.shape}")
    return array


def transition_operator(i: int, j: int) -> OperatorMatrix:
    """
    Projection/transition operator σ_ij = |i⟩⟨j| for 1-based levels.

    Raises:
        ValueError: If a level is outside 1..3
    """
    if not (1 <= i <= LEVELS and 1 <= j <= LEVELS):
        raise ValueError(f"Levels must be in 1..3, got ({i}, {j})")
    sigma = np.zeros((LEVELS, LEVELS), dtype=complex)
    sigma[i - 1, j - 1] = 1.0
    return sigma


def basis_state(level: int) -> DensityMatrix:
    """Pure state |k⟩⟨k| for level k in 1..3."""
    return DensityMatrix(transition_operator(level, level))


def reference_atom() -> AtomSpec:
    """The reference device: rates and couplings from the spectroscopy line shape."""
    return AtomSpec()


def build_hamiltonian(drive: DriveSpec) -> OperatorMatrix:
    """
    Rotating-frame Hamiltonian H/ħ (units 1/s).

    H/ħ = −(δω_p σ₂₂ + (δω_p+δω_c) σ₃₃) − (Ω_p/2)(σ₂₁+σ₁₂) − (Ω_c/2)(σ₃₂+σ₂₃)

    Args:
        drive: Probe and control amplitudes and detunings

    Returns:
        Hermitian 3×3 complex matrix
    """
    half_p = drive.omega_p_rabi / 2.0
    half_c = drive.omega_c_rabi / 2.0
    return np.array([
        [0.0, -half_p, 0.0],
        [-half_p, -drive.delta_p, -half_c],
        [0.0, -half_c, -(drive.delta_p + drive.delta_c)],
    ], dtype=complex)


def lindblad_apply(atom: AtomSpec, rho: RhoLike) -> OperatorMatrix:
    """
    Dissipator L[ρ].

    L[ρ] = Γ₃₂ρ₃₃(σ₂₂−σ₃₃) + Γ₂₁ρ₂₂(σ₁₁−σ₂₂) − Σ_{i≠j} γ_ij ρ_ij σ_ij

    Coherences decay at γ_ij; populations cascade 3→2→1 with no thermal
    excitation and no direct 3→1 channel.

    Args:
        atom: Atomic rates
        rho: Density matrix (validated or any 3×3 array)

    Returns:
        3×3 complex matrix, traceless and Hermitian for Hermitian ρ
    """
    r = as_array(rho)
    out = -atom.dephasing_matrix * r
    down_32 = atom.gamma_rel_32 * r[2, 2]
    down_21 = atom.gamma_rel_21 * r[1, 1]
    out[0, 0] = down_21
    out[1, 1] = down_32 - down_21
    out[2, 2] = -down_32
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b] = ab − ba."""
    return a @ b - b @ a


def master_rhs(atom: AtomSpec, drive: DriveSpec, rho: RhoLike) -> OperatorMatrix:
    """
    Right-hand side of the master equation, dρ/dt = −i[H/ħ, ρ] + L[ρ].

    Args:
        atom: Atomic rates
        drive: Drive parameters
        rho: Density matrix (validated or any 3×3 array)

    Returns:
        3×3 complex matrix (1/s)
    """
    r = as_array(rho)
    return -1j * commutator(build_hamiltonian(drive), r) + lindblad_apply(atom, r)


def validate_atom(atom: AtomSpec) -> list[str]:
    """
    Check the AtomSpec invariants.

    Returns:
        List of violations, each naming the field and the violated bound.
        Empty when the record is valid.
    """
    violations = []

    for name, value in atom.rates.items():
        if not math.isfinite(value):
            violations.append(f"{name}: rate is not finite ({value})")
        elif value < 0:
            violations.append(f"{name}: negative rate ({value:g})")

    bound_21 = atom.gamma_rel_21 / 2.0
    if atom.gamma_deph_21 < bound_21 * (1.0 - _BOUND_SLACK):
        violations.append(
            f"gamma_deph_21 below radiative bound Γ21/2 = {bound_21:g} (got {atom.gamma_deph_21:g})"
        )

    bound_32 = (atom.gamma_rel_21 + atom.gamma_rel_32) / 2.0
    if atom.gamma_deph_32 < bound_32 * (1.0 - _BOUND_SLACK):
        violations.append(
            f"gamma_deph_32 below radiative bound (Γ21+Γ32)/2 = {bound_32:g} (got {atom.gamma_deph_32:g})"
        )

    for name in ("zeta_21", "zeta_32"):
        value = getattr(atom, name)
        if not 0.0 <= value <= 1.0:
            violations.append(f"{name}: matrix element must be in [0, 1] (got {value:g})")

    for name in ("omega21", "omega32"):
        value = getattr(atom, name)
        if not value > 0:
            violations.append(f"{name}: transition frequency must be > 0 (got {value:g})")

    if not atom.line_impedance > 0:
        violations.append(f"line_impedance: must be > 0 (got {atom.line_impedance:g})")

    for name in ("mutual_inductance", "persistent_current"):
        if getattr(atom, name) < 0:
            violations.append(f"{name}: must be >= 0 (got {getattr(atom, name):g})")

    if violations:
        logger.debug("AtomSpec has %d violation(s): %s", len(violations), violations)
    return violations


def positivity_caveats(atom: AtomSpec) -> list[str]:
    """
    Dephasing rates that are allowed but below the level-decay bounds.

    The coherence ρ₃₁ cannot decay slower than Γ₃₂/2 in a completely
    positive evolution. Rates below that still give sensible weak-probe
    spectra, but strong-drive time evolution may leave the physical state space.
    """
    caveats = []
    bound_31 = atom.gamma_rel_32 / 2.0
    if atom.gamma_deph_31 < bound_31 * (1.0 - _BOUND_SLACK):
        caveats.append(
            f"gamma_deph_31 = {atom.gamma_deph_31:g} is below Γ32/2 = {bound_31:g}; "
            "strong-drive evolution may not preserve positivity"
        )
    return caveats
