"""
Microwave observables of a single atom in an open transmission line.

A pointlike atom at x=0 radiates a wave at the probe frequency whose
amplitude is set by the coherence ρ₂₁. The transmitted wave is the sum of
the incident and the forward-scattered wave:

    t = 1 + i·Γ₂₁·ρ₂₁ / Ω_p

In the weak-probe limit the stationary coherence has a closed form and

    t = 1 − Γ₂₁ / [2(γ₂₁ − iδω_p) + Ω_c² / (2(γ₃₁ − iδω_p − iδω_c))]

The numeric path is valid at any probe power and captures saturation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from utils.units import HBAR

from .atom import AtomSpec, DriveSpec
from .errors import DegenerateDenominator, ZeroProbe
from .solver import steady_state

logger = logging.getLogger(__name__)

Transition = Literal["21", "32"]

# Phase of the forward-scattered wave relative to i·Γ₂₁·ρ₂₁/Ω_p. Fixed so that
# the numeric steady state reproduces the weak-probe closed form.
SCATTERING_PHASE = 1j


@dataclass(frozen=True)
class ScatteringPoint:
    """
    Scattering observables at one parameter point.

    Attributes:
        t: Complex transmission coefficient
        r: Complex reflection coefficient, r = t − 1
        T: Power transmission |t|²
        alpha: Normalised polarizability, α = i(1 − t)
    """
    t: complex
    r: complex
    T: float
    alpha: complex

    @classmethod
    def from_transmission(cls, t: complex) -> "ScatteringPoint":
        """Derive r, T and α from the transmission coefficient."""
        t = complex(t)
        return cls(t=t, r=t - 1.0, T=abs(t) ** 2, alpha=1j * (1.0 - t))

    @property
    def reflectance(self) -> float:
        """Reflected power fraction |r|²."""
        return abs(self.r) ** 2

    @property
    def alpha_dispersive(self) -> float:
        """α', the dispersive part of the polarizability (equals Im t)."""
        return self.alpha.real

    @property
    def alpha_absorptive(self) -> float:
        """α'', the reflective part of the polarizability (equals 1 − Re t)."""
        return self.alpha.imag


def eit_line(delta_p, gamma_rel_21, gamma_deph_21, gamma_deph_31, omega_c, delta_c=0.0):
    """
    Weak-probe transmission for arrays of detunings (numpy broadcasting).

    No pole checks are made here; see :func:`transmission_weak_probe`.
    """
    delta_p = np.asarray(delta_p, dtype=float)
    denominator = 2.0 * (gamma_deph_21 - 1j * delta_p)
    if omega_c != 0:
        denominator = denominator + omega_c ** 2 / (2.0 * (gamma_deph_31 - 1j * (delta_p + delta_c)))
    return 1.0 - gamma_rel_21 / denominator


def transmission_weak_probe(atom: AtomSpec, drive: DriveSpec) -> ScatteringPoint:
    """
    Closed-form transmission for a weak probe (Ω_p ≪ γ₂₁).

    The probe amplitude is not used; keeping it well below γ₂₁ (the
    documented regime is Ω_p ≤ γ₂₁/10) is up to the caller.

    Raises:
        DegenerateDenominator: At the pole γ₃₁ = 0, δω_p + δω_c = 0 with Ω_c > 0,
                               or when the whole denominator vanishes
    """
    two_photon = complex(atom.gamma_deph_31, -(drive.delta_p + drive.delta_c))
    if drive.omega_c_rabi > 0 and two_photon == 0:
        raise DegenerateDenominator(
            "gamma_deph_31 = 0 with zero two-photon detuning is a pole of the weak-probe formula"
        )
    denominator = 2.0 * complex(atom.gamma_deph_21, -drive.delta_p)
    if drive.omega_c_rabi > 0:
        denominator += drive.omega_c_rabi ** 2 / (2.0 * two_photon)
    if denominator == 0:
        raise DegenerateDenominator("weak-probe denominator vanishes (gamma_deph_21 = 0 on resonance)")
    return ScatteringPoint.from_transmission(1.0 - atom.gamma_rel_21 / denominator)


def transmission_numeric(atom: AtomSpec, drive: DriveSpec) -> ScatteringPoint:
    """
    Transmission from the exact steady-state coherence at any probe power.

    Args:
        atom: Atomic rates
        drive: Drive parameters, Ω_p > 0

    Returns:
        ScatteringPoint with t = 1 + i·Γ₂₁·ρ₂₁/Ω_p

    Raises:
        ZeroProbe: If Ω_p = 0
        SingularSystem: Propagated from the steady-state solve
    """
    if not drive.omega_p_rabi > 0:
        raise ZeroProbe("transmission from the coherence needs omega_p_rabi > 0")
    if atom.gamma_rel_21 == 0:
        # A decoupled atom does not radiate into the line.
        return ScatteringPoint.from_transmission(1.0)
    rho = steady_state(atom, drive)
    t = 1.0 + SCATTERING_PHASE * atom.gamma_rel_21 * rho[2, 1] / drive.omega_p_rabi
    return ScatteringPoint.from_transmission(t)


def transmission_saturated_two_level(atom: AtomSpec, drive: DriveSpec) -> ScatteringPoint:
    """
    Closed-form two-level transmission at arbitrary probe power (Ω_c = 0).

    t = 1 − Γ₂₁ / (2(γ₂₁ − iδω_p)) · 1/(1 + s),  s = Ω_p²γ₂₁ / (Γ₂₁(γ₂₁² + δω_p²))

    Raises:
        ValueError: If the control drive is on
        DegenerateDenominator: If γ₂₁ = 0 on resonance
    """
    if drive.omega_c_rabi != 0:
        raise ValueError(f"closed form holds only for omega_c_rabi = 0, got {drive.omega_c_rabi}")
    if atom.gamma_rel_21 == 0:
        return ScatteringPoint.from_transmission(1.0)
    gamma, delta = atom.gamma_deph_21, drive.delta_p
    width = gamma ** 2 + delta ** 2
    if width == 0:
        raise DegenerateDenominator("gamma_deph_21 = 0 on resonance")
    saturation = drive.omega_p_rabi ** 2 * gamma / (atom.gamma_rel_21 * width)
    t = 1.0 - atom.gamma_rel_21 / (2.0 * complex(gamma, -delta)) / (1.0 + saturation)
    return ScatteringPoint.from_transmission(t)


def power_transmission_ideal(omega_c_rabi: float, gamma_rel_21: float, gamma_deph_31: float) -> float:
    """
    Resonant power transmission without pure dephasing of the probe transition.

    T = (Ω_c² / (2Γ₂₁γ₃₁ + Ω_c²))²

    Raises:
        ValueError: If an argument is negative
        DegenerateDenominator: If Ω_c = 0 and Γ₂₁γ₃₁ = 0
    """
    for name, value in (("omega_c_rabi", omega_c_rabi), ("gamma_rel_21", gamma_rel_21),
                        ("gamma_deph_31", gamma_deph_31)):
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    drive = omega_c_rabi ** 2
    denominator = 2.0 * gamma_rel_21 * gamma_deph_31 + drive
    if denominator == 0:
        raise DegenerateDenominator("omega_c_rabi = 0 with gamma_rel_21 * gamma_deph_31 = 0")
    return (drive / denominator) ** 2


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")


def coupling_to_rate(mutual_inductance: float, persistent_current: float,
                     omega21: float, line_impedance: float) -> float:
    """
    Radiative rate into the line, Γ₂₁ = ω₂₁(M·i_PC)² / (ħZ).

    Raises:
        ValueError: If any argument is not positive
    """
    _require_positive(mutual_inductance=mutual_inductance, persistent_current=persistent_current,
                      omega21=omega21, line_impedance=line_impedance)
    return omega21 * (mutual_inductance * persistent_current) ** 2 / (HBAR * line_impedance)


def rate_to_coupling(gamma_rel_21: float, persistent_current: float,
                     omega21: float, line_impedance: float) -> float:
    """
    Mutual inductance M that produces the radiative rate Γ₂₁.

    Raises:
        ValueError: If any argument is not positive
    """
    _require_positive(gamma_rel_21=gamma_rel_21, persistent_current=persistent_current,
                      omega21=omega21, line_impedance=line_impedance)
    return math.sqrt(gamma_rel_21 * HBAR * line_impedance / omega21) / persistent_current


def rabi_from_current(atom: AtomSpec, current: float, transition: Transition = "21") -> float:
    """
    Rabi amplitude produced by a line current of amplitude ``current`` (A).

    ħΩ = φ_ij·I with the dipole flux φ_ij = ζ_ij·M·i_PC.
    """
    if current < 0:
        raise ValueError(f"current must be >= 0, got {current}")
    zeta = {"21": atom.zeta_21, "32": atom.zeta_32}[transition]
    return zeta * atom.mutual_inductance * atom.persistent_current * current / HBAR


def rabi_from_power(atom: AtomSpec, power: float, transition: Transition = "21") -> float:
    """
    Rabi amplitude for a travelling wave carrying ``power`` (W) on the line.

    The current amplitude is I = √(2P/Z).
    """
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")
    return rabi_from_current(atom, math.sqrt(2.0 * power / atom.line_impedance), transition)


# Quick demo for manual checks
if __name__ == "__main__":
    from utils.units import mhz_to_angular

    from .atom import reference_atom

    atom = reference_atom()
    print("Reference atom, resonant probe")
    print("=" * 60)
    for omega_c_mhz in (0.0, 11.0, 22.0, 44.0):
        drive = DriveSpec(omega_c_rabi=mhz_to_angular(omega_c_mhz))
        point = transmission_weak_probe(atom, drive)
        print(f"  Ωc/2π = {omega_c_mhz:5.1f} MHz   t = {point.t.real:.4f}{point.t.imag:+.4f}i   T = {point.T:.4f}")
    ideal = power_transmission_ideal(mhz_to_angular(44.0), atom.gamma_rel_21, atom.gamma_deph_31)
    print(f"  ideal T at 44 MHz: {ideal:.4f}")
    m = rate_to_coupling(atom.gamma_rel_21, atom.persistent_current, atom.omega21, atom.line_impedance)
    print(f"  mutual inductance: {m * 1e12:.2f} pH")
