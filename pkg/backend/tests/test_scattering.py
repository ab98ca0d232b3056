"""
Unit tests for the microwave scattering observables.

Tests the weak-probe closed form against the reference device values, the
numeric path against the closed forms, and the coupling conversions.
"""

import numpy as np
import pytest

from core.atom import AtomSpec, DriveSpec
from core.errors import DegenerateDenominator, ZeroProbe
from core.scattering import (
    ScatteringPoint,
    coupling_to_rate,
    eit_line,
    power_transmission_ideal,
    rabi_from_current,
    rabi_from_power,
    rate_to_coupling,
    transmission_numeric,
    transmission_saturated_two_level,
    transmission_weak_probe,
)
from utils.units import HBAR, mhz_to_angular
from tests.conftest import random_atom


class TestScatteringPoint:
    """Test derived observables."""

    def test_derived_quantities(self):
        """Test r, T and α from t."""
        point = ScatteringPoint.from_transmission(0.6 + 0.2j)
        assert point.r == pytest.approx(-0.4 + 0.2j)
        assert point.T == pytest.approx(0.4)
        assert point.alpha == pytest.approx(1j * (0.4 - 0.2j))

    def test_polarizability_parts(self):
        """Test that α' = Im t and α'' = 1 − Re t."""
        point = ScatteringPoint.from_transmission(0.7 - 0.1j)
        assert point.alpha_dispersive == pytest.approx(-0.1)
        assert point.alpha_absorptive == pytest.approx(0.3)
        assert point.reflectance == pytest.approx(0.1)


class TestWeakProbe:
    """Test the closed-form weak-probe transmission."""

    def test_resonant_extinction(self, atom, weak_probe):
        """Test t(0) = 0.2333 and T(0) = 0.0544 for the reference rates."""
        point = transmission_weak_probe(atom, weak_probe)
        assert point.t.real == pytest.approx(0.2333, abs=1e-4)
        assert point.t.imag == pytest.approx(0.0, abs=1e-12)
        assert point.T == pytest.approx(0.0544, abs=1e-4)

    def test_transparency_window(self, atom, weak_probe):
        """Test resonant T = 0.864 at Ωc/2π = 44 MHz."""
        point = transmission_weak_probe(atom, weak_probe.replace(omega_c_rabi=mhz_to_angular(44.0)))
        assert point.T == pytest.approx(0.864, abs=2e-3)

    def test_two_level_line_is_complex_lorentzian(self, atom, probe_grid):
        """Test that Re t is symmetric and Im t antisymmetric about resonance."""
        t = np.array([transmission_weak_probe(atom, DriveSpec(delta_p=d)).t for d in probe_grid])
        np.testing.assert_allclose(t.real, t.real[::-1], atol=1e-12)
        np.testing.assert_allclose(t.imag, -t.imag[::-1], atol=1e-12)

    def test_window_peak_at_resonance(self, atom, probe_grid):
        """Test that 44 MHz control gives a Re t maximum of ≈ 0.93 at δp = 0."""
        t = eit_line(probe_grid, atom.gamma_rel_21, atom.gamma_deph_21, atom.gamma_deph_31,
                     mhz_to_angular(44.0))
        centre = len(probe_grid) // 2
        assert t.real[centre] == pytest.approx(0.93, abs=5e-3)
        assert t.real[centre] > t.real[centre - 1]
        assert t.real[centre] > t.real[centre + 1]

    def test_eit_line_matches_scalar_form(self, atom, probe_grid):
        """Test that the vectorized line equals the per-point closed form."""
        omega_c = mhz_to_angular(22.0)
        delta_c = mhz_to_angular(3.0)
        line = eit_line(probe_grid, atom.gamma_rel_21, atom.gamma_deph_21, atom.gamma_deph_31, omega_c, delta_c)
        for index in (0, 137, 200, 400):
            drive = DriveSpec(omega_c_rabi=omega_c, delta_p=probe_grid[index], delta_c=delta_c)
            assert line[index] == pytest.approx(transmission_weak_probe(atom, drive).t, abs=1e-14)

    def test_decoupled_atom_transmits(self, atom, weak_probe):
        """Test that Γ21 = 0 gives t = 1."""
        point = transmission_weak_probe(atom.replace(gamma_rel_21=0.0), weak_probe)
        assert point.t == 1.0

    def test_pole_raises(self, atom, weak_probe):
        """Test that γ31 = 0 on two-photon resonance with control on raises."""
        drive = weak_probe.replace(omega_c_rabi=1e7)
        with pytest.raises(DegenerateDenominator):
            transmission_weak_probe(atom.replace(gamma_deph_31=0.0), drive)

    def test_pole_is_avoided_off_resonance(self, atom, weak_probe):
        """Test that γ31 = 0 is fine away from two-photon resonance."""
        drive = weak_probe.replace(omega_c_rabi=1e7, delta_p=1e6)
        point = transmission_weak_probe(atom.replace(gamma_deph_31=0.0), drive)
        assert np.isfinite(point.T)

    def test_vanishing_denominator_raises(self, weak_probe):
        """Test that γ21 = 0 on resonance without control raises."""
        with pytest.raises(DegenerateDenominator):
            transmission_weak_probe(AtomSpec(gamma_rel_21=1e7, gamma_deph_21=0.0), weak_probe)


class TestIdealLimit:
    """Test the resonant ideal-limit power transmission."""

    def test_reference_value(self, atom):
        """Test T = 0.861 at Ωc/2π = 44 MHz."""
        value = power_transmission_ideal(mhz_to_angular(44.0), atom.gamma_rel_21, atom.gamma_deph_31)
        assert value == pytest.approx(0.861, abs=2e-3)

    def test_full_reflection_without_control(self, atom):
        """Test T = 0 at Ωc = 0."""
        assert power_transmission_ideal(0.0, atom.gamma_rel_21, atom.gamma_deph_31) == 0.0

    def test_matches_weak_probe_at_radiative_bound(self, atom):
        """Test |t|² of the closed form equals the ideal limit when γ21 = Γ21/2."""
        ideal_atom = atom.replace(gamma_deph_21=atom.gamma_rel_21 / 2)
        for omega_c in np.linspace(0.0, mhz_to_angular(200.0), 41):
            expected = power_transmission_ideal(omega_c, ideal_atom.gamma_rel_21, ideal_atom.gamma_deph_31)
            point = transmission_weak_probe(ideal_atom, DriveSpec(omega_c_rabi=omega_c))
            assert point.T == pytest.approx(expected, rel=1e-12, abs=1e-15)

    def test_degenerate_input_raises(self):
        """Test that Ωc = 0 with Γ21·γ31 = 0 raises."""
        with pytest.raises(DegenerateDenominator):
            power_transmission_ideal(0.0, 1e7, 0.0)

    def test_negative_input_raises(self):
        """Test that negative arguments raise ValueError."""
        with pytest.raises(ValueError, match="gamma_deph_31 must be >= 0"):
            power_transmission_ideal(1e7, 1e7, -1.0)


class TestNumeric:
    """Test transmission from the exact steady-state coherence."""

    def test_matches_weak_probe_reference(self, atom, weak_probe):
        """Test that the numeric path matches t(0) to 1e-3 at Ωp = γ21/1000."""
        numeric = transmission_numeric(atom, weak_probe)
        analytic = transmission_weak_probe(atom, weak_probe)
        assert abs(numeric.t - analytic.t) < 1e-3

    def test_matches_weak_probe_across_control(self, atom, weak_probe, probe_grid):
        """Test agreement with the closed form over detuning and control amplitude."""
        for omega_c in (mhz_to_angular(11.0), mhz_to_angular(44.0)):
            for delta_p in probe_grid[::40]:
                drive = weak_probe.replace(omega_c_rabi=omega_c, delta_p=delta_p)
                numeric = transmission_numeric(atom, drive).t
                analytic = transmission_weak_probe(atom, drive).t
                assert abs(numeric - analytic) < 1e-3

    def test_random_physical_atoms(self, rng):
        """Test weak-probe agreement for random physical atoms."""
        for _ in range(20):
            atom = random_atom(rng)
            drive = DriveSpec(
                omega_p_rabi=atom.gamma_deph_21 / 1000,
                omega_c_rabi=rng.uniform(0.0, 3.0) * atom.gamma_rel_21,
                delta_p=rng.uniform(-2.0, 2.0) * atom.gamma_rel_21,
            )
            assert abs(transmission_numeric(atom, drive).t - transmission_weak_probe(atom, drive).t) < 1e-3

    def test_saturated_matches_closed_form(self, atom):
        """Test the strong-probe two-level line to 1e-9."""
        for omega_p in (mhz_to_angular(0.5), mhz_to_angular(2.0), mhz_to_angular(10.0)):
            for delta_p in (0.0, 2e7, -5e7):
                drive = DriveSpec(omega_p_rabi=omega_p, delta_p=delta_p)
                numeric = transmission_numeric(atom, drive).t
                closed = transmission_saturated_two_level(atom, drive).t
                assert abs(numeric - closed) < 1e-9

    def test_two_level_energy_bound(self):
        """Test |r|² + |t|² ≤ 1 over detuning and probe power without pure dephasing."""
        atom = AtomSpec(gamma_rel_21=6.9e7, gamma_deph_21=3.45e7)
        for omega_p in (1e4, mhz_to_angular(2.0), mhz_to_angular(20.0)):
            for delta_p in np.linspace(-3e8, 3e8, 61):
                point = transmission_numeric(atom, DriveSpec(omega_p_rabi=omega_p, delta_p=delta_p))
                assert abs(point.r) ** 2 + abs(point.t) ** 2 <= 1.0 + 1e-9

    def test_converges_to_weak_probe_limit(self, atom):
        """Test that the deviation from the closed form shrinks monotonically as Ωp falls."""
        deviations = []
        for k in (2, 3, 4):
            worst = 0.0
            for delta_p in np.linspace(-2e8, 2e8, 21):
                drive = DriveSpec(omega_p_rabi=atom.gamma_deph_21 * 10.0 ** -k, delta_p=delta_p)
                numeric = transmission_numeric(atom, drive).t
                worst = max(worst, abs(numeric - transmission_weak_probe(atom, drive).t))
            deviations.append(worst)
        assert deviations[0] > deviations[1] > deviations[2]
        assert deviations[1] < 1e-3

    def test_strong_probe_stays_near_weak_value(self, atom):
        """Test that Ωp/2π = 2 MHz moves t(0) by less than 0.05."""
        point = transmission_numeric(atom, DriveSpec(omega_p_rabi=mhz_to_angular(2.0)))
        assert abs(point.t - 0.2333) < 0.05
        assert point.t.real > 0.2333

    def test_zero_probe_raises(self, atom):
        """Test that Ωp = 0 raises ZeroProbe."""
        with pytest.raises(ZeroProbe):
            transmission_numeric(atom, DriveSpec())

    def test_decoupled_atom_transmits(self, atom, weak_probe):
        """Test that Γ21 = 0 gives t = 1 on the numeric path."""
        assert transmission_numeric(atom.replace(gamma_rel_21=0.0), weak_probe).t == 1.0

    def test_saturated_rejects_control(self, atom):
        """Test that the two-level closed form refuses Ωc ≠ 0."""
        with pytest.raises(ValueError, match="omega_c_rabi = 0"):
            transmission_saturated_two_level(atom, DriveSpec(omega_p_rabi=1e6, omega_c_rabi=1e6))


class TestCoupling:
    """Test the M ↔ Γ21 relation and Rabi amplitudes."""

    def test_reference_mutual_inductance(self, atom):
        """Test that Γ21 = 6.9e7 gives M within 5% of 12 pH."""
        m = rate_to_coupling(atom.gamma_rel_21, 200e-9, 2 * np.pi * 10.165e9, 50.0)
        assert m == pytest.approx(12e-12, rel=0.05)

    def test_round_trip(self, atom):
        """Test that coupling_to_rate inverts rate_to_coupling."""
        m = rate_to_coupling(atom.gamma_rel_21, atom.persistent_current, atom.omega21, atom.line_impedance)
        rate = coupling_to_rate(m, atom.persistent_current, atom.omega21, atom.line_impedance)
        assert rate == pytest.approx(atom.gamma_rel_21, rel=1e-12)

    def test_non_positive_argument_raises(self):
        """Test that zero current raises ValueError naming the field."""
        with pytest.raises(ValueError, match="persistent_current must be > 0"):
            coupling_to_rate(12e-12, 0.0, 1e10, 50.0)

    def test_rabi_from_current(self, atom):
        """Test ħΩ = ζ·M·i_PC·I."""
        omega = rabi_from_current(atom, 1e-6)
        assert omega == pytest.approx(atom.mutual_inductance * atom.persistent_current * 1e-6 / HBAR)

    def test_rabi_uses_matrix_element(self):
        """Test that ζ32 scales the control amplitude."""
        atom = AtomSpec(zeta_32=0.5)
        assert rabi_from_current(atom, 1e-6, "32") == pytest.approx(0.5 * rabi_from_current(atom, 1e-6, "21"))

    def test_rabi_from_power(self, atom):
        """Test that power maps to current amplitude √(2P/Z)."""
        power = 1e-15
        expected = rabi_from_current(atom, np.sqrt(2 * power / atom.line_impedance))
        assert rabi_from_power(atom, power) == pytest.approx(expected)

    def test_negative_power_raises(self, atom):
        """Test that negative power is rejected."""
        with pytest.raises(ValueError, match="power must be >= 0"):
            rabi_from_power(atom, -1.0)
