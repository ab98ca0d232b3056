"""
Shared fixtures: the reference atom and randomized physical parameter sets.
"""

import numpy as np
import pytest

from core.atom import AtomSpec, DriveSpec, reference_atom
from utils.units import mhz_to_angular


def random_atom(rng: np.random.Generator) -> AtomSpec:
    """
    Atom whose damping rates are the radiative bounds plus pure dephasing.

    Every coherence decays at least as fast as complete positivity requires,
    so stationary and evolved states are physical to the strict tolerance.
    """
    gamma_rel_21 = rng.uniform(0.5, 2.0) * 1e7
    gamma_rel_32 = rng.uniform(0.5, 2.0) * 1e7
    phi_2, phi_3 = rng.uniform(0.0, 1.0, size=2) * 1e7
    return AtomSpec(
        gamma_rel_21=gamma_rel_21,
        gamma_rel_32=gamma_rel_32,
        gamma_deph_21=gamma_rel_21 / 2 + phi_2,
        gamma_deph_31=gamma_rel_32 / 2 + phi_3,
        gamma_deph_32=(gamma_rel_21 + gamma_rel_32) / 2 + phi_2 + phi_3,
    )


def random_drive(rng: np.random.Generator, atom: AtomSpec) -> DriveSpec:
    """Drive with amplitudes and detunings comparable to the atom's rates."""
    scale = atom.gamma_rel_21
    return DriveSpec(
        omega_p_rabi=rng.uniform(0.05, 1.5) * scale,
        omega_c_rabi=rng.uniform(0.0, 3.0) * scale,
        delta_p=rng.uniform(-2.0, 2.0) * scale,
        delta_c=rng.uniform(-2.0, 2.0) * scale,
    )


def random_hermitian_state(rng: np.random.Generator) -> np.ndarray:
    """Random full-rank density matrix."""
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    rho = a @ a.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


@pytest.fixture
def atom() -> AtomSpec:
    """The reference device."""
    return reference_atom()


@pytest.fixture
def weak_probe(atom) -> DriveSpec:
    """Resonant probe at γ21/1000 with the control off."""
    return DriveSpec(omega_p_rabi=atom.gamma_deph_21 / 1000)


@pytest.fixture
def probe_grid() -> np.ndarray:
    """±2π·50 MHz at 0.25 MHz spacing."""
    return np.linspace(mhz_to_angular(-50.0), mhz_to_angular(50.0), 401)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
