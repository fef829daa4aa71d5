"""Shared fixtures and random-instance helpers for the test suite."""

import numpy as np
import pytest

from mblight import clear_material_library
from mblight.constants import EPS0, HBAR, MU0
from mblight.core import (
    BoundaryReflectivity,
    Device,
    Material,
    Record,
    Region,
    Scenario,
    SechPulse,
    add_material,
)
from mblight.quantum import (
    LindbladRelaxation,
    QmDescription,
    QmOperator,
    triangle_pairs,
)
from mblight.quantum import _diagonal_basis
from mblight.solver_fdtd import FdtdSolver


@pytest.fixture(autouse=True)
def fresh_material_library():
    """Each test starts from an empty global material library."""
    clear_material_library()
    yield
    clear_material_library()


def representable_dephasing(rng, dim, scale):
    """Pure dephasing rates generated from non-negative diagonal
    coefficients, so the Lindblad-form check passes by construction."""
    basis = _diagonal_basis(dim)
    coeffs = rng.uniform(0.0, 1.0, dim - 1) * scale
    return np.array(
        [
            0.5 * np.sum(coeffs * (basis[:, i] - basis[:, j]) ** 2)
            for i, j in triangle_pairs(dim)
        ]
    )


def random_description(
    rng,
    dim,
    rate_scale=1e11,
    freq_scale=1e14,
    dipole_scale=1e-29,
    density=1e24,
):
    """Random but physically valid N-level description."""
    n_off = dim * (dim - 1) // 2
    energies = np.sort(rng.uniform(0.0, 1.0, dim)) * HBAR * freq_scale
    off_h = (
        rng.standard_normal(n_off) + 1j * rng.standard_normal(n_off)
    ) * HBAR * freq_scale * 0.05
    off_mu = (
        rng.standard_normal(n_off) + 1j * rng.standard_normal(n_off)
    ) * dipole_scale
    rates = rng.uniform(0.0, 1.0, (dim, dim)) * rate_scale
    np.fill_diagonal(rates, 0.0)
    return QmDescription(
        density,
        QmOperator(energies, off_h),
        QmOperator(np.zeros(dim), off_mu),
        LindbladRelaxation(rates, representable_dephasing(rng, dim, rate_scale)),
    )


def random_density_matrix(rng, dim):
    """Random mixed state: positive semidefinite, unit trace."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def reflection_energy_ratio(reflectivity: float) -> float:
    """Measured energy reflectance of the right boundary.

    A soft pulse is launched in vacuum with an absorbing left edge; the
    total field energy of the right-going half is compared before and
    after it bounces off the right edge (>= 40 cells per wavelength).
    """
    clear_material_library()
    length = 60e-6
    num_x = 4096
    add_material(Material("Vacuum"))
    dev = Device(
        f"bc{reflectivity}",
        bc_left=BoundaryReflectivity(0.0),
        bc_right=BoundaryReflectivity(reflectivity),
    )
    dev.add_region(Region("v", "Vacuum", 0.0, length))
    sce = Scenario("s", num_x, 240e-15, QmOperator([1.0, 0.0]))
    sce.add_source(SechPulse("sech", 20e-6, "soft", 1.0, 2e14, 10.0, 2e14))
    sce.add_record(Record("e", quantity="e", interval=5e-15))
    sce.add_record(Record("h", quantity="h", interval=5e-15))
    results = {r.name: r for r in FdtdSolver(dev, sce, threads=1).run()}
    dx = length / (num_x - 1)
    energy = 0.5 * EPS0 * np.sum(results["e"].data**2, axis=1) * dx
    energy += 0.5 * MU0 * np.sum(results["h"].data**2, axis=1) * dx
    times = results["e"].times
    before = energy[np.argmin(np.abs(times - 160e-15))]
    after = energy[np.argmin(np.abs(times - 230e-15))]
    return after / before
