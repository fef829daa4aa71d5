"""Built-in simulation setups from the published literature.

Each setup constructs a (device, scenario) pair ready to pass to a
solver. The parameter sets follow the respective publications; where a
publication leaves details open (the anharmonic-ladder dipoles and
scattering rates, the reduced-scale laser cavity), the choices made here
are documented in the README.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .constants import E0, HBAR
from .core import (
    BoundaryReflectivity,
    Device,
    GaussianPulse,
    Material,
    RandomField,
    Record,
    Region,
    Scenario,
    SechPulse,
    ensure_material,
)
from .errors import NotFoundError
from .quantum import (
    LindbladRelaxation,
    QmDescription,
    QmOperator,
    two_level_description,
)

__all__ = ["builtin_setup", "builtin_names"]

_MARSKAR_PATTERN = re.compile(r"^marskar2011(?:-(\d+)lvl)?$")


def builtin_names() -> list[str]:
    return ["ziolkowski1995", "song2005", "marskar2011-Nlvl", "tzenov2016", "tzenov2016-full"]


def builtin_setup(
    name: str,
    gridpoints: int | None = None,
    end_time: float | None = None,
    seed: int | None = None,
):
    """Construct a built-in (device, scenario) pair by name.

    ``gridpoints`` and ``end_time`` override the setup defaults;
    ``seed`` feeds any random initial condition the setup uses.
    """
    match = _MARSKAR_PATTERN.match(name)
    if match:
        levels = int(match.group(1)) if match.group(1) else 6
        if levels < 2:
            raise ValueError("the anharmonic ladder needs at least 2 levels")
        return _marskar(levels, gridpoints, end_time)
    if name == "ziolkowski1995":
        return _ziolkowski(gridpoints, end_time)
    if name == "song2005":
        return _song(gridpoints, end_time)
    if name == "tzenov2016":
        return _tzenov(gridpoints, end_time, seed, full_scale=False)
    if name == "tzenov2016-full":
        return _tzenov(gridpoints, end_time, seed, full_scale=True)
    raise NotFoundError(f"unknown setup {name!r}; built-ins: {builtin_names()}")


def _ziolkowski(gridpoints, end_time):
    """Self-induced transparency of a sech pulse in a two-level medium."""
    vacuum = ensure_material(Material("Vacuum"))
    qm = two_level_description(1e24, 2.0 * math.pi * 2e14, 6.24e-11, 1.0e10, 1.0e10, -1.0)
    active = ensure_material(Material("AR_Ziolkowski", qm=qm))

    dev = Device("Ziolkowski")
    dev.add_region(Region("Vacuum left", vacuum.id, 0.0, 7.5e-6))
    dev.add_region(Region("Active region", active.id, 7.5e-6, 142.5e-6))
    dev.add_region(Region("Vacuum right", vacuum.id, 142.5e-6, 150e-6))

    sce = Scenario(
        "Basic",
        gridpoints if gridpoints is not None else 32768,
        end_time if end_time is not None else 200e-15,
        QmOperator([1.0, 0.0]),
    )
    sce.add_record(Record("inv12", quantity="inv", interval=2.5e-15))
    sce.add_record(Record("e", quantity="e", interval=2.5e-15))
    sce.add_source(
        SechPulse(
            "sech",
            position=0.0,
            kind="hard",
            amplitude=4.2186e9,
            carrier_freq=2e14,
            envelope_shift=10.0,
            envelope_rate=2e14,
        )
    )
    return dev, sce


def _song(gridpoints, end_time):
    """Driven V-type three-level system at a single grid point."""
    energies = [0.0, 2.3717e15 * HBAR, 2.4165e15 * HBAR]
    hamiltonian = QmOperator(energies)
    dipoles = [-E0 * 9.2374e-11, -E0 * 9.2374e-11 * math.sqrt(2.0), 0.0]
    dipole_op = QmOperator([0.0, 0.0, 0.0], dipoles)
    rate = 1e10
    rates = [[0.0, rate, rate], [rate, 0.0, rate], [rate, rate, 0.0]]
    relax = LindbladRelaxation(rates, [0.0, 0.0, 0.0])
    qm = QmDescription(6e24, hamiltonian, dipole_op, relax)
    active = ensure_material(Material("AR_Song", qm=qm))

    dev = Device("Song")
    dev.add_region(Region("Active region (single point)", active.id, 0.0, 0.0))

    sce = Scenario(
        "Basic",
        gridpoints if gridpoints is not None else 1,
        end_time if end_time is not None else 80e-15,
        QmOperator([1.0, 0.0, 0.0]),
        num_timesteps=10000,
    )
    sce.add_record(Record("e", quantity="e", position=0.0))
    sce.add_record(Record("d11", quantity="d", i=1, j=1, position=0.0))
    sce.add_record(Record("d22", quantity="d", i=2, j=2, position=0.0))
    sce.add_record(Record("d33", quantity="d", i=3, j=3, position=0.0))
    sce.add_source(
        SechPulse(
            "sech",
            position=0.0,
            kind="hard",
            amplitude=3.5471e9,
            carrier_freq=3.8118e14,
            envelope_shift=17.248,
            envelope_rate=1.76 / 5e-15,
            carrier_phase=-math.pi / 2.0,
        )
    )
    return dev, sce


def ladder_energies(levels: int) -> np.ndarray:
    """Anharmonic ladder: E_1 = 0, E_{n+1} = E_n + hbar w0 (1 - 0.1 (n - 3))."""
    w0 = 2.0 * math.pi * 1e13
    energies = np.zeros(levels)
    for n in range(1, levels):
        energies[n] = energies[n - 1] + HBAR * w0 * (1.0 - 0.1 * (n - 3))
    return energies


def _marskar(levels, gridpoints, end_time):
    """Gaussian pulse in an N-level anharmonic ladder medium.

    The publication fixes the level spacing; dipoles (nearest-neighbour,
    harmonic-oscillator scaling), relaxation (decay to the next level
    down) and the pulse are filled in at a comparable scale.
    """
    vacuum = ensure_material(Material("Vacuum"))
    energies = ladder_energies(levels)
    n_off = levels * (levels - 1) // 2
    dipoles = np.zeros(n_off, dtype=complex)
    rates = np.zeros((levels, levels))
    k = 0
    for j in range(1, levels):
        for i in range(j):
            if j == i + 1:
                dipoles[k] = -E0 * 1e-10 * math.sqrt(i + 1.0)
                rates[i, j] = 1e10  # relax one rung down
            k += 1
    hamiltonian = QmOperator(energies)
    dipole_op = QmOperator(np.zeros(levels), dipoles)
    relax = LindbladRelaxation(rates, np.zeros(n_off))
    qm = QmDescription(1e24, hamiltonian, dipole_op, relax)
    active = ensure_material(Material(f"AR_Marskar_{levels}lvl", qm=qm))

    dev = Device(f"Marskar_{levels}lvl")
    dev.add_region(Region("Vacuum left", vacuum.id, 0.0, 7.5e-6))
    dev.add_region(Region("Active region", active.id, 7.5e-6, 142.5e-6))
    dev.add_region(Region("Vacuum right", vacuum.id, 142.5e-6, 150e-6))

    rho_diag = np.zeros(levels)
    rho_diag[0] = 1.0
    sce = Scenario(
        "Basic",
        gridpoints if gridpoints is not None else 8192,
        end_time if end_time is not None else 2e-9,
        QmOperator(rho_diag),
    )
    sce.add_record(Record("e", quantity="e", interval=1e-12))
    sce.add_record(Record("d11", quantity="d", i=1, j=1, interval=1e-12, position=75e-6))
    sce.add_source(
        GaussianPulse(
            "gaussian",
            position=0.0,
            kind="hard",
            amplitude=1e9,
            carrier_freq=1e13,
            peak_time=600e-15,
            width=200e-15,
        )
    )
    return dev, sce


def _tzenov(gridpoints, end_time, seed, full_scale):
    """Quantum cascade laser frequency comb (five-level description).

    The default is a reduced desk-scale variant (0.5 mm cavity, 200 ps,
    4096 grid points); ``tzenov2016-full`` restores the published 5 mm
    cavity and 2 ns run, which takes hours.
    """
    h_diag = np.array([0.10103, 0.09677, 0.09720, 0.08129, 0.07633]) * E0
    h_off = np.zeros(10, dtype=complex)
    h_off[1] = 1.2329e-3 * E0  # (1,3) tunneling coupling
    h_off[2] = -1.3447e-3 * E0  # (2,3) tunneling coupling
    hamiltonian = QmOperator(h_diag, h_off)

    mu_off = np.zeros(10, dtype=complex)
    mu_off[5] = -E0 * 4e-9  # (3,4): the laser transition
    dipole_op = QmOperator(np.zeros(5), mu_off)

    rates = np.array(
        [
            [0.0000e12, 0.4947e12, 0.0974e12, 0.8116e12, 1.0410e12],
            [0.8245e12, 0.0000e12, 0.1358e12, 0.6621e12, 1.1240e12],
            [0.0229e12, 0.0469e12, 0.0000e12, 0.0794e12, 0.0357e12],
            [0.0047e12, 0.0029e12, 0.1252e12, 0.0000e12, 0.2810e12],
            [0.0049e12, 0.0049e12, 0.1101e12, 0.4949e12, 0.0000e12],
        ]
    )
    deph_inj_ull = 1.0 / 0.6e-12
    deph_other = 1.0 / 1.0e-12
    dephasing = np.full(10, deph_other)
    dephasing[0] = 0.0
    dephasing[1] = deph_inj_ull
    dephasing[2] = deph_inj_ull
    relax = LindbladRelaxation(rates, dephasing)
    qm = QmDescription(5.6e21, hamiltonian, dipole_op, relax)
    active = ensure_material(
        Material("AR_Tzenov", rel_permittivity=12.96, overlap_factor=0.9, losses=1100.0, qm=qm)
    )

    length = 5e-3 if full_scale else 0.5e-3
    dev = Device(
        "tzenov2016-full" if full_scale else "tzenov2016",
        bc_left=BoundaryReflectivity(0.8),
        bc_right=BoundaryReflectivity(0.8),
    )
    dev.add_region(Region("Active region", active.id, 0.0, length))

    # seed amplitude picked so the desk-scale run reaches gain clamping
    # within 200 ps while leaving well over 20 dB of small-signal growth;
    # a physical spontaneous-emission seed would only shift the build-up
    sce = Scenario(
        "basic",
        gridpoints if gridpoints is not None else (8192 if full_scale else 4096),
        end_time if end_time is not None else (2e-9 if full_scale else 200e-12),
        QmOperator([0.0, 0.0, 1.0, 0.0, 0.0]),
        ic_e_field=RandomField(amplitude=3e4, seed=seed),
    )
    sce.add_record(Record("e0", quantity="e", position=0.0))
    sce.add_record(Record("e", quantity="e", interval=1e-12))
    sce.add_record(Record("h", quantity="h", interval=1e-12))
    return dev, sce
