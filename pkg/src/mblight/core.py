"""Simulation setup model: materials, devices, scenarios, sources, records.

The static half of a setup (device geometry, materials, boundary
reflectivities) is separated from the dynamic half (scenario: grid size,
end time, initial conditions, sources, records) so the same device can be
simulated under different conditions. Materials live in a process-global
library so that periodic structures can reference the same material from
many regions.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .constants import EPS0, MU0
from .errors import ConflictError, NotFoundError
from .quantum import QmDescription, QmOperator

__all__ = [
    "Material",
    "Region",
    "BoundaryReflectivity",
    "Device",
    "Source",
    "SechPulse",
    "GaussianPulse",
    "ConstantField",
    "RandomField",
    "CurveField",
    "Record",
    "Scenario",
    "Result",
    "add_material",
    "ensure_material",
    "get_material",
    "material_names",
    "clear_material_library",
    "scenario_validate",
    "register_solver",
    "register_writer",
    "create_solver",
    "create_writer",
    "available_solvers",
    "available_writers",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 0xB10C


# ---------------------------------------------------------------------------
# materials
# ---------------------------------------------------------------------------


@dataclass(eq=True)
class Material:
    """Electromagnetic properties of a section, plus an optional quantum part.

    The loss coefficient ``losses`` (field loss alpha_0, 1/m) relates to the
    conductivity via sigma = 2 * alpha_0 * eps * c with c the material light
    speed, so lossless materials carry sigma = 0 exactly.
    """

    id: str
    rel_permittivity: float = 1.0
    rel_permeability: float = 1.0
    overlap_factor: float = 1.0
    losses: float = 0.0
    qm: QmDescription | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("material id must be a non-empty string")
        if self.rel_permittivity < 1.0:
            raise ValueError("relative permittivity must be >= 1")
        if not self.rel_permeability > 0.0:
            raise ValueError("relative permeability must be positive")
        if not 0.0 <= self.overlap_factor <= 1.0:
            raise ValueError("overlap factor must lie in [0, 1]")
        if self.losses < 0.0:
            raise ValueError("loss coefficient must be non-negative")

    @property
    def permittivity(self) -> float:
        return EPS0 * self.rel_permittivity

    @property
    def permeability(self) -> float:
        return MU0 * self.rel_permeability

    @property
    def light_speed(self) -> float:
        return 1.0 / math.sqrt(self.permittivity * self.permeability)

    @property
    def conductivity(self) -> float:
        return 2.0 * self.losses * self.permittivity * self.light_speed


_material_library: dict[str, Material] = {}
_library_lock = threading.Lock()


def add_material(mat: Material) -> None:
    """Add a material to the global library; duplicate ids are rejected."""
    with _library_lock:
        if mat.id in _material_library:
            raise ConflictError(f"material {mat.id!r} is already in the library")
        _material_library[mat.id] = mat


def ensure_material(mat: Material) -> Material:
    """Add a material, or return the existing entry if it is identical.

    Used by the built-in setups so they stay idempotent within a process;
    a clashing id with *different* properties is still a conflict.
    """
    with _library_lock:
        existing = _material_library.get(mat.id)
        if existing is None:
            _material_library[mat.id] = mat
            return mat
        if existing == mat:
            return existing
    raise ConflictError(
        f"material {mat.id!r} is already registered with different properties"
    )


def get_material(material_id: str) -> Material:
    with _library_lock:
        try:
            return _material_library[material_id]
        except KeyError:
            raise NotFoundError(
                f"unknown material {material_id!r}; known: "
                f"{sorted(_material_library)}"
            ) from None


def material_names() -> list[str]:
    with _library_lock:
        return sorted(_material_library)


def clear_material_library() -> None:
    with _library_lock:
        _material_library.clear()


# ---------------------------------------------------------------------------
# device
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Section [x_start, x_end] with constant material properties."""

    name: str
    material_id: str
    x_start: float
    x_end: float

    def __post_init__(self):
        if not 0.0 <= self.x_start <= self.x_end:
            raise ValueError(
                f"region {self.name!r}: need 0 <= x_start <= x_end, got "
                f"[{self.x_start}, {self.x_end}]"
            )


@dataclass(frozen=True)
class BoundaryReflectivity:
    """Boundary condition: power reflectivity R at a device end.

    R = 1 is a perfect mirror, R = 0 a fully absorbing termination, and
    intermediate values model semi-transparent facets.
    """

    reflectivity: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError("reflectivity must lie in [0, 1]")


class Device:
    """Ordered, gap-free collection of regions plus boundary conditions."""

    def __init__(self, name: str, bc_left=None, bc_right=None):
        self.name = name
        self.bc_left = bc_left if bc_left is not None else BoundaryReflectivity(1.0)
        self.bc_right = bc_right if bc_right is not None else BoundaryReflectivity(1.0)
        self.regions: list[Region] = []

    @property
    def length(self) -> float:
        return self.regions[-1].x_end if self.regions else 0.0

    def add_region(self, region: Region) -> None:
        """Append a region; it must adjoin the current device end exactly."""
        get_material(region.material_id)
        expected = self.length if self.regions else 0.0
        if region.x_start != expected:
            raise ValueError(
                f"region {region.name!r} starts at {region.x_start} but the "
                f"device currently ends at {expected} (no gaps or overlaps)"
            )
        self.regions.append(region)

    def materials(self) -> list[Material]:
        seen: dict[str, Material] = {}
        for region in self.regions:
            seen.setdefault(region.material_id, get_material(region.material_id))
        return list(seen.values())

    def material_at(self, x: float) -> Material:
        """Material of the region containing x (right-exclusive except last)."""
        if not self.regions:
            raise ValueError("device has no regions")
        for region in self.regions:
            if region.x_start <= x < region.x_end:
                return get_material(region.material_id)
        last = self.regions[-1]
        if x <= last.x_end:
            return get_material(last.material_id)
        raise ValueError(f"position {x} outside device [0, {self.length}]")

    def __eq__(self, other):
        if not isinstance(other, Device):
            return NotImplemented
        return (
            self.name == other.name
            and self.bc_left == other.bc_left
            and self.bc_right == other.bc_right
            and self.regions == other.regions
        )


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------


def _sech(x: float) -> float:
    # exp-based form avoids cosh overflow for large arguments
    e = math.exp(-abs(x))
    return 2.0 * e / (1.0 + e * e)


@dataclass(frozen=True)
class Source:
    """Field source at a fixed position.

    A hard source overwrites the electric field at its grid point with the
    source value; a soft source adds the value to the present field.
    """

    name: str
    position: float
    kind: str  # "hard" | "soft"

    def __post_init__(self):
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"source kind must be 'hard' or 'soft', got {self.kind!r}")
        if self.position < 0.0:
            raise ValueError("source position must be non-negative")

    def value(self, t: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class SechPulse(Source):
    """A * sech(rate * t - shift) * cos(2 pi f t - phase)."""

    amplitude: float = 0.0
    carrier_freq: float = 0.0
    envelope_shift: float = 0.0
    envelope_rate: float = 1.0
    carrier_phase: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if not self.envelope_rate > 0.0:
            raise ValueError("envelope rate must be positive")

    def value(self, t: float) -> float:
        envelope = _sech(self.envelope_rate * t - self.envelope_shift)
        return self.amplitude * envelope * math.cos(
            2.0 * math.pi * self.carrier_freq * t - self.carrier_phase
        )


@dataclass(frozen=True)
class GaussianPulse(Source):
    """A * exp(-(t - t0)^2 / tau^2) * cos(2 pi f t - phase)."""

    amplitude: float = 0.0
    carrier_freq: float = 0.0
    peak_time: float = 0.0
    width: float = 1.0
    carrier_phase: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if not self.width > 0.0:
            raise ValueError("width must be positive")

    def value(self, t: float) -> float:
        arg = (t - self.peak_time) / self.width
        return self.amplitude * math.exp(-arg * arg) * math.cos(
            2.0 * math.pi * self.carrier_freq * t - self.carrier_phase
        )


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantField:
    value: float = 0.0

    def build(self, n: int, seed: int) -> np.ndarray:
        return np.full(n, self.value, dtype=float)


@dataclass(frozen=True)
class RandomField:
    """Uniform random field on [-amplitude, +amplitude] per grid point.

    Values come from a splitmix64 stream so the same seed reproduces the
    same field on every platform. A seed of None defers to the run-level
    seed (scaled per field kind by the caller).
    """

    amplitude: float = 1e-4
    seed: int | None = None

    def build(self, n: int, seed: int) -> np.ndarray:
        resolved = self.seed if self.seed is not None else seed
        return self.amplitude * (2.0 * _splitmix64_stream(resolved, n) - 1.0)


@dataclass(frozen=True)
class CurveField:
    """Explicit per-grid-point initial field values."""

    samples: tuple

    def __init__(self, samples):
        object.__setattr__(self, "samples", tuple(float(s) for s in samples))

    def build(self, n: int, seed: int) -> np.ndarray:
        if len(self.samples) != n:
            raise ValueError(
                f"curve has {len(self.samples)} samples, grid has {n} points"
            )
        return np.array(self.samples, dtype=float)


_MASK64 = (1 << 64) - 1


def _splitmix64_stream(seed: int, count: int) -> np.ndarray:
    """count uniform doubles in [0, 1) from the splitmix64 generator."""
    state = seed & _MASK64
    out = np.empty(count, dtype=float)
    for k in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z = z ^ (z >> 31)
        out[k] = z / 2.0**64
    return out


# ---------------------------------------------------------------------------
# records and results
# ---------------------------------------------------------------------------

_QUANTITIES = ("e", "h", "d", "inv")


@dataclass(frozen=True)
class Record:
    """Request to record one quantity during the run.

    ``quantity`` is one of 'e', 'h', 'd' (density matrix entry, 1-based
    indices i, j) or 'inv' (two-level population inversion). A sampling
    interval of 0 records every step; a position of None records the whole
    spatial domain.
    """

    name: str
    quantity: str = "e"
    i: int = 0
    j: int = 0
    interval: float = 0.0
    position: float | None = None

    def __post_init__(self):
        if self.quantity not in _QUANTITIES:
            raise ValueError(f"unknown record quantity {self.quantity!r}")
        if self.quantity == "d" and (self.i < 1 or self.j < 1):
            raise ValueError("density records need 1-based level indices i, j")
        if self.interval < 0.0:
            raise ValueError("sampling interval must be non-negative")

    @property
    def is_complex(self) -> bool:
        return self.quantity == "d" and self.i != self.j


@dataclass
class Result:
    """Sampled spatiotemporal trace of one recorded quantity.

    ``data`` has shape (rows, cols) = (time samples, space samples); the
    row/column axes are affine maps t = t0 + row * dt_sample and
    x = x0 + col * dx.
    """

    name: str
    data: np.ndarray
    t0: float = 0.0
    dt_sample: float = 0.0
    x0: float = 0.0
    dx: float = 0.0

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)

    @property
    def real_part(self) -> np.ndarray:
        return np.ascontiguousarray(self.data.real).reshape(-1)

    @property
    def imag_part(self) -> np.ndarray | None:
        if not self.is_complex:
            return None
        return np.ascontiguousarray(self.data.imag).reshape(-1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_sample * np.arange(self.rows)

    @property
    def positions(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.cols)


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


class Scenario:
    """Dynamic half of a setup: grid sizing, ICs, sources and records."""

    def __init__(
        self,
        name: str,
        num_gridpoints: int,
        end_time: float,
        rho_init: QmOperator,
        ic_e_field=None,
        ic_h_field=None,
        num_timesteps: int | None = None,
    ):
        self.name = name
        self.num_gridpoints = int(num_gridpoints)
        self.end_time = float(end_time)
        self.rho_init = rho_init
        self.ic_e_field = ic_e_field if ic_e_field is not None else ConstantField(0.0)
        self.ic_h_field = ic_h_field if ic_h_field is not None else ConstantField(0.0)
        self.num_timesteps = num_timesteps
        self.sources: list[Source] = []
        self.records: list[Record] = []

    def add_source(self, source: Source) -> None:
        self.sources.append(source)

    def add_record(self, record: Record) -> None:
        self.records.append(record)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.name == other.name
            and self.num_gridpoints == other.num_gridpoints
            and self.end_time == other.end_time
            and self.rho_init == other.rho_init
            and self.ic_e_field == other.ic_e_field
            and self.ic_h_field == other.ic_h_field
            and self.num_timesteps == other.num_timesteps
            and self.sources == other.sources
            and self.records == other.records
        )


def scenario_validate(device: Device, scenario: Scenario) -> list[str]:
    """Cross-check a device/scenario pair; returns the list of problems.

    An empty list means the setup is runnable. All violations are
    collected instead of stopping at the first one.
    """
    problems: list[str] = []
    if not device.regions:
        problems.append("device has no regions")
    if not scenario.end_time > 0.0:
        problems.append("end time must be positive")
    if scenario.num_gridpoints < 1:
        problems.append("number of grid points must be at least 1")
    if scenario.num_gridpoints == 1 and (
        scenario.num_timesteps is None or scenario.num_timesteps < 2
    ):
        problems.append(
            "a single-gridpoint scenario requires num_timesteps >= 2 to fix "
            "the temporal discretization"
        )
    if scenario.num_gridpoints > 1 and device.regions and not device.length > 0.0:
        problems.append(
            "a zero-length device supports only single-gridpoint scenarios"
        )

    for name, ic in (("E", scenario.ic_e_field), ("H", scenario.ic_h_field)):
        if isinstance(ic, CurveField) and len(ic.samples) != scenario.num_gridpoints:
            problems.append(
                f"{name}-field curve has {len(ic.samples)} samples, expected "
                f"{scenario.num_gridpoints}"
            )

    qm_dims = set()
    if device.regions:
        try:
            for mat in device.materials():
                if mat.qm is not None:
                    qm_dims.add(mat.qm.dim)
        except NotFoundError as exc:
            problems.append(str(exc))

    for p in scenario.rho_init.density_problems():
        problems.append(f"initial density matrix: {p}")
    for dim in sorted(qm_dims):
        if scenario.rho_init.dim != dim:
            problems.append(
                f"initial density matrix has dimension {scenario.rho_init.dim} "
                f"but a material has {dim} levels"
            )

    length = device.length
    for src in scenario.sources:
        if src.position > length:
            problems.append(
                f"source {src.name!r} at {src.position} lies outside the "
                f"device [0, {length}]"
            )

    for rec in scenario.records:
        if rec.position is not None and not 0.0 <= rec.position <= length:
            problems.append(
                f"record {rec.name!r} position {rec.position} outside [0, {length}]"
            )
        if rec.quantity in ("d", "inv") and not qm_dims:
            problems.append(
                f"record {rec.name!r} needs a material with a quantum description"
            )
        if rec.quantity == "d":
            for dim in sorted(qm_dims):
                if rec.i > dim or rec.j > dim:
                    problems.append(
                        f"record {rec.name!r} indices ({rec.i},{rec.j}) exceed "
                        f"the {dim}-level description"
                    )
        if rec.quantity == "inv":
            for dim in sorted(qm_dims):
                if dim != 2:
                    problems.append(
                        f"record {rec.name!r}: inversion is only defined for "
                        f"two-level materials (found {dim} levels)"
                    )
    return problems


# ---------------------------------------------------------------------------
# solver / writer registries
# ---------------------------------------------------------------------------

_solver_registry: dict[str, object] = {}
_writer_registry: dict[str, object] = {}


def register_solver(name: str, factory) -> None:
    _solver_registry[name] = factory


def register_writer(name: str, factory) -> None:
    _writer_registry[name] = factory


def available_solvers() -> list[str]:
    return sorted(_solver_registry)


def available_writers() -> list[str]:
    return sorted(_writer_registry)


def create_solver(name: str, device: Device, scenario: Scenario, **kwargs):
    """Instantiate a registered solver by name."""
    try:
        factory = _solver_registry[name]
    except KeyError:
        raise NotFoundError(
            f"unknown solver {name!r}; available: {available_solvers()}"
        ) from None
    return factory(device, scenario, **kwargs)


def create_writer(name: str, **kwargs):
    """Instantiate a registered writer by name."""
    try:
        factory = _writer_registry[name]
    except KeyError:
        raise NotFoundError(
            f"unknown writer {name!r}; available: {available_writers()}"
        ) from None
    return factory(**kwargs)
