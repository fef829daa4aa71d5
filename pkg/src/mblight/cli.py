"""Command line front end: built-in setups, JSON setup files, run orchestration.

Usage:

    mblight -d ziolkowski1995 -m fdtd-reg-cayley -w raw -o out/

The device argument names a built-in setup or, prefixed with ``@``, a JSON
setup file. Solver names of the form ``cpu-fdtd[-red]-<N>lvl-reg-cayley``
are accepted as aliases of ``fdtd-reg-cayley`` (and ``...-rk4`` of
``fdtd-rk4``); the level count is handled at runtime. Worker count comes
from the MBLIGHT_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from pathlib import Path


from .core import (
    BoundaryReflectivity,
    ConstantField,
    CurveField,
    Device,
    GaussianPulse,
    Material,
    RandomField,
    Record,
    Region,
    Scenario,
    SechPulse,
    available_solvers,
    available_writers,
    create_solver,
    create_writer,
    ensure_material,
    scenario_validate,
)
from .errors import (
    ConflictError,
    MblightError,
    NotFoundError,
    SolverError,
    ValidationError,
)
from .quantum import LindbladRelaxation, QmDescription, QmOperator
from .setups import builtin_names, builtin_setup

__all__ = ["parse_setup_file", "resolve_solver_name", "main", "entry_point"]

_ALIAS_PATTERN = re.compile(r"^cpu-fdtd(?:-red)?-\d+lvl-(?P<algo>[a-z0-9-]+)$")
_ALIAS_ALGOS = {"reg-cayley": "fdtd-reg-cayley", "rk4": "fdtd-rk4"}


def resolve_solver_name(name: str) -> str:
    """Map per-level solver aliases onto the runtime-generic solvers."""
    match = _ALIAS_PATTERN.match(name)
    if match:
        algo = match.group("algo")
        if algo in _ALIAS_ALGOS:
            return _ALIAS_ALGOS[algo]
        raise NotFoundError(
            f"unknown solver algorithm {algo!r} in {name!r}; "
            f"available: {available_solvers()}"
        )
    return name


# ---------------------------------------------------------------------------
# JSON setup files
# ---------------------------------------------------------------------------


class _SetupParser:
    """Walks a setup document, reporting errors with JSON-pointer paths."""

    def parse(self, doc) -> tuple[Device, Scenario]:
        if not isinstance(doc, dict):
            self._fail("", "setup document must be a JSON object")
        schema = doc.get("schema")
        if schema != 1:
            self._fail("/schema", f"unsupported schema {schema!r}, expected 1")
        materials = self._list(doc, "materials", "")
        for idx, spec in enumerate(materials):
            self._material(spec, f"/materials/{idx}")
        device = self._device(self._obj(doc, "device", ""), "/device")
        scenario = self._scenario(self._obj(doc, "scenario", ""), "/scenario")
        return device, scenario

    def _fail(self, pointer: str, message: str):
        raise ValueError(f"setup error at {pointer or '/'}: {message}")

    def _get(self, obj, key, pointer, default=None, required=False):
        if key not in obj:
            if required:
                self._fail(f"{pointer}/{key}", "missing required key")
            return default
        return obj[key]

    def _obj(self, obj, key, pointer):
        value = self._get(obj, key, pointer, required=True)
        if not isinstance(value, dict):
            self._fail(f"{pointer}/{key}", "expected an object")
        return value

    def _list(self, obj, key, pointer):
        value = self._get(obj, key, pointer, required=True)
        if not isinstance(value, list):
            self._fail(f"{pointer}/{key}", "expected an array")
        return value

    def _number(self, obj, key, pointer, default=None, required=False):
        value = self._get(obj, key, pointer, default=default, required=required)
        if value is None:
            return None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self._fail(f"{pointer}/{key}", f"expected a number, got {value!r}")
        return float(value)

    def _string(self, obj, key, pointer, default=None, required=False):
        value = self._get(obj, key, pointer, default=default, required=required)
        if value is not None and not isinstance(value, str):
            self._fail(f"{pointer}/{key}", f"expected a string, got {value!r}")
        return value

    def _real_vector(self, values, pointer):
        if not isinstance(values, list):
            self._fail(pointer, "expected an array of numbers")
        out = []
        for idx, v in enumerate(values):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                self._fail(f"{pointer}/{idx}", f"expected a number, got {v!r}")
            out.append(float(v))
        return out

    def _complex_vector(self, values, pointer):
        """Entries are plain numbers or [re, im] pairs."""
        if not isinstance(values, list):
            self._fail(pointer, "expected an array")
        out = []
        for idx, v in enumerate(values):
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                out.append(complex(v))
            elif (
                isinstance(v, list)
                and len(v) == 2
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)
            ):
                out.append(complex(v[0], v[1]))
            else:
                self._fail(f"{pointer}/{idx}", f"expected a number or [re, im], got {v!r}")
        return out

    def _operator(self, spec, pointer):
        if not isinstance(spec, dict):
            self._fail(pointer, "expected an object with 'diag' (and 'offdiag')")
        diag = self._real_vector(self._get(spec, "diag", pointer, required=True), f"{pointer}/diag")
        offdiag = None
        if spec.get("offdiag") is not None:
            offdiag = self._complex_vector(spec["offdiag"], f"{pointer}/offdiag")
        try:
            return QmOperator(diag, offdiag)
        except ValueError as exc:
            self._fail(pointer, str(exc))

    def _qm(self, spec, pointer):
        density = self._number(spec, "density_3d", pointer, required=True)
        hamiltonian = self._operator(self._get(spec, "hamiltonian", pointer, required=True), f"{pointer}/hamiltonian")
        dipole = self._operator(self._get(spec, "dipole", pointer, required=True), f"{pointer}/dipole")
        rates_raw = self._list(spec, "rates", pointer)
        rates = []
        for i, row in enumerate(rates_raw):
            rates.append(self._real_vector(row, f"{pointer}/rates/{i}"))
            for j, value in enumerate(rates[-1]):
                if i != j and value < 0:
                    self._fail(f"{pointer}/rates/{i}/{j}", "scattering rate must be non-negative")
        dephasing = self._real_vector(self._get(spec, "pure_dephasing", pointer, required=True), f"{pointer}/pure_dephasing")
        for k, value in enumerate(dephasing):
            if value < 0:
                self._fail(f"{pointer}/pure_dephasing/{k}", "pure dephasing rate must be non-negative")
        try:
            relax = LindbladRelaxation(rates, dephasing)
            return QmDescription(density, hamiltonian, dipole, relax)
        except ValueError as exc:
            self._fail(pointer, str(exc))

    def _material(self, spec, pointer):
        if not isinstance(spec, dict):
            self._fail(pointer, "expected a material object")
        mat_id = self._string(spec, "id", pointer, required=True)
        qm = None
        if spec.get("qm") is not None:
            qm = self._qm(self._obj(spec, "qm", pointer), f"{pointer}/qm")
        try:
            material = Material(
                mat_id,
                rel_permittivity=self._number(spec, "rel_permittivity", pointer, default=1.0),
                rel_permeability=self._number(spec, "rel_permeability", pointer, default=1.0),
                overlap_factor=self._number(spec, "overlap_factor", pointer, default=1.0),
                losses=self._number(spec, "losses", pointer, default=0.0),
                qm=qm,
            )
            return ensure_material(material)
        except (ValueError, ConflictError) as exc:
            self._fail(pointer, str(exc))

    def _device(self, spec, pointer):
        name = self._string(spec, "name", pointer, default="device")
        device = Device(
            name,
            bc_left=BoundaryReflectivity(self._number(spec, "bc_left", pointer, default=1.0)),
            bc_right=BoundaryReflectivity(self._number(spec, "bc_right", pointer, default=1.0)),
        )
        regions = self._list(spec, "regions", pointer)
        if not regions:
            self._fail(f"{pointer}/regions", "device has no regions")
        for idx, rspec in enumerate(regions):
            rp = f"{pointer}/regions/{idx}"
            if not isinstance(rspec, dict):
                self._fail(rp, "expected a region object")
            try:
                device.add_region(
                    Region(
                        self._string(rspec, "name", rp, default=f"region {idx}"),
                        self._string(rspec, "material", rp, required=True),
                        self._number(rspec, "x_start", rp, required=True),
                        self._number(rspec, "x_end", rp, required=True),
                    )
                )
            except (ValueError, NotFoundError) as exc:
                self._fail(rp, str(exc))
        return device

    def _ic(self, spec, pointer):
        if spec is None:
            return ConstantField(0.0)
        if not isinstance(spec, dict):
            self._fail(pointer, "expected an initial-condition object")
        kind = self._string(spec, "kind", pointer, default="constant")
        if kind == "constant":
            return ConstantField(self._number(spec, "value", pointer, default=0.0))
        if kind == "random":
            seed = self._get(spec, "seed", pointer)
            if seed is not None and not isinstance(seed, int):
                self._fail(f"{pointer}/seed", "expected an integer seed")
            return RandomField(
                amplitude=self._number(spec, "amplitude", pointer, default=1e-4),
                seed=seed,
            )
        if kind == "curve":
            return CurveField(self._real_vector(self._get(spec, "samples", pointer, required=True), f"{pointer}/samples"))
        self._fail(f"{pointer}/kind", f"unknown initial condition kind {kind!r}")

    def _source(self, spec, pointer):
        if not isinstance(spec, dict):
            self._fail(pointer, "expected a source object")
        stype = self._string(spec, "type", pointer, required=True)
        common = dict(
            name=self._string(spec, "name", pointer, default=stype),
            position=self._number(spec, "position", pointer, default=0.0),
            kind=self._string(spec, "kind", pointer, default="hard"),
            amplitude=self._number(spec, "amplitude", pointer, required=True),
            carrier_freq=self._number(spec, "carrier_freq", pointer, required=True),
            carrier_phase=self._number(spec, "carrier_phase", pointer, default=0.0),
        )
        try:
            if stype == "sech":
                return SechPulse(
                    envelope_shift=self._number(spec, "envelope_shift", pointer, default=0.0),
                    envelope_rate=self._number(spec, "envelope_rate", pointer, required=True),
                    **common,
                )
            if stype == "gaussian":
                return GaussianPulse(
                    peak_time=self._number(spec, "peak_time", pointer, required=True),
                    width=self._number(spec, "width", pointer, required=True),
                    **common,
                )
        except ValueError as exc:
            self._fail(pointer, str(exc))
        self._fail(f"{pointer}/type", f"unknown source type {stype!r}")

    def _record(self, spec, pointer):
        if not isinstance(spec, dict):
            self._fail(pointer, "expected a record object")
        try:
            return Record(
                name=self._string(spec, "name", pointer, required=True),
                quantity=self._string(spec, "quantity", pointer, default="e"),
                i=int(self._number(spec, "i", pointer, default=0)),
                j=int(self._number(spec, "j", pointer, default=0)),
                interval=self._number(spec, "interval", pointer, default=0.0),
                position=self._number(spec, "position", pointer, default=None),
            )
        except ValueError as exc:
            self._fail(pointer, str(exc))

    def _scenario(self, spec, pointer):
        gridpoints = self._number(spec, "gridpoints", pointer, required=True)
        end_time = self._number(spec, "end_time", pointer, required=True)
        timesteps = self._get(spec, "timesteps", pointer)
        if timesteps is not None and not isinstance(timesteps, int):
            self._fail(f"{pointer}/timesteps", "expected an integer")
        rho = self._operator(self._get(spec, "rho_init", pointer, required=True), f"{pointer}/rho_init")
        scenario = Scenario(
            self._string(spec, "name", pointer, default="scenario"),
            int(gridpoints),
            end_time,
            rho,
            ic_e_field=self._ic(spec.get("ic_e"), f"{pointer}/ic_e"),
            ic_h_field=self._ic(spec.get("ic_h"), f"{pointer}/ic_h"),
            num_timesteps=timesteps,
        )
        for idx, sspec in enumerate(self._get(spec, "sources", pointer, default=[])):
            scenario.add_source(self._source(sspec, f"{pointer}/sources/{idx}"))
        for idx, rspec in enumerate(self._get(spec, "records", pointer, default=[])):
            scenario.add_record(self._record(rspec, f"{pointer}/records/{idx}"))
        return scenario


def parse_setup_file(path) -> tuple[Device, Scenario]:
    """Build a (device, scenario) pair from a JSON setup document."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"setup file {path} is not valid JSON: {exc}") from exc
    device, scenario = _SetupParser().parse(doc)
    problems = scenario_validate(device, scenario)
    if problems:
        raise ValidationError(problems)
    return device, scenario


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mblight",
        description="1D Maxwell-Bloch solver (FDTD + Lindblad density matrices)",
    )
    parser.add_argument("-d", "--device", help="built-in setup name, or @file.json")
    parser.add_argument("-m", "--method", default="fdtd-reg-cayley", help="solver name")
    parser.add_argument("-w", "--writer", default="raw", help="writer name")
    parser.add_argument("-g", "--gridpoints", type=int, help="override grid point count")
    parser.add_argument("-e", "--endtime", type=float, help="override end time (s)")
    parser.add_argument("-o", "--output", help="output archive directory")
    parser.add_argument("--seed", type=int, help="seed for random initial fields")
    parser.add_argument(
        "--list", action="store_true", help="list solvers, writers and built-in setups"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.list:
        print("solvers:  " + ", ".join(available_solvers()))
        print("writers:  " + ", ".join(available_writers()))
        print("built-ins: " + ", ".join(builtin_names()))
        return 0
    if not args.device:
        print("error: -d/--device is required (try --list)", file=sys.stderr)
        return 1

    try:
        solver_name = resolve_solver_name(args.method)
        writer = create_writer(args.writer)
        if args.device.startswith("@"):
            device, scenario = parse_setup_file(args.device[1:])
            if args.gridpoints is not None:
                scenario.num_gridpoints = args.gridpoints
            if args.endtime is not None:
                scenario.end_time = args.endtime
        else:
            device, scenario = builtin_setup(
                args.device,
                gridpoints=args.gridpoints,
                end_time=args.endtime,
                seed=args.seed,
            )
        solver = create_solver(solver_name, device, scenario, seed=args.seed)
    except (ValidationError, NotFoundError, ConflictError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    grid = solver.grid
    print(
        f"grid: {grid.num_x} points, dx = {grid.dx:.6e} m, "
        f"{grid.num_t} time samples, dt = {grid.dt:.6e} s",
        file=sys.stderr,
    )
    output = args.output or f"{device.name}_{scenario.name}"
    try:
        started = time.perf_counter()
        results = solver.run()
        elapsed = time.perf_counter() - started
        print(f"run completed in {elapsed:.2f} s ({solver.threads} workers)", file=sys.stderr)
        writer.write(output, results, device, scenario, seed=solver.seed)
        print(f"archive written to {output}", file=sys.stderr)
    except (SolverError, OSError, MblightError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
