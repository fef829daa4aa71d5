"""Portable on-disk archive for simulation results.

An archive is a directory holding ``meta.json`` plus one or two raw
payload files per result:

* ``meta.json`` -- UTF-8 JSON with device/scenario names, grid metadata
  (dx, dt, num_gridpoints, num_timesteps, length, end_time, seed) and one
  descriptor per result: name, rows, cols, is_complex, t0, dt_sample, x0.
* ``<name>.real.f64`` -- row-major (time-major) little-endian float64
  values, no header; rows*cols entries.
* ``<name>.imag.f64`` -- present exactly when the result is complex.

The payload encoding is bit-exact: reading an archive reproduces the
written float64 values byte for byte on every platform.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import Device, RandomField, Result, Scenario, register_writer
from .errors import CorruptArchiveError
from .solver_fdtd import init_fdtd_simulation

__all__ = ["write_archive", "read_archive", "RawWriter"]

_META_NAME = "meta.json"


def _scenario_seed(scenario: Scenario):
    for ic in (scenario.ic_e_field, scenario.ic_h_field):
        if isinstance(ic, RandomField) and ic.seed is not None:
            return ic.seed
    return None


def write_archive(
    path,
    results: list[Result],
    device: Device,
    scenario: Scenario,
    seed: int | None = None,
) -> Path:
    """Persist results plus setup metadata under the directory ``path``."""
    names = [res.name for res in results]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate result names: {sorted(names)}")
    grid = init_fdtd_simulation(device, scenario)
    target = Path(path)
    target.mkdir(parents=True, exist_ok=True)

    descriptors = []
    for res in results:
        descriptors.append(
            {
                "name": res.name,
                "rows": res.rows,
                "cols": res.cols,
                "is_complex": res.is_complex,
                "t0": res.t0,
                "dt_sample": res.dt_sample,
                "x0": res.x0,
            }
        )
        np.ascontiguousarray(res.real_part, dtype="<f8").tofile(
            target / f"{res.name}.real.f64"
        )
        if res.is_complex:
            np.ascontiguousarray(res.imag_part, dtype="<f8").tofile(
                target / f"{res.name}.imag.f64"
            )

    meta = {
        "schema": 1,
        "device": device.name,
        "scenario": scenario.name,
        "dx": grid.dx,
        "dt": grid.dt,
        "num_gridpoints": grid.num_x,
        "num_timesteps": grid.num_t,
        "length": device.length,
        "end_time": scenario.end_time,
        "seed": seed if seed is not None else _scenario_seed(scenario),
        "results": descriptors,
    }
    (target / _META_NAME).write_text(
        json.dumps(meta, indent=1) + "\n", encoding="utf-8"
    )
    return target


def _read_payload(path: Path, count: int) -> np.ndarray:
    if not path.is_file():
        raise CorruptArchiveError(f"missing payload file {path}")
    data = np.fromfile(path, dtype="<f8")
    if data.size != count:
        raise CorruptArchiveError(
            f"payload {path} holds {data.size} values, expected {count}"
        )
    return data


def read_archive(path) -> tuple[dict, list[Result]]:
    """Load an archive written by ``write_archive``; bit-exact round trip."""
    source = Path(path)
    meta_path = source / _META_NAME
    if not meta_path.is_file():
        raise CorruptArchiveError(f"no {_META_NAME} in {source}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptArchiveError(f"unparseable {meta_path}: {exc}") from exc

    results = []
    for desc in meta.get("results", []):
        rows, cols = int(desc["rows"]), int(desc["cols"])
        count = rows * cols
        real = _read_payload(source / f"{desc['name']}.real.f64", count)
        if desc["is_complex"]:
            imag = _read_payload(source / f"{desc['name']}.imag.f64", count)
            data = (real + 1j * imag).reshape(rows, cols)
        else:
            imag_path = source / f"{desc['name']}.imag.f64"
            if imag_path.exists():
                raise CorruptArchiveError(
                    f"{imag_path} present but {desc['name']} is declared real"
                )
            data = real.reshape(rows, cols)
        results.append(
            Result(
                name=desc["name"],
                data=data,
                t0=float(desc["t0"]),
                dt_sample=float(desc["dt_sample"]),
                x0=float(desc["x0"]),
                dx=float(meta.get("dx", 0.0)) if cols > 1 else 0.0,
            )
        )
    return meta, results


class RawWriter:
    """Writer-registry wrapper around the archive functions."""

    name = "raw"

    def write(self, path, results, device, scenario, seed=None) -> Path:
        return write_archive(path, results, device, scenario, seed=seed)

    def read(self, path):
        return read_archive(path)


register_writer("raw", RawWriter)
