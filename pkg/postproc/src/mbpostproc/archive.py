"""Reader for the solver's raw result archives.

An archive is a directory with a ``meta.json`` plus raw little-endian
float64 payload files ``<name>.real.f64`` (and ``<name>.imag.f64`` for
complex results), row-major with rows = time samples and cols = space
samples. This module is intentionally self-contained: the archive layout
on disk is the interface to the solver package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["ArchiveError", "FieldTrace", "load_archive"]


class ArchiveError(RuntimeError):
    """The archive is missing pieces or inconsistent with its metadata."""


@dataclass
class FieldTrace:
    """One recorded quantity, shaped (time samples, space samples).

    The affine axis maps are t = t0 + row * dt_sample and
    x = x0 + col * dx.
    """

    name: str
    values: np.ndarray
    t0: float
    dt_sample: float
    x0: float
    dx: float

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_sample * np.arange(self.rows)

    @property
    def positions(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.cols)

    def time_series(self, col: int = 0) -> np.ndarray:
        return self.values[:, col]


def _payload(path: Path, count: int) -> np.ndarray:
    if not path.is_file():
        raise ArchiveError(f"missing payload file {path}")
    data = np.fromfile(path, dtype="<f8")
    if data.size != count:
        raise ArchiveError(f"payload {path} holds {data.size} values, expected {count}")
    return data


def load_archive(path) -> tuple[dict, dict[str, FieldTrace]]:
    """Load (meta, {name -> FieldTrace}) from an archive directory."""
    source = Path(path)
    if not source.is_dir():
        raise FileNotFoundError(f"no archive directory at {source}")
    meta_path = source / "meta.json"
    if not meta_path.is_file():
        raise ArchiveError(f"no meta.json in {source}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"unparseable {meta_path}: {exc}") from exc

    traces: dict[str, FieldTrace] = {}
    for desc in meta.get("results", []):
        rows, cols = int(desc["rows"]), int(desc["cols"])
        real = _payload(source / f"{desc['name']}.real.f64", rows * cols)
        if desc.get("is_complex"):
            imag = _payload(source / f"{desc['name']}.imag.f64", rows * cols)
            values = (real + 1j * imag).reshape(rows, cols)
        else:
            values = real.reshape(rows, cols)
        traces[desc["name"]] = FieldTrace(
            name=desc["name"],
            values=values,
            t0=float(desc.get("t0", 0.0)),
            dt_sample=float(desc.get("dt_sample", 0.0)),
            x0=float(desc.get("x0", 0.0)),
            dx=float(meta.get("dx", 0.0)),
        )
    return meta, traces
