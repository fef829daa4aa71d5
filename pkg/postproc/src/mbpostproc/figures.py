"""Figure generation from result archives.

Three figure kinds cover the shipped simulation setups: the two-panel
transparency snapshot (inversion and field versus position at the final
sample), the power spectrum of a point trace, and level populations
versus time for single-point runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .archive import FieldTrace, load_archive
from .spectra import Trace, power_spectrum

__all__ = ["sit_figure", "spectrum_figure", "populations_figure", "make_figure"]

FIGURE_KINDS = ("sit", "spectrum", "populations")


def _require(traces: dict[str, FieldTrace], names: list[str]) -> None:
    missing = [n for n in names if n not in traces]
    if missing:
        raise KeyError(
            f"archive lacks result(s) {missing}; expected {names}, "
            f"found {sorted(traces)}"
        )


def sit_figure(archive_path, output: Path) -> Path:
    """Two-panel snapshot: population inversion and electric field vs x."""
    _, traces = load_archive(archive_path)
    _require(traces, ["inv12", "e"])
    inv = traces["inv12"]
    e = traces["e"]
    x_um = inv.positions * 1e6
    t_fs = inv.times[-1] * 1e15

    fig, (ax_top, ax_bottom) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax_top.plot(x_um, inv.values[-1], lw=0.8)
    ax_top.set_ylabel("population inversion")
    ax_top.set_ylim(-1.1, 1.1)
    ax_top.grid(alpha=0.3)
    ax_bottom.plot(e.positions * 1e6, e.values[-1] / 1e9, lw=0.8, color="tab:orange")
    ax_bottom.set_xlabel("position (µm)")
    ax_bottom.set_ylabel("electric field (GV/m)")
    ax_bottom.grid(alpha=0.3)
    fig.suptitle(f"t = {t_fs:.0f} fs")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return output


def spectrum_figure(archive_path, output: Path, result: str = "e0") -> Path:
    """Power spectrum (dB, 0 dB peak) of a recorded point trace."""
    _, traces = load_archive(archive_path)
    _require(traces, [result])
    trace = traces[result]
    freq, level = power_spectrum(
        Trace(trace.time_series(0).real, trace.dt_sample, label=result)
    )
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(freq / 1e12, level, lw=0.7)
    ax.set_xlabel("frequency (THz)")
    ax.set_ylabel("power (dB)")
    ax.set_ylim(-100, 5)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return output


def populations_figure(archive_path, output: Path) -> Path:
    """Level populations versus time for a single-point run."""
    _, traces = load_archive(archive_path)
    names = sorted(
        n for n in traces if n.startswith("d") and n[1:].isdigit() and n[1] == n[2]
    )
    if not names:
        raise KeyError(
            f"archive has no population records (d11, d22, ...); found {sorted(traces)}"
        )
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name in names:
        trace = traces[name]
        ax.plot(trace.times * 1e15, trace.time_series(0).real, label=name)
    ax.set_xlabel("time (fs)")
    ax.set_ylabel("population")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return output


def make_figure(kind: str, archive_path, output=None, result: str = "e0") -> Path:
    """Dispatch on figure kind; default output lands in the archive.

    ``result`` selects the trace for the spectrum figure and is ignored
    by the other kinds.
    """
    if kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
    target = Path(output) if output else Path(archive_path) / f"{kind}.png"
    if kind == "sit":
        return sit_figure(archive_path, target)
    if kind == "spectrum":
        return spectrum_figure(archive_path, target, result=result)
    return populations_figure(archive_path, target)
