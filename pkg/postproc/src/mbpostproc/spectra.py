"""Power spectra of recorded time traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Trace", "periodogram", "power_spectrum"]


@dataclass
class Trace:
    """A sampled time series with its sampling interval."""

    values: np.ndarray
    dt_sample: float
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if not self.dt_sample > 0:
            raise ValueError("dt_sample must be positive")


def periodogram(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Hann-windowed periodogram (frequency axis in Hz).

    The scaling satisfies Parseval's identity: the sum over all bins
    equals the energy of the windowed signal, sum((w * x)^2).
    """
    x = np.asarray(trace.values, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("spectral estimates need at least two samples")
    window = np.hanning(n)
    spectrum = np.fft.rfft(window * x)
    power = np.abs(spectrum) ** 2 / n
    scale = np.full(power.size, 2.0)
    scale[0] = 1.0
    if n % 2 == 0:
        scale[-1] = 1.0
    freq = np.fft.rfftfreq(n, trace.dt_sample)
    return freq, scale * power


def power_spectrum(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """Periodogram in decibels, normalized so the peak sits at 0 dB."""
    freq, power = periodogram(trace)
    peak = np.max(power)
    if peak <= 0.0:
        raise ValueError("trace has no power")
    floor = peak * 1e-300
    return freq, 10.0 * np.log10(np.maximum(power, floor) / peak)
