"""Tests for archive loading, spectra, and figure generation."""

import shutil
import subprocess

import numpy as np
import pytest

from archive_testkit import write_archive
from mbpostproc import (
    ArchiveError,
    Trace,
    load_archive,
    make_figure,
    periodogram,
    power_spectrum,
)
from mbpostproc.cli import main


class TestLoadArchive:
    def test_real_and_complex_results(self, tmp_path):
        rng = np.random.default_rng(0)
        real = rng.standard_normal((5, 8))
        cplx = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        write_archive(tmp_path / "a", {"e": real, "d12": cplx})
        meta, traces = load_archive(tmp_path / "a")
        assert meta["schema"] == 1
        assert np.array_equal(traces["e"].values, real)
        assert np.array_equal(traces["d12"].values, cplx)
        assert traces["e"].rows == 5 and traces["e"].cols == 8
        assert traces["e"].times[1] == 1e-15
        assert traces["e"].positions[1] == 1e-8

    def test_missing_archive(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_archive(tmp_path / "nope")

    def test_truncated_payload(self, tmp_path):
        write_archive(tmp_path / "a", {"e": np.ones((4, 4))})
        payload = tmp_path / "a" / "e.real.f64"
        payload.write_bytes(payload.read_bytes()[:-8])
        with pytest.raises(ArchiveError):
            load_archive(tmp_path / "a")

    def test_missing_imag_payload(self, tmp_path):
        write_archive(tmp_path / "a", {"d12": np.ones((2, 2), dtype=complex)})
        (tmp_path / "a" / "d12.imag.f64").unlink()
        with pytest.raises(ArchiveError):
            load_archive(tmp_path / "a")


class TestPowerSpectrum:
    def test_sinusoid_peaks_at_its_frequency(self):
        dt = 1e-13
        n = 4096
        f0 = 1.2e12
        t = np.arange(n) * dt
        freq, level = power_spectrum(Trace(np.sin(2 * np.pi * f0 * t), dt))
        bin_width = freq[1] - freq[0]
        peak_freq = freq[int(np.argmax(level))]
        assert abs(peak_freq - f0) <= bin_width
        assert level.max() == 0.0

    def test_constant_trace_is_all_dc(self):
        freq, level = power_spectrum(Trace(np.full(256, 3.0), 1e-12))
        assert int(np.argmax(level)) == 0

    def test_parseval(self):
        rng = np.random.default_rng(5)
        for n in (128, 255, 1024):
            x = rng.standard_normal(n)
            trace = Trace(x, 2e-13)
            _, power = periodogram(trace)
            windowed = np.hanning(n) * x
            energy = float(np.sum(windowed**2))
            assert abs(power.sum() - energy) <= 1e-6 * energy

    def test_too_short_trace_rejected(self):
        with pytest.raises(ValueError):
            power_spectrum(Trace(np.array([1.0]), 1e-12))


class TestFigures:
    def _sit_archive(self, tmp_path):
        x = np.linspace(0, 150e-6, 256)
        inversion = np.where((x > 10e-6) & (x < 140e-6), -1.0, 0.0)
        field = 4e9 * np.exp(-((x - 45e-6) ** 2) / (5e-6) ** 2)
        return write_archive(
            tmp_path / "sit",
            {"inv12": np.vstack([inversion, inversion]), "e": np.vstack([field, field])},
            dx=150e-6 / 255,
        )

    def test_sit_two_panel_figure(self, tmp_path):
        archive = self._sit_archive(tmp_path)
        out = make_figure("sit", archive)
        assert out.is_file() and out.suffix == ".png" and out.stat().st_size > 0

    def test_populations_figure(self, tmp_path):
        t = np.arange(512)
        pops = {
            "d11": (0.5 + 0.5 * np.cos(t / 40.0))[:, None],
            "d22": (0.3 * np.sin(t / 40.0) ** 2)[:, None],
            "d33": (1.0 - 0.5 - 0.5 * np.cos(t / 40.0) - 0.3 * np.sin(t / 40.0) ** 2)[
                :, None
            ],
            "e": np.sin(t / 5.0)[:, None],
        }
        archive = write_archive(tmp_path / "pops", pops)
        out = make_figure("populations", archive, tmp_path / "pops.png")
        assert out.is_file() and out.stat().st_size > 0

    def test_spectrum_figure(self, tmp_path):
        dt = 1e-13
        tone = np.sin(2 * np.pi * 1.2e12 * np.arange(2048) * dt)[:, None]
        archive = write_archive(tmp_path / "spec", {"e0": tone}, dt_sample=dt)
        out = make_figure("spectrum", archive, tmp_path / "spec.svg")
        assert out.is_file() and out.stat().st_size > 0

    def test_missing_results_reported(self, tmp_path):
        archive = write_archive(tmp_path / "empty", {"h": np.ones((2, 2))})
        with pytest.raises(KeyError) as err:
            make_figure("sit", archive)
        assert "inv12" in str(err.value)
        with pytest.raises(KeyError):
            make_figure("populations", archive)

    def test_cli(self, tmp_path, capsys):
        archive = self._sit_archive(tmp_path)
        assert main([str(archive), "--figure", "sit"]) == 0
        assert (archive / "sit.png").is_file()
        assert main([str(tmp_path / "nope"), "--figure", "sit"]) == 1

    def test_cli_spectrum_result_selection(self, tmp_path):
        dt = 1e-13
        tone = np.sin(2 * np.pi * 1.2e12 * np.arange(1024) * dt)[:, None]
        archive = write_archive(tmp_path / "spec", {"probe": tone}, dt_sample=dt)
        assert main([str(archive), "--figure", "spectrum", "--result", "probe"]) == 0
        assert (archive / "spectrum.png").is_file()
        # the default trace name is absent from this archive
        assert main([str(archive), "--figure", "spectrum"]) == 1


@pytest.mark.skipif(
    shutil.which("mblight") is None, reason="solver CLI not installed"
)
def test_acceptance_postproc_pipeline(tmp_path):
    """End-to-end: run the transparency setup through the solver CLI,
    load its archive, emit the two-panel figure; spectral sanity on a
    synthetic 1.2 THz tone plus the Parseval identity."""
    archive = tmp_path / "ziolkowski"
    run = subprocess.run(
        [
            "mblight",
            "-d",
            "ziolkowski1995",
            "-m",
            "fdtd-reg-cayley",
            "-w",
            "raw",
            "-o",
            str(archive),
        ],
        capture_output=True,
        text=True,
        timeout=600,
    )
    assert run.returncode == 0, run.stderr

    meta, traces = load_archive(archive)
    assert traces["e"].cols == 32768
    assert traces["e"].rows == 81
    figure = make_figure("sit", archive)
    figure_ok = figure.is_file() and figure.stat().st_size > 0

    # the single-point three-level run feeds the populations figure
    song = tmp_path / "song"
    run = subprocess.run(
        ["mblight", "-d", "song2005", "-o", str(song)],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert run.returncode == 0, run.stderr
    pops_figure = make_figure("populations", song)
    figure_ok = figure_ok and pops_figure.is_file() and pops_figure.stat().st_size > 0

    dt = 1e-13
    n = 4096
    tone = np.sin(2 * np.pi * 1.2e12 * np.arange(n) * dt)
    freq, level = power_spectrum(Trace(tone, dt))
    bin_width = freq[1] - freq[0]
    peak_off = abs(freq[int(np.argmax(level))] - 1.2e12)

    _, power = periodogram(Trace(tone, dt))
    windowed = np.hanning(n) * tone
    parseval_err = abs(power.sum() - np.sum(windowed**2)) / np.sum(windowed**2)

    ok = figure_ok and peak_off <= bin_width and parseval_err <= 1e-6
    print(
        f"ACCEPTANCE {'PASS' if ok else 'FAIL'}  postproc pipeline: figure "
        f"{figure.name} written, tone peak offset {peak_off / 1e9:.2f} GHz "
        f"(bin {bin_width / 1e9:.2f} GHz), Parseval error {parseval_err:.2e}"
    )
    assert figure_ok
    assert peak_off <= bin_width
    assert parseval_err <= 1e-6
