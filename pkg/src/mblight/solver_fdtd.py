"""FDTD time stepping on the staggered grid, coupled to the density matrices.

Electric field samples live at integer grid points and times, magnetic
field and density matrices at half-integer ones (weak coupling). Each
time step runs two phases: phase 1 advances H, the density matrices and
the polarization source term; phase 2 advances E. Workers operate on
contiguous, disjoint cell ranges with full barriers between the phases,
so the results are bitwise independent of the worker count. Boundary
application, source injection and record sampling happen single-threaded
after the second barrier.

The special case of a single grid point skips the field updates entirely
and reduces the run to the master equation driven by the sources.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels
from .core import (
    Device,
    Material,
    Record,
    Result,
    Scenario,
    DEFAULT_SEED,
    get_material,
    register_solver,
    scenario_validate,
)
from .errors import SolverError, ValidationError

__all__ = [
    "GridLayout",
    "CellCoefficients",
    "COURANT_NUMBER",
    "init_fdtd_simulation",
    "get_fdtd_constants",
    "FdtdSolver",
]

COURANT_NUMBER = 0.5
_NONFINITE_CHECK_EVERY = 1024


@njit(cache=True, nogil=True)
def _update_h_range(h, e, coef_ch, m0, m1):
    for m in range(m0, m1):
        h[m] += coef_ch[m] * (e[m] - e[m - 1])


@njit(cache=True, nogil=True)
def _update_e_range(e, h, p_rate, coef_a, coef_bg, coef_bdx, lo, hi):
    for m in range(lo, hi):
        e[m] = (
            coef_a[m] * e[m]
            - coef_bg[m] * p_rate[m]
            + coef_bdx[m] * (h[m + 1] - h[m])
        )


@dataclass(frozen=True)
class GridLayout:
    """Spatiotemporal discretization of a run."""

    num_x: int
    dx: float
    num_t: int
    dt: float
    courant: float = COURANT_NUMBER


def init_fdtd_simulation(device: Device, scenario: Scenario) -> GridLayout:
    """Determine grid spacing and step count for a device/scenario pair.

    For num_gridpoints > 1 the spatial spacing is L/(N_x - 1), the time
    step follows from the fixed Courant number and the fastest material
    light speed, and is then shrunk slightly so an integer number of steps
    lands exactly on the end time. For a single grid point the temporal
    grid comes from the scenario's num_timesteps.
    """
    n_x = scenario.num_gridpoints
    if n_x == 1:
        if scenario.num_timesteps is None or scenario.num_timesteps < 2:
            raise ValueError(
                "scenarios with a single grid point must specify num_timesteps"
            )
        n_t = int(scenario.num_timesteps)
        return GridLayout(1, 0.0, n_t, scenario.end_time / (n_t - 1))
    c_max = max(mat.light_speed for mat in device.materials())
    dx = device.length / (n_x - 1)
    dt0 = COURANT_NUMBER * dx / c_max
    n_t = int(math.ceil(scenario.end_time / dt0)) + 1
    dt = scenario.end_time / (n_t - 1)
    return GridLayout(n_x, dx, n_t, dt)


@dataclass(frozen=True)
class CellCoefficients:
    """Per-material update coefficients of the discretized field equations.

    ``a_prime`` and ``b_prime`` enter the E update (losses fold into both),
    ``c_prime`` the H update; the overlap factor scales the polarization
    term only.
    """

    a_prime: float
    b_prime: float
    c_prime: float
    gamma: float
    inv_dx: float
    qm: object = None


def get_fdtd_constants(material: Material, dt: float, dx: float) -> CellCoefficients:
    """Precompute a material's update coefficients for a given grid."""
    if not (dt > 0 and dx > 0):
        raise ValueError("dt and dx must be positive")
    eps = material.permittivity
    loss = dt * material.conductivity / (2.0 * eps)
    a_prime = (1.0 - loss) / (1.0 + loss)
    b_prime = (dt / eps) / (1.0 + loss)
    c_prime = dt / (dx * material.permeability)
    return CellCoefficients(
        a_prime, b_prime, c_prime, material.overlap_factor, 1.0 / dx, material.qm
    )


class _RecordPlan:
    """Sampling schedule and buffer for one requested record."""

    def __init__(self, record: Record, grid: GridLayout, num_t: int):
        self.record = record
        self.every = (
            max(1, int(math.floor(record.interval / grid.dt + 0.5)))
            if record.interval > 0
            else 1
        )
        self.rows = (num_t - 1) // self.every + 1
        if record.position is None:
            self.cell = None
            self.cols = grid.num_x
            self.x0 = 0.0 if record.quantity != "h" else -0.5 * grid.dx
        else:
            self.cell = (
                0
                if grid.num_x == 1
                else int(math.floor(record.position / grid.dx + 0.5))
            )
            self.cols = 1
            self.x0 = self.cell * grid.dx
            if record.quantity == "h":
                self.x0 -= 0.5 * grid.dx
        dtype = complex if record.is_complex else float
        self.buffer = np.zeros((self.rows, self.cols), dtype=dtype)

    def to_result(self, grid: GridLayout) -> Result:
        return Result(
            name=self.record.name,
            data=self.buffer,
            t0=0.0,
            dt_sample=self.every * grid.dt,
            x0=self.x0,
            dx=grid.dx if self.cols > 1 else 0.0,
        )


class _QmGroup:
    """Contiguous cell range sharing one quantum material."""

    def __init__(self, start: int, stop: int, desc, dt: float, stepper: str):
        self.start = start
        self.stop = stop
        self.kernel = _kernels.make_kernel(desc, dt, stop - start, stepper)


def _resolve_threads(explicit: int | None, num_x: int) -> int:
    if explicit is not None:
        threads = int(explicit)
    else:
        env = os.environ.get("MBLIGHT_THREADS", "").strip()
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError("worker count must be at least 1")
    return min(threads, num_x)


class FdtdSolver:
    """One simulation run: owns the state arrays and the stepping loop.

    ``stepper`` selects the density-matrix update ('splitting' or 'rk4').
    ``threads`` overrides the worker count (default: MBLIGHT_THREADS
    environment variable, then hardware concurrency). ``run()`` is
    blocking and can be called once per instance.
    """

    def __init__(
        self,
        device: Device,
        scenario: Scenario,
        stepper: str = "splitting",
        threads: int | None = None,
        seed: int | None = None,
        monitor_invariants: bool = False,
    ):
        problems = scenario_validate(device, scenario)
        if problems:
            raise ValidationError(problems)
        if stepper not in ("splitting", "rk4"):
            raise ValueError(f"unknown stepper {stepper!r}")
        self.device = device
        self.scenario = scenario
        self.stepper = stepper
        self.grid = init_fdtd_simulation(device, scenario)
        self.seed = DEFAULT_SEED if seed is None else int(seed)
        self.threads = _resolve_threads(threads, self.grid.num_x)
        self.monitor_invariants = monitor_invariants
        self.invariant_report: dict[str, float] | None = None
        self._ran = False

        num_x = self.grid.num_x
        dt = self.grid.dt
        dx = self.grid.dx

        # field state; h[m] sits at (m - 1/2) dx so cell m is flanked by
        # h[m] and h[m+1]; the two edge entries belong to the boundary
        self.e = scenario.ic_e_field.build(num_x, self.seed)
        self.h = np.zeros(num_x + 1, dtype=float)
        self.h[0:num_x] = scenario.ic_h_field.build(num_x, self.seed + 1)
        self.p_rate = np.zeros(num_x, dtype=float)

        # map cells to regions/materials
        region_ends = np.array([r.x_end for r in device.regions])
        materials = [get_material(r.material_id) for r in device.regions]
        if num_x > 1:
            x_e = np.arange(num_x) * dx
            cell_region = np.minimum(
                np.searchsorted(region_ends, x_e, side="right"),
                len(device.regions) - 1,
            )
            coeffs = [get_fdtd_constants(m, dt, dx) for m in materials]
            self.coef_a = np.empty(num_x)
            self.coef_bg = np.empty(num_x)  # b' * Gamma (polarization term)
            self.coef_bdx = np.empty(num_x)  # b' / dx   (curl term)
            for ri, cf in enumerate(coeffs):
                mask = cell_region == ri
                self.coef_a[mask] = cf.a_prime
                self.coef_bg[mask] = cf.b_prime * cf.gamma
                self.coef_bdx[mask] = cf.b_prime * cf.inv_dx
            # h coefficient evaluated at the h positions (m - 1/2) dx
            x_h = (np.arange(1, num_x) - 0.5) * dx
            h_region = np.minimum(
                np.searchsorted(region_ends, x_h, side="right"),
                len(device.regions) - 1,
            )
            self.coef_ch = np.zeros(num_x + 1)
            for ri, cf in enumerate(coeffs):
                self.coef_ch[1:num_x][h_region == ri] = cf.c_prime
            self._edge_speed = (
                materials[int(cell_region[0])].light_speed,
                materials[int(cell_region[-1])].light_speed,
            )
        else:
            cell_region = np.zeros(1, dtype=int)

        # contiguous runs of cells sharing a quantum material
        self.groups: list[_QmGroup] = []
        run_start = 0
        for m in range(1, num_x + 1):
            if m == num_x or cell_region[m] != cell_region[m - 1]:
                mat = materials[int(cell_region[run_start])]
                if mat.qm is not None:
                    group = _QmGroup(run_start, m, mat.qm, dt, stepper)
                    group.kernel.init_state(scenario.rho_init.matrix())
                    self.groups.append(group)
                run_start = m
        # merge neighbours that ended up with the same material would be
        # possible, but distinct regions with identical materials are rare
        # enough that separate kernels cost nothing

        self._sources = [
            (
                src,
                0
                if num_x == 1
                else int(math.floor(src.position / dx + 0.5)),
            )
            for src in scenario.sources
        ]
        self._plans = [
            _RecordPlan(rec, self.grid, self.grid.num_t) for rec in scenario.records
        ]
        names = [p.record.name for p in self._plans]
        if len(set(names)) != len(names):
            raise ValueError("record names must be unique")
        self._monitor_every = (
            min((p.every for p in self._plans), default=256) if monitor_invariants else 0
        )

        # boundary precomputation: the edge field is set to (1 - sqrt(R))
        # times the outgoing characteristic advected to the edge, which is
        # an exact mirror for R = 1 and a first-order one-way (absorbing)
        # update for R = 0; the amplitude reflection is -sqrt(R)
        if num_x > 1:
            cl, cr = self._edge_speed
            left_mat = materials[int(cell_region[0])]
            right_mat = materials[int(cell_region[-1])]
            zl = math.sqrt(left_mat.permeability / left_mat.permittivity)
            zr = math.sqrt(right_mat.permeability / right_mat.permittivity)
            self._bc = (
                (1.0 - math.sqrt(device.bc_left.reflectivity), cl * dt / dx, zl),
                (1.0 - math.sqrt(device.bc_right.reflectivity), cr * dt / dx, zr),
            )
            self._h_prev = (self.h[1], self.h[num_x - 1])
        self._edge_old = (0.0, 0.0, 0.0, 0.0)
        self._step = 0

    # -- per-step pieces ---------------------------------------------------

    def _phase1(self, lo: int, hi: int) -> None:
        e = self.e
        if self.grid.num_x > 1:
            m0 = max(lo, 1)
            if m0 < hi:
                _update_h_range(self.h, e, self.coef_ch, m0, hi)
        for group in self.groups:
            glo = max(lo, group.start)
            ghi = min(hi, group.stop)
            if glo < ghi:
                group.kernel.advance(
                    e[glo:ghi],
                    glo - group.start,
                    ghi - group.start,
                    self.p_rate[glo:ghi],
                )

    def _phase2(self, lo: int, hi: int) -> None:
        if self.grid.num_x == 1:
            return
        _update_e_range(
            self.e, self.h, self.p_rate, self.coef_a, self.coef_bg, self.coef_bdx, lo, hi
        )

    def _after_phase1(self) -> None:
        self._step += 1
        for group in self.groups:
            group.kernel.swap()
        if self.grid.num_x > 1:
            e = self.e
            self._edge_old = (e[0], e[1], e[-1], e[-2])

    def _after_phase2(self) -> None:
        n = self._step
        num_x = self.grid.num_x
        e = self.e
        if num_x > 1:
            e0_old, e1_old, em_old, em1_old = self._edge_old
            (wl, cl, zl), (wr, cr, zr) = self._bc
            h1_prev, hm_prev = self._h_prev
            # outgoing characteristic (E + Z H on the left, E - Z H on the
            # right), advected from c*dt inside the domain at the old time
            e_at = (1.0 - cl) * e0_old + cl * e1_old
            h_at = 0.5 * (h1_prev + self.h[1])
            e[0] = wl * 0.5 * (e_at + zl * h_at)
            e_at = (1.0 - cr) * em_old + cr * em1_old
            h_at = 0.5 * (hm_prev + self.h[num_x - 1])
            e[-1] = wr * 0.5 * (e_at - zr * h_at)
            self._h_prev = (self.h[1], self.h[num_x - 1])
        t = n * self.grid.dt
        for src, cell in self._sources:
            value = src.value(t)
            if src.kind == "hard":
                e[cell] = value
            else:
                e[cell] += value
        if n % _NONFINITE_CHECK_EVERY == 0 or n == self.grid.num_t - 1:
            if not np.all(np.isfinite(e)):
                raise SolverError(f"non-finite electric field at step {n}")
        self._sample(n)

    def _sample(self, n: int) -> None:
        for plan in self._plans:
            if n % plan.every:
                continue
            row = n // plan.every
            rec = plan.record
            buf = plan.buffer
            if rec.quantity == "e":
                if plan.cell is None:
                    buf[row, :] = self.e
                else:
                    buf[row, 0] = self.e[plan.cell]
            elif rec.quantity == "h":
                if plan.cell is None:
                    buf[row, :] = self.h[0 : self.grid.num_x]
                else:
                    buf[row, 0] = self.h[plan.cell]
            elif rec.quantity == "d":
                i, j = rec.i - 1, rec.j - 1
                for group in self.groups:
                    vals = group.kernel.density_entry(i, j)
                    if not rec.is_complex:
                        vals = vals.real
                    if plan.cell is None:
                        buf[row, group.start : group.stop] = vals
                    elif group.start <= plan.cell < group.stop:
                        buf[row, 0] = vals[plan.cell - group.start]
            else:  # inversion
                for group in self.groups:
                    vals = group.kernel.inversion()
                    if plan.cell is None:
                        buf[row, group.start : group.stop] = vals
                    elif group.start <= plan.cell < group.stop:
                        buf[row, 0] = vals[plan.cell - group.start]
        if self._monitor_every and n % self._monitor_every == 0:
            self._update_invariants()

    def _update_invariants(self) -> None:
        report = self.invariant_report
        if report is None:
            report = self.invariant_report = {
                "max_trace_dev": 0.0,
                "max_herm_dev": 0.0,
                "min_eigenvalue": math.inf,
            }
        for group in self.groups:
            trace_dev, herm_dev, min_eig = group.kernel.invariant_stats()
            report["max_trace_dev"] = max(report["max_trace_dev"], trace_dev)
            report["max_herm_dev"] = max(report["max_herm_dev"], herm_dev)
            report["min_eigenvalue"] = min(report["min_eigenvalue"], min_eig)

    # -- run orchestration ---------------------------------------------------

    def run(self) -> list[Result]:
        """Execute the simulation loop; returns one Result per record."""
        if self._ran:
            raise SolverError("run() may only be called once per solver instance")
        self._ran = True
        self._sample(0)
        if self.threads == 1:
            self._run_serial()
        else:
            self._run_threaded()
        self.results = [plan.to_result(self.grid) for plan in self._plans]
        return self.results

    def _run_serial(self) -> None:
        num_x = self.grid.num_x
        for _ in range(1, self.grid.num_t):
            self._phase1(0, num_x)
            self._after_phase1()
            self._phase2(0, num_x)
            self._after_phase2()

    def _run_threaded(self) -> None:
        num_x = self.grid.num_x
        workers = self.threads
        bounds = np.linspace(0, num_x, workers + 1).astype(int)
        barrier1 = threading.Barrier(workers, action=self._after_phase1)
        barrier2 = threading.Barrier(workers, action=self._after_phase2)
        failures: list[BaseException] = []
        lock = threading.Lock()

        def work(lo: int, hi: int) -> None:
            try:
                for _ in range(1, self.grid.num_t):
                    self._phase1(lo, hi)
                    barrier1.wait()
                    self._phase2(lo, hi)
                    barrier2.wait()
            except threading.BrokenBarrierError:
                return
            except BaseException as exc:  # propagate to the main thread
                with lock:
                    failures.append(exc)
                barrier1.abort()
                barrier2.abort()

        threads = [
            threading.Thread(target=work, args=(int(bounds[w]), int(bounds[w + 1])))
            for w in range(workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if failures:
            raise failures[0]


register_solver("fdtd-reg-cayley", FdtdSolver)
register_solver(
    "fdtd-rk4", lambda device, scenario, **kw: FdtdSolver(device, scenario, stepper="rk4", **kw)
)
