"""Density-matrix stepping over many grid cells.

The solver holds one kernel per contiguous run of cells sharing a quantum
material. Density matrices are stored as an (M, N, N) array so each
cell's matrix is a small contiguous block, and the per-cell update loops
are compiled with numba (``nogil`` so the solver's worker threads run
them in parallel). Every cell is computed by the same scalar instruction
sequence regardless of how the cell range is partitioned, which keeps
multi-worker runs bitwise identical to single-worker runs.

Three step kernels exist: the generic Strang splitting for any level
count, a Bloch-vector specialization of the same splitting for two-level
systems (three real state components instead of a complex matrix), and
classical RK4. For tiny cell counts a plain kernel defers to the public
single-matrix steppers instead; all paths implement the same mathematics
and are cross-checked in the tests.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .constants import HBAR
from .quantum import (
    QmDescription,
    polarization_rate,
    precompute_relaxation_propagator,
    step_rk4,
    step_splitting,
)

# below this cell count the compiled kernels gain nothing and per-cell
# calls into the reference steppers are simpler
SCALAR_PATH_MAX_CELLS = 32


def make_kernel(desc: QmDescription, dt: float, num_cells: int, stepper: str):
    if stepper not in ("splitting", "rk4"):
        raise ValueError(f"unknown stepper {stepper!r}")
    if num_cells <= SCALAR_PATH_MAX_CELLS:
        return ScalarKernel(desc, dt, num_cells, stepper)
    if stepper == "splitting":
        if desc.dim == 2:
            return BlochSplittingKernel(desc, dt, num_cells)
        return VectorSplittingKernel(desc, dt, num_cells)
    return VectorRk4Kernel(desc, dt, num_cells)


# ---------------------------------------------------------------------------
# compiled per-cell loops
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, fastmath=True)
def _split_step_range(
    rho,
    rho_next,
    e_vals,
    lo,
    hi,
    pop_half,
    coh_half,
    b_const,
    b_field,
    pol_i,
    pol_j,
    pol_v,
    pol_di,
    pol_dv,
    pol_factor,
    p_out,
):
    """Strang splitting for cells [lo, hi): relaxation half step, Cayley
    unitary U = B^-1 B^H with B = I + i H dt/(2 hbar), relaxation half
    step; also writes the polarization rate from the density change.

    The elimination runs without pivoting, which is safe because every
    leading principal minor of I + iA with Hermitian A has magnitude >= 1.
    """
    n = rho.shape[1]
    b = np.empty((n, n), np.complex128)
    u = np.empty((n, n), np.complex128)
    t = np.empty((n, n), np.complex128)
    r1 = np.empty((n, n), np.complex128)
    pops = np.empty(n, np.complex128)
    for m in range(lo, hi):
        rm = rho[m]
        # relaxation half step (stochastic map on populations, decay on
        # coherences)
        for i in range(n):
            acc = pop_half[i, 0] * rm[0, 0]
            for j in range(1, n):
                acc += pop_half[i, j] * rm[j, j]
            pops[i] = acc
        for i in range(n):
            for j in range(n):
                r1[i, j] = rm[i, j] * coh_half[i, j]
            r1[i, i] = pops[i]
        # Cayley unitary
        e = e_vals[m - lo]
        for i in range(n):
            for j in range(n):
                b[i, j] = b_const[i, j] + e * b_field[i, j]
        for i in range(n):
            for j in range(n):
                u[i, j] = np.conj(b[j, i])
        for k in range(n):
            p = b[k, k]
            inv_piv = np.conj(p) / (p.real * p.real + p.imag * p.imag)
            for i in range(k + 1, n):
                f = b[i, k] * inv_piv
                for j in range(k + 1, n):
                    b[i, j] -= f * b[k, j]
                for j in range(n):
                    u[i, j] -= f * u[k, j]
        for k in range(n - 1, -1, -1):
            p = b[k, k]
            inv_piv = np.conj(p) / (p.real * p.real + p.imag * p.imag)
            for j in range(n):
                acc = u[k, j]
                for i in range(k + 1, n):
                    acc -= b[k, i] * u[i, j]
                u[k, j] = acc * inv_piv
        # rho <- U r1 U^H, writing the Hermitian result directly
        for i in range(n):
            for j in range(n):
                acc = u[i, 0] * r1[0, j]
                for k in range(1, n):
                    acc += u[i, k] * r1[k, j]
                t[i, j] = acc
        out = rho_next[m]
        for i in range(n):
            for j in range(i, n):
                acc = t[i, 0] * np.conj(u[j, 0])
                for k in range(1, n):
                    acc += t[i, k] * np.conj(u[j, k])
                out[i, j] = acc
                if j > i:
                    out[j, i] = np.conj(acc)
        # second relaxation half step in place
        for i in range(n):
            acc = pop_half[i, 0] * out[0, 0]
            for j in range(1, n):
                acc += pop_half[i, j] * out[j, j]
            pops[i] = acc
        for i in range(n):
            for j in range(n):
                out[i, j] = out[i, j] * coh_half[i, j]
            out[i, i] = pops[i]
        # polarization rate from the nonzero dipole entries
        acc_p = 0.0
        for k in range(pol_i.size):
            i = pol_i[k]
            j = pol_j[k]
            acc_p += 2.0 * (pol_v[k] * (out[j, i] - rm[j, i])).real
        for k in range(pol_di.size):
            i = pol_di[k]
            acc_p += pol_dv[k] * (out[i, i] - rm[i, i]).real
        p_out[m - lo] = pol_factor * acc_p


@njit(cache=True, nogil=True)
def _bloch_step_range(
    bloch,
    bloch_next,
    e_vals,
    lo,
    hi,
    kz,
    cz,
    fxy,
    ax_c,
    ax_s,
    ay_c,
    ay_s,
    az_c,
    az_s,
    a0_c,
    a0_s,
    mu_x,
    mu_y,
    mu_z,
    pol_factor,
    p_out,
):
    """Two-level splitting step in Bloch form for cells [lo, hi).

    Writing A = H dt/(2 hbar) = a0 I + a . sigma, the conjugation by the
    Cayley unitary U = (I + iA)^-1 (I - iA) is the exact rotation

        v' = k1 v + g (a x v) + 8/W (a . v) a

    with q = |a|^2, u = a0^2, W = (1 + q - u)^2 + 4u,
    k1 = ((1 + u - q)^2 - 4q)/W and g = 4(1 + u - q)/W; the identity part
    a0 does not factor out of the Cayley transform (unlike the exact
    exponential), so it enters W. The relaxation half step is an affine
    map of z plus a uniform contraction of (x, y).
    """
    for m in range(lo, hi):
        e = e_vals[m - lo]
        x0 = bloch[0, m]
        y0 = bloch[1, m]
        z0 = bloch[2, m]
        x1 = fxy * x0
        y1 = fxy * y0
        z1 = kz * z0 + cz
        ax = ax_c + ax_s * e
        ay = ay_c + ay_s * e
        az = az_c + az_s * e
        a0 = a0_c + a0_s * e
        q = ax * ax + ay * ay + az * az
        u = a0 * a0
        num = 1.0 + u - q
        t1 = 1.0 + q - u
        inv = 1.0 / (t1 * t1 + 4.0 * u)
        k1 = (num * num - 4.0 * q) * inv
        g = 4.0 * num * inv
        dotb = 8.0 * inv * (ax * x1 + ay * y1 + az * z1)
        x2 = k1 * x1 + g * (ay * z1 - az * y1) + dotb * ax
        y2 = k1 * y1 + g * (az * x1 - ax * z1) + dotb * ay
        z2 = k1 * z1 + g * (ax * y1 - ay * x1) + dotb * az
        x3 = fxy * x2
        y3 = fxy * y2
        z3 = kz * z2 + cz
        bloch_next[0, m] = x3
        bloch_next[1, m] = y3
        bloch_next[2, m] = z3
        # Tr(mu delta_rho) = Re(mu01) dx - Im(mu01) dy + (mu00 - mu11) dz/2
        p_out[m - lo] = pol_factor * (
            mu_x * (x3 - x0) + mu_y * (y3 - y0) + mu_z * (z3 - z0)
        )


@njit(cache=True, nogil=True)
def _rk4_step_range(
    rho,
    rho_next,
    e_vals,
    lo,
    hi,
    dt,
    h0,
    mu,
    pop_matrix,
    deph_matrix,
    pol_i,
    pol_j,
    pol_v,
    pol_di,
    pol_dv,
    pol_factor,
    p_out,
):
    """Classical RK4 on the master equation for cells [lo, hi)."""
    n = rho.shape[1]
    h = np.empty((n, n), np.complex128)
    stage = np.empty((n, n), np.complex128)
    k1 = np.empty((n, n), np.complex128)
    k2 = np.empty((n, n), np.complex128)
    k3 = np.empty((n, n), np.complex128)
    k4 = np.empty((n, n), np.complex128)
    minus_i_hbar = -1j / HBAR
    for m in range(lo, hi):
        rm = rho[m]
        e = e_vals[m - lo]
        for i in range(n):
            for j in range(n):
                h[i, j] = h0[i, j] - e * mu[i, j]

        for stage_idx in range(4):
            if stage_idx == 0:
                src = rm
                dst = k1
            elif stage_idx == 1:
                for i in range(n):
                    for j in range(n):
                        stage[i, j] = rm[i, j] + (0.5 * dt) * k1[i, j]
                src = stage
                dst = k2
            elif stage_idx == 2:
                for i in range(n):
                    for j in range(n):
                        stage[i, j] = rm[i, j] + (0.5 * dt) * k2[i, j]
                src = stage
                dst = k3
            else:
                for i in range(n):
                    for j in range(n):
                        stage[i, j] = rm[i, j] + dt * k3[i, j]
                src = stage
                dst = k4
            # dst = -i/hbar [H, src] + dissipator(src)
            for i in range(n):
                for j in range(n):
                    acc = h[i, 0] * src[0, j] - src[i, 0] * h[0, j]
                    for k in range(1, n):
                        acc += h[i, k] * src[k, j] - src[i, k] * h[k, j]
                    dst[i, j] = minus_i_hbar * acc
            for i in range(n):
                for j in range(n):
                    if i != j:
                        dst[i, j] -= deph_matrix[i, j] * src[i, j]
            for i in range(n):
                acc = pop_matrix[i, 0] * src[0, 0]
                for j in range(1, n):
                    acc += pop_matrix[i, j] * src[j, j]
                dst[i, i] += acc

        out = rho_next[m]
        sixth = dt / 6.0
        for i in range(n):
            for j in range(n):
                out[i, j] = rm[i, j] + sixth * (
                    k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                )
        # symmetrize to keep Hermiticity exact
        for i in range(n):
            for j in range(i + 1, n):
                sym = 0.5 * (out[i, j] + np.conj(out[j, i]))
                out[i, j] = sym
                out[j, i] = np.conj(sym)

        acc_p = 0.0
        for k in range(pol_i.size):
            i = pol_i[k]
            j = pol_j[k]
            acc_p += 2.0 * (pol_v[k] * (out[j, i] - rm[j, i])).real
        for k in range(pol_di.size):
            i = pol_di[k]
            acc_p += pol_dv[k] * (out[i, i] - rm[i, i]).real
        p_out[m - lo] = pol_factor * acc_p


# ---------------------------------------------------------------------------
# kernel classes
# ---------------------------------------------------------------------------


class DensityKernel:
    """Shared state and sampling helpers for a run of quantum cells.

    ``advance(e_vals, lo, hi, p_out)`` writes the next density matrices
    for the cell range and the corresponding polarization rates; the
    solver swaps the state buffers once per step after all workers are
    done. Matrix-storing subclasses use the (M, N, N) ``rho`` buffers.
    """

    dense_state = True

    def __init__(self, desc: QmDescription, dt: float, num_cells: int):
        self.desc = desc
        self.dt = dt
        self.num_cells = num_cells
        n = desc.dim
        self.dim = n
        if self.dense_state:
            self.rho = np.zeros((num_cells, n, n), dtype=complex)
            self.rho_next = np.zeros((num_cells, n, n), dtype=complex)
        # nonzero dipole entries drive the polarization trace
        mu = desc.dipole_op.matrix()
        upper = [
            (i, j, mu[i, j])
            for i in range(n)
            for j in range(i + 1, n)
            if mu[i, j] != 0
        ]
        diag = [(i, mu[i, i].real) for i in range(n) if mu[i, i] != 0]
        self._pol_i = np.array([p[0] for p in upper], dtype=np.int64)
        self._pol_j = np.array([p[1] for p in upper], dtype=np.int64)
        self._pol_v = np.array([p[2] for p in upper], dtype=np.complex128)
        self._pol_di = np.array([d[0] for d in diag], dtype=np.int64)
        self._pol_dv = np.array([d[1] for d in diag], dtype=np.float64)
        self._pol_factor = desc.density_3d / dt

    def init_state(self, rho0: np.ndarray) -> None:
        self.rho[...] = np.asarray(rho0, dtype=complex)[None, :, :]

    def swap(self) -> None:
        self.rho, self.rho_next = self.rho_next, self.rho

    def advance(self, e_vals, lo, hi, p_out) -> None:
        """Step cells [lo, hi); p_out receives their polarization rates."""
        raise NotImplementedError

    # -- sampling helpers (read the current rho) --

    def density_entry(self, i: int, j: int) -> np.ndarray:
        return self.rho[:, i, j]

    def inversion(self) -> np.ndarray:
        return (self.rho[:, 1, 1] - self.rho[:, 0, 0]).real

    def invariant_stats(self) -> tuple[float, float, float]:
        """(max |trace - 1|, max Hermiticity deviation, min eigenvalue)."""
        rho = self.rho
        trace_dev = float(np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)))
        adj = rho.conj().transpose(0, 2, 1)
        herm_dev = float(np.max(np.abs(rho - adj)))
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (rho + adj))))
        return trace_dev, herm_dev, min_eig


class ScalarKernel(DensityKernel):
    """Per-cell stepping through the public single-matrix functions."""

    def __init__(self, desc, dt, num_cells, stepper):
        super().__init__(desc, dt, num_cells)
        self.stepper = stepper
        self.workspace = (
            precompute_relaxation_propagator(desc, dt)
            if stepper == "splitting"
            else None
        )

    def advance(self, e_vals, lo, hi, p_out):
        for col in range(lo, hi):
            rho = self.rho[col]
            e = float(e_vals[col - lo])
            if self.stepper == "splitting":
                new = step_splitting(self.workspace, self.desc, rho, e)
            else:
                new = step_rk4(self.desc, rho, e, self.dt)
            self.rho_next[col] = new
            p_out[col - lo] = polarization_rate(self.desc, new, rho, self.dt)


class VectorSplittingKernel(DensityKernel):
    """Compiled Strang splitting for any level count."""

    def __init__(self, desc, dt, num_cells):
        super().__init__(desc, dt, num_cells)
        ws = precompute_relaxation_propagator(desc, dt)
        self.pop_half = ws.pop_half
        self.coh_half = ws.coh_half
        a = 0.5 * dt / HBAR
        # B = I + i*a*(H0 - mu*E) decomposes into constant + E-linear parts
        self._b_const = np.eye(desc.dim, dtype=complex) + 1j * a * desc.hamiltonian.matrix()
        self._b_field = -1j * a * desc.dipole_op.matrix()

    def advance(self, e_vals, lo, hi, p_out):
        _split_step_range(
            self.rho,
            self.rho_next,
            np.ascontiguousarray(e_vals),
            lo,
            hi,
            self.pop_half,
            self.coh_half,
            self._b_const,
            self._b_field,
            self._pol_i,
            self._pol_j,
            self._pol_v,
            self._pol_di,
            self._pol_dv,
            self._pol_factor,
            p_out,
        )


class BlochSplittingKernel(DensityKernel):
    """Two-level splitting step on Bloch vectors (see _bloch_step_range)."""

    dense_state = False

    def __init__(self, desc, dt, num_cells):
        super().__init__(desc, dt, num_cells)
        if desc.dim != 2:
            raise ValueError("Bloch kernel requires a two-level description")
        ws = precompute_relaxation_propagator(desc, dt)
        pop = ws.pop_half
        # z' = kz z + cz reproduces the stochastic population half step
        self._kz = 0.5 * (pop[0, 0] - pop[1, 0] - pop[0, 1] + pop[1, 1])
        self._cz = 0.5 * (pop[0, 0] - pop[1, 0] + pop[0, 1] - pop[1, 1])
        self._fxy = ws.coh_half[0, 1]
        # components of A = H dt/(2 hbar) are affine in E: const + slope * E
        h0 = desc.hamiltonian.matrix()
        mu = desc.dipole_op.matrix()
        a = 0.5 * dt / HBAR
        self._ax = (a * h0[0, 1].real, -a * mu[0, 1].real)
        self._ay = (-a * h0[0, 1].imag, a * mu[0, 1].imag)
        self._az = (
            0.5 * a * (h0[0, 0].real - h0[1, 1].real),
            -0.5 * a * (mu[0, 0].real - mu[1, 1].real),
        )
        self._a0 = (
            0.5 * a * (h0[0, 0].real + h0[1, 1].real),
            -0.5 * a * (mu[0, 0].real + mu[1, 1].real),
        )
        self.bloch = np.zeros((3, num_cells))
        self.bloch_next = np.zeros((3, num_cells))
        self._mu01 = mu[0, 1]
        self._mu_zdiff = 0.5 * (mu[0, 0].real - mu[1, 1].real)

    def init_state(self, rho0):
        rho0 = np.asarray(rho0, dtype=complex)
        self.bloch[0, :] = 2.0 * rho0[0, 1].real
        self.bloch[1, :] = -2.0 * rho0[0, 1].imag
        self.bloch[2, :] = (rho0[0, 0] - rho0[1, 1]).real

    def swap(self):
        self.bloch, self.bloch_next = self.bloch_next, self.bloch

    def advance(self, e_vals, lo, hi, p_out):
        _bloch_step_range(
            self.bloch,
            self.bloch_next,
            np.ascontiguousarray(e_vals),
            lo,
            hi,
            self._kz,
            self._cz,
            self._fxy,
            self._ax[0],
            self._ax[1],
            self._ay[0],
            self._ay[1],
            self._az[0],
            self._az[1],
            self._a0[0],
            self._a0[1],
            self._mu01.real,
            -self._mu01.imag,
            self._mu_zdiff,
            self._pol_factor,
            p_out,
        )

    def density_entry(self, i, j):
        x, y, z = self.bloch[0, :], self.bloch[1, :], self.bloch[2, :]
        if i == j:
            return 0.5 * (1.0 + z) if i == 0 else 0.5 * (1.0 - z)
        if (i, j) == (0, 1):
            return 0.5 * (x - 1j * y)
        return 0.5 * (x + 1j * y)

    def inversion(self):
        return -self.bloch[2, :]

    def invariant_stats(self):
        # eigenvalues of rho are (1 +- |v|)/2, trace and Hermiticity are
        # exact in this representation
        norms = np.sqrt(np.sum(self.bloch**2, axis=0))
        min_eig = 0.5 * (1.0 - float(np.max(norms)))
        return 0.0, 0.0, min_eig


class VectorRk4Kernel(DensityKernel):
    """Compiled classical RK4 on the master equation."""

    def __init__(self, desc, dt, num_cells):
        super().__init__(desc, dt, num_cells)
        self._h0 = desc.hamiltonian.matrix()
        self._mu = desc.dipole_op.matrix()
        self._pop = desc.dissipator.pop_matrix
        self._deph = desc.dissipator.dephasing_matrix

    def advance(self, e_vals, lo, hi, p_out):
        _rk4_step_range(
            self.rho,
            self.rho_next,
            np.ascontiguousarray(e_vals),
            lo,
            hi,
            self.dt,
            self._h0,
            self._mu,
            self._pop,
            self._deph,
            self._pol_i,
            self._pol_j,
            self._pol_v,
            self._pol_di,
            self._pol_dv,
            self._pol_factor,
            p_out,
        )
