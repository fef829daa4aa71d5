"""N-level quantum descriptions and density-matrix time stepping.

A quantum system is described by a static Hamiltonian, a dipole operator
coupling it to the electric field, and a relaxation superoperator in
Lindblad form. The master equation

    d rho / dt = -i/hbar [H0 - mu*E, rho] + D(rho)

is advanced per time step with one of three steppers:

* ``step_exact``      -- dense exponential of the full generator (reference)
* ``step_splitting``  -- Strang splitting, relaxation half steps around a
                         Cayley-transform unitary step; preserves trace,
                         Hermiticity and positivity for any step size
* ``step_rk4``        -- classical 4th-order Runge-Kutta (no positivity
                         guarantee)

All quantities are strict SI: energies in J, dipole moments in C m,
fields in V/m, rates in 1/s, densities in 1/m^3.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .constants import E0, HBAR

__all__ = [
    "QmOperator",
    "LindbladRelaxation",
    "QmDescription",
    "PropagatorWorkspace",
    "triangle_pairs",
    "two_level_description",
    "build_liouvillian",
    "step_exact",
    "precompute_relaxation_propagator",
    "step_splitting",
    "step_rk4",
    "polarization_rate",
    "matrix_exponential",
]


def triangle_pairs(dim: int) -> list[tuple[int, int]]:
    """Index pairs (i, j), i < j, of the upper triangle in storage order.

    The order walks the columns left to right, i.e. for dim = 3 it yields
    (0, 1), (0, 2), (1, 2) which corresponds to the 1-based element order
    [(1,2), (1,3), (2,3)].
    """
    return [(i, j) for j in range(1, dim) for i in range(j)]


class QmOperator:
    """Hermitian operator stored as real diagonal plus complex upper triangle.

    Since quantum mechanical observables are Hermitian, the lower triangle
    is redundant and only ``dim`` real and ``dim*(dim-1)/2`` complex values
    are kept. Off-diagonal entries default to zero, so a diagonal
    Hamiltonian can be built from its eigenvalues alone.
    """

    def __init__(self, main_diag, off_diag=None):
        self.main_diag = np.atleast_1d(np.asarray(main_diag, dtype=float))
        if self.main_diag.ndim != 1 or self.main_diag.size < 1:
            raise ValueError("main_diag must be a non-empty 1-d real vector")
        n = self.main_diag.size
        n_off = n * (n - 1) // 2
        if off_diag is None:
            self.off_diag = np.zeros(n_off, dtype=complex)
        else:
            self.off_diag = np.atleast_1d(np.asarray(off_diag, dtype=complex))
            if self.off_diag.shape != (n_off,):
                raise ValueError(
                    f"off_diag has length {self.off_diag.size}, expected "
                    f"{n_off} for a {n}x{n} operator"
                )

    @property
    def dim(self) -> int:
        return self.main_diag.size

    def matrix(self) -> np.ndarray:
        """Reconstruct the full complex matrix (exactly Hermitian)."""
        n = self.dim
        m = np.diag(self.main_diag.astype(complex))
        for k, (i, j) in enumerate(triangle_pairs(n)):
            m[i, j] = self.off_diag[k]
            m[j, i] = np.conj(self.off_diag[k])
        return m

    @classmethod
    def from_matrix(cls, m) -> "QmOperator":
        """Extract diagonal and upper triangle from a Hermitian matrix."""
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("expected a square matrix")
        n = m.shape[0]
        off = np.array([m[i, j] for i, j in triangle_pairs(n)], dtype=complex)
        return cls(np.real(np.diag(m)), off if n > 1 else None)

    def density_problems(self) -> list[str]:
        """Check the invariants of an initial density matrix.

        Returns a list of violations (empty when the operator is a valid
        density matrix): unit trace within 1e-12, populations in [0, 1],
        and positive semidefiniteness (min eigenvalue >= -1e-10).
        """
        problems = []
        trace = float(np.sum(self.main_diag))
        if abs(trace - 1.0) > 1e-12:
            problems.append(f"density matrix trace is {trace!r}, expected 1")
        if np.any(self.main_diag < -1e-12) or np.any(self.main_diag > 1 + 1e-12):
            problems.append("density matrix populations must lie in [0, 1]")
        if np.min(np.linalg.eigvalsh(self.matrix())) < -1e-10:
            problems.append("density matrix is not positive semidefinite")
        return problems

    def __eq__(self, other):
        if not isinstance(other, QmOperator):
            return NotImplemented
        return np.array_equal(self.main_diag, other.main_diag) and np.array_equal(
            self.off_diag, other.off_diag
        )

    def __repr__(self):
        return f"QmOperator(dim={self.dim})"


class LindbladRelaxation:
    """Relaxation superoperator built from scattering and dephasing rates.

    ``rates[i][j]`` is the scattering rate into level i from level j (main
    diagonal ignored). Population dynamics follow the rate matrix whose
    diagonal holds the negative inverse lifetimes, so the trace is
    preserved by construction. Each coherence (i, j) decays with the
    lifetime contribution (tau_i^-1 + tau_j^-1)/2 plus a pure dephasing
    rate supplied per upper-triangle pair.

    The pure dephasing rates are converted to a coefficient matrix over
    the traceless diagonal basis operators (the generalized Pauli-Z /
    Gell-Mann diagonal set). The matrix is restricted to diagonal form and
    obtained by least squares; ``psd_ok`` records whether the conversion
    succeeded (non-negative coefficients, small residual). A failed check
    emits a warning but does not prevent construction.
    """

    def __init__(self, rates, pure_dephasing):
        rates = np.asarray(rates, dtype=float)
        if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
            raise ValueError("rates must be a square matrix")
        n = rates.shape[0]
        off_mask = ~np.eye(n, dtype=bool)
        if np.any(rates[off_mask] < 0):
            raise ValueError("scattering rates must be non-negative")
        pure_dephasing = np.atleast_1d(np.asarray(pure_dephasing, dtype=float))
        if pure_dephasing.shape != (n * (n - 1) // 2,):
            raise ValueError(
                f"pure_dephasing has length {pure_dephasing.size}, expected "
                f"{n * (n - 1) // 2}"
            )
        if np.any(pure_dephasing < 0):
            raise ValueError("pure dephasing rates must be non-negative")

        self.dim = n
        self.rates = np.where(off_mask, rates, 0.0)
        self.pure_dephasing = pure_dephasing
        # inverse lifetimes are the column sums of the scattering rates
        self.tau_inv = self.rates.sum(axis=0)
        self.pop_matrix = self.rates - np.diag(self.tau_inv)

        # total decay rate per coherence: lifetime part + pure dephasing
        deph = 0.5 * (self.tau_inv[:, None] + self.tau_inv[None, :])
        for k, (i, j) in enumerate(triangle_pairs(n)):
            deph[i, j] += pure_dephasing[k]
            deph[j, i] += pure_dephasing[k]
        np.fill_diagonal(deph, 0.0)
        self.dephasing_matrix = deph

        self.coeff_matrix, self.psd_ok = self._convert_dephasing()
        if not self.psd_ok:
            warnings.warn(
                "pure dephasing rates are not representable by a positive "
                "semidefinite coefficient matrix; the Lindblad form of the "
                "dissipator is not guaranteed",
                stacklevel=2,
            )

    def _convert_dephasing(self):
        n = self.dim
        if n == 1:
            return np.zeros((0, 0)), True
        basis_diag = _diagonal_basis(n)  # (n-1, n)
        pairs = triangle_pairs(n)
        design = np.empty((len(pairs), n - 1))
        for p, (i, j) in enumerate(pairs):
            design[p] = 0.5 * (basis_diag[:, i] - basis_diag[:, j]) ** 2
        coeff, *_ = np.linalg.lstsq(design, self.pure_dephasing, rcond=None)
        scale = np.linalg.norm(self.pure_dephasing)
        residual = np.linalg.norm(design @ coeff - self.pure_dephasing)
        resid_ok = residual <= 1e-6 * scale if scale > 0 else True
        floor = -1e-9 * max(float(np.max(coeff, initial=0.0)), 1.0)
        return np.diag(coeff), bool(resid_ok and np.min(coeff) >= floor)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action of the dissipator on a density matrix, d(rho)/dt."""
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(
                f"density matrix has shape {rho.shape}, expected "
                f"({self.dim}, {self.dim})"
            )
        out = -self.dephasing_matrix * rho
        np.fill_diagonal(out, self.pop_matrix @ np.diagonal(rho))
        return out

    def __eq__(self, other):
        if not isinstance(other, LindbladRelaxation):
            return NotImplemented
        return np.array_equal(self.rates, other.rates) and np.array_equal(
            self.pure_dephasing, other.pure_dephasing
        )


def _diagonal_basis(n: int) -> np.ndarray:
    """Diagonals of the n-1 traceless diagonal basis operators.

    Row k-1 (1-based k in [1, n-1]) holds 1/sqrt(k(k+1)) on the first k
    levels and -k/sqrt(k(k+1)) on level k+1; the remaining entries vanish.
    """
    basis = np.zeros((n - 1, n))
    for k in range(1, n):
        norm = 1.0 / np.sqrt(k * (k + 1))
        basis[k - 1, :k] = norm
        basis[k - 1, k] = -k * norm
    return basis


@dataclass
class QmDescription:
    """Complete description of the quantum part of a material.

    Couples a carrier density (1/m^3) with the static Hamiltonian (J), the
    dipole operator (C m) and the relaxation superoperator. All operator
    members must share the same dimension.
    """

    density_3d: float
    hamiltonian: QmOperator
    dipole_op: QmOperator
    dissipator: LindbladRelaxation

    def __post_init__(self):
        dims = {
            self.hamiltonian.dim,
            self.dipole_op.dim,
            self.dissipator.dim,
        }
        if len(dims) != 1:
            raise ValueError(f"operator dimensions differ: {sorted(dims)}")
        if not self.density_3d > 0:
            raise ValueError("density_3d must be positive")

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim


def two_level_description(
    density_3d: float,
    transition_freq: float,
    dipole_length: float,
    rate_scattering: float,
    rate_dephasing: float,
    equilibrium_inversion: float,
) -> QmDescription:
    """Convenience constructor for the classic two-level medium.

    Parameters are the carrier density n_3D (1/m^3), the transition
    (angular) frequency w_21 (rad/s), the dipole length z_21 (m), the
    scattering rate gamma_1 (1/s), the dephasing rate gamma_2 (1/s) and
    the equilibrium inversion w_0 in [-1, 1].

    Builds H0 = hbar*w_21/2 * diag(-1, +1), the dipole operator with the
    single off-diagonal element -e*z_21, the scattering rate matrix
    gamma_1/2 * [[0, 1-w0], [1+w0, 0]] and the pure dephasing rate
    gamma_2 - gamma_1/2, which must be non-negative for the description
    to be physical.
    """
    gamma_1 = rate_scattering
    gamma_2 = rate_dephasing
    w0 = equilibrium_inversion
    if gamma_2 < gamma_1 / 2:
        raise ValueError(
            "dephasing rate must be at least half the scattering rate "
            "(implied pure dephasing would be negative)"
        )
    if abs(w0) > 1:
        raise ValueError("equilibrium inversion must lie in [-1, 1]")
    h0 = QmOperator([-0.5 * HBAR * transition_freq, 0.5 * HBAR * transition_freq])
    dipole = QmOperator([0.0, 0.0], [-E0 * dipole_length])
    rates = 0.5 * gamma_1 * np.array([[0.0, 1.0 - w0], [1.0 + w0, 0.0]])
    relax = LindbladRelaxation(rates, [gamma_2 - 0.5 * gamma_1])
    return QmDescription(density_3d, h0, dipole, relax)


# ---------------------------------------------------------------------------
# dense matrix exponential (scaling and squaring, Taylor core)
# ---------------------------------------------------------------------------

_TAYLOR_ORDER = 18
_TAYLOR_BOUND = 0.5


def matrix_exponential(a: np.ndarray) -> np.ndarray:
    """exp(a) for a small dense matrix.

    Scaling and squaring with a fixed-order Taylor core: the argument is
    scaled by 2^-s until its 1-norm drops below 0.5, the series is summed
    in Horner form, and the result squared s times. Intended for the
    matrix sizes of this package (up to N^2 x N^2 with N <= 16).
    """
    a = np.asarray(a)
    n = a.shape[0]
    eye = np.eye(n, dtype=a.dtype if np.iscomplexobj(a) else float)
    norm = np.linalg.norm(a, 1)
    if norm == 0.0:
        return eye.copy()
    squarings = max(0, int(np.ceil(np.log2(norm / _TAYLOR_BOUND))))
    scaled = a / (2.0**squarings)
    result = eye + scaled / _TAYLOR_ORDER
    for k in range(_TAYLOR_ORDER - 1, 0, -1):
        result = eye + (scaled / k) @ result
    for _ in range(squarings):
        result = result @ result
    return result


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------


def build_liouvillian(desc: QmDescription, e_field: float) -> np.ndarray:
    """Generator of the master equation acting on column-stacked rho.

    Returns the (N^2, N^2) complex matrix L with
    vec(d rho/dt) = L vec(rho), where vec stacks columns. The commutator
    part uses H = H0 - mu*E; the dissipator part couples the populations
    through the rate matrix and damps each coherence.
    """
    n = desc.dim
    h = desc.hamiltonian.matrix() - desc.dipole_op.matrix() * e_field
    eye = np.eye(n)
    lv = (-1j / HBAR) * (np.kron(eye, h) - np.kron(h.T, eye))
    relax = desc.dissipator

    def idx(i, j):
        return i + n * j

    for i in range(n):
        for j in range(n):
            if i == j:
                for k in range(n):
                    lv[idx(i, i), idx(k, k)] += relax.pop_matrix[i, k]
            else:
                lv[idx(i, j), idx(i, j)] -= relax.dephasing_matrix[i, j]
    return lv


def step_exact(
    desc: QmDescription, rho: np.ndarray, e_field: float, dt: float
) -> np.ndarray:
    """Advance rho by dt with the exact propagator (E frozen over the step).

    This is the reference against which the approximate steppers are
    measured; it is exact up to the accuracy of the dense matrix
    exponential.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    n = desc.dim
    propagator = matrix_exponential(build_liouvillian(desc, e_field) * dt)
    vec = np.asarray(rho, dtype=complex).reshape(n * n, order="F")
    return (propagator @ vec).reshape((n, n), order="F")


@dataclass
class PropagatorWorkspace:
    """Precomputed relaxation half step for the splitting stepper.

    ``pop_half`` is the matrix exponential of the population rate matrix
    over dt/2 (a stochastic matrix: non-negative entries, unit column
    sums); ``coh_half`` holds the per-coherence decay factors over dt/2
    with zeros on the diagonal so it doubles as an off-diagonal mask.
    """

    dim: int
    dt: float
    pop_half: np.ndarray
    coh_half: np.ndarray


def precompute_relaxation_propagator(
    desc: QmDescription, dt: float
) -> PropagatorWorkspace:
    """Build the workspace holding the relaxation action over dt/2."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    relax = desc.dissipator
    pop_half = matrix_exponential(relax.pop_matrix * (0.5 * dt))
    # the exponential of a rate matrix is non-negative; clip roundoff dust
    if np.min(pop_half) < -1e-12:
        raise ValueError("population propagator has significant negative entries")
    pop_half = np.maximum(pop_half, 0.0)
    coh_half = np.exp(-relax.dephasing_matrix * (0.5 * dt))
    np.fill_diagonal(coh_half, 0.0)
    return PropagatorWorkspace(desc.dim, dt, pop_half, coh_half)


def _relax_half_step(ws: PropagatorWorkspace, rho: np.ndarray) -> np.ndarray:
    out = rho * ws.coh_half
    np.fill_diagonal(out, ws.pop_half @ np.diagonal(rho))
    return out


def _cayley_unitary(desc: QmDescription, e_field: float, dt: float) -> np.ndarray:
    """U = (I + i*H*dt/(2*hbar))^-1 (I - i*H*dt/(2*hbar)), exactly unitary."""
    h = desc.hamiltonian.matrix() - desc.dipole_op.matrix() * e_field
    a = h * (0.5 * dt / HBAR)
    b = np.eye(desc.dim, dtype=complex) + 1j * a
    if desc.dim == 2:
        det = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
        inv = np.array([[b[1, 1], -b[0, 1]], [-b[1, 0], b[0, 0]]]) / det
        return inv @ b.conj().T
    # I + iA with Hermitian A is always invertible, no pivot trouble
    return np.linalg.solve(b, b.conj().T)


def step_splitting(
    ws: PropagatorWorkspace,
    desc: QmDescription,
    rho: np.ndarray,
    e_field: float,
) -> np.ndarray:
    """Strang splitting step: relaxation, Cayley unitary, relaxation.

    The relaxation half steps come precomputed from the workspace; the
    field-dependent unitary sits innermost and is rebuilt per call. The
    composition preserves trace, Hermiticity and positive semidefiniteness
    for any step size.
    """
    half = _relax_half_step(ws, np.asarray(rho, dtype=complex))
    u = _cayley_unitary(desc, e_field, ws.dt)
    rotated = u @ half @ u.conj().T
    return _relax_half_step(ws, rotated)


def _master_rhs(desc: QmDescription, rho: np.ndarray, e_field: float) -> np.ndarray:
    h = desc.hamiltonian.matrix() - desc.dipole_op.matrix() * e_field
    return (-1j / HBAR) * (h @ rho - rho @ h) + desc.dissipator.apply(rho)


def step_rk4(
    desc: QmDescription, rho: np.ndarray, e_field: float, dt: float
) -> np.ndarray:
    """Classical 4th-order Runge-Kutta step of the master equation.

    Hermiticity is enforced by symmetrization after the step; positivity
    is not guaranteed, so the step size must resolve the fastest dynamics.
    """
    rho = np.asarray(rho, dtype=complex)
    k1 = _master_rhs(desc, rho, e_field)
    k2 = _master_rhs(desc, rho + 0.5 * dt * k1, e_field)
    k3 = _master_rhs(desc, rho + 0.5 * dt * k2, e_field)
    k4 = _master_rhs(desc, rho + dt * k3, e_field)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.conj().T)


def polarization_rate(
    desc: QmDescription,
    rho_new: np.ndarray,
    rho_old: np.ndarray,
    dt: float,
) -> float:
    """Polarization source term dP/dt = n_3D Tr(mu * d rho/dt) in A s/m^2.

    The derivative is the centered difference between the density matrices
    of consecutive half steps; the imaginary residue of the trace is
    discarded (it vanishes for Hermitian inputs).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    delta = np.asarray(rho_new) - np.asarray(rho_old)
    trace = np.sum(desc.dipole_op.matrix() * delta.T)
    return desc.density_3d * float(np.real(trace)) / dt
