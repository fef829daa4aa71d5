"""Unit tests for operators, dissipator, and the density-matrix steppers."""

import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_density_matrix, random_description, representable_dephasing
from mblight.constants import E0, HBAR
from mblight.quantum import (
    LindbladRelaxation,
    QmDescription,
    QmOperator,
    build_liouvillian,
    matrix_exponential,
    polarization_rate,
    precompute_relaxation_propagator,
    step_exact,
    step_rk4,
    step_splitting,
    two_level_description,
)


# ---------------------------------------------------------------------------
# QmOperator
# ---------------------------------------------------------------------------


class TestQmOperator:
    def test_diagonal_hamiltonian_defaults_offdiag_to_zero(self):
        op = QmOperator([1.0, 2.0, 3.0])
        m = op.matrix()
        assert np.array_equal(np.diag(m), [1, 2, 3])
        assert np.count_nonzero(m - np.diag(np.diag(m))) == 0

    def test_offdiag_ordering_walks_columns(self):
        # [(1,2), (1,3), (2,3)] in 1-based labels
        op = QmOperator([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
        m = op.matrix()
        assert m[0, 1] == 1.0
        assert m[0, 2] == 2.0
        assert m[1, 2] == 3.0
        assert m[2, 0] == np.conj(m[0, 2])

    def test_single_level_degenerate_case(self):
        op = QmOperator([1.0])
        assert op.dim == 1
        assert np.array_equal(op.matrix(), [[1.0]])

    def test_two_by_two_definition(self):
        op = QmOperator([1.0, 2.0], [3.0 + 4.0j])
        expected = np.array([[1.0, 3.0 + 4.0j], [3.0 - 4.0j, 2.0]])
        assert np.array_equal(op.matrix(), expected)

    def test_matrix_is_exactly_hermitian(self):
        rng = np.random.default_rng(0)
        for dim in (2, 3, 5, 8):
            n_off = dim * (dim - 1) // 2
            op = QmOperator(
                rng.standard_normal(dim),
                rng.standard_normal(n_off) + 1j * rng.standard_normal(n_off),
            )
            m = op.matrix()
            assert np.array_equal(m, m.conj().T)

    def test_round_trip_is_bit_exact(self):
        rng = np.random.default_rng(1)
        for dim in (1, 2, 4, 7):
            m = random_density_matrix(rng, dim)
            m = 0.5 * (m + m.conj().T)
            again = QmOperator.from_matrix(m).matrix()
            assert np.array_equal(m, again)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            QmOperator([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            QmOperator([1.0, 2.0, 3.0], [1.0])

    def test_density_validation(self):
        assert QmOperator([1.0, 0.0]).density_problems() == []
        assert QmOperator([0.6, 0.6]).density_problems()  # trace 1.2
        assert QmOperator([1.5, -0.5]).density_problems()  # out of range
        # positive populations but not PSD: coherence too large
        op = QmOperator([0.5, 0.5], [0.9])
        assert op.density_problems()


# ---------------------------------------------------------------------------
# LindbladRelaxation
# ---------------------------------------------------------------------------


class TestLindbladRelaxation:
    def test_two_level_coefficient_is_the_dephasing_rate(self):
        # the single traceless diagonal basis operator has weight one, so
        # c_11 equals gamma_p
        gamma_p = 3.7e9
        relax = LindbladRelaxation([[0.0, 1e10], [2e10, 0.0]], [gamma_p])
        assert relax.coeff_matrix.shape == (1, 1)
        assert relax.coeff_matrix[0, 0] == pytest.approx(gamma_p, rel=1e-12)
        assert relax.psd_ok

    def test_three_level_zero_dephasing(self):
        rates = np.full((3, 3), 1e10)
        np.fill_diagonal(rates, 0.0)
        relax = LindbladRelaxation(rates, [0.0, 0.0, 0.0])
        assert np.array_equal(relax.coeff_matrix, np.zeros((2, 2)))
        assert relax.psd_ok

    def test_negative_rates_rejected(self):
        with pytest.raises(ValueError):
            LindbladRelaxation([[0.0, -1e9], [0.0, 0.0]], [0.0])
        with pytest.raises(ValueError):
            LindbladRelaxation([[0.0, 1e9], [0.0, 0.0]], [-1e9])

    def test_population_matrix_columns_sum_to_zero(self):
        rng = np.random.default_rng(7)
        for dim in range(2, 7):
            rates = rng.uniform(0.0, 1e11, (dim, dim))
            relax = LindbladRelaxation(rates, np.zeros(dim * (dim - 1) // 2))
            # cancellation is exact up to summation-order rounding
            scale = float(np.max(relax.tau_inv))
            assert np.allclose(relax.pop_matrix.sum(axis=0), 0.0, atol=1e-12 * scale)
            # inverse lifetimes are column sums of the off-diagonal rates
            assert np.array_equal(relax.tau_inv, relax.rates.sum(axis=0))

    def test_unrepresentable_dephasing_flagged_with_warning(self):
        # a single nonzero rate among equals cannot come from a diagonal
        # coefficient matrix for N = 3
        with pytest.warns(UserWarning):
            relax = LindbladRelaxation(np.zeros((3, 3)), [1e10, 0.0, 0.0])
        assert not relax.psd_ok

    def test_dissipator_decay_example(self):
        # upper level decays into the ground level at 1e10/s
        relax = LindbladRelaxation([[0.0, 1e10], [0.0, 0.0]], [0.0])
        drho = relax.apply(np.diag([0.0, 1.0]).astype(complex))
        assert drho[0, 0] == pytest.approx(1e10)
        assert drho[1, 1] == pytest.approx(-1e10)
        assert drho[0, 1] == 0 and drho[1, 0] == 0

    def test_dissipator_steady_state_has_zero_population_derivative(self):
        rng = np.random.default_rng(3)
        rates = rng.uniform(0.0, 1e11, (4, 4))
        np.fill_diagonal(rates, 0.0)
        relax = LindbladRelaxation(rates, np.zeros(6))
        # steady state: null vector of the population rate matrix
        w, v = np.linalg.eig(relax.pop_matrix)
        idx = int(np.argmin(np.abs(w)))
        pops = np.real(v[:, idx])
        pops /= pops.sum()
        drho = relax.apply(np.diag(pops).astype(complex))
        assert np.max(np.abs(np.diag(drho))) < 1e11 * 1e-12

    def test_dissipator_zero_rates_zero_output(self):
        relax = LindbladRelaxation(np.zeros((3, 3)), np.zeros(3))
        rho = random_density_matrix(np.random.default_rng(1), 3)
        assert np.count_nonzero(relax.apply(rho)) == 0

    def test_dissipator_output_hermitian_traceless(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            dim = int(rng.integers(2, 7))
            rates = rng.uniform(0.0, 1e11, (dim, dim))
            np.fill_diagonal(rates, 0.0)
            relax = LindbladRelaxation(
                rates, representable_dephasing(rng, dim, 1e10)
            )
            rho = random_density_matrix(rng, dim)
            out = relax.apply(rho)
            assert np.allclose(out, out.conj().T, atol=1e-12 * np.abs(out).max())
            assert abs(np.trace(out)) <= 1e-12 * np.linalg.norm(out)

    def test_dimension_mismatch_rejected(self):
        relax = LindbladRelaxation(np.zeros((2, 2)), [0.0])
        with pytest.raises(ValueError):
            relax.apply(np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# two-level convenience constructor
# ---------------------------------------------------------------------------


class TestTwoLevelDescription:
    def test_published_sit_parameters(self):
        freq = 2.0 * math.pi * 2e14
        desc = two_level_description(1e24, freq, 6.24e-11, 1.0e10, 1.0e10, -1.0)
        assert desc.hamiltonian.main_diag == pytest.approx(
            [-0.5 * HBAR * freq, 0.5 * HBAR * freq]
        )
        assert abs(0.5 * HBAR * freq - 6.626e-20) < 1e-23
        mu12 = desc.dipole_op.off_diag[0]
        assert mu12 == pytest.approx(-E0 * 6.24e-11)
        assert abs(mu12 + 9.9976e-30) < 1e-33
        # w0 = -1: all scattering into the ground level
        assert desc.dissipator.rates[0, 1] == pytest.approx(1e10)
        assert desc.dissipator.rates[1, 0] == 0.0
        assert desc.dissipator.pure_dephasing[0] == pytest.approx(5e9)
        assert desc.dissipator.psd_ok

    def test_symmetric_equilibrium_splits_rates(self):
        desc = two_level_description(1e24, 1e15, 1e-10, 8e9, 8e9, 0.0)
        assert desc.dissipator.rates[0, 1] == pytest.approx(4e9)
        assert desc.dissipator.rates[1, 0] == pytest.approx(4e9)

    def test_dephasing_feasibility_boundary(self):
        desc = two_level_description(1e24, 1e15, 1e-10, 1e10, 5e9, 0.0)
        assert desc.dissipator.pure_dephasing[0] == 0.0
        assert desc.dissipator.psd_ok

    def test_infeasible_arguments_rejected(self):
        with pytest.raises(ValueError):
            two_level_description(1e24, 1e15, 1e-10, 1e10, 4.9e9, 0.0)
        with pytest.raises(ValueError):
            two_level_description(1e24, 1e15, 1e-10, 1e10, 1e10, 1.5)
        with pytest.raises(ValueError):
            two_level_description(-1e24, 1e15, 1e-10, 1e10, 1e10, 0.0)


# ---------------------------------------------------------------------------
# Liouvillian and exact stepper
# ---------------------------------------------------------------------------


class TestLiouvillian:
    def test_free_evolution_spectrum(self):
        # no dissipation, diagonal H: eigenvalues are -i(w_i - w_j)
        freqs = np.array([0.0, 1.0, 2.5]) * 1e14
        desc = QmDescription(
            1e24,
            QmOperator(HBAR * freqs),
            QmOperator(np.zeros(3)),
            LindbladRelaxation(np.zeros((3, 3)), np.zeros(3)),
        )
        lv = build_liouvillian(desc, 0.0)
        expected = sorted(
            (-1j * (wi - wj) for wi in freqs for wj in freqs),
            key=lambda z: (z.real, z.imag),
        )
        got = sorted(np.linalg.eigvals(lv), key=lambda z: (z.real, z.imag))
        assert np.allclose(got, expected, atol=1e-2)

    def test_dissipative_part_matches_apply(self):
        rng = np.random.default_rng(5)
        for dim in (2, 3, 6):
            for _ in range(20):
                desc = random_description(rng, dim)
                lv_full = build_liouvillian(desc, 0.0)
                lv_unitary = build_liouvillian(
                    QmDescription(
                        desc.density_3d,
                        desc.hamiltonian,
                        desc.dipole_op,
                        LindbladRelaxation(
                            np.zeros((dim, dim)), np.zeros(dim * (dim - 1) // 2)
                        ),
                    ),
                    0.0,
                )
                lv_diss = lv_full - lv_unitary
                rho = random_density_matrix(rng, dim)
                via_matrix = (lv_diss @ rho.reshape(-1, order="F")).reshape(
                    (dim, dim), order="F"
                )
                direct = desc.dissipator.apply(rho)
                assert np.allclose(via_matrix, direct, atol=1e-3)

    def test_single_level_is_trivial(self):
        desc = QmDescription(
            1e24,
            QmOperator([1e-20]),
            QmOperator([0.0]),
            LindbladRelaxation(np.zeros((1, 1)), []),
        )
        assert np.array_equal(build_liouvillian(desc, 0.0), [[0.0]])


class TestStepExact:
    def test_zero_step_is_identity(self):
        rng = np.random.default_rng(2)
        desc = random_description(rng, 3)
        rho = random_density_matrix(rng, 3)
        assert np.allclose(step_exact(desc, rho, 1e9, 0.0), rho, atol=1e-15)

    def test_exponential_population_decay(self):
        relax = LindbladRelaxation([[0.0, 1e10], [0.0, 0.0]], [0.0])
        desc = QmDescription(
            1e24, QmOperator([0.0, 0.0]), QmOperator([0.0, 0.0]), relax
        )
        out = step_exact(desc, np.diag([0.0, 1.0]).astype(complex), 0.0, 1e-12)
        assert out[1, 1].real == pytest.approx(math.exp(-0.01), rel=1e-12)
        assert out[0, 0].real == pytest.approx(1.0 - math.exp(-0.01), rel=1e-12)

    def test_free_coherence_precession(self):
        freq = 2.0 * math.pi * 2e14
        desc = QmDescription(
            1e24,
            QmOperator([-0.5 * HBAR * freq, 0.5 * HBAR * freq]),
            QmOperator([0.0, 0.0]),
            LindbladRelaxation(np.zeros((2, 2)), [0.0]),
        )
        rho = np.array([[0.5, 0.1], [0.1, 0.5]], dtype=complex)
        dt = 1e-16
        out = step_exact(desc, rho, 0.0, dt)
        assert out[1, 0] == pytest.approx(0.1 * np.exp(-1j * freq * dt), rel=1e-12)

    def test_preserves_trace_and_hermiticity(self):
        rng = np.random.default_rng(4)
        desc = random_description(rng, 4)
        rho = random_density_matrix(rng, 4)
        out = step_exact(desc, rho, 1e9, 1e-15)
        assert abs(np.trace(out) - 1.0) < 1e-12
        assert np.allclose(out, out.conj().T, atol=1e-12)

    def test_matrix_exponential_against_scipy(self):
        rng = np.random.default_rng(6)
        for dim in (2, 5, 9, 16, 25):
            a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            a *= rng.uniform(0.01, 30.0)
            ref = scipy.linalg.expm(a)
            assert np.allclose(
                matrix_exponential(a), ref, atol=1e-12 * np.abs(ref).max()
            )
        assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))


# ---------------------------------------------------------------------------
# relaxation propagator precompute
# ---------------------------------------------------------------------------


class TestRelaxationPropagator:
    def test_zero_rates_give_identity(self):
        desc = QmDescription(
            1e24,
            QmOperator([0.0, 0.0, 0.0]),
            QmOperator(np.zeros(3)),
            LindbladRelaxation(np.zeros((3, 3)), np.zeros(3)),
        )
        ws = precompute_relaxation_propagator(desc, 1e-15)
        assert np.array_equal(ws.pop_half, np.eye(3))
        off = ws.coh_half[~np.eye(3, dtype=bool)]
        assert np.all(off == 1.0)

    def test_two_level_closed_form(self):
        relax = LindbladRelaxation([[0.0, 1e10], [0.0, 0.0]], [0.0])
        desc = QmDescription(
            1e24, QmOperator([0.0, 0.0]), QmOperator([0.0, 0.0]), relax
        )
        ws = precompute_relaxation_propagator(desc, 2e-12)
        decay = math.exp(-0.01)
        expected = np.array([[1.0, 1.0 - decay], [0.0, decay]])
        assert np.allclose(ws.pop_half, expected, rtol=1e-12)
        # coherence decay: (tau1^-1 + tau2^-1)/2 * dt/2 = 0.5e10 * 1e-12
        assert ws.coh_half[0, 1] == pytest.approx(math.exp(-0.005), rel=1e-12)

    def test_population_half_step_is_stochastic(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            dim = int(rng.integers(2, 7))
            desc = random_description(rng, dim, rate_scale=10 ** rng.uniform(8, 12))
            ws = precompute_relaxation_propagator(desc, 10 ** rng.uniform(-18, -12))
            assert np.all(ws.pop_half >= 0.0)
            assert np.allclose(ws.pop_half.sum(axis=0), 1.0, atol=1e-12)
            off = ws.coh_half[~np.eye(dim, dtype=bool)]
            assert np.all(np.abs(off) <= 1.0)


# ---------------------------------------------------------------------------
# splitting stepper
# ---------------------------------------------------------------------------


class TestStepSplitting:
    def test_diagonal_state_unchanged_without_field_or_dissipation(self):
        desc = QmDescription(
            1e24,
            QmOperator([1e-20, 3e-20]),
            QmOperator([0.0, 0.0], [1e-29]),
            LindbladRelaxation(np.zeros((2, 2)), [0.0]),
        )
        ws = precompute_relaxation_propagator(desc, 1e-15)
        rho = np.diag([0.3, 0.7]).astype(complex)
        out = step_splitting(ws, desc, rho, 0.0)
        assert np.allclose(out, rho, atol=1e-16)

    def test_equals_exact_for_dissipation_only(self):
        # when the unitary part vanishes the splitting composition is the
        # relaxation propagator itself
        rng = np.random.default_rng(9)
        for dim in (2, 4):
            rates = rng.uniform(0.0, 1e11, (dim, dim))
            np.fill_diagonal(rates, 0.0)
            desc = QmDescription(
                1e24,
                QmOperator(np.zeros(dim)),
                QmOperator(np.zeros(dim)),
                LindbladRelaxation(rates, representable_dephasing(rng, dim, 1e10)),
            )
            dt = 1e-13
            ws = precompute_relaxation_propagator(desc, dt)
            rho = random_density_matrix(rng, dim)
            assert np.allclose(
                step_splitting(ws, desc, rho, 0.0),
                step_exact(desc, rho, 0.0, dt),
                atol=1e-13,
            )

    def test_second_order_convergence(self):
        rng = np.random.default_rng(42)
        desc = random_description(rng, 3)
        rho0 = random_density_matrix(rng, 3)
        e_field = 1e8
        horizon = 50e-15
        exact = step_exact(desc, rho0, e_field, horizon)
        errors = []
        for steps in (64, 128, 256):
            dt = horizon / steps
            ws = precompute_relaxation_propagator(desc, dt)
            rho = rho0
            for _ in range(steps):
                rho = step_splitting(ws, desc, rho, e_field)
            errors.append(np.linalg.norm(rho - exact))
        for k in range(2):
            order = math.log2(errors[k] / errors[k + 1])
            assert abs(order - 2.0) <= 0.1

    def test_positivity_trace_hermiticity_random_draws(self):
        rng = np.random.default_rng(123)
        for _ in range(200):
            dim = int(rng.integers(2, 7))
            desc = random_description(rng, dim, rate_scale=10 ** rng.uniform(9, 12))
            dt = 10 ** rng.uniform(-18, -12)
            ws = precompute_relaxation_propagator(desc, dt)
            rho = random_density_matrix(rng, dim)
            out = step_splitting(ws, desc, rho, rng.uniform(-5e9, 5e9))
            assert abs(np.trace(out) - 1.0) < 1e-12
            assert np.max(np.abs(out - out.conj().T)) < 1e-12
            assert np.min(np.linalg.eigvalsh(0.5 * (out + out.conj().T))) >= -1e-10


# ---------------------------------------------------------------------------
# RK4 stepper
# ---------------------------------------------------------------------------


class TestStepRk4:
    def test_zero_step_is_identity(self):
        rng = np.random.default_rng(10)
        desc = random_description(rng, 3)
        rho = random_density_matrix(rng, 3)
        assert np.allclose(step_rk4(desc, rho, 1e9, 0.0), rho, atol=1e-16)

    def test_fourth_order_convergence(self):
        rng = np.random.default_rng(42)
        desc = random_description(rng, 3)
        rho0 = random_density_matrix(rng, 3)
        e_field = 1e8
        horizon = 50e-15
        exact = step_exact(desc, rho0, e_field, horizon)
        errors = []
        for steps in (16, 32, 64):
            dt = horizon / steps
            rho = rho0
            for _ in range(steps):
                rho = step_rk4(desc, rho, e_field, dt)
            errors.append(np.linalg.norm(rho - exact))
        for k in range(2):
            order = math.log2(errors[k] / errors[k + 1])
            assert abs(order - 4.0) <= 0.2

    def test_agrees_with_splitting_at_solver_step_size(self):
        # both steppers are essentially exact at the FDTD step size
        desc = two_level_description(
            1e24, 2.0 * math.pi * 2e14, 6.24e-11, 1.0e10, 1.0e10, -1.0
        )
        dt = 7.6e-18
        ws = precompute_relaxation_propagator(desc, dt)
        rho = np.diag([1.0, 0.0]).astype(complex)
        e_field = 4.2186e9
        for _ in range(100):
            a = step_splitting(ws, desc, rho, e_field)
            b = step_rk4(desc, rho, e_field, dt)
            assert np.max(np.abs(a - b)) < 1e-6
            rho = a

    def test_trace_preserved(self):
        rng = np.random.default_rng(12)
        desc = random_description(rng, 4)
        rho = random_density_matrix(rng, 4)
        out = step_rk4(desc, rho, 1e9, 1e-16)
        assert abs(np.trace(out) - 1.0) < 1e-10
        assert np.array_equal(out, out.conj().T)


# ---------------------------------------------------------------------------
# polarization source term
# ---------------------------------------------------------------------------


class TestPolarizationRate:
    def test_unchanged_state_gives_zero(self):
        rng = np.random.default_rng(13)
        desc = random_description(rng, 3)
        rho = random_density_matrix(rng, 3)
        assert polarization_rate(desc, rho, rho, 1e-15) == 0.0

    def test_two_level_hand_expansion(self):
        # single real off-diagonal dipole entry: the trace reduces to
        # 2 mu12 Re(delta rho21) (equal to Re(delta rho12) for Hermitian rho)
        mu12 = -9.99e-30
        desc = QmDescription(
            1e24,
            QmOperator([0.0, 0.0]),
            QmOperator([0.0, 0.0], [mu12]),
            LindbladRelaxation(np.zeros((2, 2)), [0.0]),
        )
        rng = np.random.default_rng(14)
        old = random_density_matrix(rng, 2)
        new = random_density_matrix(rng, 2)
        dt = 1e-16
        expected = 1e24 * 2.0 * mu12 * (new[1, 0] - old[1, 0]).real / dt
        assert polarization_rate(desc, new, old, dt) == pytest.approx(expected)

    def test_population_change_without_dipole_coupling_gives_zero(self):
        desc = QmDescription(
            1e24,
            QmOperator([0.0, 0.0]),
            QmOperator([0.0, 0.0], [1e-29]),
            LindbladRelaxation(np.zeros((2, 2)), [0.0]),
        )
        old = np.diag([1.0, 0.0]).astype(complex)
        new = np.diag([0.8, 0.2]).astype(complex)
        assert polarization_rate(desc, new, old, 1e-15) == 0.0


# ---------------------------------------------------------------------------
# two-level reduction equivalence
# ---------------------------------------------------------------------------


def test_trace_and_hermiticity_drift_bounded_over_many_steps():
    # every stepper keeps the state physical: after k steps the trace may
    # deviate by at most k*1e-12 and Hermiticity stays at 1e-12
    rng = np.random.default_rng(55)
    desc = random_description(rng, 3)
    rho0 = random_density_matrix(rng, 3)
    steps = 500
    dt = 1e-16
    ws = precompute_relaxation_propagator(desc, dt)

    def drive(advance):
        rho = rho0
        for k in range(steps):
            rho = advance(rho, 1e8 * math.sin(1e14 * k * dt))
        return rho

    for advance in (
        lambda rho, e: step_splitting(ws, desc, rho, e),
        lambda rho, e: step_rk4(desc, rho, e, dt),
        lambda rho, e: step_exact(desc, rho, e, dt),
    ):
        out = drive(advance)
        assert abs(np.trace(out) - 1.0) <= steps * 1e-12
        assert np.max(np.abs(out - out.conj().T)) <= 1e-12


def test_two_level_reduction_matches_generic_description():
    freq = 2.0 * math.pi * 2e14
    gamma_1, gamma_2, w0 = 1.0e10, 1.3e10, -0.4
    built = two_level_description(1e24, freq, 6.24e-11, gamma_1, gamma_2, w0)
    by_hand = QmDescription(
        1e24,
        QmOperator([-0.5 * HBAR * freq, 0.5 * HBAR * freq]),
        QmOperator([0.0, 0.0], [-E0 * 6.24e-11]),
        LindbladRelaxation(
            0.5 * gamma_1 * np.array([[0.0, 1.0 - w0], [1.0 + w0, 0.0]]),
            [gamma_2 - 0.5 * gamma_1],
        ),
    )
    dt = 1e-17
    ws_a = precompute_relaxation_propagator(built, dt)
    ws_b = precompute_relaxation_propagator(by_hand, dt)
    rho_a = np.diag([1.0, 0.0]).astype(complex)
    rho_b = rho_a.copy()
    for k in range(500):
        e_field = 4e9 * math.sin(2.0 * math.pi * 2e14 * k * dt)
        rho_a = step_splitting(ws_a, built, rho_a, e_field)
        rho_b = step_splitting(ws_b, by_hand, rho_b, e_field)
    assert np.max(np.abs(rho_a - rho_b)) < 1e-13
