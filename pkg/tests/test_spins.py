"""Tests for the spin-dynamics module.

Reference operators are rebuilt here from literal 2x2 matrices so the
comparisons do not reuse the module's own constructors.
"""

import numpy as np
import pytest

from hbac.cooling import new_product_state
from hbac.spins import (
    MAX_SPINS,
    SpinSystem,
    ToggleSequence,
    ToggleStep,
    balanced_xyz_cycle,
    collective_rotation,
    evolve,
    exchange_hamiltonian,
    natural_hamiltonian,
    optimal_transfer_time,
    pauli,
    register_hamiltonian,
    spin_lock_cycle,
    state_correlation_fidelity,
    toggling_average,
    transfer_curve,
    transfer_efficiency,
)

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def pair_system(d, species=("C", "H"), shifts=(0.0, 0.0)):
    labels = [(f"s{i}", sp) for i, sp in enumerate(species, start=1)]
    return SpinSystem(tuple(labels), np.array(shifts), np.array([[0.0, d], [d, 0.0]]))


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


class TestPauli:
    def test_single_spin_z(self):
        assert np.array_equal(pauli(1, "z", 1), np.diag([1.0 + 0j, -1.0]))

    def test_squares_to_identity(self):
        for ax in "xyz":
            op = pauli(2, ax, 3)
            assert np.allclose(op @ op, np.eye(8), atol=0)

    def test_different_spins_commute(self):
        a = pauli(1, "x", 2)
        b = pauli(2, "y", 2)
        assert np.allclose(a @ b - b @ a, 0, atol=0)

    def test_embedding(self):
        assert np.array_equal(pauli(1, "x", 2), np.kron(SX, I2))
        assert np.array_equal(pauli(2, "y", 2), np.kron(I2, SY))

    def test_validation(self):
        with pytest.raises(ValueError):
            pauli(3, "x", 2)
        with pytest.raises(ValueError):
            pauli(1, "w", 2)


class TestCollectiveRotation:
    def test_pi_about_x(self):
        assert np.allclose(collective_rotation(1, "x", np.pi), -1j * SX, atol=1e-15)

    def test_subset(self):
        u = collective_rotation(2, "y", 0.7, spins=[1])
        u1 = np.cos(0.35) * I2 - 1j * np.sin(0.35) * SY
        assert np.allclose(u, np.kron(u1, I2), atol=1e-15)

    def test_unitary(self):
        u = collective_rotation(3, "z", 1.234)
        assert np.allclose(u @ u.conj().T, np.eye(8), atol=1e-12)

    def test_zero_angle(self):
        assert np.allclose(collective_rotation(2, "x", 0.0), np.eye(4), atol=0)


class TestSpinSystem:
    def test_validation(self):
        with pytest.raises(ValueError):
            pair_system(1.0, species=("C", "Q"))
        with pytest.raises(ValueError):
            SpinSystem((("a", "C"), ("a", "C")), np.zeros(2), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            SpinSystem((("a", "C"),), np.zeros(2), np.zeros((1, 1)))
        with pytest.raises(ValueError):
            SpinSystem(
                (("a", "C"), ("b", "C")),
                np.zeros(2),
                np.array([[0.0, 1.0], [2.0, 0.0]]),
            )
        with pytest.raises(ValueError):
            SpinSystem(
                (("a", "C"), ("b", "C")),
                np.zeros(2),
                np.array([[1.0, 0.0], [0.0, 0.0]]),
            )

    def test_spin_cap(self):
        spins = tuple((f"s{i}", "C") for i in range(MAX_SPINS + 1))
        with pytest.raises(ValueError):
            SpinSystem(spins, np.zeros(6), np.zeros((6, 6)))

    def test_lookup(self):
        sys = pair_system(19.0)
        assert sys.m == 2
        assert sys.labels == ("s1", "s2")
        assert sys.index_of("s2") == 2
        assert sys.species_of(2) == "H"
        with pytest.raises(ValueError):
            sys.index_of("nope")


class TestExchangeHamiltonian:
    def test_pair_matrix(self):
        sys = pair_system(19.0)
        want = (19.0 / 3.0) * (np.kron(SX, SX) + np.kron(SY, SY) + np.kron(SZ, SZ)) / 2.0
        assert np.allclose(exchange_hamiltonian(sys), want, atol=1e-12)

    def test_zero_quantum_element(self):
        H = exchange_hamiltonian(pair_system(19.0))
        assert H[1, 2] == pytest.approx(19.0 / 3.0, abs=1e-12)

    def test_eigenvalues(self):
        # triplet at +D/6 three-fold, singlet at -D/2
        vals = np.sort(np.linalg.eigvalsh(exchange_hamiltonian(pair_system(19.0))))
        assert np.allclose(vals, [-9.5, 19 / 6, 19 / 6, 19 / 6], atol=1e-12)

    def test_zero_coupling(self):
        assert np.allclose(exchange_hamiltonian(pair_system(0.0)), 0, atol=0)

    def test_conserves_total_z(self):
        sys = SpinSystem(
            (("c1", "C"), ("h1", "H"), ("c2", "C")),
            np.zeros(3),
            np.array([[0.0, 19.0, 0.0], [19.0, 0.0, 2.0], [0.0, 2.0, 0.0]]),
        )
        H = exchange_hamiltonian(sys)
        ztot = sum(pauli(i, "z", 3) for i in (1, 2, 3))
        assert np.abs(H @ ztot - ztot @ H).max() < 1e-12
        assert np.abs(H - H.conj().T).max() < 1e-12

    def test_requires_both_species(self):
        with pytest.raises(ValueError):
            exchange_hamiltonian(pair_system(1.0, species=("C", "C")))


class TestNaturalHamiltonian:
    def test_pair_diagonal(self):
        H = natural_hamiltonian(pair_system(19.0))
        assert np.allclose(H, np.diag([9.5, -9.5, -9.5, 9.5]), atol=1e-12)

    def test_commutes_with_each_z(self):
        sys = SpinSystem(
            (("c", "C"), ("h", "H")),
            np.zeros(2),
            np.array([[0.0, 7.0], [7.0, 0.0]]),
        )
        H = natural_hamiltonian(sys)
        for i in (1, 2):
            z = pauli(i, "z", 2)
            assert np.allclose(H @ z, z @ H, atol=0)

    def test_zero_coupling(self):
        assert np.allclose(natural_hamiltonian(pair_system(0.0)), 0, atol=0)


class TestRegisterHamiltonian:
    def test_shifts_only(self):
        sys = SpinSystem(
            (("a", "C"), ("b", "C")), np.array([1.0, -0.5]), np.zeros((2, 2))
        )
        want = np.diag([0.25, 0.75, -0.75, -0.25])
        assert np.allclose(register_hamiltonian(sys), want, atol=1e-12)

    def test_strong_coupling_singlet(self):
        # equal shifts: the singlet is an eigenstate at 0, triplet-0 at -D
        d = 3.0
        sys = pair_system(d, species=("C", "C"), shifts=(2.0, 2.0))
        H = register_hamiltonian(sys)
        singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
        triplet0 = np.array([0, 1, 1, 0]) / np.sqrt(2)
        assert np.abs(H @ singlet).max() < 1e-12
        assert np.allclose(H @ triplet0, -d * triplet0, atol=1e-12)

    def test_flip_flop_flag(self):
        sys = pair_system(3.0, species=("C", "C"), shifts=(1.0, -1.0))
        want = (
            1.0 * np.kron(SZ, I2) / 2
            - 1.0 * np.kron(I2, SZ) / 2
            + 3.0 * np.kron(SZ, SZ) / 2
        )
        assert np.allclose(register_hamiltonian(sys, flip_flop=False), want, atol=1e-12)
        full = register_hamiltonian(sys)
        flip = -3.0 * (np.kron(SX, SX) + np.kron(SY, SY)) / 4
        assert np.allclose(full, want + flip, atol=1e-12)

    def test_rejects_mixed_species(self):
        with pytest.raises(ValueError):
            register_hamiltonian(pair_system(3.0))

    def test_zero_parameters(self):
        sys = pair_system(0.0, species=("C", "C"))
        assert np.allclose(register_hamiltonian(sys), 0, atol=0)


class TestEvolve:
    def test_zero_hamiltonian(self):
        assert np.allclose(evolve(np.zeros((4, 4)), 2.7), np.eye(4), atol=1e-12)

    def test_larmor_half_turn(self):
        # nu*z/2 for t = 1/(2 nu) rotates by pi; squaring gives -identity
        nu = 3.0
        U = evolve(nu * SZ / 2, 1 / (2 * nu))
        assert np.allclose(U @ U, -np.eye(2), atol=1e-12)

    def test_unitary_and_semigroup(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            H = random_hermitian(rng, 8)
            t1, t2 = rng.uniform(0, 0.5, 2)
            u1, u2 = evolve(H, t1), evolve(H, t2)
            assert np.abs(u1 @ u1.conj().T - np.eye(8)).max() < 1e-10
            assert np.abs(u1 @ u2 - evolve(H, t1 + t2)).max() < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            evolve(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)


class TestTransfer:
    def test_full_transfer_at_peak(self):
        sys = pair_system(19.0)
        tau = 3 / (4 * 19.0)
        assert transfer_efficiency(sys, 2, 1, tau) == pytest.approx(1.0, abs=1e-6)

    def test_curve_matches_rabi_form(self):
        # two-level splitting 2D/3 gives efficiency sin^2(2 pi D t / 3)
        d = 19.0
        sys = pair_system(d)
        times = np.linspace(0.0, 0.2, 97)
        curve = transfer_curve(sys, 2, 1, times)
        assert np.allclose(curve, np.sin(2 * np.pi * d * times / 3) ** 2, atol=1e-9)

    def test_zero_time(self):
        assert transfer_efficiency(pair_system(19.0), 2, 1, 0.0) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_periodicity(self):
        d = 19.0
        sys = pair_system(d)
        rng = np.random.default_rng(4)
        for t in rng.uniform(0, 0.1, 8):
            a = transfer_efficiency(sys, 2, 1, t)
            b = transfer_efficiency(sys, 2, 1, t + 3 / (2 * d))
            assert a == pytest.approx(b, abs=1e-9)

    def test_weak_spectator_costs_little(self):
        sys = SpinSystem(
            (("c1", "C"), ("h1", "H"), ("c2", "C")),
            np.zeros(3),
            np.array([[0.0, 19.0, 0.0], [19.0, 0.0, 2.0], [0.0, 2.0, 0.0]]),
        )
        eta = transfer_efficiency(sys, 2, 1, 3 / (4 * 19.0))
        assert 0.9 < eta < 1.0

    def test_optimal_time(self):
        sys = pair_system(19.0)
        t_star, eta = optimal_transfer_time(sys, 2, 1, 0.1)
        assert t_star == pytest.approx(3 / 76, abs=1e-6)
        assert eta == pytest.approx(1.0, abs=1e-9)

    def test_validation(self):
        sys = pair_system(19.0)
        with pytest.raises(ValueError):
            transfer_efficiency(sys, 1, 1, 0.01)
        with pytest.raises(ValueError):
            transfer_efficiency(sys, 1, 3, 0.01)
        with pytest.raises(ValueError):
            optimal_transfer_time(sys, 2, 1, 0.0)


class TestToggling:
    def test_identity_frames(self):
        rng = np.random.default_rng(6)
        H = random_hermitian(rng, 4)
        seq = ToggleSequence(
            (ToggleStep(np.eye(4), 0.1), ToggleStep(np.eye(4), 0.3))
        )
        assert np.allclose(toggling_average(H, seq), H, atol=1e-12)

    def test_balanced_cycle_builds_exchange_form(self):
        sys = pair_system(19.0)
        avg = toggling_average(natural_hamiltonian(sys), balanced_xyz_cycle(2))
        assert np.abs(avg - exchange_hamiltonian(sys)).max() < 1e-12

    def test_balanced_cycle_closes(self):
        net = balanced_xyz_cycle(2).net_rotation()
        assert np.abs(net - np.eye(4)).max() < 1e-10

    def test_spin_lock_scaling(self):
        d = 1.7
        sys = pair_system(d, species=("C", "C"))
        avg = toggling_average(register_hamiltonian(sys), spin_lock_cycle(2))
        want = -0.5 * d * (
            2 * np.kron(SX, SX) - np.kron(SY, SY) - np.kron(SZ, SZ)
        ) / 4
        assert np.abs(avg - want).max() < 1e-12

    def test_linearity(self):
        rng = np.random.default_rng(8)
        h1, h2 = random_hermitian(rng, 4), random_hermitian(rng, 4)
        seq = balanced_xyz_cycle(2)
        combined = toggling_average(0.3 * h1 + 1.7 * h2, seq)
        split = 0.3 * toggling_average(h1, seq) + 1.7 * toggling_average(h2, seq)
        assert np.allclose(combined, split, atol=1e-12)

    def test_cyclic_shift_invariance(self):
        # the balanced cycle closes, so starting anywhere gives one average
        sys = pair_system(19.0)
        H = natural_hamiltonian(sys)
        base = balanced_xyz_cycle(2).steps
        ref = toggling_average(H, ToggleSequence(base))
        for shift in range(1, len(base)):
            seq = ToggleSequence(base[shift:] + base[:shift])
            assert np.abs(toggling_average(H, seq) - ref).max() < 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            ToggleSequence(())
        with pytest.raises(ValueError):
            ToggleStep(np.eye(4), 0.0)
        with pytest.raises(ValueError):
            ToggleStep(np.ones((2, 2)), 0.1)
        with pytest.raises(ValueError):
            toggling_average(np.zeros((8, 8)), balanced_xyz_cycle(1))


class TestStateCorrelationFidelity:
    def test_identical(self):
        state = new_product_state([0.5, 0.3, 0.2])
        assert state_correlation_fidelity(state, state) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_scaling(self):
        ideal = new_product_state([0.5, 0.3, 0.2])
        achieved = new_product_state([0.96 * 0.5, 0.96 * 0.3, 0.96 * 0.2])
        assert state_correlation_fidelity(achieved, ideal) == pytest.approx(
            0.96, abs=1e-12
        )

    def test_silent_qubits_excluded(self):
        ideal = new_product_state([0.4, 0.0])
        achieved = new_product_state([0.2, 0.9])
        assert state_correlation_fidelity(achieved, ideal) == pytest.approx(
            0.5, abs=1e-12
        )

    def test_all_silent_rejected(self):
        from hbac.cooling import DiagonalState

        mixed = DiagonalState.maximally_mixed(2)
        with pytest.raises(ValueError):
            state_correlation_fidelity(mixed, mixed)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            state_correlation_fidelity(
                new_product_state([0.1]), new_product_state([0.1, 0.1])
            )
