"""Elementary state and gate operations against direct matrix arithmetic."""
import numpy as np
import pytest

from groversim import (
    HADAMARD,
    PAULI_X,
    CnotGate,
    OneQubitGate,
    StateVector,
    ToffoliGate,
    apply_gate,
    basis_state,
    inner_product,
    uniform_state,
)
from groversim.qstate import apply_gate_inplace


def random_state(n_tot, rng):
    amps = rng.normal(size=1 << n_tot) + 1j * rng.normal(size=1 << n_tot)
    amps /= np.linalg.norm(amps)
    return StateVector(n_tot, amps)


def random_unitary(rng):
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def one_qubit_full_matrix(matrix, q, n_tot):
    # qubit 0 is the least significant bit, so it sits rightmost in the kron
    full = np.eye(1 << (n_tot - 1 - q), dtype=np.complex128)
    full = np.kron(full, matrix)
    return np.kron(full, np.eye(1 << q, dtype=np.complex128))


def test_basis_state_layout():
    s = basis_state(3, 5)
    assert s.dim == 8
    assert s.amplitudes[5] == 1.0
    assert np.count_nonzero(s.amplitudes) == 1
    with pytest.raises(ValueError):
        basis_state(3, 8)


def test_uniform_state_register_only():
    s = uniform_state(4)
    assert s.n_tot == 4
    np.testing.assert_allclose(s.probabilities(), np.full(16, 1 / 16), atol=1e-15)


def test_uniform_state_ancilla_branches():
    for anc in (0, 1):
        s = uniform_state(3, ancilla=anc)
        assert s.n_tot == 4
        probs = s.probabilities()
        branch = probs[anc * 8 : anc * 8 + 8]
        other = probs[(1 - anc) * 8 : (1 - anc) * 8 + 8]
        np.testing.assert_allclose(branch, np.full(8, 1 / 8), atol=1e-15)
        assert np.all(other == 0.0)
    with pytest.raises(ValueError):
        uniform_state(3, ancilla=2)


def test_state_vector_validation():
    with pytest.raises(ValueError):
        StateVector(0, np.ones(1, dtype=np.complex128))
    with pytest.raises(ValueError):
        StateVector(2, np.zeros(3, dtype=np.complex128))


def test_one_qubit_gate_rejects_non_unitary():
    with pytest.raises(ValueError):
        OneQubitGate(np.array([[1.0, 0.0], [0.0, 2.0]]), target=0)
    with pytest.raises(ValueError):
        OneQubitGate(np.eye(3), target=0)


def test_two_and_three_qubit_gate_validation():
    with pytest.raises(ValueError):
        CnotGate(1, 1)
    with pytest.raises(ValueError):
        ToffoliGate(0, 1, 1)
    with pytest.raises(ValueError):
        ToffoliGate(2, 2, 0)


def test_one_qubit_gate_matches_kron_matrix():
    rng = np.random.default_rng(11)
    for n_tot in (1, 2, 4):
        for q in range(n_tot):
            mat = random_unitary(rng)
            state = random_state(n_tot, rng)
            got = apply_gate(state, OneQubitGate(mat, target=q))
            want = one_qubit_full_matrix(mat, q, n_tot) @ state.amplitudes
            np.testing.assert_allclose(got.amplitudes, want, atol=1e-12)


def test_cnot_truth_table_all_placements():
    n_tot = 4
    for control in range(n_tot):
        for target in range(n_tot):
            if control == target:
                continue
            gate = CnotGate(control, target)
            for x in range(1 << n_tot):
                got = apply_gate(basis_state(n_tot, x), gate)
                want = x ^ (1 << target) if (x >> control) & 1 else x
                assert got.amplitudes[want] == 1.0
                assert np.count_nonzero(got.amplitudes) == 1


def test_toffoli_truth_table():
    n_tot = 4
    gate = ToffoliGate(0, 2, 3)
    for x in range(1 << n_tot):
        got = apply_gate(basis_state(n_tot, x), gate)
        both = (x >> 0) & 1 and (x >> 2) & 1
        want = x ^ (1 << 3) if both else x
        assert got.amplitudes[want] == 1.0


def test_gates_preserve_norm():
    rng = np.random.default_rng(5)
    state = random_state(5, rng)
    for gate in (OneQubitGate(HADAMARD, 3), CnotGate(4, 0), ToffoliGate(1, 3, 2),
                 OneQubitGate(PAULI_X, 0), OneQubitGate(random_unitary(rng), 2)):
        state = apply_gate(state, gate)
    assert abs(state.norm() - 1.0) < 1e-12


def test_apply_gate_leaves_input_untouched():
    state = basis_state(2, 0)
    before = state.amplitudes.copy()
    out = apply_gate(state, OneQubitGate(PAULI_X, 0))
    np.testing.assert_array_equal(state.amplitudes, before)
    assert out.amplitudes[1] == 1.0


def test_apply_gate_inplace_mutates():
    s = basis_state(2, 0)
    apply_gate_inplace(s.amplitudes, s.n_tot, OneQubitGate(PAULI_X, 1))
    assert s.amplitudes[2] == 1.0
    with pytest.raises(ValueError):
        apply_gate_inplace(s.amplitudes, s.n_tot, CnotGate(0, 5))


def test_inner_product_conjugation_and_mismatch():
    rng = np.random.default_rng(3)
    a, b = random_state(3, rng), random_state(3, rng)
    ab = inner_product(a, b)
    ba = inner_product(b, a)
    assert ab == pytest.approx(np.conj(ba))
    assert inner_product(a, a).real == pytest.approx(1.0)
    with pytest.raises(ValueError):
        inner_product(a, random_state(2, rng))
