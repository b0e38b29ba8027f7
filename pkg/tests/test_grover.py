"""Compiled search circuit against the exact two-dimensional rotation."""
import numpy as np
import pytest

from groversim import (
    CnotGate,
    GroverConfig,
    OneQubitGate,
    StateVector,
    ToffoliGate,
    apply_exact_grover,
    build_circuit,
    complement_state,
    default_tau,
    grover_frequency,
    half_period,
    ideal_probability,
    ideal_state_series,
    reference_gate_count,
    searched_probability,
    uniform_state,
)
from groversim.qstate import apply_gate_inplace


def run_circuit(circuit, amps):
    amps = amps.copy()
    for g in circuit.gates:
        apply_gate_inplace(amps, circuit.config.n_tot, g)
    return amps


def exact_on_full(config, amps):
    # the compiled iteration must act as (exact rotation) x (ancilla identity)
    n = config.size
    out = np.empty_like(amps)
    for anc in (0, 1):
        reg = StateVector(config.n_q, amps[anc * n : (anc + 1) * n])
        out[anc * n : (anc + 1) * n] = apply_exact_grover(reg, config).amplitudes
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        GroverConfig(1, 0)
    with pytest.raises(ValueError):
        GroverConfig(3, 8)
    with pytest.raises(ValueError):
        GroverConfig(3, -1)
    cfg = GroverConfig(5, 0b01011)
    assert cfg.n_tot == 6
    assert cfg.size == 32
    assert cfg.n_u == 3


def test_default_tau_popcounts():
    assert default_tau(11) == 31
    assert bin(default_tau(11)).count("1") == 5
    assert default_tau(8, 3) == 7
    assert default_tau(4, 0) == 0
    with pytest.raises(ValueError):
        default_tau(3, 9)


def test_frequency_and_half_period():
    assert grover_frequency(2048) == pytest.approx(2 * np.arcsin(np.sqrt(1 / 2048)))
    # the classic 11-qubit register peaks near iteration 35.5
    assert half_period(GroverConfig(11, 31)) == pytest.approx(35.54, abs=0.01)


def test_gate_counts():
    assert reference_gate_count(12) == 102
    assert reference_gate_count(9) == 66
    circ = build_circuit(GroverConfig(11, 31))
    assert circ.reference_count == 102
    assert circ.gate_count("paper") == 102
    assert circ.gate_count("actual") == circ.n_gates == 172
    with pytest.raises(ValueError):
        circ.gate_count("bogus")


def test_gates_are_elementary():
    circ = build_circuit(GroverConfig(6, 9))
    kinds = {type(g) for g in circ.gates}
    assert kinds <= {OneQubitGate, CnotGate, ToffoliGate}
    # the ancilla participates (as a borrow) but carries no one-qubit gates
    anc = circ.config.n_q
    for g in circ.gates:
        if isinstance(g, OneQubitGate):
            assert g.target != anc


def test_tick_schedules():
    circ = build_circuit(GroverConfig(5, 3))
    actual = circ.tick_schedule("actual")
    assert len(actual) == circ.n_gates
    assert np.all(actual == 1)
    paper = circ.tick_schedule("paper")
    assert len(paper) == circ.n_gates
    assert np.all(paper >= 0)
    assert paper.sum() == reference_gate_count(6) == 30
    # the linear reference count turns negative below four qubits total
    with pytest.raises(ValueError):
        build_circuit(GroverConfig(2, 1)).tick_schedule("paper")


def test_circuit_matches_exact_operator_on_random_states():
    rng = np.random.default_rng(17)
    for n_q in range(2, 7):
        size = 1 << n_q
        cfg = GroverConfig(n_q, int(rng.integers(size)))
        circ = build_circuit(cfg)
        for _ in range(20):
            amps = rng.normal(size=2 * size) + 1j * rng.normal(size=2 * size)
            amps = amps.astype(np.complex128) / np.linalg.norm(amps)
            got = run_circuit(circ, amps)
            want = exact_on_full(cfg, amps)
            np.testing.assert_allclose(got, want, atol=1e-12)


def test_circuit_full_matrix_small():
    # all basis inputs at once: the compiled matrix is exactly G (x) identity
    cfg = GroverConfig(3, 6)
    circ = build_circuit(cfg)
    dim = 1 << cfg.n_tot
    got = np.empty((dim, dim), dtype=np.complex128)
    for x in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[x] = 1.0
        got[:, x] = run_circuit(circ, e)
    want = np.empty_like(got)
    for x in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[x] = 1.0
        want[:, x] = exact_on_full(cfg, e)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_ancilla_untouched_even_in_superposition():
    rng = np.random.default_rng(2)
    cfg = GroverConfig(4, 11)
    circ = build_circuit(cfg)
    reg = rng.normal(size=16) + 1j * rng.normal(size=16)
    reg /= np.linalg.norm(reg)
    # ancilla in (|0> + i|1>)/sqrt(2); the iteration must not entangle it
    amps = np.concatenate([reg, 1j * reg]) / np.sqrt(2)
    out = run_circuit(circ, amps)
    np.testing.assert_allclose(out[16:], 1j * out[:16], atol=1e-12)


def test_success_probability_follows_sine_squared():
    for n_q in range(2, 7):
        cfg = GroverConfig(n_q, default_tau(n_q))
        circ = build_circuit(cfg)
        t_max = int(np.ceil(3 * half_period(cfg)))
        states = ideal_state_series(circ, t_max)
        for t in range(t_max + 1):
            got = searched_probability(StateVector(cfg.n_tot, states[t]), cfg)
            assert got == pytest.approx(ideal_probability(t, cfg), abs=1e-8)


def test_ideal_probability_endpoints():
    cfg = GroverConfig(4, 9)
    assert ideal_probability(0, cfg) == pytest.approx(1 / 16)
    om = grover_frequency(16)
    assert ideal_probability(7, cfg) == pytest.approx(np.sin(7.5 * om) ** 2)


def test_exact_grover_reps_compose():
    cfg = GroverConfig(5, 20)
    state = uniform_state(5)
    twice = apply_exact_grover(apply_exact_grover(state, cfg), cfg)
    reps = apply_exact_grover(state, cfg, reps=2)
    np.testing.assert_allclose(twice.amplitudes, reps.amplitudes, atol=1e-14)


def test_complement_state_structure():
    cfg = GroverConfig(4, 9)
    eta = complement_state(cfg)
    assert eta.n_tot == 4
    assert eta.amplitudes[9] == 0.0
    others = np.delete(eta.amplitudes, 9)
    np.testing.assert_allclose(others, np.full(15, 1 / np.sqrt(15)), atol=1e-14)
    assert eta.norm() == pytest.approx(1.0)


def test_rotation_stays_in_tau_eta_plane():
    cfg = GroverConfig(5, 7)
    eta = complement_state(cfg).amplitudes
    tau_vec = np.zeros(32, dtype=np.complex128)
    tau_vec[7] = 1.0
    state = uniform_state(5)
    for _ in range(10):
        state = apply_exact_grover(state, cfg)
        amps = state.amplitudes
        residual = amps - (tau_vec @ amps.conj()).conj() * tau_vec \
            - (eta @ amps.conj()).conj() * eta
        assert np.linalg.norm(residual) < 1e-12


def test_dump_round_trip_counts():
    circ = build_circuit(GroverConfig(4, 5))
    lines = circ.dump().splitlines()
    assert len(lines) == circ.n_gates
    kinds = {"U1": 0, "CNOT": 0, "TOFFOLI": 0}
    for line, gate in zip(lines, circ.gates):
        head = line.split()[0]
        kinds[head] += 1
        if head == "U1":
            assert int(line.split()[1]) == gate.target
            assert len(line.split("[")[1].rstrip("]").split()) == 4
        elif head == "TOFFOLI":
            a, b, t = (int(w) for w in line.split()[1:4])
            assert {a, b, t} == set(gate.qubits)
    assert kinds["U1"] + kinds["CNOT"] + kinds["TOFFOLI"] == circ.n_gates


def test_ideal_state_series_layout():
    cfg = GroverConfig(3, 2)
    circ = build_circuit(cfg)
    states = ideal_state_series(circ, 6)
    assert states.shape == (7, 16)
    np.testing.assert_allclose(states[0], uniform_state(3, ancilla=0).amplitudes)
    for t in range(7):
        assert np.linalg.norm(states[t]) == pytest.approx(1.0, abs=1e-12)
    got = run_circuit(circ, states[3].copy())
    np.testing.assert_allclose(states[4], got, atol=1e-13)
    with pytest.raises(ValueError):
        ideal_state_series(circ, -1)
