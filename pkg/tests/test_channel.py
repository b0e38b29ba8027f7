"""Exact channel evolution: invariants, closed forms, ensemble agreement."""
import numpy as np
import pytest

from groversim import (
    MAX_TOTAL_QUBITS,
    DensityMatrix,
    GroverCircuit,
    GroverConfig,
    NoiseModel,
    OneQubitGate,
    StateVector,
    basis_state,
    build_circuit,
    complement_state,
    evolve_exact,
    exact_series,
    ideal_state_series,
    run_ensemble,
    state_density,
    uniform_state,
    z_scores,
)


def identity_circuit(n_q):
    # a one-gate circuit that does nothing, so only the noise ticks act
    cfg = GroverConfig(n_q, 0)
    gate = OneQubitGate(np.eye(2, dtype=np.complex128), target=0, label="I")
    return GroverCircuit(cfg, (gate,))


def test_density_matrix_validation():
    rho = np.eye(4, dtype=np.complex128) / 4.0
    dm = DensityMatrix(2, rho)
    assert dm.trace() == pytest.approx(1.0)
    assert dm.purity() == pytest.approx(0.25)
    with pytest.raises(ValueError):
        DensityMatrix(2, rho * 2.0)
    bad = rho.copy()
    bad[0, 1] = 0.5
    with pytest.raises(ValueError):
        DensityMatrix(2, bad)
    with pytest.raises(ValueError):
        DensityMatrix(MAX_TOTAL_QUBITS + 1,
                      np.eye(1 << (MAX_TOTAL_QUBITS + 1)) /
                      (1 << (MAX_TOTAL_QUBITS + 1)))
    with pytest.raises(ValueError):
        DensityMatrix(2, np.eye(3) / 3.0)


def test_state_density_is_projector():
    state = uniform_state(2, ancilla=0)
    dm = state_density(state)
    assert dm.purity() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(
        dm.matrix, np.outer(state.amplitudes, state.amplitudes.conj()),
        atol=1e-15)


def test_expectation_identities():
    cfg = GroverConfig(3, 5)
    tau_state = basis_state(cfg.n_tot, cfg.tau)
    dm = state_density(tau_state)
    assert dm.expectation(np.eye(dm.dim)) == pytest.approx(1.0)
    assert dm.vector_expectation(tau_state.amplitudes) == pytest.approx(1.0)
    mixed = DensityMatrix(cfg.n_tot, np.eye(dm.dim) / dm.dim)
    assert mixed.vector_expectation(tau_state.amplitudes) == pytest.approx(1 / dm.dim)


def test_plane_projector_expectation_on_ideal_state():
    cfg = GroverConfig(4, 9)
    circ = build_circuit(cfg)
    states = ideal_state_series(circ, 7)
    eta = complement_state(cfg).amplitudes
    n = cfg.size
    basis_vecs = []
    for anc in (0, 1):
        tau_vec = np.zeros(2 * n, dtype=np.complex128)
        tau_vec[anc * n + cfg.tau] = 1.0
        eta_vec = np.zeros(2 * n, dtype=np.complex128)
        eta_vec[anc * n : anc * n + n] = eta
        basis_vecs += [tau_vec, eta_vec]
    for t in (0, 3, 7):
        dm = state_density(StateVector(cfg.n_tot, states[t]))
        w4 = sum(dm.vector_expectation(v) for v in basis_vecs)
        assert w4 == pytest.approx(1.0, abs=1e-9)


def test_zero_damping_evolution_is_pure():
    cfg = GroverConfig(3, 6)
    circ = build_circuit(cfg)
    rhos = evolve_exact(circ, NoiseModel(0.0), 8)
    ideal = ideal_state_series(circ, 8)
    for t, dm in enumerate(rhos):
        assert dm.purity() == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(
            dm.matrix, np.outer(ideal[t], ideal[t].conj()), atol=1e-10)


def test_excited_population_closed_form():
    circ = identity_circuit(2)
    gamma = 0.05
    start = basis_state(3, 1)  # qubit 0 excited, others ground
    rhos = evolve_exact(circ, NoiseModel(gamma), 20, tick_mode="actual",
                        initial=start)
    for k, dm in enumerate(rhos):
        assert dm.matrix[1, 1].real == pytest.approx((1 - gamma) ** k, abs=1e-12)
        assert dm.matrix[0, 0].real == pytest.approx(1 - (1 - gamma) ** k, abs=1e-12)


def test_coherence_damps_with_half_exponent():
    # off-diagonal elements pick up sqrt(1 - gamma) per tick
    circ = identity_circuit(2)
    gamma = 0.08
    plus = np.zeros(8, dtype=np.complex128)
    plus[0] = plus[1] = 1 / np.sqrt(2)
    rhos = evolve_exact(circ, NoiseModel(gamma), 12, tick_mode="actual",
                        initial=StateVector(3, plus))
    for k, dm in enumerate(rhos):
        assert abs(dm.matrix[0, 1]) == pytest.approx(
            0.5 * (1 - gamma) ** (k / 2), abs=1e-12)


def test_evolution_preserves_trace_hermiticity_positivity():
    cfg = GroverConfig(3, 3)
    circ = build_circuit(cfg)
    rhos = evolve_exact(circ, NoiseModel(0.01), 15)
    for dm in rhos:
        assert abs(dm.trace() - 1.0) < 1e-10
        assert np.max(np.abs(dm.matrix - dm.matrix.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(dm.matrix).min() > -1e-9
        assert dm.purity() <= 1.0 + 1e-10


def test_size_guard():
    cfg = GroverConfig(6, 10)  # n_tot = 7 exceeds the exact-channel cap
    circ = build_circuit(cfg)
    with pytest.raises(ValueError):
        evolve_exact(circ, NoiseModel(0.01), 3)
    with pytest.raises(ValueError):
        evolve_exact(build_circuit(GroverConfig(3, 1)), NoiseModel(0.01), -1)


def test_initial_state_size_checked():
    circ = build_circuit(GroverConfig(3, 1))
    with pytest.raises(ValueError):
        evolve_exact(circ, NoiseModel(0.01), 2, initial=basis_state(3, 0))


def test_exact_series_matches_ensemble_statistically():
    cfg = GroverConfig(3, 5)
    circ = build_circuit(cfg)
    noise = NoiseModel(2e-3)
    t_max = 25
    exact = exact_series(circ, noise, t_max)
    ens = run_ensemble(circ, noise, t_max, 2000, 101)
    zs = z_scores(ens.series, exact)
    pooled = np.concatenate([zs["p_search"], zs["p_plane"], zs["fidelity"]])
    assert np.isfinite(pooled).all()
    assert np.mean(np.abs(pooled) <= 3.0) >= 0.9
    assert np.max(np.abs(pooled)) < 6.0


def test_z_scores_zero_damping_all_zero():
    cfg = GroverConfig(3, 2)
    circ = build_circuit(cfg)
    exact = exact_series(circ, NoiseModel(0.0), 10)
    ens = run_ensemble(circ, NoiseModel(0.0), 10, 4, 55)
    zs = z_scores(ens.series, exact)
    for arr in zs.values():
        np.testing.assert_array_equal(arr, np.zeros_like(arr))


def test_z_scores_requires_stderr():
    cfg = GroverConfig(3, 2)
    circ = build_circuit(cfg)
    exact = exact_series(circ, NoiseModel(0.0), 5)
    with pytest.raises(ValueError):
        z_scores(exact, exact)
