"""Gate-level Grover iteration and its exact two-level reference dynamics.

One Grover iteration is the oracle (phase flip on the searched index) followed
by the diffusion operator (inversion about the mean).  Both are compiled down
to one-qubit unitaries, CNOTs and Toffolis.  The register holds ``n_q`` qubits
plus one ancilla (qubit index ``n_q``), so ``n_tot = n_q + 1``; the ancilla
starts in |0>, is only borrowed temporarily inside multi-controlled gates, and
returns to |0> at every iteration boundary.

Phase conventions are arranged so the compiled iteration equals the textbook
operator exactly, with no residual global phase: the diffusion block as
compiled from elementary gates realizes minus the inversion about the mean, so
one Hadamard in its final layer carries an extra factor -1 (still a valid
one-qubit unitary).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .qstate import (
    HADAMARD,
    PAULI_X,
    CnotGate,
    Gate,
    OneQubitGate,
    StateVector,
    ToffoliGate,
    apply_gate_inplace,
    basis_state,
    uniform_state,
)

__all__ = [
    "TICK_MODES",
    "GroverConfig",
    "GroverCircuit",
    "reference_gate_count",
    "build_circuit",
    "apply_exact_grover",
    "grover_frequency",
    "half_period",
    "ideal_probability",
    "complement_state",
    "ideal_state_series",
    "default_tau",
]

TICK_MODES = ("actual", "paper")

_MINUS_HADAMARD = -HADAMARD


@dataclass(frozen=True)
class GroverConfig:
    """Search problem size and target.

    n_q: computational register width; the search space has N = 2**n_q items.
    tau: searched basis index, 0 <= tau < N.
    """

    n_q: int
    tau: int

    def __post_init__(self) -> None:
        if self.n_q < 2:
            raise ValueError(f"n_q must be >= 2, got {self.n_q}")
        if not 0 <= self.tau < (1 << self.n_q):
            raise ValueError(
                f"tau={self.tau} out of range for n_q={self.n_q}"
            )

    @property
    def n_tot(self) -> int:
        return self.n_q + 1

    @property
    def size(self) -> int:
        return 1 << self.n_q

    @property
    def n_u(self) -> int:
        """Number of set bits (excited qubits) in the searched index."""
        return bin(self.tau).count("1")


def default_tau(n_q: int, n_u: int | None = None) -> int:
    """Lowest basis index whose bit count is n_u (default n_q // 2)."""
    if n_u is None:
        n_u = n_q // 2
    if not 0 <= n_u <= n_q:
        raise ValueError(f"n_u={n_u} out of range for n_q={n_q}")
    return (1 << n_u) - 1


def reference_gate_count(n_tot: int) -> int:
    """Linear gate-count model 12*n_tot - 42 for one Grover iteration."""
    return 12 * n_tot - 42


def _mcx(controls: list, target: int, borrows: list) -> list:
    """Multi-controlled X from Toffolis, using dirty borrowed qubits.

    Borrowed qubits may hold arbitrary states; they are returned unchanged.
    With b borrows available the construction needs b >= 1 whenever there are
    more than two controls (the ladder wants m-2, the split bridges the gap).
    """
    m = len(controls)
    if m == 0:
        return [OneQubitGate(PAULI_X, target, label="X")]
    if m == 1:
        return [CnotGate(controls[0], target)]
    if m == 2:
        return [ToffoliGate(controls[0], controls[1], target)]
    if len(borrows) >= m - 2:
        return _mcx_ladder(controls, target, borrows)
    if not borrows:
        raise ValueError("need at least one borrowed qubit for >2 controls")
    # Split the controls in half; each half becomes a ladder with the other
    # half (plus target / bridge) serving as its dirty borrows.
    b = borrows[0]
    k = (m + 1) // 2
    ga = _mcx(controls[:k], b, controls[k:] + [target] + borrows[1:])
    gb = _mcx(controls[k:] + [b], target, controls[:k] + borrows[1:])
    return gb + ga + gb + ga


def _mcx_ladder(controls: list, target: int, borrows: list) -> list:
    # V-chain over m-2 dirty borrows: two sweeps of a Toffoli vee; the second
    # vee (one rung shorter) uncomputes the phase left on the borrows.
    m = len(controls)
    work = list(borrows[: m - 2]) + [target]

    def vee(top: int) -> list:
        g = []
        for i in range(top, 0, -1):
            g.append(ToffoliGate(controls[i + 1], work[i - 1], work[i]))
        g.append(ToffoliGate(controls[0], controls[1], work[0]))
        for i in range(1, top + 1):
            g.append(ToffoliGate(controls[i + 1], work[i - 1], work[i]))
        return g

    return vee(m - 2) + vee(m - 3)


def _phase_flip_block(config: GroverConfig, pattern: int) -> list:
    """Diagonal phase flip of the register basis state ``pattern``.

    Realized as H on the top register qubit conjugating a multi-controlled X,
    with X conjugation selecting the pattern; the ancilla serves as a dirty
    borrow and is returned unchanged.
    """
    n_q = config.n_q
    anc = config.n_q  # highest-index qubit
    flip_target = n_q - 1
    controls = list(range(n_q - 1))
    gates: list = []
    xs = [
        OneQubitGate(PAULI_X, q, label="X")
        for q in range(n_q)
        if not (pattern >> q) & 1
    ]
    gates += xs
    gates.append(OneQubitGate(HADAMARD, flip_target, label="H"))
    gates += _mcx(controls, flip_target, [anc])
    gates.append(OneQubitGate(HADAMARD, flip_target, label="H"))
    gates += xs
    return gates


@dataclass(frozen=True)
class GroverCircuit:
    """One compiled Grover iteration (oracle then diffusion)."""

    config: GroverConfig
    gates: tuple

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    @property
    def reference_count(self) -> int:
        return reference_gate_count(self.config.n_tot)

    def gate_count(self, tick_mode: str) -> int:
        """Gate count used for noise accounting under the given tick mode."""
        if tick_mode == "actual":
            return self.n_gates
        if tick_mode == "paper":
            return self.reference_count
        raise ValueError(f"unknown tick mode {tick_mode!r}")

    def tick_schedule(self, tick_mode: str) -> np.ndarray:
        """Number of noise ticks applied after each compiled gate.

        "actual": one tick per compiled gate.  "paper": a total budget of
        12*n_tot - 42 ticks per iteration, spread as evenly as possible over
        the compiled gates.
        """
        n = self.n_gates
        if tick_mode == "actual":
            return np.ones(n, dtype=np.int64)
        if tick_mode != "paper":
            raise ValueError(f"unknown tick mode {tick_mode!r}")
        budget = self.reference_count
        if budget < 1:
            raise ValueError(
                f"linear count {budget} is not positive for "
                f"n_tot={self.config.n_tot}; use tick_mode='actual'"
            )
        edges = [(i * budget) // n for i in range(n + 1)]
        return np.diff(np.asarray(edges, dtype=np.int64))

    def dump(self) -> str:
        """One line per gate: KIND qubits [flattened matrix for 1q gates]."""
        lines = []
        for g in self.gates:
            if isinstance(g, OneQubitGate):
                flat = " ".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in g.matrix.ravel())
                lines.append(f"U1 {g.target} [{flat}]")
            elif isinstance(g, CnotGate):
                lines.append(f"CNOT {g.control} {g.target}")
            else:
                lines.append(f"TOFFOLI {g.control_a} {g.control_b} {g.target}")
        return "\n".join(lines) + "\n"


def build_circuit(config: GroverConfig) -> GroverCircuit:
    """Compile one Grover iteration for the given search problem."""
    n_q = config.n_q
    gates: list = []
    # Oracle: phase flip the searched index.
    gates += _phase_flip_block(config, config.tau)
    # Diffusion: H-layer, phase flip of |0...0>, H-layer; compiled with an
    # overall -1 relative to the inversion about the mean, so negate one
    # Hadamard of the final layer to cancel it.
    for q in range(n_q):
        gates.append(OneQubitGate(HADAMARD, q, label="H"))
    gates += _phase_flip_block(config, 0)
    gates.append(OneQubitGate(_MINUS_HADAMARD, 0, label="-H"))
    for q in range(1, n_q):
        gates.append(OneQubitGate(HADAMARD, q, label="H"))
    return GroverCircuit(config, tuple(gates))


def apply_exact_grover(state: StateVector, config: GroverConfig, reps: int = 1) -> StateVector:
    """Apply the exact Grover operator to a register-only state ``reps`` times."""
    if state.n_tot != config.n_q:
        raise ValueError(
            f"exact reference acts on the bare register: expected "
            f"n_tot={config.n_q}, got {state.n_tot}"
        )
    amps = state.amplitudes.copy()
    n = config.size
    for _ in range(reps):
        amps[config.tau] = -amps[config.tau]
        amps = (2.0 / n) * amps.sum() - amps
    return StateVector(config.n_q, amps)


def grover_frequency(size: int) -> float:
    """Oscillation frequency per iteration: 2*arcsin(sqrt(1/N))."""
    return 2.0 * np.arcsin(np.sqrt(1.0 / size))


def half_period(config: GroverConfig) -> float:
    """Iterations from the uniform start to the first success-probability peak."""
    return np.pi / (2.0 * grover_frequency(config.size))


def ideal_probability(t: float, config: GroverConfig) -> float:
    """Closed-form success probability sin^2((t + 1/2) * omega) at iteration t."""
    omega = grover_frequency(config.size)
    s = np.sin((t + 0.5) * omega)
    return float(s * s)


def complement_state(config: GroverConfig) -> StateVector:
    """Uniform superposition over all non-searched indices (register only)."""
    n = config.size
    amps = np.full(n, 1.0 / np.sqrt(n - 1), dtype=np.complex128)
    amps[config.tau] = 0.0
    return StateVector(config.n_q, amps)


def ideal_state_series(circuit: GroverCircuit, t_max: int) -> np.ndarray:
    """Noise-free circuit states (t_max + 1, 2**n_tot), one row per iteration.

    Row t is the state after t compiled Grover iterations starting from the
    uniform register superposition with the ancilla in |0>.
    """
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    cfg = circuit.config
    state = uniform_state(cfg.n_q, ancilla=0)
    out = np.empty((t_max + 1, state.dim), dtype=np.complex128)
    out[0] = state.amplitudes
    amps = state.amplitudes.copy()
    for t in range(1, t_max + 1):
        for g in circuit.gates:
            apply_gate_inplace(amps, cfg.n_tot, g)
        out[t] = amps
    return out
