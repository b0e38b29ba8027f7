"""Dense state vectors for a small qubit register, plus elementary gates.

Basis index convention: qubit 0 is the least-significant bit of the basis
index, so basis state ``x`` has qubit ``m`` excited iff ``(x >> m) & 1``.
The ancilla, when present, is the highest-index qubit; the computational
register then occupies contiguous basis indices within each ancilla branch.

All amplitudes are complex128.  States are expected to stay normalized to
within NORM_TOL at observation points; gate application preserves the norm
exactly up to rounding because every elementary gate is unitary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "NORM_TOL",
    "HADAMARD",
    "PAULI_X",
    "StateVector",
    "OneQubitGate",
    "CnotGate",
    "ToffoliGate",
    "Gate",
    "basis_state",
    "uniform_state",
    "apply_gate",
    "apply_gate_inplace",
    "inner_product",
]

NORM_TOL = 1e-10
_UNITARY_TOL = 1e-12

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


@dataclass
class StateVector:
    """Amplitudes of an ``n_tot``-qubit register over 2**n_tot basis states."""

    n_tot: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.n_tot < 1:
            raise ValueError(f"n_tot must be >= 1, got {self.n_tot}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_tot,):
            raise ValueError(
                f"amplitude array has shape {amps.shape}, "
                f"expected ({1 << self.n_tot},) for n_tot={self.n_tot}"
            )
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return 1 << self.n_tot

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes)
        return p * p

    def copy(self) -> "StateVector":
        return StateVector(self.n_tot, self.amplitudes.copy())


@dataclass(frozen=True, eq=False)
class OneQubitGate:
    """An arbitrary single-qubit unitary acting on ``target``."""

    matrix: np.ndarray
    target: int
    label: str = "U1"

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (2, 2):
            raise ValueError(f"one-qubit gate matrix must be 2x2, got {mat.shape}")
        if not np.allclose(mat.conj().T @ mat, np.eye(2), atol=_UNITARY_TOL):
            raise ValueError("one-qubit gate matrix is not unitary")
        object.__setattr__(self, "matrix", mat)

    @property
    def qubits(self) -> tuple:
        return (self.target,)


@dataclass(frozen=True)
class CnotGate:
    control: int
    target: int

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise ValueError("CNOT control and target must differ")

    @property
    def qubits(self) -> tuple:
        return (self.control, self.target)


@dataclass(frozen=True)
class ToffoliGate:
    control_a: int
    control_b: int
    target: int

    def __post_init__(self) -> None:
        if len({self.control_a, self.control_b, self.target}) != 3:
            raise ValueError("Toffoli qubits must be distinct")

    @property
    def qubits(self) -> tuple:
        return (self.control_a, self.control_b, self.target)


Gate = Union[OneQubitGate, CnotGate, ToffoliGate]


def basis_state(n_tot: int, x: int) -> StateVector:
    """Computational basis state |x> on n_tot qubits."""
    dim = 1 << n_tot
    if not 0 <= x < dim:
        raise ValueError(f"basis index {x} out of range for n_tot={n_tot}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[x] = 1.0
    return StateVector(n_tot, amps)


def uniform_state(n_q: int, ancilla: int | None = None) -> StateVector:
    """Uniform superposition over the n_q-qubit register.

    With ``ancilla`` given (0 or 1), appends one ancilla qubit in that basis
    state as the highest-index qubit, i.e. the superposition occupies the
    basis indices ``ancilla * 2**n_q .. ancilla * 2**n_q + 2**n_q - 1``.
    """
    if n_q < 1:
        raise ValueError(f"n_q must be >= 1, got {n_q}")
    size = 1 << n_q
    reg = np.full(size, 1.0 / np.sqrt(size), dtype=np.complex128)
    if ancilla is None:
        return StateVector(n_q, reg)
    if ancilla not in (0, 1):
        raise ValueError(f"ancilla value must be 0 or 1, got {ancilla}")
    amps = np.zeros(2 * size, dtype=np.complex128)
    amps[ancilla * size : ancilla * size + size] = reg
    return StateVector(n_q + 1, amps)


def _apply_one_qubit(amps: np.ndarray, matrix: np.ndarray, q: int) -> None:
    step = 1 << q
    view = amps.reshape(-1, 2, step)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    view[:, 1, :] = matrix[1, 0] * a0 + matrix[1, 1] * a1


def _apply_controlled_x(amps: np.ndarray, n_tot: int, controls: tuple, target: int) -> None:
    # Reshape so each involved qubit gets its own length-2 axis, then swap
    # the two target slices with every control axis pinned to 1.
    qs = sorted(set(controls) | {target}, reverse=True)
    dims = []
    axis_of = {}
    upper = n_tot
    for q in qs:
        dims.append(1 << (upper - 1 - q))
        axis_of[q] = len(dims)
        dims.append(2)
        upper = q
    dims.append(1 << upper)
    view = amps.reshape(dims)
    sel0 = [slice(None)] * len(dims)
    for c in controls:
        sel0[axis_of[c]] = 1
    sel1 = list(sel0)
    sel0[axis_of[target]] = 0
    sel1[axis_of[target]] = 1
    tmp = view[tuple(sel0)].copy()
    view[tuple(sel0)] = view[tuple(sel1)]
    view[tuple(sel1)] = tmp


def apply_gate_inplace(amps: np.ndarray, n_tot: int, gate: Gate) -> None:
    """Apply ``gate`` to a raw amplitude array in place."""
    for q in gate.qubits:
        if not 0 <= q < n_tot:
            raise ValueError(f"gate qubit {q} out of range for n_tot={n_tot}")
    if isinstance(gate, OneQubitGate):
        _apply_one_qubit(amps, gate.matrix, gate.target)
    elif isinstance(gate, CnotGate):
        _apply_controlled_x(amps, n_tot, (gate.control,), gate.target)
    elif isinstance(gate, ToffoliGate):
        _apply_controlled_x(amps, n_tot, (gate.control_a, gate.control_b), gate.target)
    else:
        raise TypeError(f"unknown gate type {type(gate).__name__}")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return the state after applying one elementary gate."""
    out = state.copy()
    apply_gate_inplace(out.amplitudes, out.n_tot, gate)
    return out


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> with the first argument conjugated."""
    if a.n_tot != b.n_tot:
        raise ValueError("states live on different registers")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
