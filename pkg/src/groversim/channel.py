"""Exact density-matrix evolution of the gate-plus-damping dynamics.

Brute force over the full density matrix, so usable only for small registers
(n_tot <= 6).  This path shares no evolution code with the trajectory engine:
gates act by conjugation and the damping channel is applied as the exact
Kraus sum, always with the physical no-jump amplitude sqrt(1 - gamma).  The
trajectory ensemble average must agree with it to within statistical error;
that comparison is the main correctness check of the jump unraveling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grover import GroverCircuit, GroverConfig, ideal_state_series
from .jumps import NoiseModel
from .observables import ObservableSeries
from .qstate import StateVector, apply_gate_inplace, uniform_state
from .qstate import CnotGate, OneQubitGate, ToffoliGate

__all__ = [
    "MAX_TOTAL_QUBITS",
    "DensityMatrix",
    "state_density",
    "evolve_exact",
    "exact_series",
    "z_scores",
]

MAX_TOTAL_QUBITS = 6
_HERM_TOL = 1e-9
_TRACE_TOL = 1e-8


@dataclass
class DensityMatrix:
    """Density matrix of an n_tot-qubit register (n_tot <= 6)."""

    n_tot: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.n_tot > MAX_TOTAL_QUBITS:
            raise ValueError(
                f"exact channel is limited to n_tot <= {MAX_TOTAL_QUBITS}, "
                f"got {self.n_tot}"
            )
        mat = np.asarray(self.matrix, dtype=np.complex128)
        dim = 1 << self.n_tot
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape}, expected ({dim}, {dim})")
        if np.max(np.abs(mat - mat.conj().T)) > _HERM_TOL:
            raise ValueError("density matrix is not hermitian")
        if abs(np.trace(mat).real - 1.0) > _TRACE_TOL:
            raise ValueError(f"trace is {np.trace(mat).real}, expected 1")
        self.matrix = mat

    @property
    def dim(self) -> int:
        return 1 << self.n_tot

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def expectation(self, op: np.ndarray) -> float:
        """Tr(rho * op) for a hermitian operator."""
        return float(np.trace(self.matrix @ op).real)

    def vector_expectation(self, vec: np.ndarray) -> float:
        """<vec|rho|vec>."""
        return float(np.vdot(vec, self.matrix @ vec).real)


def state_density(state: StateVector) -> DensityMatrix:
    amps = state.amplitudes
    return DensityMatrix(state.n_tot, np.outer(amps, amps.conj()))


def _apply_gate_rho(rho: np.ndarray, n_tot: int, gate) -> None:
    # Row-major flattening turns rho into a 2*n_tot-qubit vector with row
    # qubit q at flat position q + n_tot; U rho U^dag is then U on the row
    # side followed by conj(U) on the column side.
    flat = rho.reshape(-1)
    if isinstance(gate, OneQubitGate):
        left = OneQubitGate(gate.matrix, gate.target + n_tot, label=gate.label)
        right = OneQubitGate(gate.matrix.conj(), gate.target, label=gate.label)
    elif isinstance(gate, CnotGate):
        left = CnotGate(gate.control + n_tot, gate.target + n_tot)
        right = gate
    elif isinstance(gate, ToffoliGate):
        left = ToffoliGate(gate.control_a + n_tot, gate.control_b + n_tot,
                           gate.target + n_tot)
        right = gate
    else:
        raise TypeError(f"unknown gate type {type(gate).__name__}")
    apply_gate_inplace(flat, 2 * n_tot, left)
    apply_gate_inplace(flat, 2 * n_tot, right)


def _damp_qubit(rho: np.ndarray, n_tot: int, m: int, gamma: float) -> None:
    # Exact Kraus sum for amplitude damping of qubit m.
    dim = 1 << n_tot
    step = 1 << m
    high = dim // (2 * step)
    s = np.sqrt(1.0 - gamma)
    v = rho.reshape(high, 2, step, high, 2, step)
    r11 = v[:, 1, :, :, 1, :].copy()
    v[:, 0, :, :, 1, :] *= s
    v[:, 1, :, :, 0, :] *= s
    v[:, 1, :, :, 1, :] *= 1.0 - gamma
    v[:, 0, :, :, 0, :] += gamma * r11


def evolve_exact(circuit: GroverCircuit, noise: NoiseModel, t_max: int,
                 tick_mode: str = "paper",
                 initial: StateVector | None = None) -> list:
    """Density matrices after 0..t_max noisy Grover iterations.

    ``initial`` replaces the standard start (uniform register, ancilla |0>),
    e.g. to follow the damping of a chosen basis state.
    """
    cfg = circuit.config
    if cfg.n_tot > MAX_TOTAL_QUBITS:
        raise ValueError(
            f"exact channel is limited to n_tot <= {MAX_TOTAL_QUBITS}, "
            f"got n_tot={cfg.n_tot}"
        )
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    if initial is None:
        initial = uniform_state(cfg.n_q, ancilla=0)
    elif initial.n_tot != cfg.n_tot:
        raise ValueError("initial state size does not match the circuit")
    ticks_after = circuit.tick_schedule(tick_mode)
    rho = state_density(initial).matrix.copy()
    out = [DensityMatrix(cfg.n_tot, rho.copy())]
    for _ in range(t_max):
        for g, n_ticks in zip(circuit.gates, ticks_after):
            _apply_gate_rho(rho, cfg.n_tot, g)
            for _ in range(int(n_ticks)):
                for m in range(cfg.n_tot):
                    _damp_qubit(rho, cfg.n_tot, m, noise.gamma)
        out.append(DensityMatrix(cfg.n_tot, rho.copy()))
    return out


def exact_series(circuit: GroverCircuit, noise: NoiseModel, t_max: int,
                 tick_mode: str = "paper") -> ObservableSeries:
    """Exact-channel observable traces matching the ensemble layout."""
    cfg = circuit.config
    rhos = evolve_exact(circuit, noise, t_max, tick_mode)
    ideal = ideal_state_series(circuit, t_max)
    n = cfg.size
    eta = np.full(n, 1.0 / np.sqrt(n - 1), dtype=np.complex128)
    eta[cfg.tau] = 0.0
    p_search = np.empty(t_max + 1)
    p_plane = np.empty(t_max + 1)
    fidelity = np.empty(t_max + 1)
    for t, dm in enumerate(rhos):
        rho = dm.matrix
        ws = 0.0
        w4 = 0.0
        for h in range(2):
            block = rho[h * n:(h + 1) * n, h * n:(h + 1) * n]
            ws += block[cfg.tau, cfg.tau].real
            w4 += block[cfg.tau, cfg.tau].real
            w4 += float(np.vdot(eta, block @ eta).real)
        p_search[t] = ws
        p_plane[t] = w4
        fidelity[t] = dm.vector_expectation(ideal[t])
    return ObservableSeries(
        t=np.arange(t_max + 1),
        p_search=p_search,
        p_plane=p_plane,
        fidelity=fidelity,
        meta={
            "n_q": cfg.n_q,
            "tau": cfg.tau,
            "gamma": noise.gamma,
            "t_max": t_max,
            "tick_mode": tick_mode,
            "exact": True,
        },
    )


def z_scores(mc: ObservableSeries, exact: ObservableSeries) -> dict:
    """Per-observable z-scores of ensemble means against the exact channel.

    Compares t >= 1 (the initial point is identical by construction).  A zero
    standard error with a nonzero difference yields an infinite z.
    """
    if len(mc.t) != len(exact.t):
        raise ValueError("series lengths differ")
    out = {}
    pairs = (
        ("p_search", mc.p_search, mc.p_search_err, exact.p_search),
        ("p_plane", mc.p_plane, mc.p_plane_err, exact.p_plane),
        ("fidelity", mc.fidelity, mc.fidelity_err, exact.fidelity),
    )
    for name, mean, err, ref in pairs:
        if err is None:
            raise ValueError("ensemble series lacks standard errors")
        diff = mean[1:] - ref[1:]
        sig = err[1:]
        z = np.empty_like(diff)
        zero = sig == 0.0
        z[~zero] = diff[~zero] / sig[~zero]
        z[zero] = np.where(np.abs(diff[zero]) < 1e-12, 0.0, np.inf)
        out[name] = z
    return out
