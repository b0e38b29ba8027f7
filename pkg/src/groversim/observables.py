"""Observables of the noisy search: success probability, the weight of the
two-dimensional oscillation plane, fidelity against the noise-free circuit,
and a coarse-grained phase-space (Husimi) picture of the register.

The oscillation plane is spanned by the searched state and the uniform
superposition of all other indices.  On the full register (with ancilla) the
reported weight is the projection onto that plane tensored with either
ancilla branch, so it starts at 1 and only decoherence moves it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grover import GroverConfig
from .qstate import StateVector

__all__ = [
    "ObservableSeries",
    "searched_probability",
    "plane_weight",
    "state_fidelity",
    "HusimiGrid",
    "husimi_grid",
    "register_husimi",
    "write_husimi",
]


@dataclass
class ObservableSeries:
    """Per-iteration observable traces, optionally with standard errors."""

    t: np.ndarray
    p_search: np.ndarray
    p_plane: np.ndarray
    fidelity: np.ndarray
    p_search_err: np.ndarray | None = None
    p_plane_err: np.ndarray | None = None
    fidelity_err: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in ("p_search", "p_plane", "fidelity",
                     "p_search_err", "p_plane_err", "fidelity_err"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} has length {len(arr)}, expected {n}")


def _register_halves(state: StateVector, config: GroverConfig) -> tuple:
    if state.n_tot == config.n_q:
        return (state.amplitudes,)
    if state.n_tot == config.n_tot:
        n = config.size
        return (state.amplitudes[:n], state.amplitudes[n:])
    raise ValueError(
        f"state has {state.n_tot} qubits; expected {config.n_q} "
        f"(bare register) or {config.n_tot} (with ancilla)"
    )


def searched_probability(state: StateVector, config: GroverConfig) -> float:
    """Probability of reading the searched index off the register."""
    total = 0.0
    for half in _register_halves(state, config):
        z = half[config.tau]
        total += z.real * z.real + z.imag * z.imag
    return total


def plane_weight(state: StateVector, config: GroverConfig) -> float:
    """Weight inside the searched/complement oscillation plane.

    Sums |<tau|psi>|^2 + |<eta|psi>|^2 over ancilla branches, where eta is the
    uniform superposition of all non-searched indices.
    """
    total = 0.0
    for half in _register_halves(state, config):
        z = half[config.tau]
        total += z.real * z.real + z.imag * z.imag
        s = half.sum() - z
        total += (s.real * s.real + s.imag * s.imag) / (config.size - 1)
    return total


def state_fidelity(state: StateVector, reference: StateVector) -> float:
    """|<reference|state>|^2."""
    if state.n_tot != reference.n_tot:
        raise ValueError("state and reference live on different registers")
    z = np.vdot(reference.amplitudes, state.amplitudes)
    return float(z.real * z.real + z.imag * z.imag)


@dataclass
class HusimiGrid:
    """Husimi amplitudes on the D x D discrete position/momentum torus.

    values[p0, x0] is the squared overlap with the coherent window centered
    at (x0, p0); the mean over the grid of values equals 1/D for a normalized
    state (so values.sum() == D).
    """

    size: int
    sigma: float
    values: np.ndarray

    def total(self) -> float:
        return float(self.values.sum())


def husimi_grid(state: StateVector, sigma: float | None = None) -> HusimiGrid:
    """Husimi function of a register state over the full discrete torus.

    The coherent window at (x0, p0) is a periodized Gaussian of width sigma
    centered at x0, modulated by momentum p0; sigma defaults to sqrt(D/(4 pi)),
    the symmetric choice with equal position and momentum spread.  All D
    momentum rows for one window center come from a single FFT.
    """
    amps = state.amplitudes
    d = amps.shape[0]
    if sigma is None:
        sigma = float(np.sqrt(d / (4.0 * np.pi)))
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    dist = np.minimum(np.arange(d), d - np.arange(d)).astype(np.float64)
    window = np.exp(-(dist * dist) / (4.0 * sigma * sigma))
    window /= np.linalg.norm(window)
    values = np.empty((d, d), dtype=np.float64)
    for x0 in range(d):
        f = np.fft.fft(np.roll(window, x0) * amps)
        values[:, x0] = f.real * f.real + f.imag * f.imag
    return HusimiGrid(d, sigma, values)


def register_husimi(state: StateVector, config: GroverConfig,
                    sigma: float | None = None) -> HusimiGrid:
    """Husimi function of the register part of a (possibly full) state.

    For a state carrying the ancilla this is the phase-space picture of the
    reduced register: the grids of the two ancilla branches simply add.  The
    per-branch amplitudes enter unnormalized, so the total still sums to the
    grid size.
    """
    halves = _register_halves(state, config)
    grid = husimi_grid(StateVector(config.n_q, halves[0].copy()), sigma)
    for half in halves[1:]:
        more = husimi_grid(StateVector(config.n_q, half.copy()), grid.sigma)
        grid.values += more.values
    return grid


def write_husimi(grid: HusimiGrid, path, header_lines: tuple = (), block: int = 1) -> None:
    """Write a grid as a plain-text matrix, one momentum row per line.

    block > 1 coarse-grains by block averaging (block must divide the grid
    size); comment lines start with '#'.
    """
    values = grid.values
    d = grid.size
    if block < 1 or d % block:
        raise ValueError(f"block={block} must divide grid size {d}")
    if block > 1:
        values = values.reshape(d // block, block, d // block, block).mean(axis=(1, 3))
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# husimi size={d} sigma={grid.sigma:.12g} block={block}\n")
        for row in values:
            fh.write(" ".join(f"{v:.8e}" for v in row))
            fh.write("\n")
