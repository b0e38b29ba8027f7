"""Quantum-jump unraveling of per-qubit amplitude damping at the gate scale.

Noise enters as discrete ticks interleaved with the compiled gates.  In one
tick every qubit, in index order, either jumps (its excited component is
transferred to the ground state, probability gamma times its excited
population) or evolves under the no-jump Kraus branch; either way the state
is renormalized.  Averaging over many such trajectories reproduces the exact
damping channel.

Randomness contract: trajectory ``alpha`` of a run with master seed ``s``
draws its uniforms from a counter-based stream keyed by (s, alpha), one
number per qubit per tick in (iteration, gate, tick, qubit) order.  Results
are therefore bit-for-bit reproducible for any worker count.
"""
from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .grover import GroverCircuit, ideal_state_series
from .observables import ObservableSeries
from .qstate import StateVector, apply_gate_inplace, uniform_state
from .qstate import CnotGate, OneQubitGate, ToffoliGate

__all__ = [
    "NoiseModel",
    "TrajectoryResult",
    "TrajectoryEnsemble",
    "damping_tick",
    "run_trajectory",
    "run_ensemble",
    "single_trajectory_states",
]

_KRAUS_TOL = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Amplitude damping with per-tick decay probability scale ``gamma``.

    ``no_jump_scale`` overrides the no-jump amplitude factor on excited
    qubits (physical value sqrt(1 - gamma)).  It exists purely as a fault
    injection hook for validation; overriding it breaks Kraus completeness
    and must make the channel comparison fail.
    """

    gamma: float
    no_jump_scale: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must satisfy 0 <= gamma < 1, got {self.gamma}")
        if self.no_jump_scale is not None and not 0.0 <= self.no_jump_scale <= 1.0:
            raise ValueError("no_jump_scale must lie in [0, 1]")

    @property
    def no_jump_factor(self) -> float:
        if self.no_jump_scale is not None:
            return float(self.no_jump_scale)
        return float(np.sqrt(1.0 - self.gamma))

    @property
    def is_physical(self) -> bool:
        return self.kraus_defect() <= _KRAUS_TOL

    def kraus_ops(self) -> tuple:
        keep = np.array([[1.0, 0.0], [0.0, self.no_jump_factor]], dtype=np.complex128)
        decay = np.array([[0.0, np.sqrt(self.gamma)], [0.0, 0.0]], dtype=np.complex128)
        return keep, decay

    def kraus_defect(self) -> float:
        """Max deviation of sum_k E_k^dag E_k from the identity."""
        keep, decay = self.kraus_ops()
        total = keep.conj().T @ keep + decay.conj().T @ decay
        return float(np.max(np.abs(total - np.eye(2))))


def damping_tick(state: StateVector, noise: NoiseModel, rng) -> StateVector:
    """Apply one noise tick to a state, drawing one uniform per qubit.

    Reference implementation in plain numpy; the compiled kernel used by the
    ensemble driver consumes the identical uniform stream and must produce
    the same branches and (up to rounding) the same state.
    """
    amps = state.amplitudes.copy()
    g = noise.gamma
    s = noise.no_jump_factor
    root_g = np.sqrt(g)
    for m in range(state.n_tot):
        view = amps.reshape(-1, 2, 1 << m)
        exc = view[:, 1, :]
        pop = float(np.sum(exc.real * exc.real + exc.imag * exc.imag))
        nrm2 = float(np.sum(amps.real * amps.real + amps.imag * amps.imag))
        u = float(rng.random())
        if u * nrm2 < g * pop:
            view[:, 0, :] = root_g * exc
            view[:, 1, :] = 0.0
        else:
            view[:, 1, :] = s * exc
        amps /= np.linalg.norm(amps)
    return StateVector(state.n_tot, amps)


@dataclass
class TrajectoryResult:
    """Observable record of one trajectory (index 0 is the initial state)."""

    t: np.ndarray
    p_search: np.ndarray
    p_plane: np.ndarray
    fidelity: np.ndarray
    jumps: int


@dataclass
class TrajectoryEnsemble:
    """Trajectory-averaged observables with standard errors of the mean."""

    n_traj: int
    master_seed: int
    tick_mode: str
    series: ObservableSeries
    jumps: np.ndarray
    trajectories: dict | None = None

    @property
    def mean_jumps_per_iteration(self) -> float:
        t_max = int(self.series.t[-1])
        if t_max == 0:
            return 0.0
        return float(self.jumps.mean() / t_max)


def _flatten_gates(gates) -> tuple:
    n = len(gates)
    kinds = np.empty(n, dtype=np.int64)
    qa = np.zeros(n, dtype=np.int64)
    qb = np.zeros(n, dtype=np.int64)
    qc = np.zeros(n, dtype=np.int64)
    mats = np.zeros((n, 2, 2), dtype=np.complex128)
    for i, g in enumerate(gates):
        if isinstance(g, OneQubitGate):
            kinds[i] = _kernel.KIND_1Q
            qa[i] = g.target
            mats[i] = g.matrix
        elif isinstance(g, CnotGate):
            kinds[i] = _kernel.KIND_CNOT
            qa[i] = g.control
            qb[i] = g.target
        elif isinstance(g, ToffoliGate):
            kinds[i] = _kernel.KIND_TOFFOLI
            qa[i] = g.control_a
            qb[i] = g.control_b
            qc[i] = g.target
        else:
            raise TypeError(f"unknown gate type {type(g).__name__}")
    return kinds, qa, qb, qc, mats


def _popcounts(dim: int) -> np.ndarray:
    x = np.arange(dim, dtype=np.int64)
    counts = np.zeros(dim, dtype=np.int64)
    while x.any():
        counts += x & 1
        x >>= 1
    return counts


def _draw_uniforms(master_seed: int, alpha: int, count: int) -> np.ndarray:
    key = np.array([master_seed, alpha], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(count)


def uniforms_per_trajectory(circuit: GroverCircuit, t_max: int, tick_mode: str) -> int:
    ticks = int(circuit.tick_schedule(tick_mode).sum())
    return t_max * ticks * circuit.config.n_tot


# Shared read-only inputs for worker processes; populated before forking so
# children inherit them by copy-on-write instead of pickling.
_CTX: dict = {}


def _run_one(ctx: dict, alpha: int) -> tuple:
    t_max = ctx["t_max"]
    psi = ctx["psi0"].copy()
    uniforms = _draw_uniforms(ctx["master_seed"], alpha, ctx["n_uniform"])
    out_search = np.empty(t_max + 1, dtype=np.float64)
    out_plane = np.empty(t_max + 1, dtype=np.float64)
    out_fid = np.empty(t_max + 1, dtype=np.float64)
    jumps = _kernel.run_trajectory_kernel(
        psi, ctx["kinds"], ctx["qa"], ctx["qb"], ctx["qc"], ctx["mats"],
        ctx["ticks_after"], ctx["gamma"], ctx["njs"], ctx["n_tot"], t_max,
        uniforms, ctx["pctab"], ctx["ideal"], ctx["tau"], ctx["nreg"],
        out_search, out_plane, out_fid,
    )
    return out_search, out_plane, out_fid, int(jumps)


def _worker_span(span: tuple) -> tuple:
    lo, hi = span
    t_max = _CTX["t_max"]
    search = np.empty((hi - lo, t_max + 1), dtype=np.float64)
    plane = np.empty_like(search)
    fid = np.empty_like(search)
    jumps = np.empty(hi - lo, dtype=np.int64)
    for i, alpha in enumerate(range(lo, hi)):
        search[i], plane[i], fid[i], jumps[i] = _run_one(_CTX, alpha)
    return lo, search, plane, fid, jumps


def _build_context(circuit: GroverCircuit, noise: NoiseModel, t_max: int,
                   master_seed: int, tick_mode: str,
                   ideal: np.ndarray | None = None) -> dict:
    cfg = circuit.config
    kinds, qa, qb, qc, mats = _flatten_gates(circuit.gates)
    if ideal is None:
        ideal = ideal_state_series(circuit, t_max)
    psi0 = uniform_state(cfg.n_q, ancilla=0).amplitudes
    return {
        "t_max": int(t_max),
        "master_seed": int(master_seed),
        "kinds": kinds, "qa": qa, "qb": qb, "qc": qc, "mats": mats,
        "ticks_after": circuit.tick_schedule(tick_mode),
        "gamma": float(noise.gamma),
        "njs": float(noise.no_jump_factor),
        "n_tot": cfg.n_tot,
        "tau": cfg.tau,
        "nreg": cfg.size,
        "pctab": _popcounts(1 << cfg.n_tot),
        "psi0": psi0,
        "ideal": ideal,
        "n_uniform": uniforms_per_trajectory(circuit, t_max, tick_mode),
    }


def _warm_kernel() -> None:
    # touch the jit so forked workers inherit compiled code
    psi = np.zeros(4, dtype=np.complex128)
    psi[0] = 1.0
    out = np.empty(2, dtype=np.float64)
    _kernel.run_trajectory_kernel(
        psi,
        np.array([_kernel.KIND_1Q], dtype=np.int64),
        np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64),
        np.zeros(1, dtype=np.int64),
        np.array([[[0, 1], [1, 0]]], dtype=np.complex128),
        np.ones(1, dtype=np.int64), 0.01, float(np.sqrt(0.99)), 2, 1,
        np.full(4, 0.5), np.array([0, 1, 1, 2], dtype=np.int64),
        np.vstack([psi, psi]), 0, 2, out.copy(), out.copy(), out.copy(),
    )


def run_trajectory(circuit: GroverCircuit, noise: NoiseModel, t_max: int,
                   master_seed: int, alpha: int = 0, tick_mode: str = "paper",
                   ideal: np.ndarray | None = None) -> TrajectoryResult:
    """Evolve the single trajectory ``alpha`` of a run with this master seed."""
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    ctx = _build_context(circuit, noise, t_max, master_seed, tick_mode, ideal)
    search, plane, fid, jumps = _run_one(ctx, alpha)
    return TrajectoryResult(np.arange(t_max + 1), search, plane, fid, jumps)


def run_ensemble(circuit: GroverCircuit, noise: NoiseModel, t_max: int,
                 n_traj: int, master_seed: int, tick_mode: str = "paper",
                 workers: int = 1, keep_trajectories: bool = False,
                 ideal: np.ndarray | None = None) -> TrajectoryEnsemble:
    """Average ``n_traj`` trajectories; deterministic in (circuit, noise,
    t_max, n_traj, master_seed, tick_mode), independent of ``workers``."""
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    ctx = _build_context(circuit, noise, t_max, master_seed, tick_mode, ideal)
    search = np.empty((n_traj, t_max + 1), dtype=np.float64)
    plane = np.empty_like(search)
    fid = np.empty_like(search)
    jumps = np.empty(n_traj, dtype=np.int64)
    if workers == 1 or n_traj < 2 * workers:
        for alpha in range(n_traj):
            search[alpha], plane[alpha], fid[alpha], jumps[alpha] = _run_one(ctx, alpha)
    else:
        _warm_kernel()
        global _CTX
        _CTX = ctx
        bounds = np.linspace(0, n_traj, workers + 1).astype(int)
        spans = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        mp = multiprocessing.get_context("fork")
        with mp.Pool(processes=workers) as pool:
            for lo, s, p, f, j in pool.map(_worker_span, spans):
                hi = lo + s.shape[0]
                search[lo:hi] = s
                plane[lo:hi] = p
                fid[lo:hi] = f
                jumps[lo:hi] = j
        _CTX = {}
    if n_traj > 1:
        scale = 1.0 / np.sqrt(n_traj)
        errs = [a.std(axis=0, ddof=1) * scale for a in (search, plane, fid)]
    else:
        errs = [None, None, None]
    series = ObservableSeries(
        t=np.arange(t_max + 1),
        p_search=search.mean(axis=0),
        p_plane=plane.mean(axis=0),
        fidelity=fid.mean(axis=0),
        p_search_err=errs[0],
        p_plane_err=errs[1],
        fidelity_err=errs[2],
        meta={
            "n_q": circuit.config.n_q,
            "tau": circuit.config.tau,
            "gamma": noise.gamma,
            "n_traj": n_traj,
            "t_max": t_max,
            "master_seed": master_seed,
            "tick_mode": tick_mode,
        },
    )
    per_traj = None
    if keep_trajectories:
        per_traj = {"p_search": search, "p_plane": plane, "fidelity": fid}
    return TrajectoryEnsemble(n_traj, master_seed, tick_mode, series, jumps, per_traj)


def single_trajectory_states(circuit: GroverCircuit, noise: NoiseModel,
                             times: tuple, master_seed: int, alpha: int = 0,
                             tick_mode: str = "paper") -> dict:
    """States of one trajectory at the requested iteration counts.

    Runs the plain-numpy path (it keeps full states around); fine for a
    handful of snapshots, not meant for ensemble work.
    """
    wanted = sorted(set(int(t) for t in times))
    if wanted and wanted[0] < 0:
        raise ValueError("snapshot times must be >= 0")
    t_max = wanted[-1] if wanted else 0
    cfg = circuit.config
    ticks_after = circuit.tick_schedule(tick_mode)
    rng = np.random.Generator(
        np.random.Philox(key=np.array([master_seed, alpha], dtype=np.uint64)))
    state = uniform_state(cfg.n_q, ancilla=0)
    out = {}
    if 0 in wanted:
        out[0] = state.copy()
    for t in range(1, t_max + 1):
        for g, n_ticks in zip(circuit.gates, ticks_after):
            apply_gate_inplace(state.amplitudes, cfg.n_tot, g)
            for _ in range(int(n_ticks)):
                state = damping_tick(state, noise, rng)
        state.amplitudes /= np.linalg.norm(state.amplitudes)
        if t in wanted:
            out[t] = state.copy()
    return out
