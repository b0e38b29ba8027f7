"""Trajectory simulation of Grover search under per-gate amplitude damping.

The package splits into: state vectors and elementary gates (qstate), the
compiled Grover iteration and its exact two-level reference (grover), the
quantum-jump trajectory engine (jumps), an exact density-matrix channel for
validation (channel), observables including phase-space grids (observables),
decay-rate fitting (analysis), and a command-line driver (cli).
"""

__version__ = "0.1.0"

from .qstate import (
    StateVector,
    OneQubitGate,
    CnotGate,
    ToffoliGate,
    basis_state,
    uniform_state,
    apply_gate,
    inner_product,
    HADAMARD,
    PAULI_X,
)
from .grover import (
    GroverConfig,
    GroverCircuit,
    build_circuit,
    apply_exact_grover,
    ideal_probability,
    complement_state,
    grover_frequency,
    half_period,
    ideal_state_series,
    reference_gate_count,
    default_tau,
)
from .jumps import (
    NoiseModel,
    TrajectoryResult,
    TrajectoryEnsemble,
    damping_tick,
    run_trajectory,
    run_ensemble,
    single_trajectory_states,
)
from .channel import (
    DensityMatrix,
    state_density,
    evolve_exact,
    exact_series,
    z_scores,
    MAX_TOTAL_QUBITS,
)
from .observables import (
    ObservableSeries,
    searched_probability,
    plane_weight,
    state_fidelity,
    HusimiGrid,
    husimi_grid,
    register_husimi,
    write_husimi,
)
from .analysis import (
    DecayFit,
    fit_exponential,
    peak_times,
    fit_peak_decay,
    CSummary,
    extract_c,
)

__all__ = [
    "__version__",
    "StateVector", "OneQubitGate", "CnotGate", "ToffoliGate",
    "basis_state", "uniform_state", "apply_gate", "inner_product",
    "HADAMARD", "PAULI_X",
    "GroverConfig", "GroverCircuit", "build_circuit", "apply_exact_grover",
    "ideal_probability", "complement_state", "grover_frequency",
    "half_period", "ideal_state_series", "reference_gate_count", "default_tau",
    "NoiseModel", "TrajectoryResult", "TrajectoryEnsemble", "damping_tick",
    "run_trajectory", "run_ensemble", "single_trajectory_states",
    "DensityMatrix", "state_density", "evolve_exact", "exact_series",
    "z_scores", "MAX_TOTAL_QUBITS",
    "ObservableSeries", "searched_probability", "plane_weight",
    "state_fidelity", "HusimiGrid", "husimi_grid", "register_husimi",
    "write_husimi",
    "DecayFit", "fit_exponential", "peak_times", "fit_peak_decay",
    "CSummary", "extract_c",
]
