"""Command-line driver for simulation and analysis runs.

Subcommands: ``ideal`` (noise-free circuit against the closed form),
``trajectories`` (ensemble averages for one or more damping strengths),
``scan`` (decay-rate campaign over register sizes and damping strengths),
``husimi`` (phase-space snapshots of single trajectories), ``validate``
(trajectory engine against the exact channel on small registers).

Options may come from flags or from a JSON config file (``--config``); flags
win.  Every output file starts with provenance comments: package version,
the fully resolved configuration, and the column list.  Runs are
deterministic in the configuration, including the worker count.

Exit codes: 0 on success, 1 when a requested check fails, 2 for bad usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import __version__
from .analysis import extract_c, fit_exponential, fit_peak_decay
from .channel import MAX_TOTAL_QUBITS, exact_series, z_scores
from .grover import (
    GroverConfig,
    build_circuit,
    default_tau,
    half_period,
    ideal_probability,
    ideal_state_series,
)
from .jumps import NoiseModel, run_ensemble, single_trajectory_states
from .observables import register_husimi, searched_probability, write_husimi
from .qstate import StateVector

_MAX_NQ = 19  # state vector and reference series stay in memory

_COMMON_DEFAULTS = {
    "nq": 11,
    "tau": None,
    "nu": None,
    "gamma": None,
    "traj": 400,
    "tmax": None,
    "seed": 1234,
    "tick_mode": "paper",
    "out": ".",
    "workers": 1,
}

_COMMAND_DEFAULTS = {
    "ideal": {},
    "trajectories": {"gamma": [4e-5]},
    "scan": {"gamma": [2e-5, 4e-5, 8e-5], "ntot": [8, 9, 10]},
    "husimi": {"gamma": [4e-5], "time": None, "block": 1},
    "validate": {"gamma": [1e-3], "ntot": [4, 5], "traj": 10000,
                 "tmax": 50, "repeats": 3, "corrupt_no_jump": False},
}

_REPORT_COLUMNS = ("source", "n_tot", "n_q", "tau", "n_u", "Gamma",
                   "n_g_used", "gamma", "gamma_stderr", "C",
                   "window_lo", "window_hi")


class UsageError(ValueError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groversim",
        description="Grover search under per-gate amplitude damping.")
    parser.add_argument("--version", action="version",
                        version=f"groversim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--nq", type=int, help="register qubits (search space 2**nq)")
        sp.add_argument("--tau", type=int, help="searched basis index")
        sp.add_argument("--nu", type=int,
                        help="excited bits of the searched index (picks tau)")
        sp.add_argument("--gamma", type=float, action="append",
                        help="damping strength per tick; repeatable")
        sp.add_argument("--traj", type=int, help="trajectories per ensemble")
        sp.add_argument("--tmax", type=int, help="Grover iterations to simulate")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--tick-mode", dest="tick_mode",
                        choices=("actual", "paper"),
                        help="noise ticks per iteration: one per compiled gate, "
                             "or a 12*n_tot-42 budget")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--config", help="JSON file with option defaults")
        sp.add_argument("--workers", type=int, help="worker processes")

    sp = sub.add_parser("ideal", help="noise-free circuit vs closed form")
    common(sp)

    sp = sub.add_parser("trajectories", help="ensemble averages per damping strength")
    common(sp)

    sp = sub.add_parser("scan", help="decay-rate campaign over sizes and strengths")
    common(sp)
    sp.add_argument("--ntot", type=int, action="append",
                    help="total qubits (register + ancilla); repeatable")

    sp = sub.add_parser("husimi", help="phase-space snapshots of one trajectory")
    common(sp)
    sp.add_argument("--time", type=int, action="append",
                    help="iteration count to snapshot; repeatable")
    sp.add_argument("--block", type=int,
                    help="block size for grid coarse graining on output")

    sp = sub.add_parser("validate", help="trajectory engine vs exact channel")
    common(sp)
    sp.add_argument("--ntot", type=int, action="append",
                    help="total qubits to check (each <= 6); repeatable")
    sp.add_argument("--repeats", type=int, help="independent seeds per size")
    sp.add_argument("--corrupt-no-jump", dest="corrupt_no_jump",
                    action="store_true", default=None,
                    help="fault injection: break the no-jump factor")

    return parser


def _resolve_options(args: argparse.Namespace) -> dict:
    """Merge flags, config file and defaults (in that precedence)."""
    cmd = args.command
    opts = dict(_COMMON_DEFAULTS)
    opts.update(_COMMAND_DEFAULTS[cmd])
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in loaded.items():
            if key not in opts:
                raise UsageError(f"unknown config key {key!r} for command {cmd!r}")
            opts[key] = value
    for key in opts:
        given = getattr(args, key, None)
        if given is not None:
            opts[key] = given
    for key in ("gamma", "ntot", "time"):
        if key in opts and opts[key] is not None and not isinstance(opts[key], list):
            opts[key] = [opts[key]]
    opts["command"] = cmd
    _check_options(opts)
    return opts


def _check_options(opts: dict) -> None:
    if not 2 <= opts["nq"] <= _MAX_NQ:
        raise UsageError(f"nq must be in 2..{_MAX_NQ}, got {opts['nq']}")
    if opts["gamma"] is not None:
        for g in opts["gamma"]:
            if not 0.0 <= float(g) < 1.0:
                raise UsageError(f"gamma must satisfy 0 <= gamma < 1, got {g}")
    if opts["traj"] is not None and opts["traj"] < 1:
        raise UsageError("traj must be >= 1")
    if opts["tmax"] is not None and opts["tmax"] < 1:
        raise UsageError("tmax must be >= 1")
    if opts["workers"] is not None and opts["workers"] < 1:
        raise UsageError("workers must be >= 1")
    if opts["seed"] is not None and opts["seed"] < 0:
        raise UsageError("seed must be >= 0")
    if opts.get("block") is not None and opts["block"] < 1:
        raise UsageError("block must be >= 1")
    if opts.get("repeats") is not None and opts["repeats"] < 1:
        raise UsageError("repeats must be >= 1")


def _resolve_tau(opts: dict, n_q: int) -> int:
    tau = opts.get("tau")
    n_u = opts.get("nu")
    if tau is not None:
        if not 0 <= tau < (1 << n_q):
            raise UsageError(f"tau={tau} out of range for nq={n_q}")
        if n_u is not None and bin(tau).count("1") != n_u:
            raise UsageError(f"tau={tau} has {bin(tau).count('1')} excited bits, "
                             f"but nu={n_u} was requested")
        return tau
    try:
        return default_tau(n_q, n_u)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


_EXECUTION_KEYS = ("command", "out", "workers", "config")


def _meta(opts: dict, **extra) -> dict:
    # record only what determines the emitted data; where it was written,
    # how many workers produced it and which file supplied the options do not
    meta = {k: v for k, v in opts.items()
            if k not in _EXECUTION_KEYS and v is not None}
    meta["command"] = opts["command"]
    meta["version"] = __version__
    meta.update(extra)
    # keep the header json-clean and stable
    clean = {}
    for key, value in sorted(meta.items()):
        if isinstance(value, (np.integer,)):
            value = int(value)
        elif isinstance(value, (np.floating,)):
            value = float(value)
        elif isinstance(value, (list, tuple)):
            value = [float(v) if isinstance(v, (float, np.floating)) else v
                     for v in value]
        clean[key] = value
    return clean


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _write_csv(path: Path, meta: dict, columns, rows) -> None:
    with open(path, "w") as fh:
        fh.write(f"# groversim {__version__}\n")
        fh.write(f"# config: {json.dumps(meta, sort_keys=True)}\n")
        fh.write("# columns: " + ",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {path}")


def _series_rows(series) -> list:
    err0 = np.zeros_like(series.p_search)
    es = series.p_search_err if series.p_search_err is not None else err0
    ep = series.p_plane_err if series.p_plane_err is not None else err0
    ef = series.fidelity_err if series.fidelity_err is not None else err0
    return [
        (int(t), series.p_search[i], es[i], series.p_plane[i], ep[i],
         series.fidelity[i], ef[i])
        for i, t in enumerate(series.t)
    ]


_SERIES_COLUMNS = ("t", "p_search", "p_search_err", "p_plane", "p_plane_err",
                   "fidelity", "fidelity_err")


def _gamma_tag(gamma: float) -> str:
    return f"{gamma:g}".replace("+", "")


def cmd_ideal(opts: dict) -> int:
    n_q = opts["nq"]
    tau = _resolve_tau(opts, n_q)
    config = GroverConfig(n_q, tau)
    circuit = build_circuit(config)
    t_half = half_period(config)
    t_max = opts["tmax"] if opts["tmax"] is not None else int(np.ceil(3 * t_half))
    states = ideal_state_series(circuit, t_max)
    p_circuit = np.array([
        searched_probability(StateVector(config.n_tot, states[t]), config)
        for t in range(t_max + 1)
    ])
    p_exact = np.array([ideal_probability(t, config) for t in range(t_max + 1)])
    dev = float(np.max(np.abs(p_circuit - p_exact)))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta(opts, tau=tau, t_max=t_max, n_gates=circuit.n_gates,
                 n_g_reference=circuit.reference_count)
    _write_csv(out / "ideal.csv", meta, ("t", "p_exact", "p_circuit"),
               [(t, p_exact[t], p_circuit[t]) for t in range(t_max + 1)])
    (out / "circuit.txt").write_text(circuit.dump())
    print(f"wrote {out / 'circuit.txt'}")
    first_peak = int(np.argmax(p_circuit[: int(np.ceil(2 * t_half)) + 1]))
    print(f"[ideal] nq={n_q} tau={tau} gates={circuit.n_gates} "
          f"reference_count={circuit.reference_count}")
    print(f"[ideal] half period {t_half:.4f}; first maximum at t={first_peak} "
          f"with p={p_circuit[first_peak]:.6f}")
    print(f"[ideal] max |circuit - closed form| = {dev:.3e}")
    if dev > 1e-8:
        print("[ideal] FAIL: circuit deviates from the closed form")
        return 1
    print("[ideal] PASS")
    return 0


def cmd_trajectories(opts: dict) -> int:
    n_q = opts["nq"]
    tau = _resolve_tau(opts, n_q)
    config = GroverConfig(n_q, tau)
    circuit = build_circuit(config)
    t_half = half_period(config)
    t_max = opts["tmax"] if opts["tmax"] is not None else int(np.ceil(12 * t_half))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    ideal = ideal_state_series(circuit, t_max)
    for gamma in opts["gamma"]:
        noise = NoiseModel(float(gamma))
        ens = run_ensemble(circuit, noise, t_max, opts["traj"], opts["seed"],
                           tick_mode=opts["tick_mode"], workers=opts["workers"],
                           ideal=ideal)
        meta = _meta(opts, tau=tau, t_max=t_max, gamma_run=float(gamma),
                     n_g_used=circuit.gate_count(opts["tick_mode"]),
                     mean_jumps_per_iteration=ens.mean_jumps_per_iteration)
        path = out / f"trajectories_gamma{_gamma_tag(float(gamma))}.csv"
        _write_csv(path, meta, _SERIES_COLUMNS, _series_rows(ens.series))
        print(f"[trajectories] gamma={gamma:g} mean jumps/iteration="
              f"{ens.mean_jumps_per_iteration:.4f} final plane weight="
              f"{ens.series.p_plane[-1]:.4f}")
    return 0


def _scan_tmax(opts: dict, config: GroverConfig, n_g_used: int, gamma: float) -> int:
    if opts["tmax"] is not None:
        return opts["tmax"]
    t_half = half_period(config)
    if gamma <= 0.0:
        return int(np.ceil(12 * t_half))
    rate_guess = 0.4 * gamma * n_g_used * config.n_tot
    return max(int(np.ceil(2.2 / rate_guess)), int(np.ceil(3.2 * t_half)))


def cmd_scan(opts: dict) -> int:
    sizes = [int(n) for n in opts["ntot"]]
    for n_tot in sizes:
        if not 3 <= n_tot <= _MAX_NQ + 1:
            raise UsageError(f"ntot must be in 3..{_MAX_NQ + 1}, got {n_tot}")
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    plane_fits = []
    alt_fits = []
    for n_tot in sizes:
        n_q = n_tot - 1
        tau = _resolve_tau(opts, n_q)
        config = GroverConfig(n_q, tau)
        circuit = build_circuit(config)
        n_g_used = circuit.gate_count(opts["tick_mode"])
        ideal_cache = {}
        for gamma in opts["gamma"]:
            gamma = float(gamma)
            t_max = _scan_tmax(opts, config, n_g_used, gamma)
            if t_max not in ideal_cache:
                ideal_cache[t_max] = ideal_state_series(circuit, t_max)
            noise = NoiseModel(gamma)
            ens = run_ensemble(circuit, noise, t_max, opts["traj"], opts["seed"],
                               tick_mode=opts["tick_mode"],
                               workers=opts["workers"],
                               keep_trajectories=True,
                               ideal=ideal_cache[t_max])
            s = ens.series
            traces = ens.trajectories
            labels = dict(damping=gamma, n_g_used=n_g_used, n_tot=config.n_tot,
                          tau=tau, n_u=config.n_u)
            fits = [
                fit_exponential(s.t, samples=traces["p_plane"],
                                window=(1, t_max), source="w_4", **labels),
                fit_peak_decay(s.t, s.p_search, samples=traces["p_search"],
                               config=config, damping=gamma, n_g_used=n_g_used),
                fit_exponential(s.t, samples=traces["fidelity"],
                                window=(1, t_max), source="fidelity", **labels),
            ]
            plane_fits.append(fits[0])
            alt_fits.append((fits[0], circuit.gate_count(_other_tick_mode(
                opts["tick_mode"]))))
            for fit in fits:
                rows.append((
                    fit.source, config.n_tot, n_q, tau, config.n_u, gamma,
                    n_g_used, fit.rate, fit.rate_stderr, fit.c_value,
                    fit.window[0], fit.window[1],
                ))
                status = "" if fit.ok else f"  [failed: {fit.reason}]"
                print(f"[scan] n_tot={n_tot} Gamma={gamma:g} {fit.source}: "
                      f"rate={fit.rate:.6g} +- {fit.rate_stderr:.2g} "
                      f"C={fit.c_value:.4f}{status}")
            series_path = out / (f"scan_ntot{n_tot}_"
                                 f"gamma{_gamma_tag(gamma)}.csv")
            meta = _meta(opts, tau=tau, t_max=t_max, gamma_run=gamma,
                         n_g_used=n_g_used, n_tot_run=n_tot)
            _write_csv(series_path, meta, _SERIES_COLUMNS, _series_rows(s))
    _write_csv(out / "fit_report.csv", _meta(opts), _REPORT_COLUMNS, rows)
    summary = extract_c(plane_fits)
    if summary.c_values.size:
        print(f"[scan] w_4 rate constant ({opts['tick_mode']} gate counts): "
              f"mean C={summary.mean:.4f} std={summary.std:.4f} over "
              f"{summary.c_values.size} points "
              f"({len(summary.excluded)} excluded)")
        # the same rates normalized with the other tick mode's gate count,
        # so reports from either mode can be compared directly
        alt_mode = _other_tick_mode(opts["tick_mode"])
        alt_c = np.asarray([fit.rate / (fit.damping * n_alt * fit.n_tot)
                            for fit, n_alt in alt_fits if fit.ok
                            and fit.damping > 0.0])
        if alt_c.size:
            alt_std = alt_c.std(ddof=1) if alt_c.size > 1 else float("nan")
            print(f"[scan] w_4 rate constant ({alt_mode} gate counts): "
                  f"mean C={alt_c.mean():.4f} std={alt_std:.4f} over "
                  f"{alt_c.size} points")
    for fit, why in summary.excluded:
        print(f"[scan] excluded n_tot={fit.n_tot} Gamma={fit.damping:g}: {why}")
    return 0


def _other_tick_mode(mode: str) -> str:
    return "actual" if mode == "paper" else "paper"


def cmd_husimi(opts: dict) -> int:
    n_q = opts["nq"]
    tau = _resolve_tau(opts, n_q)
    config = GroverConfig(n_q, tau)
    circuit = build_circuit(config)
    t_half = half_period(config)
    times = opts["time"]
    if times is None:
        times = [1, int(t_half / 2), int(t_half)]
    times = sorted(set(int(t) for t in times))
    if times and times[0] < 0:
        raise UsageError("snapshot times must be >= 0")
    block = opts["block"]
    if (1 << n_q) % block:
        raise UsageError(f"block={block} must divide the grid size {1 << n_q}")
    gammas = sorted(set([0.0] + [float(g) for g in opts["gamma"]]))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    for gamma in gammas:
        noise = NoiseModel(gamma)
        states = single_trajectory_states(circuit, noise, tuple(times),
                                          opts["seed"], tick_mode=opts["tick_mode"])
        for t in times:
            grid = register_husimi(states[t], config)
            meta = _meta(opts, tau=tau, gamma_run=gamma, snapshot_t=t)
            path = out / f"husimi_t{t}_gamma{_gamma_tag(gamma)}.txt"
            write_husimi(grid, path,
                         header_lines=(f"groversim {__version__}",
                                       f"config: {json.dumps(meta, sort_keys=True)}"),
                         block=block)
            col = grid.values[:, tau].sum() / grid.values.sum()
            print(f"wrote {path}")
            print(f"[husimi] gamma={gamma:g} t={t}: searched-column mass "
                  f"fraction {col:.4f}")
    return 0


def cmd_validate(opts: dict) -> int:
    sizes = [int(n) for n in opts["ntot"]]
    for n_tot in sizes:
        if not 3 <= n_tot <= MAX_TOTAL_QUBITS:
            raise UsageError(
                f"validate needs 3 <= ntot <= {MAX_TOTAL_QUBITS}, got {n_tot}")
    gamma = float(opts["gamma"][0])
    t_max = opts["tmax"]
    repeats = opts["repeats"]
    corrupt = bool(opts["corrupt_no_jump"])
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    n_compare = len(sizes) * repeats * 3 * t_max
    z_limit = NormalDist().inv_cdf(1.0 - 0.01 / (2 * n_compare))
    mc_noise = NoiseModel(gamma, no_jump_scale=(1.0 - gamma) if corrupt else None)
    rows = []
    worst = 0.0
    n_within3 = 0
    for n_tot in sizes:
        n_q = n_tot - 1
        tau = _resolve_tau(opts, n_q)
        config = GroverConfig(n_q, tau)
        circuit = build_circuit(config)
        exact = exact_series(circuit, NoiseModel(gamma), t_max,
                             tick_mode=opts["tick_mode"])
        for r in range(repeats):
            seed = opts["seed"] + r
            ens = run_ensemble(circuit, mc_noise, t_max, opts["traj"], seed,
                               tick_mode=opts["tick_mode"],
                               workers=opts["workers"])
            zs = z_scores(ens.series, exact)
            size_worst = 0.0
            for name, zvals in zs.items():
                mc_mean = getattr(ens.series, name)
                mc_err = getattr(ens.series, name + "_err")
                ref = getattr(exact, name)
                for i, z in enumerate(zvals):
                    t = i + 1
                    rows.append((n_tot, seed, name, t, mc_mean[t], mc_err[t],
                                 ref[t], z))
                    az = abs(float(z))
                    worst = max(worst, az)
                    size_worst = max(size_worst, az)
                    n_within3 += az <= 3.0
            print(f"[validate] n_tot={n_tot} seed={seed}: max |z| = "
                  f"{size_worst:.2f} over {3 * t_max} points")
    frac3 = n_within3 / n_compare
    meta = _meta(opts, gamma_run=gamma, z_limit=z_limit, corrupt=corrupt)
    _write_csv(out / "validate_report.csv", meta,
               ("n_tot", "seed", "observable", "t", "mc", "mc_err", "exact", "z"),
               rows)
    print(f"[validate] {n_compare} comparisons; max |z| = {worst:.2f}; "
          f"fraction within 3 sigma = {frac3:.4f}; "
          f"adjusted limit = {z_limit:.2f}")
    if worst > z_limit or frac3 < 0.95:
        print("[validate] FAIL: ensemble disagrees with the exact channel")
        return 1
    print("[validate] PASS")
    return 0


_COMMANDS = {
    "ideal": cmd_ideal,
    "trajectories": cmd_trajectories,
    "scan": cmd_scan,
    "husimi": cmd_husimi,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve_options(args)
        return _COMMANDS[args.command](opts)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
