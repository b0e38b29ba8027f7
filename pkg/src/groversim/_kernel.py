"""Numba inner loops for quantum-jump trajectories.

Everything here works on flat arrays: the circuit arrives as parallel arrays
(kind, qubit indices, 2x2 matrices), randomness as a pre-drawn uniform stream
consumed in (iteration, gate, tick, qubit) order, one number per qubit per
tick regardless of outcome.  The jump probabilities match the qubit-sequential
channel definition exactly; the deferred-diagonal fast path below only changes
the order of floating-point operations, not the branching distribution.
"""
from __future__ import annotations

import numpy as np
from numba import njit

KIND_1Q = 0
KIND_CNOT = 1
KIND_TOFFOLI = 2


@njit(cache=True)
def _apply_1q(psi, u00, u01, u10, u11, q):
    step = 1 << q
    dim = psi.shape[0]
    for base in range(0, dim, 2 * step):
        for off in range(step):
            i0 = base + off
            i1 = i0 + step
            a = psi[i0]
            b = psi[i1]
            psi[i0] = u00 * a + u01 * b
            psi[i1] = u10 * a + u11 * b


@njit(cache=True)
def _apply_cx(psi, c, t):
    dim = psi.shape[0]
    st = 1 << t
    for i in range(dim):
        if ((i >> c) & 1) == 1 and ((i >> t) & 1) == 0:
            j = i | st
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def _apply_ccx(psi, c1, c2, t):
    dim = psi.shape[0]
    st = 1 << t
    for i in range(dim):
        if ((i >> c1) & 1) == 1 and ((i >> c2) & 1) == 1 and ((i >> t) & 1) == 0:
            j = i | st
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def _damping_tick(psi, prob, gamma, n_tot, uniforms, u_idx, pctab, wtab, stab):
    """One noise tick: every qubit takes the jump or no-jump branch once.

    While no jump has occurred the no-jump factors are all diagonal, so they
    are deferred: populations seen by qubit m carry the pending factors of
    qubits below m through the weight table (wtab[k] = factor^2 per excited
    lower bit), and one combined pass applies them at the end.  pctab[x] is
    the population count of x; in the strided loops the low bits of an index
    equal `off`, so pctab[off] counts the pending lower-qubit excitations.
    Returns (next uniform index, jumps taken).
    """
    dim = psi.shape[0]
    nu = 0.0
    for x in range(dim):
        z = psi[x]
        p = z.real * z.real + z.imag * z.imag
        prob[x] = p
        nu += p
    jumps = 0
    sq = np.sqrt(gamma)
    jumped = False
    m = 0
    while m < n_tot:
        step = 1 << m
        s1 = 0.0
        for base in range(0, dim, 2 * step):
            for off in range(step):
                s1 += prob[base + step + off] * wtab[pctab[off]]
        u = uniforms[u_idx]
        u_idx += 1
        if u * nu < gamma * s1:
            # jump on qubit m: materialize the pending factors below m,
            # then send |1> to |0> on m and drop the old ground part
            mask = step - 1
            for x in range(dim):
                psi[x] = psi[x] * stab[pctab[x & mask]]
            for base in range(0, dim, 2 * step):
                for off in range(step):
                    i0 = base + off
                    psi[i0] = sq * psi[i0 + step]
                    psi[i0 + step] = 0.0
            nu = gamma * s1
            jumps += 1
            m += 1
            jumped = True
            break
        nu -= (1.0 - wtab[1]) * s1
        m += 1
    if not jumped:
        # no jump anywhere: single deferred pass plus renormalization
        inv = 1.0 / np.sqrt(nu)
        for x in range(dim):
            psi[x] = psi[x] * (stab[pctab[x]] * inv)
        return u_idx, jumps
    # a jump materialized the state; finish remaining qubits directly
    njs = stab[1]
    for m2 in range(m, n_tot):
        step = 1 << m2
        s1 = 0.0
        for base in range(0, dim, 2 * step):
            for off in range(step):
                z = psi[base + step + off]
                s1 += z.real * z.real + z.imag * z.imag
        u = uniforms[u_idx]
        u_idx += 1
        if u * nu < gamma * s1:
            for base in range(0, dim, 2 * step):
                for off in range(step):
                    i0 = base + off
                    psi[i0] = sq * psi[i0 + step]
                    psi[i0 + step] = 0.0
            nu = gamma * s1
            jumps += 1
        else:
            for base in range(0, dim, 2 * step):
                for off in range(step):
                    i1 = base + step + off
                    psi[i1] = psi[i1] * njs
            nu -= (1.0 - wtab[1]) * s1
    inv = 1.0 / np.sqrt(nu)
    for x in range(dim):
        psi[x] = psi[x] * inv
    return u_idx, jumps


@njit(cache=True)
def _record(psi, ideal, t, tau, nreg, out_search, out_plane, out_fid):
    ws = 0.0
    w4 = 0.0
    for h in range(2):
        base = h * nreg
        z = psi[base + tau]
        zz = z.real * z.real + z.imag * z.imag
        ws += zz
        sr = 0.0
        si = 0.0
        for x in range(nreg):
            zv = psi[base + x]
            sr += zv.real
            si += zv.imag
        sr -= z.real
        si -= z.imag
        w4 += zz + (sr * sr + si * si) / (nreg - 1)
    fr = 0.0
    fi = 0.0
    dim = psi.shape[0]
    for x in range(dim):
        a = ideal[t, x]
        b = psi[x]
        fr += a.real * b.real + a.imag * b.imag
        fi += a.real * b.imag - a.imag * b.real
    out_search[t] = ws
    out_plane[t] = w4
    out_fid[t] = fr * fr + fi * fi


@njit(cache=True)
def run_trajectory_kernel(psi, kinds, qa, qb, qc, mats, ticks_after, gamma, njs,
                          n_tot, t_max, uniforms, pctab, ideal, tau, nreg,
                          out_search, out_plane, out_fid):
    """Evolve one trajectory in place, recording observables per iteration.

    `njs` is the no-jump amplitude factor on excited qubits; physically it is
    sqrt(1 - gamma) and anything else deliberately breaks the channel (used
    as a negative control).  Returns the number of jumps taken.
    """
    dim = psi.shape[0]
    prob = np.empty(dim, dtype=np.float64)
    wtab = np.empty(n_tot + 1, dtype=np.float64)
    stab = np.empty(n_tot + 1, dtype=np.float64)
    wtab[0] = 1.0
    stab[0] = 1.0
    for j in range(1, n_tot + 1):
        wtab[j] = wtab[j - 1] * (njs * njs)
        stab[j] = stab[j - 1] * njs
    n_g = kinds.shape[0]
    u_idx = 0
    jumps = 0
    _record(psi, ideal, 0, tau, nreg, out_search, out_plane, out_fid)
    for t in range(1, t_max + 1):
        for g in range(n_g):
            k = kinds[g]
            if k == KIND_1Q:
                _apply_1q(psi, mats[g, 0, 0], mats[g, 0, 1],
                          mats[g, 1, 0], mats[g, 1, 1], qa[g])
            elif k == KIND_CNOT:
                _apply_cx(psi, qa[g], qb[g])
            else:
                _apply_ccx(psi, qa[g], qb[g], qc[g])
            for _ in range(ticks_after[g]):
                u_idx, nj = _damping_tick(psi, prob, gamma, n_tot, uniforms,
                                          u_idx, pctab, wtab, stab)
                jumps += nj
        nrm2 = 0.0
        for x in range(dim):
            z = psi[x]
            nrm2 += z.real * z.real + z.imag * z.imag
        inv = 1.0 / np.sqrt(nrm2)
        for x in range(dim):
            psi[x] = psi[x] * inv
        _record(psi, ideal, t, tau, nreg, out_search, out_plane, out_fid)
    return jumps
