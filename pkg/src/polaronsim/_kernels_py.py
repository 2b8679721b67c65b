"""Pure numpy implementation of the statevector kernels.

Same contract as the compiled ``_kernels`` module. ``apply_ops`` also
accepts a 2D ``(batch, dim)`` array, which ``run_trajectories`` uses to
advance all noisy shots together.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_BATCH = 2048


@lru_cache(maxsize=4096)
def _pair_indices(dim: int, target: int, control: int, cval: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(dim)
    sel = (idx >> target) & 1 == 0
    if control >= 0:
        sel &= (idx >> control) & 1 == cval
    i0 = idx[sel]
    return i0, i0 | (1 << target)


@lru_cache(maxsize=4096)
def _parity_indices(dim: int, mask: int, control: int, cval: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(dim)
    if control >= 0:
        idx = idx[(idx >> control) & 1 == cval]
    return idx, _parity(idx & mask)


def _parity(bits: np.ndarray) -> np.ndarray:
    bits = bits.copy()
    par = np.zeros_like(bits)
    while np.any(bits):
        par ^= bits & 1
        bits >>= 1
    return par.astype(bool)


def _apply_one(s: np.ndarray, op: np.ndarray, p: np.ndarray) -> None:
    dim = s.shape[1]
    kind, target, control, cval, mask = (int(v) for v in op)
    if kind == 0:
        i0, i1 = _pair_indices(dim, target, control, cval)
        if p[1] == 0 and p[2] == 0:
            s[:, i0] *= p[0]
            s[:, i1] *= p[3]
        else:
            a = s[:, i0]
            b = s[:, i1]
            s[:, i0] = p[0] * a + p[1] * b
            s[:, i1] = p[2] * a + p[3] * b
    else:
        idx, odd = _parity_indices(dim, mask, control, cval)
        s[:, idx] *= np.where(odd, p[1], p[0])


def apply_ops(state: np.ndarray, ops: np.ndarray, params: np.ndarray) -> None:
    s = state.reshape(-1, state.shape[-1])
    for g in range(ops.shape[0]):
        _apply_one(s, ops[g], params[g])


def _apply_pauli(row: np.ndarray, x: int, z: int) -> np.ndarray:
    idx = np.arange(row.shape[0])
    if z:
        row = np.where(_parity(idx & z), -row, row)
    if x:
        row = row[idx ^ x]
    return row


def run_trajectories(initial, ops, params, prefix, offsets, ev_op, ev_x, ev_z, qubit, uniforms):
    del prefix  # whole batches restart from the initial state
    n_shots = offsets.shape[0] - 1
    out = np.zeros(n_shots, dtype=np.uint8)
    dim = initial.shape[0]
    qsel = (np.arange(dim) >> qubit) & 1 == 1
    shot_of_event = np.repeat(np.arange(n_shots), np.diff(offsets))
    for lo in range(0, n_shots, _BATCH):
        hi = min(lo + _BATCH, n_shots)
        states = np.tile(np.asarray(initial, dtype=complex), (hi - lo, 1))
        ev = slice(offsets[lo], offsets[hi])
        ev_rows = shot_of_event[ev] - lo
        ev_ops = np.asarray(ev_op[ev])
        order = np.argsort(ev_ops, kind="stable")
        ev_rows, ev_ops = ev_rows[order], ev_ops[order]
        xs, zs = np.asarray(ev_x[ev])[order], np.asarray(ev_z[ev])[order]
        k = 0
        for g in range(ops.shape[0]):
            _apply_one(states, ops[g], params[g])
            while k < len(ev_ops) and ev_ops[k] == g:
                r = ev_rows[k]
                states[r] = _apply_pauli(states[r], int(xs[k]), int(zs[k]))
                k += 1
        p1 = np.sum(np.abs(states[:, qsel]) ** 2, axis=1)
        out[lo:hi] = np.asarray(uniforms[lo:hi]) < p1
    return out
