# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels.

Op-stream layout is documented in ``polaronsim.circuit.lower``. Both entry
points mirror ``polaronsim._kernels_py`` exactly.
"""

import numpy as np
from libc.string cimport memcpy

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

ctypedef double complex cplx
ctypedef unsigned long long u64


cdef inline void _apply_op(cplx* s, Py_ssize_t dim, long long kind, long long target,
                           long long control, long long cval, u64 mask,
                           cplx p0, cplx p1, cplx p2, cplx p3) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef u64 ui, tbit, cbit = 0, want = 0
    cdef cplx a, b
    if control >= 0:
        cbit = (<u64>1) << control
        if cval:
            want = cbit
    if kind == 0:
        tbit = (<u64>1) << target
        if p1 == 0 and p2 == 0:
            for i in range(dim):
                ui = <u64>i
                if (ui & cbit) != want:
                    continue
                if ui & tbit:
                    s[i] = s[i] * p3
                else:
                    s[i] = s[i] * p0
        else:
            for i in range(dim):
                ui = <u64>i
                if (ui & tbit) or (ui & cbit) != want:
                    continue
                j = <Py_ssize_t>(ui | tbit)
                a = s[i]
                b = s[j]
                s[i] = p0 * a + p1 * b
                s[j] = p2 * a + p3 * b
    else:
        for i in range(dim):
            ui = <u64>i
            if (ui & cbit) != want:
                continue
            if __builtin_popcountll(ui & mask) & 1:
                s[i] = s[i] * p1
            else:
                s[i] = s[i] * p0


cdef inline void _apply_range(cplx* s, Py_ssize_t dim, const long long[:, ::1] ops,
                              const cplx[:, ::1] params, Py_ssize_t start, Py_ssize_t stop) noexcept nogil:
    cdef Py_ssize_t g
    for g in range(start, stop):
        _apply_op(s, dim, ops[g, 0], ops[g, 1], ops[g, 2], ops[g, 3], <u64>ops[g, 4],
                  params[g, 0], params[g, 1], params[g, 2], params[g, 3])


cdef inline void _apply_pauli(cplx* s, Py_ssize_t dim, u64 x, u64 z) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef cplx tmp
    if z:
        for i in range(dim):
            if __builtin_popcountll((<u64>i) & z) & 1:
                s[i] = -s[i]
    if x:
        for i in range(dim):
            j = <Py_ssize_t>((<u64>i) ^ x)
            if j > i:
                tmp = s[i]
                s[i] = s[j]
                s[j] = tmp


def apply_ops(cplx[::1] state, const long long[:, ::1] ops, const cplx[:, ::1] params):
    """Apply every op in order to ``state`` in place."""
    cdef Py_ssize_t dim = state.shape[0]
    if ops.shape[0] == 0:
        return
    with nogil:
        _apply_range(&state[0], dim, ops, params, 0, ops.shape[0])


def run_trajectories(const cplx[::1] initial, const long long[:, ::1] ops, const cplx[:, ::1] params,
                     prefix, const long long[::1] offsets, const long long[::1] ev_op,
                     const u64[::1] ev_x, const u64[::1] ev_z, int qubit, const double[::1] uniforms):
    """Measure ``qubit`` once per noisy trajectory.

    Shot ``k`` owns events ``offsets[k]:offsets[k+1]`` (sorted by op index);
    an event at op ``g`` applies its Pauli right after op ``g``. ``prefix``
    optionally holds the noiseless state after each op prefix (row ``g`` =
    state after ``g`` ops) so a trajectory can start at its first fault.
    """
    cdef Py_ssize_t dim = initial.shape[0]
    cdef Py_ssize_t n_ops = ops.shape[0]
    cdef Py_ssize_t n_shots = offsets.shape[0] - 1
    cdef Py_ssize_t sh, e, e_end, g, g0, i
    cdef u64 qbit = (<u64>1) << qubit
    cdef double p1
    cdef bint use_prefix = prefix is not None
    cdef const cplx[:, ::1] pre
    out_arr = np.zeros(n_shots, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    work_arr = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] work = work_arr
    cdef cplx* w = &work[0]
    if use_prefix:
        pre = prefix
    with nogil:
        for sh in range(n_shots):
            e = offsets[sh]
            e_end = offsets[sh + 1]
            if e == e_end:
                g0 = n_ops
            else:
                g0 = ev_op[e]
            if use_prefix:
                memcpy(w, &pre[g0 + 1 if g0 < n_ops else n_ops, 0], dim * sizeof(cplx))
            else:
                memcpy(w, &initial[0], dim * sizeof(cplx))
                _apply_range(w, dim, ops, params, 0, g0 + 1 if g0 < n_ops else n_ops)
            g = g0
            while g < n_ops:
                while e < e_end and ev_op[e] == g:
                    _apply_pauli(w, dim, ev_x[e], ev_z[e])
                    e += 1
                g += 1
                if g < n_ops:
                    _apply_range(w, dim, ops, params, g, g + 1)
            p1 = 0.0
            for i in range(dim):
                if (<u64>i) & qbit:
                    p1 += w[i].real * w[i].real + w[i].imag * w[i].imag
            out[sh] = 1 if uniforms[sh] < p1 else 0
    return out_arr
