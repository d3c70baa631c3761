# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled belief-space kernels: CSR traversal without numpy temporaries.

Semantics mirror atpo.kernels.pyref exactly (same argmax tie-breaks, same
zero-mass observation handling); only the loop structure differs.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int32_t i32


cdef void _csr_matvec(const i32[::1] indptr, const i32[::1] indices,
                      const f64[::1] data, const f64[::1] x, f64[::1] out) noexcept:
    cdef Py_ssize_t r, k
    cdef double acc
    for r in range(out.shape[0]):
        acc = 0.0
        for k in range(indptr[r], indptr[r + 1]):
            acc += data[k] * x[indices[k]]
        out[r] = acc


def belief_update(ops, cnp.ndarray[f64, ndim=1] b, int a, int z):
    tr = ops.t_rev[a]
    osym = ops.o_by_symbol[a]
    cdef const i32[::1] tp = tr.indptr
    cdef const i32[::1] ti = tr.indices
    cdef const f64[::1] td = tr.data
    cdef const i32[::1] op = osym.indptr
    cdef const i32[::1] oi = osym.indices
    cdef const f64[::1] od = osym.data
    cdef Py_ssize_t X = b.shape[0]
    cdef cnp.ndarray[f64, ndim=1] pb = np.empty(X)
    _csr_matvec(tp, ti, td, b, pb)
    cdef cnp.ndarray[f64, ndim=1] out = np.zeros(X)
    cdef f64[::1] ov = out
    cdef f64[::1] pv = pb
    cdef Py_ssize_t k, y
    cdef double rho = 0.0, w
    for k in range(op[z], op[z + 1]):
        y = oi[k]
        w = od[k] * pv[y]
        ov[y] = w
        rho += w
    if rho == 0.0:
        return None, 0.0
    for k in range(op[z], op[z + 1]):
        ov[oi[k]] /= rho
    return out, rho


def observation_probs(ops, cnp.ndarray[f64, ndim=1] b, int a):
    tr = ops.t_rev[a]
    osym = ops.o_by_symbol[a]
    cdef Py_ssize_t X = b.shape[0]
    cdef cnp.ndarray[f64, ndim=1] pb = np.empty(X)
    _csr_matvec(tr.indptr, tr.indices, tr.data, b, pb)
    cdef cnp.ndarray[f64, ndim=1] out = np.empty(ops.num_observations)
    _csr_matvec(osym.indptr, osym.indices, osym.data, pb, out)
    return out


def q_values(ops, cnp.ndarray[f64, ndim=2, mode="c"] vectors,
             cnp.ndarray[f64, ndim=1] b):
    cdef cnp.ndarray[f64, ndim=1] q = b @ ops.reward
    cdef f64[::1] qv = q
    cdef const f64[:, ::1] V = vectors
    cdef Py_ssize_t n = vectors.shape[0]
    cdef Py_ssize_t X = b.shape[0]
    cdef Py_ssize_t Z = ops.num_observations
    cdef double gamma = ops.discount
    cdef cnp.ndarray[f64, ndim=1] pb = np.empty(X)
    cdef f64[::1] pv = pb
    cdef cnp.ndarray[f64, ndim=2] scores_arr = np.empty((Z, n))
    cdef f64[:, ::1] scores = scores_arr
    cdef const i32[::1] op, oi
    cdef const f64[::1] od
    cdef Py_ssize_t a, y, k, z, i
    cdef double wy, best, total
    for a in range(ops.num_actions):
        tr = ops.t_rev[a]
        _csr_matvec(tr.indptr, tr.indices, tr.data, b, pv)
        ost = ops.o_by_state[a]
        op = ost.indptr
        oi = ost.indices
        od = ost.data
        scores[:, :] = 0.0
        for y in range(X):
            wy = pv[y]
            if wy == 0.0:
                continue
            for k in range(op[y], op[y + 1]):
                z = oi[k]
                for i in range(n):
                    scores[z, i] += od[k] * wy * V[i, y]
        total = 0.0
        for z in range(Z):
            best = scores[z, 0]
            for i in range(1, n):
                if scores[z, i] > best:
                    best = scores[z, i]
            total += best
        qv[a] += gamma * total
    return q


def backup(ops, cnp.ndarray[f64, ndim=2, mode="c"] vectors,
           cnp.ndarray[f64, ndim=1] b):
    cdef const f64[:, ::1] V = vectors
    cdef Py_ssize_t n = vectors.shape[0]
    cdef Py_ssize_t X = b.shape[0]
    cdef Py_ssize_t Z = ops.num_observations
    cdef double gamma = ops.discount
    cdef const f64[:, ::1] R = ops.reward
    cdef const f64[::1] bv = b
    cdef cnp.ndarray[f64, ndim=1] pb = np.empty(X)
    cdef f64[::1] pv = pb
    cdef cnp.ndarray[f64, ndim=2] scores_arr = np.empty((Z, n))
    cdef f64[:, ::1] scores = scores_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] choice_arr = np.empty(Z, dtype=np.int64)
    cdef cnp.int64_t[::1] choice = choice_arr
    cdef cnp.ndarray[f64, ndim=1] bproj = np.empty(X)
    cdef f64[::1] bp = bproj
    cdef cnp.ndarray[f64, ndim=1] alpha = np.empty(X)
    cdef f64[::1] av = alpha
    cdef cnp.ndarray[f64, ndim=1] best_alpha = np.empty(X)
    cdef f64[::1] bav = best_alpha
    cdef const i32[::1] op, oi, fp, fi
    cdef const f64[::1] od, fd
    cdef Py_ssize_t a, y, k, z, i, best_action = 0
    cdef double wy, best, acc, val, best_val = -np.inf
    for a in range(ops.num_actions):
        tr = ops.t_rev[a]
        _csr_matvec(tr.indptr, tr.indices, tr.data, b, pv)
        ost = ops.o_by_state[a]
        op = ost.indptr
        oi = ost.indices
        od = ost.data
        scores[:, :] = 0.0
        for y in range(X):
            wy = pv[y]
            if wy == 0.0:
                continue
            for k in range(op[y], op[y + 1]):
                z = oi[k]
                for i in range(n):
                    scores[z, i] += od[k] * wy * V[i, y]
        for z in range(Z):
            best = scores[z, 0]
            choice[z] = 0
            for i in range(1, n):
                if scores[z, i] > best:
                    best = scores[z, i]
                    choice[z] = i
        # bproj[y] = sum_z O[a][y, z] * V[choice[z], y] over the full O pattern
        for y in range(X):
            acc = 0.0
            for k in range(op[y], op[y + 1]):
                acc += od[k] * V[choice[oi[k]], y]
            bp[y] = acc
        fwd = ops.t_fwd[a]
        fp = fwd.indptr
        fi = fwd.indices
        fd = fwd.data
        val = 0.0
        for y in range(X):
            acc = 0.0
            for k in range(fp[y], fp[y + 1]):
                acc += fd[k] * bp[fi[k]]
            av[y] = R[y, a] + gamma * acc
            val += av[y] * bv[y]
        if val > best_val:
            best_val = val
            best_action = a
            bav[:] = av
    return best_alpha, best_action
