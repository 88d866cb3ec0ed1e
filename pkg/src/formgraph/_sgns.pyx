# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-walk + skip-gram training kernel.

Mirrors _sgns_py.train_embeddings operation for operation; both kernels
produce bitwise-identical weights for identical inputs.
"""

from array import array

from cpython cimport array as carray
from libc.math cimport exp
from libc.stdlib cimport free, malloc

BACKEND = "cython"

cdef unsigned long long _MASK64 = 0xFFFFFFFFFFFFFFFF
cdef double _TO_FLOAT = 1.0 / 9007199254740992.0


cdef inline double _next_float(unsigned long long *state) noexcept:
    cdef unsigned long long z
    state[0] = state[0] + 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    z = z ^ (z >> 31)
    return (z >> 11) * _TO_FLOAT


cdef inline bint _has_edge(long long[:] indptr, long long[:] indices,
                           long long a, long long b) noexcept:
    cdef long long lo = indptr[a]
    cdef long long hi = indptr[a + 1]
    cdef long long mid, value
    while lo < hi:
        mid = (lo + hi) // 2
        value = indices[mid]
        if value == b:
            return 1
        if value < b:
            lo = mid + 1
        else:
            hi = mid
    return 0


def train_embeddings(
    object indptr_obj,
    object indices_obj,
    long long n_nodes,
    long long dims,
    long long walks_per_node,
    long long walk_length,
    double p,
    double q,
    long long window,
    long long epochs,
    long long negative,
    double learning_rate,
    unsigned long long seed,
):
    cdef carray.array indptr_arr = array("q", indptr_obj)
    cdef carray.array indices_arr = array("q", indices_obj)
    cdef long long[:] indptr = indptr_arr
    cdef long long[:] indices = indices_arr

    cdef unsigned long long state = seed & _MASK64
    cdef double inv_p = 1.0 / p
    cdef double inv_q = 1.0 / q

    cdef long long n_walks = walks_per_node * n_nodes
    cdef carray.array walks_arr = array("q", bytes(8 * n_walks * walk_length))
    cdef long long[:] walks = walks_arr

    cdef long long pos = 0
    cdef long long r_idx, start, cur, prev, step, lo, deg, nxt, i, nb
    cdef double total, r, acc

    for r_idx in range(walks_per_node):
        for start in range(n_nodes):
            cur = start
            prev = -1
            walks[pos] = cur
            pos += 1
            for step in range(walk_length - 1):
                lo = indptr[cur]
                deg = indptr[cur + 1] - lo
                if deg == 0:
                    nxt = cur
                elif prev < 0:
                    nxt = indices[lo + <long long>(_next_float(&state) * deg)]
                else:
                    total = 0.0
                    for i in range(lo, lo + deg):
                        nb = indices[i]
                        if nb == prev:
                            total += inv_p
                        elif _has_edge(indptr, indices, prev, nb):
                            total += 1.0
                        else:
                            total += inv_q
                    r = _next_float(&state) * total
                    acc = 0.0
                    nxt = indices[lo + deg - 1]
                    for i in range(lo, lo + deg):
                        nb = indices[i]
                        if nb == prev:
                            acc += inv_p
                        elif _has_edge(indptr, indices, prev, nb):
                            acc += 1.0
                        else:
                            acc += inv_q
                        if r < acc:
                            nxt = nb
                            break
                walks[pos] = nxt
                pos += 1
                prev = cur
                cur = nxt

    cdef carray.array w_in_arr = array("d", bytes(8 * n_nodes * dims))
    cdef double[:] w_in = w_in_arr
    cdef double *w_out = <double *>malloc(sizeof(double) * n_nodes * dims)
    cdef double *ebuf = <double *>malloc(sizeof(double) * dims)
    if w_out == NULL or ebuf == NULL:
        if w_out != NULL:
            free(w_out)
        if ebuf != NULL:
            free(ebuf)
        raise MemoryError()

    cdef long long idx
    for idx in range(n_nodes * dims):
        w_in[idx] = (_next_float(&state) - 0.5) / dims
    for idx in range(n_nodes * dims):
        w_out[idx] = 0.0

    cdef double lr = learning_rate
    cdef long long epoch, w, base, center, cbase, j_lo, j_hi, j, ctx, k
    cdef long long target, tbase, d
    cdef double f, s, g, label

    for epoch in range(epochs):
        for w in range(n_walks):
            base = w * walk_length
            for i in range(walk_length):
                center = walks[base + i]
                cbase = center * dims
                j_lo = i - window if i - window > 0 else 0
                j_hi = i + window + 1 if i + window + 1 < walk_length else walk_length
                for j in range(j_lo, j_hi):
                    if j == i:
                        continue
                    ctx = walks[base + j]
                    for d in range(dims):
                        ebuf[d] = 0.0
                    for k in range(negative + 1):
                        if k == 0:
                            target = ctx
                            label = 1.0
                        else:
                            target = <long long>(_next_float(&state) * n_nodes)
                            if target == ctx:
                                continue
                            label = 0.0
                        tbase = target * dims
                        f = 0.0
                        for d in range(dims):
                            f += w_in[cbase + d] * w_out[tbase + d]
                        if f > 37.0:
                            s = 1.0
                        elif f < -37.0:
                            s = 0.0
                        else:
                            s = 1.0 / (1.0 + exp(-f))
                        g = (label - s) * lr
                        for d in range(dims):
                            ebuf[d] += g * w_out[tbase + d]
                            w_out[tbase + d] += g * w_in[cbase + d]
                    for d in range(dims):
                        w_in[cbase + d] += ebuf[d]

    free(w_out)
    free(ebuf)
    return w_in_arr
