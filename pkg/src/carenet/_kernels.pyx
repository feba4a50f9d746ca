# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels.

Same signatures and semantics as ``carenet._kernels_py``; see that module for
the reference behavior.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef int64_t INF = 9223372036854775807


# Binary min-heap on (key, node) with lazy deletion.
cdef struct Heap:
    int64_t *keys
    int64_t *nodes
    Py_ssize_t size
    Py_ssize_t cap


cdef int heap_init(Heap *h, Py_ssize_t cap) nogil:
    h.keys = <int64_t *> malloc(cap * sizeof(int64_t))
    h.nodes = <int64_t *> malloc(cap * sizeof(int64_t))
    h.size = 0
    h.cap = cap
    if h.keys == NULL or h.nodes == NULL:
        return -1
    return 0


cdef void heap_free(Heap *h) nogil:
    free(h.keys)
    free(h.nodes)


cdef int heap_push(Heap *h, int64_t key, int64_t node) nogil:
    cdef Py_ssize_t i, parent
    cdef int64_t *nk
    cdef int64_t *nn
    if h.size == h.cap:
        nk = <int64_t *> malloc(2 * h.cap * sizeof(int64_t))
        nn = <int64_t *> malloc(2 * h.cap * sizeof(int64_t))
        if nk == NULL or nn == NULL:
            return -1
        for i in range(h.size):
            nk[i] = h.keys[i]
            nn[i] = h.nodes[i]
        free(h.keys)
        free(h.nodes)
        h.keys = nk
        h.nodes = nn
        h.cap = 2 * h.cap
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if h.keys[parent] <= key:
            break
        h.keys[i] = h.keys[parent]
        h.nodes[i] = h.nodes[parent]
        i = parent
    h.keys[i] = key
    h.nodes[i] = node
    return 0


cdef void heap_pop(Heap *h, int64_t *key, int64_t *node) nogil:
    cdef Py_ssize_t i = 0, child
    cdef int64_t lk, ln
    key[0] = h.keys[0]
    node[0] = h.nodes[0]
    h.size -= 1
    if h.size == 0:
        return
    lk = h.keys[h.size]
    ln = h.nodes[h.size]
    while True:
        child = 2 * i + 1
        if child >= h.size:
            break
        if child + 1 < h.size and h.keys[child + 1] < h.keys[child]:
            child += 1
        if h.keys[child] >= lk:
            break
        h.keys[i] = h.keys[child]
        h.nodes[i] = h.nodes[child]
        i = child
    h.keys[i] = lk
    h.nodes[i] = ln


def dijkstra_many(const int64_t[::1] indptr, const int64_t[::1] heads,
                  const int64_t[::1] weights, const int64_t[::1] arc_edge,
                  const unsigned char[::1] edge_open, sources, targets):
    cdef int64_t[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    cdef int64_t[::1] tgt = np.ascontiguousarray(targets, dtype=np.int64)
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t ns = src.shape[0], nt = tgt.shape[0]
    out_arr = np.empty((ns, nt), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    cdef int64_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef Heap h
    cdef Py_ssize_t row, k, a
    cdef int64_t s, u, v, d, nd
    cdef int err = 0
    if heap_init(&h, max(16, heads.shape[0] + 1)) != 0:
        heap_free(&h)
        raise MemoryError()
    try:
        with nogil:
            for row in range(ns):
                for k in range(n):
                    dist[k] = INF
                s = src[row]
                dist[s] = 0
                h.size = 0
                heap_push(&h, 0, s)
                while h.size > 0:
                    heap_pop(&h, &d, &u)
                    if d > dist[u]:
                        continue
                    for a in range(indptr[u], indptr[u + 1]):
                        if edge_open[arc_edge[a]] == 0:
                            continue
                        v = heads[a]
                        nd = d + weights[a]
                        if nd < dist[v]:
                            dist[v] = nd
                            if heap_push(&h, nd, v) != 0:
                                err = 1
                                break
                    if err:
                        break
                if err:
                    break
                for k in range(nt):
                    out[row, k] = dist[tgt[k]]
    finally:
        heap_free(&h)
    if err:
        raise MemoryError()
    return out_arr


def transport_min_cost(supply, capacity, cost, allowed):
    cdef int64_t[::1] sup = np.ascontiguousarray(supply, dtype=np.int64)
    cdef int64_t[::1] cap = np.ascontiguousarray(capacity, dtype=np.int64)
    cdef Py_ssize_t no = sup.shape[0], nf = cap.shape[0]
    flow_arr = np.zeros((no, nf), dtype=np.int64)
    if no == 0:
        return flow_arr
    cdef int64_t[:, ::1] c = np.ascontiguousarray(cost, dtype=np.int64)
    cdef unsigned char[:, ::1] ok = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef int64_t[:, ::1] flow = flow_arr
    cdef Py_ssize_t nv = no + nf + 2
    cdef int64_t srcn = no + nf, snk = no + nf + 1
    cdef int64_t[::1] rem_s = np.array(sup, dtype=np.int64)
    cdef int64_t[::1] rem_c = np.array(cap, dtype=np.int64)
    cdef int64_t[::1] pot = np.zeros(nv, dtype=np.int64)
    cdef int64_t[::1] dist = np.empty(nv, dtype=np.int64)
    cdef int64_t[::1] prev = np.empty(nv, dtype=np.int64)
    cdef unsigned char[::1] done = np.empty(nv, dtype=np.uint8)
    cdef Heap h
    cdef int64_t left = 0, d, u, v, nd, pu, dt, amount, first, last, a, b, i, j
    cdef int infeasible = 0, err = 0
    for i in range(no):
        left += sup[i]
    if heap_init(&h, max(16, no * nf + nv)) != 0:
        heap_free(&h)
        raise MemoryError()
    try:
        with nogil:
            while left > 0:
                for v in range(nv):
                    dist[v] = INF
                    prev[v] = -1
                    done[v] = 0
                dist[srcn] = 0
                h.size = 0
                heap_push(&h, 0, srcn)
                while h.size > 0:
                    heap_pop(&h, &d, &u)
                    if done[u] or d > dist[u]:
                        continue
                    done[u] = 1
                    if u == snk:
                        break
                    pu = pot[u]
                    if u == srcn:
                        for i in range(no):
                            if rem_s[i] > 0:
                                nd = d + pu - pot[i]
                                if nd < dist[i]:
                                    dist[i] = nd
                                    prev[i] = srcn
                                    err |= heap_push(&h, nd, i)
                    elif u < no:
                        for j in range(nf):
                            if ok[u, j]:
                                v = no + j
                                nd = d + c[u, j] + pu - pot[v]
                                if nd < dist[v]:
                                    dist[v] = nd
                                    prev[v] = u
                                    err |= heap_push(&h, nd, v)
                    else:
                        j = u - no
                        if rem_c[j] > 0:
                            nd = d + pu - pot[snk]
                            if nd < dist[snk]:
                                dist[snk] = nd
                                prev[snk] = u
                                err |= heap_push(&h, nd, snk)
                        for i in range(no):
                            if flow[i, j] > 0:
                                nd = d - c[i, j] + pu - pot[i]
                                if nd < dist[i]:
                                    dist[i] = nd
                                    prev[i] = u
                                    err |= heap_push(&h, nd, i)
                    if err:
                        break
                if err:
                    break
                if not done[snk]:
                    infeasible = 1
                    break
                dt = dist[snk]
                for v in range(nv):
                    if done[v]:
                        pot[v] += dist[v]
                    else:
                        pot[v] += dt

                last = prev[snk] - no
                amount = rem_c[last]
                b = prev[snk]
                while True:
                    a = prev[b]
                    if a == srcn:
                        first = b
                        break
                    if a >= no and b < no:
                        if flow[b, a - no] < amount:
                            amount = flow[b, a - no]
                    b = a
                if rem_s[first] < amount:
                    amount = rem_s[first]
                b = prev[snk]
                while True:
                    a = prev[b]
                    if a == srcn:
                        break
                    if a < no:
                        flow[a, b - no] += amount
                    else:
                        flow[b, a - no] -= amount
                    b = a
                rem_s[first] -= amount
                rem_c[last] -= amount
                left -= amount
    finally:
        heap_free(&h)
    if err:
        raise MemoryError()
    if infeasible:
        raise RuntimeError("transport problem is infeasible")
    return flow_arr
