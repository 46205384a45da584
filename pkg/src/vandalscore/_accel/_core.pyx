# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact greedy tree growing, ensemble margins, indel distance.

Mirrors `_pure` exactly, including accumulation order and tie-breaking, so
the two backends stay numerically interchangeable. Tree growing is
level-wise: one pass per feature per level over the globally presorted
row order, bucketing rows into their current node on the fly.
"""

import numpy as np

from libc.stdlib cimport malloc, free

BACKEND_NAME = "compiled"


def build_tree(double[:, ::1] X, double[::1] grad, double[::1] hess,
               int[:, ::1] order, int max_depth, double lam, double gamma,
               double min_child_hess):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t nfeat = X.shape[1]
    cdef Py_ssize_t cap = 2 * n + 1
    if max_depth < 20 and ((<Py_ssize_t>1) << (max_depth + 1)) - 1 < cap:
        cap = ((<Py_ssize_t>1) << (max_depth + 1)) - 1
    if cap < 1:
        cap = 1

    feat_arr = np.full(cap, -1, dtype=np.int32)
    thr_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    node_g_arr = np.zeros(cap, dtype=np.float64)
    node_h_arr = np.zeros(cap, dtype=np.float64)
    cdef int[::1] feat = feat_arr
    cdef double[::1] thr = thr_arr
    cdef int[::1] left = left_arr
    cdef int[::1] right = right_arr
    cdef double[::1] node_g = node_g_arr
    cdef double[::1] node_h = node_h_arr

    node_of_row_arr = np.zeros(n, dtype=np.int32)
    slot_map_arr = np.full(cap, -1, dtype=np.int32)
    cdef int[::1] node_of_row = node_of_row_arr
    cdef int[::1] slot_map = slot_map_arr

    cdef Py_ssize_t i, f, s, k, depth, rid
    cdef int nid, child, bf
    cdef double G = 0.0, H = 0.0
    for i in range(n):
        G += grad[i]
        H += hess[i]
    node_g[0] = G
    node_h[0] = H

    cdef Py_ssize_t n_nodes = 1
    level_arr = np.zeros(1, dtype=np.int32)
    level_arr[0] = 0
    cdef int[::1] level = level_arr

    # per-slot scan state, sized to the widest possible level
    cdef Py_ssize_t max_level = 1
    if max_depth > 0:
        max_level = cap
    best_gain_arr = np.zeros(max_level, dtype=np.float64)
    best_feat_arr = np.zeros(max_level, dtype=np.int32)
    best_thr_arr = np.zeros(max_level, dtype=np.float64)
    pterm_arr = np.zeros(max_level, dtype=np.float64)
    gl_arr = np.zeros(max_level, dtype=np.float64)
    hl_arr = np.zeros(max_level, dtype=np.float64)
    lastx_arr = np.zeros(max_level, dtype=np.float64)
    cnt_arr = np.zeros(max_level, dtype=np.int64)
    cdef double[::1] best_gain = best_gain_arr
    cdef int[::1] best_feat = best_feat_arr
    cdef double[::1] best_thr = best_thr_arr
    cdef double[::1] pterm = pterm_arr
    cdef double[::1] gl = gl_arr
    cdef double[::1] hl = hl_arr
    cdef double[::1] lastx = lastx_arr
    cdef long long[::1] cnt = cnt_arr

    cdef double x, g_l, h_l, g_r, h_r, gain
    cdef Py_ssize_t n_level

    for depth in range(max_depth):
        n_level = level.shape[0]
        if n_level == 0:
            break
        for s in range(n_level):
            nid = level[s]
            slot_map[nid] = <int>s
            best_gain[s] = 0.0
            best_feat[s] = -1
            best_thr[s] = 0.0
            pterm[s] = (node_g[nid] * node_g[nid]) / (node_h[nid] + lam)

        for f in range(nfeat):
            for s in range(n_level):
                gl[s] = 0.0
                hl[s] = 0.0
                cnt[s] = 0
            for i in range(n):
                rid = order[f, i]
                nid = node_of_row[rid]
                s = slot_map[nid]
                if s < 0:
                    continue
                x = X[rid, f]
                if cnt[s] > 0 and x > lastx[s]:
                    h_l = hl[s]
                    h_r = node_h[nid] - h_l
                    if h_l >= min_child_hess and h_r >= min_child_hess:
                        g_l = gl[s]
                        g_r = node_g[nid] - g_l
                        gain = 0.5 * ((g_l * g_l) / (h_l + lam)
                                      + (g_r * g_r) / (h_r + lam)
                                      - pterm[s]) - gamma
                        if gain > best_gain[s]:
                            best_gain[s] = gain
                            best_feat[s] = <int>f
                            best_thr[s] = (lastx[s] + x) / 2.0
                gl[s] += grad[rid]
                hl[s] += hess[rid]
                lastx[s] = x
                cnt[s] += 1

        next_level_list = []
        for s in range(n_level):
            nid = level[s]
            if best_feat[s] >= 0:
                feat[nid] = best_feat[s]
                thr[nid] = best_thr[s]
                left[nid] = <int>n_nodes
                right[nid] = <int>(n_nodes + 1)
                next_level_list.append(n_nodes)
                next_level_list.append(n_nodes + 1)
                n_nodes += 2

        # route rows and accumulate left-child stats in ascending row order;
        # the right child gets parent minus left, matching the fallback
        for rid in range(n):
            nid = node_of_row[rid]
            s = slot_map[nid]
            if s < 0 or feat[nid] < 0:
                continue
            bf = feat[nid]
            if X[rid, bf] < thr[nid]:
                child = left[nid]
                node_g[child] += grad[rid]
                node_h[child] += hess[rid]
            else:
                child = right[nid]
            node_of_row[rid] = child

        for s in range(n_level):
            nid = level[s]
            slot_map[nid] = -1
            if feat[nid] >= 0:
                node_g[right[nid]] = node_g[nid] - node_g[left[nid]]
                node_h[right[nid]] = node_h[nid] - node_h[left[nid]]
            else:
                thr[nid] = -node_g[nid] / (node_h[nid] + lam)

        level_arr = np.asarray(next_level_list, dtype=np.int32)
        level = level_arr

    # nodes still open at max depth become leaves
    n_level = level.shape[0]
    for s in range(n_level):
        nid = level[s]
        thr[nid] = -node_g[nid] / (node_h[nid] + lam)

    return (feat_arr[:n_nodes].copy(), thr_arr[:n_nodes].copy(),
            left_arr[:n_nodes].copy(), right_arr[:n_nodes].copy())


def predict_margins(double[:, ::1] X, int[::1] feat, double[::1] thr,
                    int[::1] left, int[::1] right, long long[::1] starts):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t ntree = starts.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, t
    cdef long long node
    cdef double m
    for r in range(n):
        m = 0.0
        for t in range(ntree):
            node = starts[t]
            while feat[node] >= 0:
                if X[r, feat[node]] < thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            m += thr[node]
        out[r] = m
    return out_arr


cdef int _indel_codes(const unsigned int* a, Py_ssize_t na,
                      const unsigned int* b, Py_ssize_t nb) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef int up, lf
    cdef unsigned int bc
    cdef int* prev = <int*>malloc((na + 1) * sizeof(int))
    if prev == NULL:
        return -1
    cdef int* cur = <int*>malloc((na + 1) * sizeof(int))
    if cur == NULL:
        free(prev)
        return -1
    cdef int* tmp
    for j in range(na + 1):
        prev[j] = <int>j
    for i in range(1, nb + 1):
        cur[0] = <int>i
        bc = b[i - 1]
        for j in range(1, na + 1):
            if a[j - 1] == bc:
                cur[j] = prev[j - 1]
            else:
                up = prev[j] + 1
                lf = cur[j - 1] + 1
                cur[j] = up if up < lf else lf
        tmp = prev
        prev = cur
        cur = tmp
    cdef int result = prev[na]
    free(prev)
    free(cur)
    return result


def indel_distance(a: str, b: str):
    """Edit distance with insert/delete cost 1 and substitution cost 2."""
    cdef Py_ssize_t na = len(a)
    cdef Py_ssize_t nb = len(b)
    if na == 0:
        return nb
    if nb == 0:
        return na
    a_bytes = a.encode("utf-32-le")
    b_bytes = b.encode("utf-32-le")
    cdef const unsigned char[::1] av = a_bytes
    cdef const unsigned char[::1] bv = b_bytes
    cdef const unsigned int* ap = <const unsigned int*>&av[0]
    cdef const unsigned int* bp = <const unsigned int*>&bv[0]
    cdef int d
    if na <= nb:
        d = _indel_codes(ap, na, bp, nb)
    else:
        d = _indel_codes(bp, nb, ap, na)
    if d < 0:
        raise MemoryError()
    return d


def min_window_indel(needle: str, haystack: str):
    """Minimum indel distance between `needle` and any same-length window of `haystack`."""
    cdef Py_ssize_t m = len(needle)
    cdef Py_ssize_t nl = len(haystack)
    cdef Py_ssize_t k
    cdef int best = <int>(2 * m)
    cdef int d
    if m == 0:
        return 0
    s_bytes = needle.encode("utf-32-le")
    l_bytes = haystack.encode("utf-32-le")
    cdef const unsigned char[::1] sv = s_bytes
    cdef const unsigned char[::1] lv = l_bytes
    cdef const unsigned int* sp = <const unsigned int*>&sv[0]
    cdef const unsigned int* lp = <const unsigned int*>&lv[0]
    for k in range(nl - m + 1):
        d = _indel_codes(sp, m, lp + k, m)
        if d < 0:
            raise MemoryError()
        if d < best:
            best = d
            if best == 0:
                break
    return best
