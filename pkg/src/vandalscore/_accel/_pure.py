"""NumPy/pure-Python fallback for the compiled kernels.

Implements the same four entry points as the Cython module `_core`:
tree growing, margin prediction, indel edit distance, and the minimum
windowed indel distance. Arithmetic is arranged so that accumulation
order matches the compiled core (serial cumulative sums over the same
orderings), keeping the two backends numerically interchangeable.
"""

import numpy as np

BACKEND_NAME = "pure"


def presort_columns(X):
    """Stable per-column argsort, shape (n_features, n_rows), int32."""
    n, nfeat = X.shape
    order = np.empty((nfeat, n), dtype=np.int32)
    for f in range(nfeat):
        order[f] = np.argsort(X[:, f], kind="stable").astype(np.int32)
    return order


def build_tree(X, grad, hess, order, max_depth, lam, gamma, min_child_hess):
    """Grow one regression tree with exact greedy splits.

    Returns parallel node arrays (feat, thr, left, right) in BFS creation
    order. Leaves have feat == -1 and carry the unscaled Newton weight
    -G/(H+lam) in the thr slot. Candidate thresholds are midpoints of
    consecutive distinct sorted values; ties are broken by lowest feature
    slot, then lowest threshold (strict improvement while scanning
    features and thresholds in ascending order).
    """
    n, nfeat = X.shape
    feat_out, thr_out, left_out, right_out = [], [], [], []

    def serial_sum(values):
        # np.cumsum accumulates serially, matching the compiled core.
        return float(np.cumsum(values)[-1]) if len(values) else 0.0

    root_rows = np.arange(n, dtype=np.int64)
    root_sorted = [order[f].astype(np.int64) for f in range(nfeat)]
    root_g = serial_sum(grad)
    root_h = serial_sum(hess)

    # BFS queue of (node_id, rows ascending, per-feature sorted rows, depth, G, H)
    queue = [(0, root_rows, root_sorted, 0, root_g, root_h)]
    feat_out.append(-1)
    thr_out.append(0.0)
    left_out.append(-1)
    right_out.append(-1)

    while queue:
        node_id, rows, srt, depth, G, H = queue.pop(0)
        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0

        if depth < max_depth and len(rows) >= 2:
            parent_term = (G * G) / (H + lam)
            for f in range(nfeat):
                sf = srt[f]
                xs = X[sf, f]
                cg = np.cumsum(grad[sf])
                ch = np.cumsum(hess[sf])
                distinct = xs[1:] > xs[:-1]
                if not distinct.any():
                    continue
                GL = cg[:-1]
                HL = ch[:-1]
                GR = G - GL
                HR = H - HL
                ok = distinct & (HL >= min_child_hess) & (HR >= min_child_hess)
                if not ok.any():
                    continue
                gains = np.where(
                    ok,
                    0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent_term) - gamma,
                    -np.inf,
                )
                i = int(np.argmax(gains))
                gain = float(gains[i])
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = float((xs[i] + xs[i + 1]) / 2.0)

        if best_feat < 0:
            thr_out[node_id] = -G / (H + lam)
            continue

        go_left = X[rows, best_feat] < best_thr
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
        left_srt = []
        right_srt = []
        for f in range(nfeat):
            m = X[srt[f], best_feat] < best_thr
            left_srt.append(srt[f][m])
            right_srt.append(srt[f][~m])

        left_id = len(feat_out)
        right_id = left_id + 1
        for _ in range(2):
            feat_out.append(-1)
            thr_out.append(0.0)
            left_out.append(-1)
            right_out.append(-1)
        feat_out[node_id] = best_feat
        thr_out[node_id] = best_thr
        left_out[node_id] = left_id
        right_out[node_id] = right_id

        gl = serial_sum(grad[left_rows])
        hl = serial_sum(hess[left_rows])
        queue.append((left_id, left_rows, left_srt, depth + 1, gl, hl))
        queue.append((right_id, right_rows, right_srt, depth + 1, G - gl, H - hl))

    return (
        np.asarray(feat_out, dtype=np.int32),
        np.asarray(thr_out, dtype=np.float64),
        np.asarray(left_out, dtype=np.int32),
        np.asarray(right_out, dtype=np.int32),
    )


def predict_margins(X, feat, thr, left, right, starts):
    """Sum of leaf values over all trees for every row of X."""
    n = X.shape[0]
    if n < 32:
        # scalar walk: vectorized indexing costs more than it saves here
        feat_l, thr_l = feat.tolist(), thr.tolist()
        left_l, right_l = left.tolist(), right.tolist()
        out = np.zeros(n, dtype=np.float64)
        for r in range(n):
            row = X[r].tolist()
            m = 0.0
            for s in starts:
                node = s
                f = feat_l[node]
                while f >= 0:
                    node = left_l[node] if row[f] < thr_l[node] else right_l[node]
                    f = feat_l[node]
                m += thr_l[node]
            out[r] = m
        return out
    margins = np.zeros(n, dtype=np.float64)
    rows = np.arange(n)
    for s in starts:
        node = np.full(n, s, dtype=np.int64)
        while True:
            f = feat[node]
            at_leaf = f < 0
            if at_leaf.all():
                break
            safe_f = np.where(at_leaf, 0, f)
            go_left = X[rows, safe_f] < thr[node]
            nxt = np.where(go_left, left[node], right[node])
            node = np.where(at_leaf, node, nxt)
        margins += thr[node]
    return margins


def _trim(a, b):
    i = 0
    while i < len(a) and i < len(b) and a[i] == b[i]:
        i += 1
    j = 0
    while j < len(a) - i and j < len(b) - i and a[len(a) - 1 - j] == b[len(b) - 1 - j]:
        j += 1
    return a[i:len(a) - j], b[i:len(b) - j]


def indel_distance(a, b):
    """Edit distance with insert/delete cost 1 and substitution cost 2."""
    a, b = _trim(a, b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a
    prev = list(range(len(a) + 1))
    for i in range(1, len(b) + 1):
        cur = [i] + [0] * len(a)
        bc = b[i - 1]
        for j in range(1, len(a) + 1):
            if a[j - 1] == bc:
                cur[j] = prev[j - 1]
            else:
                up = prev[j] + 1
                lf = cur[j - 1] + 1
                cur[j] = up if up < lf else lf
        prev = cur
    return prev[len(a)]


def min_window_indel(short, long):
    """Minimum indel distance between `short` and any same-length window of `long`."""
    m = len(short)
    best = 2 * m
    for k in range(len(long) - m + 1):
        d = indel_distance(short, long[k:k + m])
        if d < best:
            best = d
            if best == 0:
                break
    return best
