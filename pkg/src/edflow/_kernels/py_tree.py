"""Pure-numpy regression tree builder; reference implementation of _tree.pyx.

Both backends implement the same exact greedy search: candidate thresholds
are the sorted distinct feature values (rule: x <= threshold goes left),
gains are variance reductions, and ties are broken toward the lowest
feature index then the lowest threshold by scanning features and
thresholds in ascending order with a strictly-greater comparison.
Nodes are numbered in creation (BFS) order with the root at 0.

The two backends may disagree in the last ulp of a gain (numpy's pairwise
cumsum vs the C sequential sum), so serialized trees are only guaranteed
identical per backend.
"""

from __future__ import annotations

import numpy as np

_GAIN_EPS = 1e-12


def build_tree(X, presorted, sorted_vals, residual, max_depth, min_samples_leaf):
    """Greedy variance-reduction tree on the rows listed in `presorted`.

    X: (n, p) float64; presorted: (p, m) int32 row indices, each row sorted
    ascending by that feature (stable); sorted_vals: (p, m) the matching
    feature values; residual: (n,). Returns a dict of flat node arrays.
    """
    p, m = presorted.shape
    n = X.shape[0]
    order = presorted.copy()
    vals = sorted_vals.copy()

    feature, threshold, left, right = [], [], [], []
    value, n_samples, default_left = [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n_samples.append(0)
        default_left.append(True)
        return len(feature) - 1

    left_mask = np.zeros(n, dtype=bool)
    root = new_node()
    queue = [(root, 0, m, 0)]
    head = 0
    while head < len(queue):
        node, lo, hi, depth = queue[head]
        head += 1
        rows = order[0, lo:hi]
        r = residual[rows]
        n_node = hi - lo
        total = float(r.sum())
        value[node] = total / n_node
        n_samples[node] = n_node

        sse = float((r * r).sum()) - total * total / n_node
        if depth >= max_depth or n_node < 2 * min_samples_leaf or sse <= 0.0:
            continue

        best_gain = _GAIN_EPS * max(1.0, sse)
        best = None  # (feature, threshold, n_left)
        parent_term = total * total / n_node
        for j in range(p):
            v = vals[j, lo:hi]
            rs = residual[order[j, lo:hi]]
            nl = np.arange(1, n_node)
            ok = v[:-1] != v[1:]
            ok &= nl >= min_samples_leaf
            ok &= (n_node - nl) >= min_samples_leaf
            if not ok.any():
                continue
            sl = np.cumsum(rs)[:-1]
            nr = n_node - nl
            with np.errstate(invalid="ignore"):
                gain = sl * sl / nl + (total - sl) * (total - sl) / nr - parent_term
            gain[~ok] = -np.inf
            k = int(np.argmax(gain))  # first max -> lowest threshold
            if gain[k] > best_gain:
                best_gain = float(gain[k])
                best = (j, float(v[k]), k + 1)
        if best is None:
            continue

        bj, bt, n_left = best
        left_rows = order[bj, lo : lo + n_left]
        left_mask[left_rows] = True
        for j in range(p):
            seg = order[j, lo:hi]
            seg_vals = vals[j, lo:hi]
            lm = left_mask[seg]
            order[j, lo:hi] = np.concatenate([seg[lm], seg[~lm]])
            vals[j, lo:hi] = np.concatenate([seg_vals[lm], seg_vals[~lm]])
        left_mask[left_rows] = False

        lchild = new_node()
        rchild = new_node()
        feature[node] = bj
        threshold[node] = bt
        left[node] = lchild
        right[node] = rchild
        default_left[node] = n_left >= n_node - n_left
        queue.append((lchild, lo, lo + n_left, depth + 1))
        queue.append((rchild, lo + n_left, hi, depth + 1))

    return {
        "feature": np.array(feature, dtype=np.int32),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int32),
        "right": np.array(right, dtype=np.int32),
        "value": np.array(value, dtype=np.float64),
        "n_samples": np.array(n_samples, dtype=np.int32),
        "default_left": np.array(default_left, dtype=np.uint8),
    }
