# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled regression tree builder; hot kernel of the boosting fit.

Same contract as py_tree.build_tree: exact greedy scan over sorted
distinct values, x <= threshold goes left, ties broken toward the lowest
feature index then the lowest threshold, BFS node numbering.

The search runs level-wise: one pass per feature over the pristine
sorted order, with per-node accumulators indexed by a row -> level-slot
map (int16, cache-resident). Hot reads are either sequential (sorted
values, sort order) or stay inside small arrays, instead of
re-partitioning index arrays per node.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF GAIN_EPS = 1e-12
DEF MAX_SLOTS = 32000


def build_tree(cnp.ndarray[cnp.float64_t, ndim=2] X,
               cnp.ndarray[cnp.int32_t, ndim=2] presorted,
               cnp.ndarray[cnp.float64_t, ndim=2] sorted_vals,
               cnp.ndarray[cnp.float64_t, ndim=1] residual,
               int max_depth, int min_samples_leaf):
    cdef int p = presorted.shape[0]
    cdef long m = presorted.shape[1]
    cdef long n = X.shape[0]

    # column-major so the routing gather stays within one contiguous column
    cdef double[::1, :] Xv = X if X.flags["F_CONTIGUOUS"] else np.asfortranarray(X)
    cdef int[:, ::1] order = presorted if presorted.flags["C_CONTIGUOUS"] else np.ascontiguousarray(presorted)
    cdef double[:, ::1] vals = sorted_vals if sorted_vals.flags["C_CONTIGUOUS"] else np.ascontiguousarray(sorted_vals)
    cdef double[::1] rv = residual

    cdef cnp.ndarray[cnp.int16_t, ndim=1] row_slot_arr = np.full(n, -1, dtype=np.int16)
    cdef short[::1] row_slot = row_slot_arr

    # growable node storage in BFS order
    feature = [-1]
    threshold = [float("nan")]
    left = [-1]
    right = [-1]
    value = [0.0]
    n_samples = [0]
    default_left = [True]

    cdef double total = 0.0, ssq = 0.0, r
    cdef long k, row, nl, nr
    cdef int j, s, depth, n_slots, splittable, n_children, cs
    cdef double node_total, sse, gain, v, sl

    for k in range(m):
        row = order[0, k]
        row_slot[row] = 0
        r = rv[row]
        total += r
        ssq += r * r
    value[0] = total / m
    n_samples[0] = int(m)

    level_nodes = [0]  # absolute node id per slot
    cdef cnp.ndarray[cnp.float64_t, ndim=1] level_sum = np.array([total])
    cdef cnp.ndarray[cnp.float64_t, ndim=1] level_ssq = np.array([ssq])
    cdef cnp.ndarray[cnp.int64_t, ndim=1] level_n = np.array([m], dtype=np.int64)

    cdef long[::1] ln, bnl, anl
    cdef double[::1] lsum, lssq, bgain, bthr, asl, alast, cns, cnq
    cdef int[::1] bfeat
    cdef unsigned char[::1] ahas, scan_ok
    cdef short[::1] child_left
    cdef long[::1] cnn

    for depth in range(max_depth):
        n_slots = len(level_nodes)
        if n_slots == 0:
            break
        lsum = level_sum
        lssq = level_ssq
        ln = level_n

        scan_ok_arr = np.zeros(n_slots, dtype=np.uint8)
        scan_ok = scan_ok_arr
        splittable = 0
        for s in range(n_slots):
            sse = lssq[s] - lsum[s] * lsum[s] / ln[s]
            if ln[s] >= 2 * min_samples_leaf and sse > 0.0:
                scan_ok[s] = 1
                splittable += 1
        if splittable == 0:
            break

        best_gain = np.empty(n_slots, dtype=np.float64)
        best_thr = np.zeros(n_slots, dtype=np.float64)
        best_feat = np.full(n_slots, -1, dtype=np.int32)
        best_nl = np.zeros(n_slots, dtype=np.int64)
        bgain = best_gain
        bthr = best_thr
        bfeat = best_feat
        bnl = best_nl
        for s in range(n_slots):
            sse = lssq[s] - lsum[s] * lsum[s] / ln[s]
            bgain[s] = GAIN_EPS * (sse if sse > 1.0 else 1.0)

        acc_sl = np.zeros(n_slots, dtype=np.float64)
        acc_nl = np.zeros(n_slots, dtype=np.int64)
        acc_last = np.zeros(n_slots, dtype=np.float64)
        acc_has = np.zeros(n_slots, dtype=np.uint8)
        asl = acc_sl
        anl = acc_nl
        alast = acc_last
        ahas = acc_has

        for j in range(p):
            for s in range(n_slots):
                asl[s] = 0.0
                anl[s] = 0
                ahas[s] = 0
            for k in range(m):
                row = order[j, k]
                s = row_slot[row]
                if s < 0 or scan_ok[s] == 0:
                    continue
                v = vals[j, k]
                if ahas[s] == 1 and v != alast[s]:
                    nl = anl[s]
                    nr = ln[s] - nl
                    if nl >= min_samples_leaf and nr >= min_samples_leaf:
                        node_total = lsum[s]
                        sl = asl[s]
                        gain = (sl * sl / nl
                                + (node_total - sl) * (node_total - sl) / nr
                                - node_total * node_total / ln[s])
                        if gain > bgain[s]:
                            bgain[s] = gain
                            bfeat[s] = j
                            bthr[s] = alast[s]
                            bnl[s] = nl
                asl[s] += rv[row]
                anl[s] += 1
                alast[s] = v
                ahas[s] = 1

        # create children; compact child slots numbered in BFS (slot) order
        child_left_arr = np.full(n_slots, -1, dtype=np.int16)
        child_left = child_left_arr
        new_nodes = []
        for s in range(n_slots):
            if bfeat[s] < 0:
                continue
            nd = level_nodes[s]
            if len(new_nodes) + 2 > MAX_SLOTS:
                raise ValueError("tree level exceeds the supported node count")
            child_left[s] = len(new_nodes)
            feature[nd] = int(bfeat[s])
            threshold[nd] = float(bthr[s])
            left[nd] = len(feature)
            right[nd] = len(feature) + 1
            default_left[nd] = bool(bnl[s] >= ln[s] - bnl[s])
            new_nodes.append(len(feature))
            new_nodes.append(len(feature) + 1)
            for _ in range(2):
                feature.append(-1)
                threshold.append(float("nan"))
                left.append(-1)
                right.append(-1)
                value.append(0.0)
                n_samples.append(0)
                default_left.append(True)
        n_children = len(new_nodes)
        if n_children == 0:
            break

        # route rows to child slots and collect child stats
        next_n = np.zeros(n_children, dtype=np.int64)
        next_sum = np.zeros(n_children, dtype=np.float64)
        next_ssq = np.zeros(n_children, dtype=np.float64)
        cnn = next_n
        cns = next_sum
        cnq = next_ssq
        for row in range(n):
            s = row_slot[row]
            if s < 0:
                continue
            if child_left[s] < 0:
                row_slot[row] = -1
                continue
            cs = child_left[s]
            if Xv[row, bfeat[s]] > bthr[s]:
                cs += 1
            row_slot[row] = <short> cs
            r = rv[row]
            cnn[cs] += 1
            cns[cs] += r
            cnq[cs] += r * r

        level_nodes = new_nodes
        level_sum = next_sum
        level_ssq = next_ssq
        level_n = next_n
        for s in range(n_children):
            nd = level_nodes[s]
            value[nd] = float(next_sum[s] / next_n[s])
            n_samples[nd] = int(next_n[s])

    return {
        "feature": np.asarray(feature, dtype=np.int32),
        "threshold": np.asarray(threshold, dtype=np.float64),
        "left": np.asarray(left, dtype=np.int32),
        "right": np.asarray(right, dtype=np.int32),
        "value": np.asarray(value, dtype=np.float64),
        "n_samples": np.asarray(n_samples, dtype=np.int32),
        "default_left": np.asarray(default_left, dtype=np.uint8),
    }
