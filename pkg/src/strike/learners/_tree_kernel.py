"""Compiled tree growth and traversal.

A single growth routine serves every tree learner: it maximises the weighted
squared-error reduction ``S_L^2/W_L + S_R^2/W_R - S^2/W`` of a real target.
For 0/1 targets this is exactly twice the weighted Gini decrease, so CART,
forests and AdaBoost stumps use it with ``target = y`` while gradient boosting
uses it with ``target = residual``.

Trees grow level by level. Each column is sorted once per fit (``presort``);
a level costs one pass over every sorted column, which evaluates the splits of
all open nodes at once.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True)
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _uniform(state):
    return np.float64(_next_u64(state) >> np.uint64(11)) * _TWO53


@njit(cache=True, nogil=True)
def _randint(state, n):
    return np.int64(_uniform(state) * n)


@njit(cache=True, nogil=True)
def presort(X):
    """Row order of every column, shape (d, n); stable for equal values."""
    n, d = X.shape
    out = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        out[f] = np.argsort(X[:, f], kind="mergesort")
    return out


@njit(cache=True, nogil=True)
def grow_tree(X, order, target, weight, max_depth, min_samples_split, min_samples_leaf,
              n_candidates, random_thresholds, seed):
    """Grow one tree on the rows with positive weight.

    Returns parallel node arrays (feature, threshold, left, right, value);
    leaves carry feature -1 and children -1. ``x <= threshold`` goes left.
    Split ties go to the lower feature index, then the lower threshold.
    """
    n, d = X.shape
    m = 0
    node_of = np.full(n, -1, dtype=np.int64)
    for r in range(n):
        if weight[r] > 0:
            node_of[r] = 0
            m += 1
    cap = 2 * m - 1 if m > 0 else 1
    if max_depth < 40:
        depth_cap = (1 << (max_depth + 1)) - 1
        if depth_cap < cap:
            cap = depth_cap
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)

    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    feats = np.arange(d)
    k = n_candidates if n_candidates < d else d

    if random_thresholds:
        active = np.empty((0, 0), dtype=np.int64)
        n_live = 0
    else:
        active = order.copy()
        n_live = n
    level_nodes = np.zeros(1, dtype=np.int64)
    n_nodes = 1
    slot_of = np.full(cap, -1, dtype=np.int64)
    depth = 0
    while level_nodes.shape[0] > 0:
        L = level_nodes.shape[0]
        for s in range(L):
            slot_of[level_nodes[s]] = s
        W = np.zeros(L)
        S = np.zeros(L)
        Q = np.zeros(L)
        cnt = np.zeros(L, dtype=np.int64)
        for r in range(n):
            nd = node_of[r]
            if nd < 0:
                continue
            s = slot_of[nd]
            w = weight[r]
            t = target[r]
            W[s] += w
            S[s] += w * t
            Q[s] += w * t * t
            cnt[s] += 1

        parent = np.zeros(L)
        tol = np.zeros(L)
        splittable = np.zeros(L, dtype=np.bool_)
        mask = np.zeros((L, d), dtype=np.bool_)
        for s in range(L):
            nd = level_nodes[s]
            value[nd] = S[s] / W[s] if W[s] > 0 else 0.0
            parent[s] = S[s] * S[s] / W[s] if W[s] > 0 else 0.0
            tol[s] = 1e-12 * Q[s]
            if (depth < max_depth and cnt[s] >= min_samples_split and cnt[s] >= 2 * min_samples_leaf
                    and Q[s] - parent[s] > tol[s]):
                splittable[s] = True
                if k < d:
                    for j in range(k):
                        jj = j + _randint(state, d - j)
                        tmp = feats[j]
                        feats[j] = feats[jj]
                        feats[jj] = tmp
                    for j in range(k):
                        mask[s, feats[j]] = True
                else:
                    for f in range(d):
                        mask[s, f] = True

        best_score = np.full(L, -np.inf)
        best_f = np.full(L, -1, dtype=np.int64)
        best_thr = np.zeros(L)
        WL = np.zeros(L)
        SL = np.zeros(L)
        nl = np.zeros(L, dtype=np.int64)

        if random_thresholds:
            lo = np.full((L, d), np.inf)
            hi = np.full((L, d), -np.inf)
            for r in range(n):
                nd = node_of[r]
                if nd < 0:
                    continue
                s = slot_of[nd]
                if not splittable[s]:
                    continue
                for f in range(d):
                    if mask[s, f]:
                        v = X[r, f]
                        if v < lo[s, f]:
                            lo[s, f] = v
                        if v > hi[s, f]:
                            hi[s, f] = v
            thr = np.zeros((L, d))
            for s in range(L):
                for f in range(d):
                    if mask[s, f] and hi[s, f] > lo[s, f]:
                        thr[s, f] = lo[s, f] + _uniform(state) * (hi[s, f] - lo[s, f])
                    else:
                        mask[s, f] = False
            WL2 = np.zeros((L, d))
            SL2 = np.zeros((L, d))
            nl2 = np.zeros((L, d), dtype=np.int64)
            for r in range(n):
                nd = node_of[r]
                if nd < 0:
                    continue
                s = slot_of[nd]
                if not splittable[s]:
                    continue
                w = weight[r]
                wt = w * target[r]
                for f in range(d):
                    if mask[s, f] and X[r, f] <= thr[s, f]:
                        WL2[s, f] += w
                        SL2[s, f] += wt
                        nl2[s, f] += 1
            for s in range(L):
                for f in range(d):
                    if not mask[s, f]:
                        continue
                    if nl2[s, f] < min_samples_leaf or cnt[s] - nl2[s, f] < min_samples_leaf:
                        continue
                    wl = WL2[s, f]
                    wr = W[s] - wl
                    if wl <= 0 or wr <= 0:
                        continue
                    sl = SL2[s, f]
                    sr = S[s] - sl
                    score = sl * sl / wl + sr * sr / wr
                    if score > best_score[s]:
                        best_score[s] = score
                        best_f[s] = f
                        best_thr[s] = thr[s, f]
        else:
            # drop rows that sit in closed nodes from the sorted orders
            live = 0
            for i in range(n_live):
                r = active[0, i]
                nd = node_of[r]
                if nd >= 0 and splittable[slot_of[nd]]:
                    live += 1
            if live < n_live:
                for f in range(d):
                    j = 0
                    for i in range(n_live):
                        r = active[f, i]
                        nd = node_of[r]
                        if nd >= 0 and splittable[slot_of[nd]]:
                            active[f, j] = r
                            j += 1
                n_live = live
            last = np.zeros(L)
            for f in range(d):
                used = False
                for s in range(L):
                    if mask[s, f]:
                        used = True
                        break
                if not used:
                    continue
                WL[:] = 0.0
                SL[:] = 0.0
                nl[:] = 0
                of = active[f]
                for i in range(n_live):
                    r = of[i]
                    nd = node_of[r]
                    if nd < 0:
                        continue
                    s = slot_of[nd]
                    if not mask[s, f]:
                        continue
                    v = X[r, f]
                    if nl[s] > 0 and v > last[s]:
                        if nl[s] >= min_samples_leaf and cnt[s] - nl[s] >= min_samples_leaf:
                            wr = W[s] - WL[s]
                            if WL[s] > 0 and wr > 0:
                                sr = S[s] - SL[s]
                                score = SL[s] * SL[s] / WL[s] + sr * sr / wr
                                if score > best_score[s]:
                                    best_score[s] = score
                                    best_f[s] = f
                                    t = 0.5 * (last[s] + v)
                                    if not t < v:
                                        t = last[s]
                                    best_thr[s] = t
                    WL[s] += weight[r]
                    SL[s] += weight[r] * target[r]
                    nl[s] += 1
                    last[s] = v

        n_next = 0
        for s in range(L):
            if splittable[s] and best_f[s] >= 0 and best_score[s] - parent[s] > tol[s]:
                n_next += 2
        next_nodes = np.empty(n_next, dtype=np.int64)
        j = 0
        for s in range(L):
            nd = level_nodes[s]
            if splittable[s] and best_f[s] >= 0 and best_score[s] - parent[s] > tol[s]:
                feature[nd] = best_f[s]
                threshold[nd] = best_thr[s]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                next_nodes[j] = n_nodes
                next_nodes[j + 1] = n_nodes + 1
                j += 2
                n_nodes += 2
            else:
                best_f[s] = -1
        for r in range(n):
            nd = node_of[r]
            if nd < 0:
                continue
            s = slot_of[nd]
            f = best_f[s]
            if f < 0:
                node_of[r] = -1
            elif X[r, f] <= best_thr[s]:
                node_of[r] = left[nd]
            else:
                node_of[r] = right[nd]
        level_nodes = next_nodes
        depth += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right):
    """Leaf index reached by every row of ``X``."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True, nogil=True)
def predict_forest(X, features, thresholds, lefts, rights, values, offsets):
    """Mean leaf value over trees packed back to back; tree t spans offsets[t]:offsets[t+1]."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while features[base + node] >= 0:
                if X[i, features[base + node]] <= thresholds[base + node]:
                    node = lefts[base + node]
                else:
                    node = rights[base + node]
            acc += values[base + node]
        out[i] = acc / n_trees
    return out
