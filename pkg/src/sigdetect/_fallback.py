"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same arithmetic order, so both backends grow identical
trees on data without near-ties.
"""

import numpy as np

from .significance import _b_value


def lima_b(on, off, alpha):
    b, _ = _b_value(np.float64(on), np.float64(off), alpha)
    return float(b)


def lima_sig(on, off, alpha):
    b, excess = _b_value(np.float64(on), np.float64(off), alpha)
    return float(np.sign(excess) * np.sqrt(b))


def _side_scores(lon, loff, ron, roff, alpha, criterion):
    b_l, e_l = _b_value(lon, loff, alpha)
    b_r, e_r = _b_value(ron, roff, alpha)
    if criterion == 0:
        return np.maximum(np.sign(e_l) * np.sqrt(b_l), np.sign(e_r) * np.sqrt(b_r))
    return b_l + b_r


def level_best_splits(values, order, is_on, weight, node_of, feat_mask, tot_on, tot_off,
                      alpha, criterion, best_feat, best_theta, best_score, best_lon,
                      best_loff):
    d = order.shape[0]
    on_w = np.where(is_on.astype(bool), weight, 0.0)
    off_w = np.where(is_on.astype(bool), 0.0, weight)
    for j in range(d):
        rows = order[j]
        nodes = node_of[rows]
        keep = nodes >= 0
        keep[keep] = feat_mask[nodes[keep], j].astype(bool)
        rows = rows[keep]
        nodes = nodes[keep]
        vals = values[j][keep]
        if rows.size == 0:
            continue
        perm = np.argsort(nodes, kind="stable")
        rows = rows[perm]
        nodes = nodes[perm]
        vals = vals[perm]
        starts = np.flatnonzero(np.r_[True, nodes[1:] != nodes[:-1]])
        ends = np.r_[starts[1:], nodes.size]
        for s, e in zip(starts, ends):
            q = nodes[s]
            seg = rows[s:e]
            v = vals[s:e]
            if v.size < 2:
                continue
            cut = np.flatnonzero(v[1:] > v[:-1])
            if cut.size == 0:
                continue
            # sequential cumsum matches the compiled running sums bit for bit
            lon = np.cumsum(on_w[seg])[cut]
            loff = np.cumsum(off_w[seg])[cut]
            score = _side_scores(lon, loff, tot_on[q] - lon, tot_off[q] - loff,
                                 alpha, criterion)
            at = int(np.argmax(score))
            if score[at] > best_score[q]:
                lo_v, hi_v = v[cut[at]], v[cut[at] + 1]
                theta = 0.5 * (lo_v + hi_v)
                if theta >= hi_v:
                    theta = lo_v
                best_score[q] = score[at]
                best_feat[q] = j
                best_theta[q] = theta
                best_lon[q] = lon[at]
                best_loff[q] = loff[at]


def nearest_centroid(X, C, out, chunk=4096):
    n, d = X.shape
    for start in range(0, n, chunk):
        block = X[start:start + chunk]
        acc = np.zeros((block.shape[0], C.shape[0]))
        # accumulate feature by feature, the compiled loop's summation order
        for j in range(d):
            diff = block[:, j, None] - C[None, :, j]
            acc += diff * diff
        out[start:start + chunk] = np.argmin(acc, axis=1)


def apply_tree(X, feature, threshold, left, right, out):
    node = np.zeros(X.shape[0], dtype=np.int32)
    rows = np.arange(X.shape[0])
    while True:
        feat = feature[node]
        inner = feat >= 0
        if not inner.any():
            break
        at = rows[inner]
        q = node[inner]
        go_left = X[at, feat[inner]] <= threshold[q]
        node[at] = np.where(go_left, left[q], right[q])
    out[:] = node


def route_rows(X, feature, threshold, left, right, node_of):
    rows = np.flatnonzero(node_of >= 0)
    q = node_of[rows]
    split = feature[q] >= 0
    rows, q = rows[split], q[split]
    go_left = X[rows, feature[q]] <= threshold[q]
    node_of[rows] = np.where(go_left, left[q], right[q])
