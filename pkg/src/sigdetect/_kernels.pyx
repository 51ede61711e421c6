# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. ``_fallback.py`` mirrors every function here."""

from libc.math cimport log1p, sqrt, INFINITY
from libc.stdlib cimport malloc, free
from libc.stdint cimport int32_t, int64_t, uint8_t


cdef inline double _lima_b(double on, double off, double alpha) noexcept nogil:
    cdef double total = on + off
    cdef double excess = on - alpha * off
    cdef double t_on = 0.0
    cdef double t_off = 0.0
    cdef double b
    if total <= 0.0 or excess == 0.0:
        return 0.0
    if on > 0.0:
        t_on = on * log1p(excess / (alpha * total))
    if off > 0.0:
        t_off = off * log1p(-excess / total)
    b = 2.0 * (t_on + t_off)
    return b if b > 0.0 else 0.0


cdef inline double _lima_sig(double on, double off, double alpha) noexcept nogil:
    cdef double b = _lima_b(on, off, alpha)
    cdef double excess = on - alpha * off
    if excess > 0.0:
        return sqrt(b)
    if excess < 0.0:
        return -sqrt(b)
    return 0.0


def lima_b(double on, double off, double alpha):
    return _lima_b(on, off, alpha)


def lima_sig(double on, double off, double alpha):
    return _lima_sig(on, off, alpha)


def level_best_splits(const double[:, ::1] values,
                      const int64_t[:, ::1] order,
                      const uint8_t[::1] is_on,
                      const double[::1] weight,
                      const int32_t[::1] node_of,
                      const uint8_t[:, ::1] feat_mask,
                      const double[::1] tot_on,
                      const double[::1] tot_off,
                      double alpha,
                      int criterion,
                      int32_t[::1] best_feat,
                      double[::1] best_theta,
                      double[::1] best_score,
                      double[::1] best_lon,
                      double[::1] best_loff):
    """Best split of every node of one tree level in a single sweep per feature.

    ``order[j]`` lists all rows sorted by feature ``j`` and ``values[j]`` the
    matching sorted feature values; walking them and skipping rows of other
    nodes visits each node's rows in sorted order, so no per-node sort is
    needed. ``criterion`` 0 scores a split by the larger
    signed side significance, 1 by the sum of squared side significances.
    Outputs must arrive initialized (feature -1, score -inf); strict ``>``
    keeps the lowest feature and then the smallest threshold on ties.
    """
    cdef Py_ssize_t n = order.shape[1]
    cdef Py_ssize_t d = order.shape[0]
    cdef Py_ssize_t m = tot_on.shape[0]
    cdef Py_ssize_t j, t, i
    cdef int32_t q
    cdef double v, theta, lon, loff, score, s_left, s_right, w
    cdef double *cum_on = <double *> malloc(m * sizeof(double))
    cdef double *cum_off = <double *> malloc(m * sizeof(double))
    cdef double *last = <double *> malloc(m * sizeof(double))
    cdef uint8_t *seen = <uint8_t *> malloc(m * sizeof(uint8_t))
    if cum_on == NULL or cum_off == NULL or last == NULL or seen == NULL:
        free(cum_on); free(cum_off); free(last); free(seen)
        raise MemoryError()
    try:
        with nogil:
            for j in range(d):
                for q in range(m):
                    cum_on[q] = 0.0
                    cum_off[q] = 0.0
                    seen[q] = 0
                for t in range(n):
                    i = order[j, t]
                    q = node_of[i]
                    if q < 0 or not feat_mask[q, j]:
                        continue
                    v = values[j, t]
                    if seen[q] and v > last[q]:
                        theta = 0.5 * (last[q] + v)
                        if theta >= v:
                            theta = last[q]
                        lon = cum_on[q]
                        loff = cum_off[q]
                        if criterion == 0:
                            s_left = _lima_sig(lon, loff, alpha)
                            s_right = _lima_sig(tot_on[q] - lon, tot_off[q] - loff, alpha)
                            score = s_left if s_left > s_right else s_right
                        else:
                            score = (_lima_b(lon, loff, alpha)
                                     + _lima_b(tot_on[q] - lon, tot_off[q] - loff, alpha))
                        if score > best_score[q]:
                            best_score[q] = score
                            best_feat[q] = <int32_t> j
                            best_theta[q] = theta
                            best_lon[q] = lon
                            best_loff[q] = loff
                    w = weight[i]
                    if is_on[i]:
                        cum_on[q] += w
                    else:
                        cum_off[q] += w
                    last[q] = v
                    seen[q] = 1
    finally:
        free(cum_on)
        free(cum_off)
        free(last)
        free(seen)


def nearest_centroid(const double[:, ::1] X, const double[:, ::1] C, int64_t[::1] out):
    """Index of the closest centroid per row (squared Euclidean; ties to lowest)."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t k = C.shape[0]
    cdef Py_ssize_t i, c, j
    cdef double best, acc, diff
    cdef int64_t arg
    with nogil:
        for i in range(n):
            best = INFINITY
            arg = 0
            for c in range(k):
                acc = 0.0
                for j in range(d):
                    diff = X[i, j] - C[c, j]
                    acc = acc + diff * diff
                if acc < best:
                    best = acc
                    arg = c
            out[i] = arg


def apply_tree(const double[:, ::1] X,
               const int32_t[::1] feature,
               const double[::1] threshold,
               const int32_t[::1] left,
               const int32_t[::1] right,
               int32_t[::1] out):
    """Leaf reached by every row; ``x <= threshold`` goes left."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i
    cdef int32_t q
    with nogil:
        for i in range(n):
            q = 0
            while feature[q] >= 0:
                if X[i, feature[q]] <= threshold[q]:
                    q = left[q]
                else:
                    q = right[q]
            out[i] = q


def route_rows(const double[:, ::1] X,
               const int32_t[::1] feature,
               const double[::1] threshold,
               const int32_t[::1] left,
               const int32_t[::1] right,
               int32_t[::1] node_of):
    """Move rows sitting at a split node to its child, in place; -1 stays."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i
    cdef int32_t q
    with nogil:
        for i in range(n):
            q = node_of[i]
            if q < 0 or feature[q] < 0:
                continue
            if X[i, feature[q]] <= threshold[q]:
                node_of[i] = left[q]
            else:
                node_of[i] = right[q]
