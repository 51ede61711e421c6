"""Li & Ma significance of detection and decision-threshold tuning.

The statistic compares the number of positively classified events from the
On region against the alpha-scaled number from the Off regions. It is
returned *signed*: positive for an On excess, negative for a deficit.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class CountPair(NamedTuple):
    """Positively classified On / Off counts. Reals, so relaxed sums fit."""

    n_on: float
    n_off: float


class ScoredPredictions(NamedTuple):
    """Scores paired with region membership (``is_on`` False means Off)."""

    scores: np.ndarray
    is_on: np.ndarray


class ThresholdResult(NamedTuple):
    theta: float
    sigma: float


def check_alpha(alpha):
    if not (isinstance(alpha, (int, float, np.floating, np.integer)) and alpha > 0
            and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a positive finite number, got {alpha!r}")
    return float(alpha)


def alpha_from_p_minus(p_minus):
    """Exposure ratio implied by a known negative-class noise rate.

    >>> alpha_from_p_minus(0.5)
    1.0
    """
    if not 0.0 < p_minus < 1.0:
        raise ValueError(f"p_minus must lie in (0, 1), got {p_minus!r}")
    return p_minus / (1.0 - p_minus)


def _as_counts(n_on, n_off):
    on = np.asarray(n_on, dtype=np.float64)
    off = np.asarray(n_off, dtype=np.float64)
    if np.any(~np.isfinite(on)) or np.any(~np.isfinite(off)):
        raise ValueError("counts must be finite")
    if np.any(on < 0) or np.any(off < 0):
        raise ValueError("counts must be non-negative")
    return on, off


def _b_value(on, off, alpha):
    # 2*[n_on ln a + n_off ln b] with ln a = log1p(e / (alpha N)),
    # ln b = log1p(-e / N) and e = n_on - alpha n_off.
    total = on + off
    excess = on - alpha * off
    with np.errstate(divide="ignore", invalid="ignore"):
        t_on = np.where(on > 0, on * np.log1p(excess / (alpha * total)), 0.0)
        t_off = np.where(off > 0, off * np.log1p(-excess / total), 0.0)
    b = 2.0 * (t_on + t_off)
    b = np.where((total > 0) & (excess != 0) & (b > 0), b, 0.0)
    return b, excess


def li_ma_b(n_on, n_off, alpha):
    """Squared significance (the bracketed likelihood-ratio term), >= 0."""
    alpha = check_alpha(alpha)
    on, off = _as_counts(n_on, n_off)
    b, _ = _b_value(on, off, alpha)
    return float(b) if b.ndim == 0 else b


def _b_scalar(n_on, n_off, alpha):
    # unchecked float path for tight loops; same formula as _b_value
    total = n_on + n_off
    excess = n_on - alpha * n_off
    if total <= 0.0 or excess == 0.0:
        return 0.0, excess
    t_on = n_on * math.log1p(excess / (alpha * total)) if n_on > 0 else 0.0
    t_off = n_off * math.log1p(-excess / total) if n_off > 0 else 0.0
    b = 2.0 * (t_on + t_off)
    return (b if b > 0.0 else 0.0), excess


def _sigma_scalar(n_on, n_off, alpha):
    b, excess = _b_scalar(n_on, n_off, alpha)
    if b == 0.0:
        return 0.0
    return math.sqrt(b) if excess > 0 else -math.sqrt(b)


def li_ma_significance(n_on, n_off, alpha=0.2):
    """Signed Li & Ma significance in units of sigma.

    Accepts scalars or broadcastable arrays of (possibly fractional) counts.

    Parameters
    ----------
    n_on, n_off : float or array_like
        Non-negative On / Off counts.
    alpha : float or array_like
        On-to-Off exposure ratio; arrays broadcast against the counts.

    Returns
    -------
    float or ndarray
        ``sign(n_on - alpha*n_off) * sqrt(B)``; exactly 0 for empty counts
        and at the balance point ``n_on == alpha * n_off``.
    """
    if np.ndim(alpha) == 0:
        alpha = check_alpha(alpha)
    else:
        alpha = np.asarray(alpha, dtype=np.float64)
        if not np.all(np.isfinite(alpha) & (alpha > 0)):
            raise ValueError("alpha must be positive and finite")
    on, off = _as_counts(n_on, n_off)
    b, excess = _b_value(on, off, alpha)
    sigma = np.sign(excess) * np.sqrt(b)
    return float(sigma) if sigma.ndim == 0 else sigma


def significance_gradient(n_on, n_off, alpha):
    """Partial derivatives of the squared significance w.r.t. (n_on, n_off)."""
    alpha = check_alpha(alpha)
    on, off = _as_counts(n_on, n_off)
    if np.any(on <= 0) or np.any(off <= 0):
        raise ValueError("gradient needs strictly positive counts")
    total = on + off
    excess = on - alpha * off
    g_on = 2.0 * np.log1p(excess / (alpha * total))
    g_off = 2.0 * np.log1p(-excess / total)
    if g_on.ndim == 0:
        return float(g_on), float(g_off)
    return g_on, g_off


def _as_predictions(scores, is_on):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    is_on = np.asarray(is_on, dtype=bool).ravel()
    if scores.size == 0:
        raise ValueError("no predictions")
    if scores.shape != is_on.shape:
        raise ValueError("scores and region tags differ in length")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return scores, is_on


def significance_at_threshold(scores, is_on, theta, alpha):
    """Significance of the events scored strictly above ``theta``."""
    scores, is_on = _as_predictions(scores, is_on)
    selected = scores > theta
    n_on = np.count_nonzero(selected & is_on)
    n_off = np.count_nonzero(selected & ~is_on)
    return li_ma_significance(n_on, n_off, alpha)


def candidate_thresholds(scores):
    """Midpoints of consecutive distinct scores plus one below and one above."""
    values = np.unique(np.asarray(scores, dtype=np.float64))
    lo = values[0] - max(1.0, abs(values[0]))
    hi = values[-1] + max(1.0, abs(values[-1]))
    mids = 0.5 * (values[:-1] + values[1:])
    # adjacent floats: the midpoint may round onto the upper value
    mids = np.where(mids >= values[1:], values[:-1], mids)
    return np.concatenate([[lo], mids, [hi]])


def tune_threshold(scores, is_on, alpha):
    """Pick the threshold that maximizes the significance (ties: smallest).

    Runs in O(n log n): one sort, then reverse cumulative On/Off counts so
    that candidate ``i`` selects every score at or above the ``i``-th
    distinct value.
    """
    alpha = check_alpha(alpha)
    scores, is_on = _as_predictions(scores, is_on)
    values, inverse = np.unique(scores, return_inverse=True)
    on_per = np.bincount(inverse, weights=is_on, minlength=values.size)
    off_per = np.bincount(inverse, weights=~is_on, minlength=values.size)
    sel_on = np.concatenate([np.cumsum(on_per[::-1])[::-1], [0.0]])
    sel_off = np.concatenate([np.cumsum(off_per[::-1])[::-1], [0.0]])
    sigma = li_ma_significance(sel_on, sel_off, alpha)
    best = int(np.argmax(sigma))
    thetas = candidate_thresholds(values)
    return ThresholdResult(float(thetas[best]), float(sigma[best]))
