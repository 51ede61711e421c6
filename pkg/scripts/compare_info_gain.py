"""How often does the squared-significance split agree with information gain?

The balanced ("noisy") criterion scores a split by the sum of the squared
side significances. This script draws random small On/Off tables, finds the
best split under that criterion and under the classic entropy information
gain on the On/Off tags, and reports how often both choose the same
(feature, threshold).

    python scripts/compare_info_gain.py [--tables 500] [--seed 0]

Exploratory only; nothing here is asserted by the test suite.

Observed: agreement on every table (up to floating-point near-ties). This is
an identity, not a coincidence. With q = (alpha, 1) / (1 + alpha),
B(n_on, n_off) = 2 N KL(p || q) for the node's On/Off shares p, so

    B_left + B_right = 2 N * information_gain + c(parent),

where c depends only on the parent's totals. Both criteria rank the splits
of a node identically, for every alpha and every On/Off mix.
"""

import argparse

import numpy as np

from sigdetect.tree import best_split


def entropy(on, off):
    n = on + off
    out = np.zeros_like(n, dtype=np.float64)
    for part in (on, off):
        p = np.divide(part, n, out=np.zeros_like(out), where=n > 0)
        out -= np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return out


def best_info_gain(X, is_on):
    n_on, n_off = is_on.sum(), (~is_on).sum()
    best = (-np.inf, None, None)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        v = X[order, j]
        cut = np.flatnonzero(v[1:] > v[:-1])
        if cut.size == 0:
            continue
        lon = np.cumsum(is_on[order])[cut].astype(float)
        loff = (cut + 1) - lon
        ron, roff = n_on - lon, n_off - loff
        n = len(v)
        gain = entropy(np.float64(n_on), np.float64(n_off)) - (
            (lon + loff) / n * entropy(lon, loff) + (ron + roff) / n * entropy(ron, roff))
        at = int(np.argmax(gain))
        if gain[at] > best[0]:
            best = (gain[at], j, 0.5 * (v[cut[at]] + v[cut[at] + 1]))
    return best[1], best[2]


def main():
    parser = argparse.ArgumentParser(description="split-criterion agreement study")
    parser.add_argument("--tables", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'alpha':>6s} {'On share':>9s} {'agree':>7s}")
    for alpha in (0.2, 1.0):
        for on_share in (alpha / (1 + alpha), 0.35, 0.6):
            agree = total = 0
            for _ in range(args.tables):
                n, d = rng.integers(20, 120), rng.integers(1, 4)
                X = np.round(rng.normal(size=(n, d)), 2)
                shift = rng.normal(size=d)
                p_on = 1 / (1 + np.exp(-(X @ shift))) * 2 * on_share
                is_on = rng.random(n) < np.clip(p_on, 0, 1)
                split = best_split(X, is_on, alpha, "noisy")
                j, theta = best_info_gain(X, is_on)
                if split is None or j is None:
                    continue
                total += 1
                agree += split.feature == j and np.isclose(split.theta, theta)
            print(f"{alpha:6.2f} {on_share:9.3f} {agree / max(total, 1):7.3f}")


if __name__ == "__main__":
    main()
