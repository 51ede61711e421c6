"""Synthetic gamma/hadron data for tests, benchmarks and the acceptance suite.

Classes are two unit-variance Gaussians whose centers lie ``distance``
apart. Wobble tables spread hadrons evenly over one On and several Off
regions, while gammas favor the On region by a configurable rate factor.
"""

from __future__ import annotations

import numpy as np

from ._rng import make_rng
from .evaluation import fake_on_transform
from .table import ON, EventTable


def two_gaussians(n, pos_fraction=0.05, n_features=2, distance=4.0, seed=0):
    """Features and +1/-1 labels; exactly ``round(n * pos_fraction)`` positives."""
    if not 0.0 <= pos_fraction <= 1.0:
        raise ValueError("pos_fraction must lie in [0, 1]")
    rng = make_rng(seed, 0x6A55)
    n_pos = int(round(n * pos_fraction))
    label = np.full(n, -1, dtype=np.int64)
    label[rng.permutation(n)[:n_pos]] = 1
    X = rng.standard_normal((n, n_features))
    X[label == 1] += distance / np.sqrt(n_features)
    return X, label


def wobble_table(n=20000, gamma_fraction=0.03, on_ratio=3.0, n_off=5, n_features=6,
                 distance=4.0, n_groups=12, seed=0):
    """Wobble-mode events with clean labels, region tags and time-bucket groups.

    Hadrons fall in each of the ``1 + n_off`` regions with equal probability;
    a gamma is ``on_ratio`` times as likely to fall in the On region as in any
    single Off region. Group keys are independent of everything else.
    """
    X, label = two_gaussians(n, gamma_fraction, n_features, distance, seed)
    rng = make_rng(seed, 0x30BB1E)
    gamma = label == 1
    p_gamma = np.full(1 + n_off, 1.0)
    p_gamma[0] = on_ratio
    p_gamma /= p_gamma.sum()
    slot = np.where(gamma,
                    rng.choice(1 + n_off, size=n, p=p_gamma),
                    rng.integers(0, 1 + n_off, size=n))
    # slot 0 is On, slot k >= 1 is Off(k - 1)
    region = np.where(slot == 0, ON, slot - 1)
    group = rng.integers(0, n_groups, size=n)
    return EventTable(X, region, group, label)


def no_signal_table(n=12000, n_off=5, gamma_fraction=0.03, n_features=6, distance=4.0,
                    n_groups=12, seed=0):
    """Fake-On data: ``n`` events after dropping a genuine On region.

    A wobble table with one genuine On region (3x gamma rate) plus
    ``n_off + 1`` Off regions is generated; the genuine On rows are removed
    and Off region ``n_off`` is promoted to On. Every remaining region then
    shares one feature distribution and receives the same expected share of
    rows.
    """
    # the genuine On region takes about 1 / (n_off + 2) of the rows; 20% slack
    n_draw = int(np.ceil(1.2 * n * (n_off + 2) / (n_off + 1)))
    table = wobble_table(n_draw, gamma_fraction, 3.0, n_off + 1, n_features, distance,
                         n_groups, seed)
    fake = fake_on_transform(table, n_off)
    rows = make_rng(seed, 0xFA4E).permutation(fake.n_rows)[:n]
    return fake.take(np.sort(rows))
