import numpy as np


def make_rng(seed, *keys):
    """Counter-based generator for the stream addressed by ``(seed, *keys)``.

    Streams for different keys are independent, so per-member and per-fold
    randomness never depends on execution order.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def derive_seed(seed, *keys):
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint32)[0])
