"""
Seeded random streams.

Every random quantity in an experiment is drawn from a named stream derived from the run seed and
a key path such as (trial index, stream name). The streams use the counter-based Philox bit generator,
so a trial's draws depend only on its key and never on how many other trials ran before it or in
which worker process.
"""
import secrets

import numpy as np


# stream names mapped to fixed integers of the spawn key
STREAMS = {
    'graph': 1,
    'secret': 2,
    'labels': 3,
    'perturbation': 4,
    'oracle': 5,
    'learner': 6,
    'inputs': 7,
    'verify': 8,
    'holdout': 9,
}


def make_stream(seed: int, *key: int | str) -> np.random.Generator:
    """
    Create the generator for a key path under a run seed

    Parameters:
        seed (int): non-negative run seed (u64)
        *key (int | str): path components; strings must be names from STREAMS

    Returns:
        np.random.Generator: Philox-backed generator, identical for identical (seed, key)
    """
    spawn_key = tuple(STREAMS[part] if isinstance(part, str) else int(part) for part in key)
    sequence = np.random.SeedSequence(int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))


def fresh_seed() -> int:
    """
    Draw a seed for exploration runs where no seed was configured
    """
    return secrets.randbits(63)


def derive_seed(rng: np.random.Generator) -> int:
    """
    Take a child seed from a caller-owned generator, for handing to a component that builds its own streams
    """
    return int(rng.integers(0, 2 ** 63 - 1))
