import random
from typing import List

import numpy as np


def reseed_everything(seed: int) -> np.random.Generator:
    """
    Seeds the global generators and returns a fresh numpy Generator for the seed.
    :param seed: non-negative integer seed.
    :return: np.random.Generator
    """
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    return np.random.default_rng(seed)


def spawn_generators(seed: int, count: int) -> List[np.random.Generator]:
    """Independent counter-based streams, one per batch/restart, stable for a given seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def random_state_vector(dimension: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector."""
    v = rng.normal(size=dimension) + 1j * rng.normal(size=dimension)
    return v / np.linalg.norm(v)


def random_density_matrix(dimension: int, rng: np.random.Generator, mixture: int | None = None) -> np.ndarray:
    """Mixture of up to four Haar-random pure states with random weights."""
    terms = mixture if mixture is not None else int(rng.integers(1, 5))
    weights = rng.random(terms)
    weights /= weights.sum()
    rho = np.zeros((dimension, dimension), dtype=complex)
    for w in weights:
        v = random_state_vector(dimension, rng)
        rho += w * np.outer(v, v.conj())
    return rho
