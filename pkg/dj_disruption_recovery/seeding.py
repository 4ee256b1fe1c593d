"""
Deterministic, splittable random streams.

Every random draw in a simulation comes from a generator whose seed is a pure
function of ``(master_seed, task_index, seed, stream)``, so the same master
seed reproduces the same episodes no matter how the work is scheduled.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SeedingError
from .records import Condition

SHARED_STREAM = 0
ARM_STREAMS = {Condition.BASELINE: 1, Condition.INTERVENTION: 2}
BOOTSTRAP_STREAM = 7


def _check_seed(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise SeedingError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise SeedingError(f"{name} must be non-negative, got {value}")
    return int(value)


@dataclass(frozen=True)
class EpisodeKey:
    """Seed material for one (task, seed) unit of a paired experiment."""

    master_seed: int
    task_index: int
    seed: int

    def __post_init__(self):
        for name in ("master_seed", "task_index", "seed"):
            _check_seed(name, getattr(self, name))

    def _generator(self, stream):
        sequence = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.task_index, self.seed, stream),
        )
        return np.random.default_rng(sequence)

    def shared(self):
        """
        Stream common to both arms of the pair.

        Latent outcome, conclusion step and per-step critic scores come from
        here, which is what makes the two arms common-random-number twins.
        """
        return self._generator(SHARED_STREAM)

    def arm(self, condition):
        """Stream private to one arm: trigger, flip and no-answer draws."""
        return self._generator(ARM_STREAMS[Condition(condition)])


def episode_key(master_seed, task_index, seed):
    return EpisodeKey(master_seed=master_seed, task_index=task_index, seed=seed)


def block_generator(seed, block_index):
    """Generator for one block of bootstrap or Monte-Carlo iterations."""
    seed = _check_seed("seed", seed)
    block_index = _check_seed("block_index", block_index)
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(BOOTSTRAP_STREAM, block_index))
    )
