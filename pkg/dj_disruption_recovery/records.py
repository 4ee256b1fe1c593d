"""
Episode records and matched baseline/intervention datasets.
"""

import enum
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import EmptyInputError, PairingError
from .framework import OutcomeTable

logger = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    NO_ANSWER = "no_answer"

    @property
    def succeeded(self):
        # no_answer counts as a failure everywhere rates are computed
        return self is Outcome.SUCCESS


class Condition(str, enum.Enum):
    BASELINE = "baseline"
    INTERVENTION = "intervention"


@dataclass(frozen=True)
class Step:
    index: int
    raw_score: float
    calibrated_score: float
    triggered: bool = False


@dataclass(frozen=True)
class EpisodeRecord:
    """
    One agent run.

    ``steps`` holds every emitted step for simulated runs. Records read from
    logs that only list interventions carry just the triggered steps, so
    ``n_steps`` is stored separately.
    """

    task_id: str
    seed: int
    condition: Condition
    outcome: Outcome
    n_steps: int
    steps: tuple = ()
    n_interventions: int = 0
    latent_outcome: Optional[Outcome] = None

    @property
    def key(self):
        return (self.task_id, self.seed)

    @property
    def succeeded(self):
        return self.outcome.succeeded

    @property
    def answered(self):
        return self.outcome is not Outcome.NO_ANSWER

    @property
    def interventions(self):
        return tuple(step for step in self.steps if step.triggered)

    @property
    def raw_scores(self):
        return np.array([step.raw_score for step in self.steps], dtype=np.float64)

    @property
    def calibrated_scores(self):
        return np.array([step.calibrated_score for step in self.steps], dtype=np.float64)


@dataclass(frozen=True)
class Pair:
    baseline: EpisodeRecord
    intervention: EpisodeRecord

    @property
    def key(self):
        return self.baseline.key

    @property
    def task_id(self):
        return self.baseline.task_id

    @property
    def recovered(self):
        return not self.baseline.succeeded and self.intervention.succeeded

    @property
    def disrupted(self):
        return self.baseline.succeeded and not self.intervention.succeeded


@dataclass(frozen=True)
class PairedDataset:
    """Matched baseline/intervention pairs keyed by (task_id, seed), in input order."""

    pairs: tuple = field(default_factory=tuple)

    @classmethod
    def from_records(cls, records):
        """
        Match baseline and intervention records by (task_id, seed).

        Raises:
            PairingError: on repeated (task_id, seed, condition) entries or
                when a key is missing one of its arms
        """
        arms = OrderedDict()
        duplicates = []
        for record in records:
            slot = arms.setdefault(record.key, {})
            if record.condition in slot:
                duplicates.append(f"{record.task_id}/seed {record.seed}/{record.condition.value}")
            slot[record.condition] = record

        if duplicates:
            raise PairingError(f"{len(duplicates)} repeated episode keys", mismatches=duplicates)

        missing = [
            f"{task_id}/seed {seed}: missing {condition.value}"
            for (task_id, seed), slot in arms.items()
            for condition in Condition
            if condition not in slot
        ]
        if missing:
            raise PairingError(f"{len(missing)} unmatched episodes", mismatches=missing)

        pairs = tuple(
            Pair(baseline=slot[Condition.BASELINE], intervention=slot[Condition.INTERVENTION])
            for slot in arms.values()
        )
        logger.debug("paired %d (task, seed) units", len(pairs))
        return cls(pairs=pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def task_ids(self):
        return list(OrderedDict.fromkeys(pair.task_id for pair in self.pairs))

    @property
    def seeds(self):
        return sorted({pair.key[1] for pair in self.pairs})

    @property
    def baseline_records(self):
        return [pair.baseline for pair in self.pairs]

    @property
    def intervention_records(self):
        return [pair.intervention for pair in self.pairs]

    def records(self):
        for pair in self.pairs:
            yield pair.baseline
            yield pair.intervention

    def head(self, n_tasks):
        """Pairs of the first ``n_tasks`` distinct tasks (every seed of each)."""
        keep = set(self.task_ids[:n_tasks])
        return PairedDataset(pairs=tuple(pair for pair in self.pairs if pair.task_id in keep))

    def for_seed(self, seed):
        return PairedDataset(pairs=tuple(pair for pair in self.pairs if pair.key[1] == seed))

    def outcome_table(self):
        if not self.pairs:
            raise EmptyInputError("dataset has no matched pairs")
        cells = {(False, False): 0, (True, False): 0, (False, True): 0, (True, True): 0}
        for pair in self.pairs:
            cells[(pair.baseline.succeeded, pair.intervention.succeeded)] += 1
        return OutcomeTable.from_cells(
            a=cells[(False, False)],
            b=cells[(True, False)],
            c=cells[(False, True)],
            d_count=cells[(True, True)],
        )

    def paired_outcomes(self):
        from .stats import PairedOutcomes

        if not self.pairs:
            raise EmptyInputError("dataset has no matched pairs")
        return PairedOutcomes(
            task_ids=[pair.task_id for pair in self.pairs],
            baseline=[pair.baseline.succeeded for pair in self.pairs],
            intervention=[pair.intervention.succeeded for pair in self.pairs],
        )
