"""
Upper bounds: oracle intervention, oracle Best-of-2 and critic-score selection.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conf import get_setting
from .exceptions import EmptyInputError, InputError, PairingError, ParameterError

logger = logging.getLogger(__name__)

SELECTION_POWER_CAVEAT = (
    "Contested-task selection is underpowered: with 11 contested tasks there is 23% power "
    "to detect a 15 pp accuracy difference at alpha = 0.05; about 50 contested tasks are "
    "needed for 80% power."
)

AGGREGATES = ("max", "mean", "final")


@dataclass(frozen=True)
class OracleCeiling:
    baseline_rate: float
    ceiling_rate: float
    n_units: int

    @property
    def delta(self):
        return self.ceiling_rate - self.baseline_rate


def oracle_intervention_ceiling(dataset):
    """
    Success rate when intervention touches only the episodes that would fail.

    Baseline successes are kept as they are, so nothing can be disrupted; a
    baseline failure counts as a success when its intervention arm recovered.

    Raises:
        InputError: when the records carry no latent baseline outcome
    """
    if not len(dataset):
        raise EmptyInputError("dataset has no matched pairs")
    successes = 0
    baseline_successes = 0
    for pair in dataset:
        if pair.baseline.latent_outcome is None:
            raise InputError(
                f"{pair.task_id}/seed {pair.key[1]}: oracle intervention needs latent outcomes"
            )
        latent_success = pair.baseline.latent_outcome.succeeded
        baseline_successes += int(pair.baseline.succeeded)
        successes += int(latent_success or pair.intervention.succeeded)
    n_units = len(dataset)
    return OracleCeiling(
        baseline_rate=baseline_successes / n_units,
        ceiling_rate=successes / n_units,
        n_units=n_units,
    )


def oracle_bo2(outcomes_seed1, outcomes_seed2):
    """Best-of-2 with perfect ranking: a task succeeds if either seed did."""
    first = np.asarray(outcomes_seed1, dtype=bool)
    second = np.asarray(outcomes_seed2, dtype=bool)
    if first.size != second.size:
        raise PairingError(f"seed outcome lists differ in length ({first.size} vs {second.size})")
    if first.size == 0:
        raise EmptyInputError("no outcomes")
    return float(np.mean(first | second))


def _by_task(records):
    mapped = {}
    for record in records:
        if record.task_id in mapped:
            raise PairingError(f"task {record.task_id} appears twice in one seed")
        mapped[record.task_id] = record
    return mapped


def _aligned(records_a, records_b):
    first, second = _by_task(records_a), _by_task(records_b)
    if first.keys() != second.keys():
        mismatches = sorted(set(first) ^ set(second))
        raise PairingError(f"{len(mismatches)} tasks present in only one seed", mismatches=mismatches)
    return [(first[task_id], second[task_id]) for task_id in first]


@dataclass(frozen=True)
class BestOfTwo:
    seed_rates: tuple
    bo2_rate: float
    n_tasks: int

    @property
    def baseline_rate(self):
        return float(np.mean(self.seed_rates))

    @property
    def delta(self):
        return self.bo2_rate - self.baseline_rate


def bo2_from_records(records_a, records_b):
    """Oracle Best-of-2 over two seeds' records of the same arm."""
    aligned = _aligned(records_a, records_b)
    first = [a.succeeded for a, _ in aligned]
    second = [b.succeeded for _, b in aligned]
    return BestOfTwo(
        seed_rates=(float(np.mean(first)), float(np.mean(second))),
        bo2_rate=oracle_bo2(first, second),
        n_tasks=len(aligned),
    )


def trajectory_score(record, aggregate=None):
    """
    Trajectory-level critic score from the per-step calibrated scores.

    Args:
        record: EpisodeRecord with recorded steps
        aggregate: "max" (default from TRAJECTORY_SCORE), "mean" or "final"
    """
    aggregate = get_setting("TRAJECTORY_SCORE", aggregate)
    if aggregate not in AGGREGATES:
        raise ParameterError(f"unknown aggregate {aggregate!r}", location="aggregate")
    scores = record.calibrated_scores
    if scores.size == 0:
        raise InputError(f"{record.task_id}/seed {record.seed}: no recorded steps to score")
    if aggregate == "max":
        return float(scores.max())
    if aggregate == "mean":
        return float(scores.mean())
    return float(scores[-1])


@dataclass(frozen=True)
class ContestedPair:
    task_id: str
    outcome_a: bool
    outcome_b: bool
    score_a: float
    score_b: float

    def __post_init__(self):
        if bool(self.outcome_a) == bool(self.outcome_b):
            raise InputError(f"task {self.task_id} is not contested")


def contested_pairs(records_a, records_b, aggregate=None):
    """Tasks where exactly one of two seeds succeeded, with trajectory-level scores."""
    pairs = []
    for first, second in _aligned(records_a, records_b):
        if first.succeeded == second.succeeded:
            continue
        pairs.append(
            ContestedPair(
                task_id=first.task_id,
                outcome_a=first.succeeded,
                outcome_b=second.succeeded,
                score_a=trajectory_score(first, aggregate),
                score_b=trajectory_score(second, aggregate),
            )
        )
    return pairs


@dataclass(frozen=True)
class SelectionResult:
    n_contested: int
    correct: int
    n_tasks: int
    n_ties: int = 0

    @property
    def selection_accuracy(self):
        return self.correct / self.n_contested

    @property
    def delta_pp(self):
        """Net success change against a coin flip on every contested task."""
        return (self.correct - self.n_contested / 2.0) / self.n_tasks

    @property
    def oracle_delta_pp(self):
        return (self.n_contested / 2.0) / self.n_tasks

    @property
    def tied(self):
        return self.n_ties > 0


def critic_select(pairs, n_tasks=None):
    """
    Pick the lower-scored (predicted-success) trajectory of each contested pair.

    Ties go to the first trajectory and are counted in ``n_ties``.

    Args:
        pairs: ContestedPair list
        n_tasks: Task count the delta is expressed over; defaults to the
            number of contested tasks
    """
    if not pairs:
        raise EmptyInputError("no contested pairs")
    correct = ties = 0
    for pair in pairs:
        if pair.score_a == pair.score_b:
            ties += 1
        chosen = pair.outcome_a if pair.score_a <= pair.score_b else pair.outcome_b
        correct += int(chosen)
    if ties:
        logger.warning("%d contested pairs had tied scores; chose the first trajectory", ties)
    n_tasks = n_tasks or len(pairs)
    if n_tasks < len(pairs):
        raise ParameterError("n_tasks cannot be below the contested count", location="n_tasks")
    return SelectionResult(n_contested=len(pairs), correct=correct, n_tasks=n_tasks, n_ties=ties)


def disruption_tax(bo2_rate, ceiling_rate):
    """Headroom selection keeps that mid-execution intervention gives up."""
    return bo2_rate - ceiling_rate


@dataclass(frozen=True)
class OracleRow:
    model: str
    benchmark: str
    baseline_rate: float
    ceiling_rate: float
    bo2_rate: float
    published: Optional[dict] = None

    @property
    def ceiling_delta(self):
        return self.ceiling_rate - self.baseline_rate

    @property
    def bo2_delta(self):
        return self.bo2_rate - self.baseline_rate

    @property
    def tax(self):
        return disruption_tax(self.bo2_rate, self.ceiling_rate)


def oracle_rows_from_fixture(data):
    """
    Re-derive oracle ceilings from the counts stored in an ``oracle_ceilings`` fixture.

    The ceiling adds the oracle recoveries to the baseline successes over all
    units; Best-of-2 is measured over tasks.
    """
    rows = []
    for entry in data["rows"]:
        n_units = entry["n_units"]
        rows.append(
            OracleRow(
                model=entry["model"],
                benchmark=entry["benchmark"],
                baseline_rate=entry["baseline_successes"] / n_units,
                ceiling_rate=(entry["baseline_successes"] + entry["oracle_recoveries"]) / n_units,
                bo2_rate=entry["bo2_successes"] / entry["bo2_tasks"],
                published=entry.get("published"),
            )
        )
    return rows


def selection_from_fixture(data):
    """SelectionResult per row of a ``critic_selection`` fixture, keyed by model."""
    return {
        entry["model"]: SelectionResult(
            n_contested=entry["contested"], correct=entry["correct"], n_tasks=entry["n_tasks"]
        )
        for entry in data["rows"]
    }
