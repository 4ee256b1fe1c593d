"""
Results tables: per-condition success rates with bootstrap intervals, paired
deltas against the baseline row and Holm-corrected significance.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .conf import get_setting
from .exceptions import EmptyInputError, PairingError
from .records import Condition, PairedDataset
from .stats import holm_bonferroni, paired_bootstrap, success_ci

logger = logging.getLogger(__name__)

COLUMNS = ["condition", "n", "success", "ci_low", "ci_high", "delta", "p_value", "holm_significant", "best_delta"]
DECIMALS = 4


@dataclass(frozen=True)
class ResultsTable:
    frame: pd.DataFrame
    alpha: float

    @property
    def baseline(self):
        return self.frame.iloc[0]

    @property
    def arms(self):
        return self.frame.iloc[1:]

    @property
    def best_delta(self):
        value = self.frame["best_delta"].iloc[0]
        return None if pd.isna(value) else float(value)

    def row(self, condition):
        matches = self.frame[self.frame["condition"] == condition]
        if matches.empty:
            raise KeyError(condition)
        return matches.iloc[0]

    def _rounded(self):
        return self.frame.round(DECIMALS)

    def to_text(self):
        return self._rounded().to_string(
            index=False, na_rep="", float_format=lambda value: f"{value:.{DECIMALS}f}"
        )

    def to_csv(self):
        return self._rounded().to_csv(index=False, na_rep="", float_format=f"%.{DECIMALS}f", lineterminator="\n")


def build_results_table(baseline, arms=(), n_iter=None, seed=0, alpha=0.05, confidence=None, baseline_label="baseline"):
    """
    Assemble a ResultsTable.

    Args:
        baseline: Baseline success flags, one per (task, seed) unit
        arms: (label, PairedOutcomes) per intervention condition, each paired
            against the same baseline units
        n_iter: Bootstrap iterations (defaults to BOOTSTRAP_ITERATIONS)
        seed: Bootstrap seed
        alpha: Family-wise level for the Holm correction
        confidence: Interval level (defaults to CONFIDENCE_LEVEL)
    """
    baseline = np.asarray(baseline, dtype=bool)
    if baseline.size == 0:
        raise EmptyInputError("baseline has no outcomes")
    n_iter = int(get_setting("BOOTSTRAP_ITERATIONS", n_iter))
    options = dict(n_iter=n_iter, seed=seed, confidence=confidence)

    low, high = success_ci(baseline, **options)
    rows = [
        {
            "condition": baseline_label,
            "n": int(baseline.size),
            "success": float(baseline.mean()),
            "ci_low": low,
            "ci_high": high,
            "delta": np.nan,
            "p_value": np.nan,
            "holm_significant": np.nan,
            "best_delta": np.nan,
        }
    ]
    p_values = []
    for label, pairs in arms:
        low, high = success_ci(pairs.intervention, **options)
        result = paired_bootstrap(pairs, n_iter=max(n_iter, 1000), seed=seed, confidence=confidence)
        p_values.append(result.p_one_sided)
        rows.append(
            {
                "condition": label,
                "n": pairs.n_units,
                "success": float(pairs.intervention.mean()),
                "ci_low": low,
                "ci_high": high,
                "delta": result.delta_mean,
                "p_value": result.p_one_sided,
                "holm_significant": np.nan,
                "best_delta": np.nan,
            }
        )

    for row, flag in zip(rows[1:], holm_bonferroni(p_values, alpha=alpha)):
        row["holm_significant"] = flag
    if len(rows) > 1:
        rows[0]["best_delta"] = max(row["delta"] for row in rows[1:])

    frame = pd.DataFrame(rows, columns=COLUMNS)
    logger.debug("results table with %d conditions", len(rows))
    return ResultsTable(frame=frame, alpha=alpha)


def _describe(key):
    return f"{key[0]}/seed {key[1]}"


def results_from_logs(logs, n_iter=None, seed=0, alpha=0.05, confidence=None):
    """
    ResultsTable from episode logs sharing one baseline.

    Args:
        logs: (label, records) per log. The first log's baseline records form
            the baseline row; every log must carry the same baseline outcome
            for every (task, seed) key, so each delta is measured against
            that row. A log without intervention records adds no condition.

    Raises:
        PairingError: when a log's baseline keys or outcomes differ from the
            first log's
    """
    if not logs:
        raise EmptyInputError("no logs given")

    reference = None
    arms = []
    for label, records in logs:
        baseline = {record.key: record.succeeded for record in records if record.condition is Condition.BASELINE}
        if reference is None:
            reference = baseline
            reference_records = [record for record in records if record.condition is Condition.BASELINE]
        elif baseline.keys() != reference.keys():
            mismatches = sorted(_describe(key) for key in baseline.keys() ^ reference.keys())
            raise PairingError(f"{label}: task set differs from the first log", mismatches=mismatches)
        else:
            mismatches = sorted(_describe(key) for key, succeeded in baseline.items() if succeeded != reference[key])
            if mismatches:
                raise PairingError(f"{label}: baseline outcomes differ from the first log", mismatches=mismatches)
        if any(record.condition is Condition.INTERVENTION for record in records):
            arms.append((label, PairedDataset.from_records(records).paired_outcomes()))

    if not reference:
        raise EmptyInputError("first log holds no baseline episodes")
    return build_results_table(
        [record.succeeded for record in reference_records],
        arms,
        n_iter=n_iter,
        seed=seed,
        alpha=alpha,
        confidence=confidence,
    )
