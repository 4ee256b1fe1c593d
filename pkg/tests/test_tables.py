"""
Tests for results tables built from paired outcomes and episode logs.
"""

from io import StringIO

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from dj_disruption_recovery.exceptions import EmptyInputError, PairingError
from dj_disruption_recovery.simulator import run_experiment
from dj_disruption_recovery.stats import PairedOutcomes, simulate_paired_outcomes
from dj_disruption_recovery.tables import COLUMNS, build_results_table, results_from_logs

from .base import make_pair, minimal_config


class TestBuildResultsTable(SimpleTestCase):
    """Test cases for assembling results tables."""

    def test_baseline_only(self):
        """Test a table with only the baseline row."""
        table = build_results_table([1, 0, 1, 1], n_iter=1000)
        self.assertEqual(len(table.frame), 1)
        self.assertEqual(list(table.frame.columns), COLUMNS)
        self.assertEqual(table.baseline["success"], 0.75)
        self.assertIsNone(table.best_delta)
        self.assertTrue(table.arms.empty)

    def test_large_effect_survives_holm(self):
        """Test that a large effect stays significant after correction."""
        strong = simulate_paired_outcomes(20000, 1, 0.4, 0.1, np.random.default_rng(0))
        null = PairedOutcomes(task_ids=strong.task_ids, baseline=strong.baseline, intervention=strong.baseline)
        table = build_results_table(strong.baseline, [("strong", strong), ("null", null)], n_iter=1000)
        self.assertTrue(table.row("strong")["holm_significant"])
        self.assertFalse(table.row("null")["holm_significant"])
        self.assertAlmostEqual(table.row("strong")["delta"], 0.1, delta=0.015)
        self.assertAlmostEqual(table.best_delta, table.row("strong")["delta"])

    def test_text_and_csv_agree(self):
        """Test that text and CSV render the same numbers."""
        rng = np.random.default_rng(2)
        pairs = simulate_paired_outcomes(200, 1, 0.35, 0.05, rng)
        table = build_results_table(pairs.baseline, [("cal_append", pairs)], n_iter=1000)
        parsed = pd.read_csv(StringIO(table.to_csv()))
        self.assertEqual(list(parsed.columns), COLUMNS)
        text = table.to_text()
        for column in ("success", "ci_low", "ci_high"):
            for value in parsed[column]:
                self.assertIn(f"{value:.4f}", text)
        self.assertEqual(table.to_csv().splitlines()[1].split(",")[0], "baseline")
        self.assertNotIn("None", text)
        self.assertNotIn("nan", text)

    def test_empty_baseline(self):
        """Test that an empty baseline is rejected."""
        with self.assertRaises(EmptyInputError):
            build_results_table([])

    def test_unknown_condition(self):
        table = build_results_table([1, 0], n_iter=1000)
        with self.assertRaises(KeyError):
            table.row("rollback")


class TestResultsFromLogs(SimpleTestCase):
    """Test cases for tables built from episode logs."""

    def test_logs_share_baseline_row(self):
        """Test that several logs report one baseline row."""
        config = minimal_config(policy={"tau": 0.0})
        rollback = run_experiment(config, n_tasks=80, master_seed=3).dataset
        append = run_experiment(config.evolve(mechanism={"kind": "append"}), n_tasks=80, master_seed=3).dataset
        logs = [("rollback", list(rollback.records())), ("append", list(append.records()))]
        table = results_from_logs(logs, n_iter=1000)
        self.assertEqual(list(table.frame["condition"]), ["baseline", "rollback", "append"])
        self.assertEqual(table.baseline["n"], 80)
        expected = float(rollback.outcome_table().intervention_success_rate)
        self.assertAlmostEqual(table.row("rollback")["success"], expected)

    def test_baseline_only_log_adds_no_arm(self):
        """Test that a baseline-only log adds no condition."""
        dataset = run_experiment(minimal_config(), n_tasks=30, master_seed=4).dataset
        table = results_from_logs([("baseline-run", dataset.baseline_records)], n_iter=1000)
        self.assertEqual(len(table.frame), 1)

    def test_mismatched_task_sets(self):
        """Test that logs over different tasks are rejected."""
        first = make_pair("t0", True, False) + make_pair("t1", False, True)
        second = make_pair("t0", True, True) + make_pair("t2", False, False)
        with self.assertRaises(PairingError) as ctx:
            results_from_logs([("first", first), ("second", second)], n_iter=1000)
        self.assertEqual(ctx.exception.mismatches, ["t1/seed 0", "t2/seed 0"])

    def test_first_log_needs_baseline(self):
        """Test that the first log must hold baseline episodes."""
        with self.assertRaises(EmptyInputError):
            results_from_logs([("empty", [])], n_iter=1000)

    def test_differing_baseline_outcomes_are_rejected(self):
        """A log whose baseline disagrees with the first log cannot be scored against the baseline row."""
        first = make_pair("t0", False, False) + make_pair("t1", False, True)
        second = make_pair("t0", True, False) + make_pair("t1", False, True)
        with self.assertRaises(PairingError) as ctx:
            results_from_logs([("first", first), ("second", second)], n_iter=1000)
        self.assertEqual(ctx.exception.mismatches, ["t0/seed 0"])

    def test_deltas_are_measured_against_the_baseline_row(self):
        """Every arm's delta equals its success rate minus the baseline row's."""
        config = minimal_config(policy={"tau": 0.0})
        rollback = run_experiment(config, n_tasks=60, master_seed=5).dataset
        append = run_experiment(config.evolve(mechanism={"kind": "append"}), n_tasks=60, master_seed=5).dataset
        table = results_from_logs(
            [("rollback", list(rollback.records())), ("append", list(append.records()))], n_iter=1000
        )
        for label in ("rollback", "append"):
            row = table.row(label)
            self.assertAlmostEqual(row["delta"], row["success"] - table.baseline["success"])
