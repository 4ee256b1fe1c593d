"""
Tests for the pre-deployment pilot and its decision report.
"""

import json

import pytest
from django.test import SimpleTestCase

from dj_disruption_recovery.exceptions import InputError, ParameterError
from dj_disruption_recovery.fixtures import load_fixture, profile_source
from dj_disruption_recovery.framework import DRProfile, OutcomeTable, Verdict, compute_profile, decide
from dj_disruption_recovery.pilot import PilotWarning, render_decision_tree, report_lines, run_pilot
from dj_disruption_recovery.records import PairedDataset
from dj_disruption_recovery.simulator import run_experiment

from .base import make_pair, single_trigger_config


def matched_dataset(outcomes):
    records = []
    for index, (baseline, intervention) in enumerate(outcomes):
        records.extend(make_pair(f"t{index:02d}", baseline, intervention))
    return PairedDataset.from_records(records)


class TestPublishedPilot(SimpleTestCase):
    """Test cases for pilots built from published measurements."""

    def test_alfworld_pilot_deploys(self):
        """Test the ALFWorld pilot report and its warnings."""
        fixture = load_fixture("alfworld_pilot")
        report = run_pilot(profile_source(fixture))
        self.assertEqual(report.verdict, Verdict.DEPLOY)
        self.assertAlmostEqual(float(report.p_star), fixture.data["published"]["p_star"], delta=0.01)
        self.assertAlmostEqual(float(report.predicted_delta), 0.0472, places=4)
        self.assertIn(PilotWarning.INTERVALS_UNAVAILABLE, report.warnings)
        self.assertIn(PilotWarning.PREFER_SELECTION, report.warnings)
        self.assertIsNone(report.p_ci)
        self.assertEqual(report.source, "rates")

    def test_rate_only_report_lines(self):
        """Test report lines when intervals are unavailable."""
        report = run_pilot(profile_source(load_fixture("alfworld_pilot")))
        lines = report_lines(report)
        self.assertEqual(lines[0], "p  = 0.8930  unavailable")
        self.assertEqual(lines[3], "p* = 0.8235  unavailable")
        self.assertIn("warning: rate-only input: intervals unavailable", lines)

    def test_glm_counts(self):
        """Test a pilot over the GLM-4.7 counts with bootstrap intervals."""
        table = profile_source(load_fixture("cross_benchmark_counts"), model="GLM-4.7")
        report = run_pilot(table, n_iter=1000)
        self.assertEqual(report.n_pilot, table.n_tasks)
        self.assertEqual(report.source, "counts")
        self.assertAlmostEqual(float(report.p_star), 0.3708, places=4)
        low, high = report.p_star_ci
        self.assertLessEqual(low, float(report.p_star))
        self.assertGreaterEqual(high, float(report.p_star))
        self.assertIsNotNone(report.predicted_delta_ci)


class TestPilotRuns(SimpleTestCase):
    """Test cases for pilots over datasets, tables and configs."""

    def test_identical_arms_are_undefined(self):
        """Test the undefined verdict when the arms never differ."""
        report = run_pilot(matched_dataset([(index % 2 == 0, index % 2 == 0) for index in range(12)]), n_iter=1000)
        self.assertEqual(report.verdict, Verdict.UNDEFINED)
        self.assertIsNone(report.p_star)
        self.assertIn(PilotWarning.THRESHOLD_UNDEFINED, report.warnings)
        self.assertIn(PilotWarning.RECOVERY_NOT_DOMINANT, report.warnings)

    def test_interval_around_boundary_warns(self):
        """Test the warning when the p interval straddles p*."""
        table = OutcomeTable.from_cells(a=14, b=4, c=6, d_count=16)
        report = run_pilot(table, n_iter=1000)
        self.assertEqual(report.verdict, Verdict.DEPLOY)
        self.assertIn(PilotWarning.CI_OVERLAPS_THRESHOLD, report.warnings)
        self.assertIn(PilotWarning.PILOT_TOO_SMALL, report.warnings)
        self.assertNotIn(PilotWarning.RECOVERY_NOT_DOMINANT, report.warnings)

    def test_dataset_head(self):
        """Test that a pilot uses the first n tasks of a dataset."""
        dataset = matched_dataset([(index % 3 == 0, index % 2 == 0) for index in range(30)])
        report = run_pilot(dataset, n_pilot=12, n_iter=1000)
        self.assertEqual(report.n_pilot, 12)
        self.assertEqual(report.profile.n_tasks, 12)
        self.assertEqual(report.source, "log")

    def test_pilot_larger_than_dataset(self):
        """Test that the pilot cannot exceed the dataset."""
        dataset = matched_dataset([(True, False)] * 6 + [(False, True)] * 6)
        with self.assertRaises(InputError):
            run_pilot(dataset, n_pilot=20)

    def test_pilot_below_floor(self):
        """Test that pilots below MIN_PILOT_TASKS are refused."""
        dataset = matched_dataset([(True, False)] * 6 + [(False, True)] * 6)
        with self.assertRaises(ParameterError):
            run_pilot(dataset, n_pilot=5)

    def test_simulated_pilot_needs_size(self):
        """Test that a simulated pilot needs n_pilot."""
        with self.assertRaises(ParameterError):
            run_pilot(single_trigger_config(0.3, 0.25, 0.15))

    def test_simulated_pilot(self):
        """Test a pilot simulated from a config."""
        report = run_pilot(single_trigger_config(0.3, 0.25, 0.15), n_pilot=60, n_iter=1000, seed=4)
        self.assertEqual(report.n_pilot, 60)
        self.assertEqual(report.source, "simulated:minimal")
        self.assertIsNotNone(report.p_ci)
        self.assertNotIn(PilotWarning.PILOT_TOO_SMALL, report.warnings)

    def test_unsupported_source(self):
        """Test that a plain list is not a pilot source."""
        with self.assertRaises(InputError):
            run_pilot([1, 0, 1])


class TestPilotReplicates(SimpleTestCase):
    """
    True rates (p, r, d) = (0.3, 0.25, 0.15) put p* + margin at 0.425, so
    deployment is the wrong call.
    """

    def wrong_deploy_share(self, n_pilot, replicates):
        config = single_trigger_config(0.3, 0.25, 0.15)
        deployed = 0
        for replicate in range(replicates):
            table = run_experiment(config, n_pilot, master_seed=replicate).table
            deployed += int(decide(compute_profile(table)).deploys)
        return deployed / replicates

    def test_fifty_task_pilot_usually_declines(self):
        """Test that most 50-task pilots decline a harmful intervention."""
        self.assertLessEqual(self.wrong_deploy_share(50, 200), 0.25)

    @pytest.mark.slow
    def test_larger_pilot_declines(self):
        """Test that 400-task pilots almost always decline it."""
        self.assertLessEqual(self.wrong_deploy_share(400, 100), 0.10)


class TestRenderDecisionTree(SimpleTestCase):
    """Test cases for the rendered decision trace and summary."""

    def test_trivial_profile_has_one_branch(self):
        """Test the trace of a trivial profile."""
        rendered = render_decision_tree(run_pilot(DRProfile.from_rates("0", None, "0.1")))
        self.assertEqual(len(rendered.lines), 2)
        self.assertTrue(rendered.lines[0].startswith("1. F = 0: every task succeeds at baseline"))
        self.assertEqual(rendered.lines[-1], "=> trivial_all_succeed")

    def test_deploying_tree(self):
        """Test the trace of the ALFWorld deploy decision."""
        rendered = render_decision_tree(run_pilot(profile_source(load_fixture("alfworld_pilot"))))
        self.assertEqual(rendered.lines[-1], "=> deploy")
        self.assertTrue(any("d/r > 1: prefer selection over intervention" in line for line in rendered.lines))
        self.assertIn("p > p* + margin", rendered.text)

    def test_summary_serializes(self):
        """Test that the summary is plain JSON."""
        rendered = render_decision_tree(run_pilot(OutcomeTable.from_cells(a=14, b=4, c=6, d_count=16), n_iter=1000))
        summary = json.loads(json.dumps(rendered.summary))
        self.assertEqual(summary["verdict"], "deploy")
        self.assertEqual(summary["recoveries"], 6)
        self.assertEqual(summary["disruptions"], 4)
        self.assertAlmostEqual(summary["p_star"], 0.4)
        self.assertIn("CI overlaps threshold: p interval contains p* + margin", summary["warnings"])
        self.assertEqual(summary["trace"][-1], "p > p* + margin")
