"""
Tests for the shipped measurement fixtures.
"""

from statistics import mean

from dj_disruption_recovery.config import PolicyKind
from dj_disruption_recovery.exceptions import ConfigValidationError, InputError
from dj_disruption_recovery.fixtures import (
    KINDS,
    available_fixtures,
    load_fixture,
    profile_source,
)
from dj_disruption_recovery.framework import DRProfile, OutcomeTable, decide, threshold

from .base import DisruptionRecoveryTestCase


class TestFixtureLoading(DisruptionRecoveryTestCase):
    """Test cases for finding and loading fixtures."""

    def test_every_shipped_fixture_loads(self):
        """Test that every shipped fixture has a kind, provenance and data."""
        names = available_fixtures()
        self.assertIn("alfworld_pilot", names)
        for name in names:
            with self.subTest(fixture=name):
                fixture = load_fixture(name)
                self.assertIn(fixture.kind, KINDS)
                self.assertTrue(fixture.provenance)
                self.assertNotIn("\n", fixture.provenance)
                self.assertIsInstance(fixture.data, dict)

    def test_load_by_path(self):
        """Test loading a fixture from a file path."""
        path = self.write_yaml(
            "pilot.yaml",
            "kind: rate_profile\nprovenance: hand entered\ndata: {p: '0.5', r: '0.3', d: '0.1'}\n",
        )
        fixture = load_fixture(str(path))
        self.assertEqual(fixture.name, "pilot")
        self.assertEqual(profile_source(fixture).p, DRProfile.from_rates("0.5").p)

    def test_unknown_name(self):
        """Test that an unknown name lists the available fixtures."""
        with self.assertRaises(InputError) as ctx:
            load_fixture("no_such_fixture")
        self.assertIn("alfworld_pilot", str(ctx.exception))

    def test_missing_provenance(self):
        """Test that provenance is required."""
        path = self.write_yaml("bare.yaml", "kind: rate_profile\ndata: {p: '0.5'}\n")
        with self.assertRaises(ConfigValidationError) as ctx:
            load_fixture(str(path))
        self.assertEqual(ctx.exception.location, "provenance")

    def test_unknown_kind(self):
        """Test that an unknown kind is rejected."""
        path = self.write_yaml("odd.yaml", "kind: horoscope\nprovenance: x\ndata: {}\n")
        with self.assertRaises(ConfigValidationError):
            load_fixture(str(path))

    def test_unknown_model_row(self):
        with self.assertRaises(InputError):
            load_fixture("cross_benchmark_counts").row("GPT-2")


class TestProfileSources(DisruptionRecoveryTestCase):
    """Test cases for turning fixtures into profiles and tables."""

    def test_rate_profile(self):
        """Test the GLM-4.7 HotPotQA rate profile."""
        profile = profile_source(load_fixture("glm_hotpotqa_profile"))
        self.assertIsInstance(profile, DRProfile)
        self.assertFalse(profile.has_counts)
        self.assertAlmostEqual(float(threshold(profile.r, profile.d)), 0.371, delta=0.001)
        self.assertAlmostEqual(float(decide(profile).predicted_delta), -0.0291, places=4)

    def test_outcome_counts_need_a_model(self):
        """Test selecting one model's counts."""
        fixture = load_fixture("cross_benchmark_counts")
        with self.assertRaises(InputError):
            profile_source(fixture)
        table = profile_source(fixture, model="Qwen-3-8B")
        self.assertIsInstance(table, OutcomeTable)
        self.assertEqual((table.failures, table.c, table.successes, table.b), (387, 66, 142, 31))

    def test_non_profile_fixture(self):
        with self.assertRaises(InputError):
            profile_source(load_fixture("oracle_ceilings"))


class TestPublishedConsistency(DisruptionRecoveryTestCase):
    """Test cases checking the published numbers against each other."""

    def test_per_seed_means(self):
        """Test that per-seed values average to the reported means."""
        for table in load_fixture("per_seed_results").data["tables"]:
            for row in table["rows"]:
                with self.subTest(benchmark=table["benchmark"], model=table["model"], condition=row["condition"]):
                    self.assertEqual(len(row["values"]), 3)
                    self.assertAlmostEqual(mean(row["values"]), row["mean"], delta=0.1)

    def test_best_delta_matches_condition_columns(self):
        """Test the best change against each row's own condition columns."""
        fixture = load_fixture("results_table")
        conditions = fixture.data["conditions"]
        mismatched = []
        for row in fixture.rows():
            best = max(row[condition] for condition in conditions) - row["baseline"]
            if abs(best - row["best_delta"]) > 0.05:
                mismatched.append((row["benchmark"], row["model"]))
        # the published GAIA / GLM-4.7 best change (-4.4) disagrees with its own columns (-3.3)
        self.assertEqual(mismatched, [("GAIA", "GLM-4.7")])

    def test_intervention_rate_reductions(self):
        """Test the reported intervention-rate reductions."""
        for row in load_fixture("intervention_rates").rows():
            with self.subTest(model=row["model"]):
                change = row["calibrated"] / row["uncalibrated"] - 1.0
                self.assertAlmostEqual(change, row["reduction"], delta=0.01)

    def test_ece_reductions(self):
        """Test the reported ECE reductions."""
        for row in load_fixture("calibration_results").rows():
            with self.subTest(model=row["model"]):
                reduction = 1.0 - row["ece_after"] / row["ece_before"]
                self.assertAlmostEqual(reduction, row["reduction"], delta=0.01)

    def test_threshold_sweep_never_beats_baseline(self):
        """Test that no published threshold beats the baseline."""
        data = load_fixture("threshold_sweep").data
        self.assertTrue(all(row["success"] < data["baseline"] for row in data["rows"]))

    def test_critic_quality_overall_row_pools_models(self):
        """Test that the overall critic row pools the per-model rows."""
        fixture = load_fixture("critic_quality")
        models = [row for row in fixture.rows() if row["model"] != "Overall"]
        overall = fixture.row("Overall")
        self.assertEqual(sum(row["samples"] for row in models), overall["samples"])
        aurocs = [row["auroc"] for row in models]
        self.assertTrue(min(aurocs) <= overall["auroc"] <= max(aurocs))

    def test_heuristic_policies_name_simulator_policies(self):
        """Test that every heuristic policy is a simulator policy and hurts."""
        data = load_fixture("heuristic_policies").data
        for row in data["rows"]:
            with self.subTest(policy=row["policy"]):
                self.assertIsInstance(PolicyKind(row["policy"]), PolicyKind)
                self.assertLess(row["success"], data["baseline"])

    def test_cascades_dominate_intervened_episodes(self):
        """Test the published cascade and no-answer figures."""
        fixture = load_fixture("cascade_stats")
        self.assertTrue(all(row["cascade_rate"] > 0.9 for row in fixture.rows()))
        no_answer = fixture.data["no_answer"]
        self.assertGreater(no_answer["intervention"], 10 * no_answer["baseline"])
