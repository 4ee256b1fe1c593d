"""
Tests for reading and writing JSON-lines episode logs.
"""

import json

from dj_disruption_recovery.exceptions import EmptyInputError, InputError
from dj_disruption_recovery.logs import read_dataset, read_log, record_from_dict, record_to_dict, write_log
from dj_disruption_recovery.records import Condition, Outcome, PairedDataset
from dj_disruption_recovery.simulator import run_experiment

from .base import DisruptionRecoveryTestCase, make_pair, minimal_config


class TestEpisodeLogs(DisruptionRecoveryTestCase):
    """Test cases for JSON-lines episode logs."""

    def test_simulated_log_reads_back_unchanged(self):
        """Test that a simulated dataset survives writing and reading."""
        dataset = run_experiment(minimal_config(calibration={"temperature": 2.27}), n_tasks=25, master_seed=1).dataset
        path = self.tmpdir / "runs" / "minimal.jsonl"
        self.assertEqual(write_log(dataset, path), 50)
        self.assertEqual(read_dataset(path), dataset)

    def test_rewriting_is_byte_identical(self):
        """Test that rewriting a read log gives the same bytes."""
        dataset = run_experiment(minimal_config(), n_tasks=10, master_seed=2).dataset
        first, second = self.tmpdir / "first.jsonl", self.tmpdir / "second.jsonl"
        write_log(dataset, first)
        write_log(read_log(first), second)
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_line_fields(self):
        """Test the fields written for one episode."""
        result = run_experiment(minimal_config(policy={"tau": 0.0}), n_tasks=1, master_seed=3)
        record = result.dataset.pairs[0].intervention
        line = record_to_dict(record)
        self.assertEqual(line["condition"], "intervention")
        self.assertEqual(line["n_steps"], record.n_steps)
        self.assertEqual(len(line["interventions"]), record.n_interventions)
        self.assertEqual(set(line["interventions"][0]), {"step", "raw_score", "calibrated_score"})
        self.assertIn("latent_outcome", line)

    def test_interventions_only_input(self):
        """Test reading a line that lists only the triggered steps."""
        line = {
            "task_id": "hotpot-17",
            "seed": 42,
            "condition": "intervention",
            "outcome": "no_answer",
            "n_steps": 15,
            "interventions": [
                {"step": 3, "raw_score": 0.91, "calibrated_score": 0.71},
                {"step": 4, "raw_score": 0.88, "calibrated_score": 0.69},
            ],
        }
        record = record_from_dict(line)
        self.assertEqual(record.outcome, Outcome.NO_ANSWER)
        self.assertFalse(record.answered)
        self.assertEqual(record.n_interventions, 2)
        self.assertEqual(record.n_steps, 15)
        self.assertEqual([step.index for step in record.interventions], [3, 4])
        self.assertIsNone(record.latent_outcome)

    def test_hand_written_log_pairs_up(self):
        """Test pairing a hand-written log."""
        records = make_pair("t0", True, False) + make_pair("t1", False, True)
        path = self.tmpdir / "pairs.jsonl"
        write_log(records, path)
        dataset = read_dataset(path)
        self.assertEqual(len(dataset), 2)
        self.assertEqual(dataset.outcome_table().b, 1)
        self.assertEqual(dataset.outcome_table().c, 1)

    def test_missing_fields_name_the_line(self):
        """Test that missing fields report file, line and field names."""
        path = self.tmpdir / "broken.jsonl"
        good = json.dumps(record_to_dict(make_pair("t0", True, True)[0]))
        path.write_text(good + "\n" + json.dumps({"task_id": "t1", "seed": 0}) + "\n", encoding="utf-8")
        with self.assertRaises(InputError) as ctx:
            read_log(path)
        self.assertIn("broken.jsonl:2:", str(ctx.exception))
        self.assertIn("missing fields: condition, outcome, n_steps, interventions", str(ctx.exception))

    def test_invalid_json_names_the_line(self):
        """Test that invalid JSON reports its line."""
        path = self.tmpdir / "garbled.jsonl"
        path.write_text("\n{not json\n", encoding="utf-8")
        with self.assertRaises(InputError) as ctx:
            read_log(path)
        self.assertIn("garbled.jsonl:2: invalid JSON", str(ctx.exception))

    def test_unknown_outcome(self):
        """Test that an unknown outcome is an input error."""
        line = record_to_dict(make_pair("t0", True, True)[0])
        line["outcome"] = "maybe"
        with self.assertRaises(InputError):
            record_from_dict(line, "run.jsonl:1: ")

    def test_blank_lines_are_skipped(self):
        """Test that blank lines are ignored."""
        path = self.tmpdir / "spaced.jsonl"
        lines = [json.dumps(record_to_dict(record)) for record in make_pair("t0", False, True)]
        path.write_text("\n\n".join(lines) + "\n\n", encoding="utf-8")
        self.assertEqual(len(read_log(path)), 2)

    def test_empty_log(self):
        """Test that a log without episodes is rejected."""
        path = self.tmpdir / "empty.jsonl"
        path.write_text("\n", encoding="utf-8")
        with self.assertRaises(EmptyInputError):
            read_log(path)

    def test_missing_file(self):
        with self.assertRaises(InputError):
            read_log(self.tmpdir / "absent.jsonl")

    def test_unmatched_episode(self):
        """Test that a baseline without its intervention cannot be paired."""
        path = self.tmpdir / "unmatched.jsonl"
        write_log(make_pair("t0", True, True)[:1], path)
        with self.assertRaises(InputError):
            read_dataset(path)

    def test_records_keep_condition_order(self):
        """Test that baseline lines come before intervention lines."""
        dataset = PairedDataset.from_records(make_pair("t0", True, False))
        path = self.tmpdir / "ordered.jsonl"
        write_log(dataset, path)
        conditions = [record.condition for record in read_log(path)]
        self.assertEqual(conditions, [Condition.BASELINE, Condition.INTERVENTION])
