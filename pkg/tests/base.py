"""
Base test class for dj-disruption-recovery tests.
"""

import shutil
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from dj_disruption_recovery.config import parse_config
from dj_disruption_recovery.records import Condition, EpisodeRecord, Outcome, Step


def minimal_config(**sections):
    """
    A small valid simulator config; keyword sections are merged over the defaults.
    """
    data = {
        "name": "minimal",
        "agent": {"p_fail": 0.4, "step_budget": 15},
        "critic": {
            "fail_score": {"alpha": 6, "beta": 2},
            "succeed_score": {"alpha": 2, "beta": 6},
        },
        "mechanism": {"kind": "rollback", "recovery_prob": 0.3, "disruption_prob": 0.2},
        "policy": {"policy": "learned_threshold", "tau": 0.6},
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return parse_config(data)


def single_trigger_config(p_fail, recovery_prob, disruption_prob, **sections):
    """Every intervention episode triggers exactly once, at step 0."""
    return minimal_config(
        agent={"p_fail": p_fail},
        mechanism={"kind": "append", "recovery_prob": recovery_prob, "disruption_prob": disruption_prob},
        policy={"policy": "learned_threshold", "tau": 0.0, "intervention_budget": 1, "min_step": 0},
        **sections,
    )


def make_record(task_id, seed=0, condition=Condition.BASELINE, outcome=Outcome.SUCCESS, scores=(0.2,), triggered=()):
    steps = tuple(
        Step(index=index, raw_score=score, calibrated_score=score, triggered=index in triggered)
        for index, score in enumerate(scores)
    )
    return EpisodeRecord(
        task_id=task_id,
        seed=seed,
        condition=Condition(condition),
        outcome=Outcome(outcome),
        n_steps=len(steps),
        steps=steps,
        n_interventions=len(triggered),
    )


def make_pair(task_id, baseline_success, intervention_success, seed=0):
    return [
        make_record(task_id, seed, Condition.BASELINE, Outcome.SUCCESS if baseline_success else Outcome.FAILURE),
        make_record(
            task_id, seed, Condition.INTERVENTION, Outcome.SUCCESS if intervention_success else Outcome.FAILURE
        ),
    ]


class DisruptionRecoveryTestCase(SimpleTestCase):
    """
    Base test case for dj-disruption-recovery tests.
    Provides a scratch directory removed after each test.
    """

    def setUp(self):
        self.tmpdir = Path(tempfile.mkdtemp(prefix="dj-disruption-recovery-"))

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def write_yaml(self, name, text):
        path = self.tmpdir / name
        path.write_text(text, encoding="utf-8")
        return path
