"""
Synthetic agent/critic/intervention world with known ground truth.

An episode draws its latent outcome once, then walks its steps. Each step's
critic score comes from the Beta law of the episode's current outcome class.
When the policy fires, the mechanism gets one flip attempt per trigger, with
at most one flip per episode:

    failing    -> succeeding with probability ``recovery_prob``
    succeeding -> failing    with probability ``disruption_prob``

A disrupted episode abandons its answer and runs to the step budget.
ROLLBACK retries the flagged step, so every trigger extends the episode by
one step; APPEND carries on in place. Each trigger multiplies the odds of
later triggers by the cascade multiplier.

Baseline and intervention arms of a (task, seed) pair share the latent draw,
conclusion step and score arrays (common random numbers); only trigger and
flip randomness is arm specific.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy.special import logit

from .config import MechanismKind, PolicyKind, PolicySpec
from .exceptions import EmptyInputError, ParameterError
from .framework import compute_profile
from .records import Condition, EpisodeRecord, Outcome, PairedDataset, Pair, Step
from .seeding import episode_key
from .utils import clamp_scores, resolve_jobs, shift_odds

logger = logging.getLogger(__name__)

BASELINE_POLICY = PolicySpec(policy=PolicyKind.NONE)


def task_id_for(index):
    return f"task-{index:05d}"


class _Trigger:
    """Per-episode trigger rule; ``shift`` is the accumulated cascade log-odds."""

    def __init__(self, policy, match_rate):
        self.policy = policy
        self.kind = policy.policy
        self.rate = policy.rate
        if self.kind is PolicyKind.MATCHED_RATE:
            if match_rate is None:
                raise ParameterError("matched_rate policy needs a measured match rate", location="policy")
            self.rate = match_rate
        tau = policy.tau
        self.always = tau <= 0.0
        self.never = tau >= 1.0
        self.logit_tau = None if (self.always or self.never) else float(logit(tau))

    def _over_threshold(self, score_logit, shift):
        if self.never:
            return False
        if self.always:
            return True
        return score_logit + shift > self.logit_tau

    def fires(self, index, score_logit, shift, rng):
        if self.kind is PolicyKind.NONE:
            return False
        if self.kind in (PolicyKind.RANDOM_RATE, PolicyKind.MATCHED_RATE):
            return rng.random() < shift_odds(self.rate, shift)
        if self.kind is PolicyKind.LATE_ONLY and index <= self.policy.after_step:
            return False
        return self._over_threshold(score_logit, shift)


def run_episode(
    agent,
    critic,
    mechanism,
    policy,
    calibration,
    rng_key,
    condition=Condition.INTERVENTION,
    task_id=None,
    match_rate=None,
):
    """
    Simulate one episode.

    Args:
        agent, critic, mechanism, policy: config sections
        calibration: Optional CalibrationModel producing ``calibrated_score``
        rng_key: EpisodeKey for the (task, seed) unit
        condition: arm whose private stream drives triggers and flips
        task_id: defaults to ``task-<index>``
        match_rate: per-step trigger rate for the matched_rate policy

    Returns:
        EpisodeRecord
    """
    shared = rng_key.shared()
    arm = rng_key.arm(condition)
    budget = agent.step_budget

    latent_fail = bool(shared.random() < agent.p_fail)
    answers_early = bool(shared.random() < agent.early_answer_frac)
    early_step = int(shared.integers(0, 2))
    low, high = agent.answer_range()
    late_step = int(shared.integers(low, high + 1))
    conclusion = min(early_step, budget - 1) if (answers_early and not latent_fail) else late_step

    raw = {
        True: clamp_scores(shared.beta(critic.fail_score.alpha, critic.fail_score.beta, size=budget)),
        False: clamp_scores(shared.beta(critic.succeed_score.alpha, critic.succeed_score.beta, size=budget)),
    }
    calibrated = {key: (calibration.apply(scores) if calibration else scores) for key, scores in raw.items()}
    trigger_scores = calibrated if policy.calibrated else raw
    trigger_logits = {key: logit(scores) for key, scores in trigger_scores.items()}

    if mechanism.kind is MechanismKind.NONE:
        recovery_prob = disruption_prob = 0.0
    else:
        recovery_prob, disruption_prob = mechanism.recovery_prob, mechanism.disruption_prob
    cascade_step = math.log(mechanism.cascade_multiplier)
    trigger = _Trigger(policy, match_rate)

    failing, flipped, disrupted = latent_fail, False, False
    last, shift, n_interventions = conclusion, 0.0, 0
    steps = []
    index = 0
    while index <= last:
        eligible = index >= policy.min_step and n_interventions < policy.intervention_budget
        fired = eligible and trigger.fires(index, trigger_logits[failing][index], shift, arm)
        steps.append(
            Step(
                index=index,
                raw_score=float(raw[failing][index]),
                calibrated_score=float(calibrated[failing][index]),
                triggered=bool(fired),
            )
        )
        if fired:
            n_interventions += 1
            if not flipped:
                draw = arm.random()
                if failing and draw < recovery_prob:
                    failing, flipped = False, True
                elif not failing and draw < disruption_prob:
                    failing, flipped, disrupted = True, True, True
                    last = budget - 1
            if mechanism.kind is MechanismKind.ROLLBACK:
                last = min(last + 1, budget - 1)
            shift += cascade_step
        index += 1

    outcome = Outcome.FAILURE if failing else Outcome.SUCCESS
    exhausted = n_interventions >= policy.intervention_budget
    if disrupted and exhausted and arm.random() < mechanism.no_answer_prob:
        outcome = Outcome.NO_ANSWER

    return EpisodeRecord(
        task_id=task_id or task_id_for(rng_key.task_index),
        seed=rng_key.seed,
        condition=Condition(condition),
        outcome=outcome,
        n_steps=len(steps),
        steps=tuple(steps),
        n_interventions=n_interventions,
        latent_outcome=Outcome.FAILURE if latent_fail else Outcome.SUCCESS,
    )


def _run_pairs(units, config, master_seed, match_rate):
    calibration = config.calibration_model()
    pairs = []
    for task_index, seed in units:
        key = episode_key(master_seed, task_index, seed)
        common = dict(
            agent=config.agent,
            critic=config.critic,
            mechanism=config.mechanism,
            calibration=calibration,
            rng_key=key,
        )
        baseline = run_episode(policy=BASELINE_POLICY, condition=Condition.BASELINE, **common)
        intervention = run_episode(
            policy=config.policy, condition=Condition.INTERVENTION, match_rate=match_rate, **common
        )
        pairs.append(Pair(baseline=baseline, intervention=intervention))
    return pairs


def _units(n_tasks, n_seeds):
    return [(task_index, seed) for task_index in range(n_tasks) for seed in range(n_seeds)]


def _fan_out(function, units, n_jobs, *args):
    if n_jobs == 1 or len(units) < 2:
        return function(units, *args)
    chunks = [chunk.tolist() for chunk in np.array_split(np.array(units, dtype=np.int64), n_jobs) if len(chunk)]
    results = Parallel(n_jobs=n_jobs)(delayed(function)([tuple(unit) for unit in chunk], *args) for chunk in chunks)
    return [item for chunk in results for item in chunk]


@dataclass(frozen=True)
class ExperimentResult:
    config: object
    dataset: PairedDataset
    table: object
    master_seed: int
    match_rate: Optional[float] = None

    @property
    def profile(self):
        return compute_profile(self.table)

    @property
    def baseline_success_rate(self):
        return float(self.table.baseline_success_rate)

    @property
    def intervention_success_rate(self):
        return float(self.table.intervention_success_rate)

    @property
    def delta(self):
        return self.intervention_success_rate - self.baseline_success_rate


def run_experiment(config, n_tasks, n_seeds=1, master_seed=0, n_jobs=None, match_rate=None):
    """
    Run paired baseline/intervention episodes for every (task, seed) unit.

    Returns:
        ExperimentResult with the PairedDataset and its OutcomeTable
    """
    if n_tasks < 1:
        raise ParameterError("n_tasks must be at least 1", location="n_tasks")
    if n_seeds < 1:
        raise ParameterError("n_seeds must be at least 1", location="n_seeds")
    n_jobs = resolve_jobs(n_jobs)
    if config.policy.policy is PolicyKind.MATCHED_RATE and match_rate is None:
        match_rate = matched_rate(config, n_tasks, n_seeds, master_seed, n_jobs=n_jobs)

    units = _units(n_tasks, n_seeds)
    pairs = _fan_out(_run_pairs, units, n_jobs, config, master_seed, match_rate)
    dataset = PairedDataset(pairs=tuple(pairs))
    table = dataset.outcome_table()
    logger.debug(
        "%s: %d units, baseline %.4f, intervention %.4f",
        config.name, len(pairs), float(table.baseline_success_rate), float(table.intervention_success_rate),
    )
    return ExperimentResult(
        config=config, dataset=dataset, table=table, master_seed=master_seed, match_rate=match_rate
    )


def _threshold_triggers(units, config, master_seed):
    policy = config.policy.model_copy(update={"policy": PolicyKind.LEARNED_THRESHOLD})
    calibration = config.calibration_model()
    triggers = steps = 0
    for task_index, seed in units:
        record = run_episode(
            agent=config.agent,
            critic=config.critic,
            mechanism=config.mechanism,
            policy=policy,
            calibration=calibration,
            rng_key=episode_key(master_seed, task_index, seed),
        )
        triggers += record.n_interventions
        steps += record.n_steps
    return [(triggers, steps)]


def matched_rate(config, n_tasks, n_seeds=1, master_seed=0, n_jobs=None):
    """
    Per-step trigger frequency of the learned-threshold policy.

    Measured on a calibration run with the same master seed; the matched_rate
    policy then fires uniformly at this rate.
    """
    n_jobs = resolve_jobs(n_jobs)
    counts = _fan_out(_threshold_triggers, _units(n_tasks, n_seeds), n_jobs, config, master_seed)
    triggers = sum(count[0] for count in counts)
    steps = sum(count[1] for count in counts)
    rate = triggers / steps if steps else 0.0
    logger.debug("matched per-step trigger rate %.4f", rate)
    return rate


@dataclass(frozen=True)
class SweepRow:
    tau: float
    baseline_success: float
    intervention_success: float
    table: object

    @property
    def delta(self):
        return self.intervention_success - self.baseline_success


def threshold_sweep(config, taus, n_tasks, n_seeds=1, master_seed=0, n_jobs=None):
    """Success rates per threshold, every run sharing ``master_seed``."""
    if not taus:
        raise EmptyInputError("no thresholds to sweep")
    rows = []
    for tau in taus:
        result = run_experiment(
            config.evolve(policy={"tau": tau}), n_tasks, n_seeds=n_seeds, master_seed=master_seed, n_jobs=n_jobs
        )
        rows.append(
            SweepRow(
                tau=float(tau),
                baseline_success=result.baseline_success_rate,
                intervention_success=result.intervention_success_rate,
                table=result.table,
            )
        )
    return rows


def run_factorial(config, n_tasks, n_seeds=1, master_seed=0, n_jobs=None):
    """
    The {rollback, append} x {calibrated, uncalibrated} design.

    Every cell reuses ``master_seed``, so all four share one baseline arm.
    """
    results = {}
    for kind in (MechanismKind.ROLLBACK, MechanismKind.APPEND):
        for calibrated in (True, False):
            cell = config.evolve(
                mechanism={"kind": kind.value},
                policy={"calibrated": calibrated},
                name=f"{config.name}-{kind.value}-{'calibrated' if calibrated else 'uncalibrated'}",
            )
            results[(kind, calibrated)] = run_experiment(
                cell, n_tasks, n_seeds=n_seeds, master_seed=master_seed, n_jobs=n_jobs
            )
    return results


@dataclass(frozen=True)
class CascadeStats:
    cascade_rate: float
    mean_interventions: float
    no_answer_rate: float
    n_episodes: int
    cascade_defined: bool = True


def cascade_stats(episodes):
    """
    Cascade rate is the share of triggered episodes that triggered at least twice.

    With no triggered episode the rate is reported as 0 and ``cascade_defined``
    is False.
    """
    if not episodes:
        raise EmptyInputError("no episodes")
    counts = np.array([episode.n_interventions for episode in episodes])
    triggered = counts >= 1
    defined = bool(triggered.any())
    return CascadeStats(
        cascade_rate=float(np.mean(counts[triggered] >= 2)) if defined else 0.0,
        mean_interventions=float(counts.mean()),
        no_answer_rate=float(np.mean([episode.outcome is Outcome.NO_ANSWER for episode in episodes])),
        n_episodes=len(episodes),
        cascade_defined=defined,
    )


@dataclass(frozen=True)
class EarlyDisruptions:
    n_disruptions: int
    n_early: int

    @property
    def fraction(self):
        return self.n_early / self.n_disruptions if self.n_disruptions else None


def early_step_disruptions(dataset, early_steps=2):
    """Disrupted pairs whose baseline answered within the first ``early_steps`` steps."""
    disrupted = [pair for pair in dataset if pair.disrupted]
    early = sum(1 for pair in disrupted if pair.baseline.n_steps <= early_steps)
    return EarlyDisruptions(n_disruptions=len(disrupted), n_early=early)


@dataclass(frozen=True)
class PerInterventionRates:
    interventions_on_failing: int
    recoveries: int
    interventions_on_succeeding: int
    disruptions: int

    @property
    def recovery_per_intervention(self):
        if not self.interventions_on_failing:
            return None
        return self.recoveries / self.interventions_on_failing

    @property
    def disruption_per_intervention(self):
        if not self.interventions_on_succeeding:
            return None
        return self.disruptions / self.interventions_on_succeeding

    @property
    def ratio(self):
        """Disruptions per intervention over recoveries per intervention."""
        recovery, disruption = self.recovery_per_intervention, self.disruption_per_intervention
        if recovery is None or disruption is None:
            return None
        if recovery == 0:
            return float("inf") if disruption > 0 else None
        return disruption / recovery


def per_intervention_rates(dataset):
    """Recovery and disruption events counted per triggered intervention."""
    on_failing = on_succeeding = recoveries = disruptions = 0
    for pair in dataset:
        if pair.baseline.succeeded:
            on_succeeding += pair.intervention.n_interventions
            disruptions += int(pair.disrupted)
        else:
            on_failing += pair.intervention.n_interventions
            recoveries += int(pair.recovered)
    return PerInterventionRates(
        interventions_on_failing=on_failing,
        recoveries=recoveries,
        interventions_on_succeeding=on_succeeding,
        disruptions=disruptions,
    )
