"""
Pre-deployment pilot: estimate p, r and d on a small matched run and decide.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conf import get_setting
from .config import ExperimentConfig
from .exceptions import InputError, ParameterError
from .framework import DRProfile, OutcomeTable, compute_profile, decide, recovery_dominates
from .records import PairedDataset
from .seeding import block_generator
from .simulator import run_experiment
from .stats import PairedOutcomes, paired_bootstrap, success_ci
from .utils import format_rate

logger = logging.getLogger(__name__)

P_STAR_STREAM = 1_000_003


class PilotWarning(str, enum.Enum):
    R_UNDEFINED = "recovery rate undefined: no baseline failures"
    D_UNDEFINED = "disruption rate undefined: no baseline successes"
    THRESHOLD_UNDEFINED = "threshold undefined: intervention changed no outcome"
    CI_OVERLAPS_THRESHOLD = "CI overlaps threshold: p interval contains p* + margin"
    PREFER_SELECTION = "d/r > 1: prefer selection over intervention"
    PILOT_TOO_SMALL = "pilot smaller than the recommended size"
    RECOVERY_NOT_DOMINANT = "recoveries do not exceed disruptions"
    INTERVALS_UNAVAILABLE = "rate-only input: intervals unavailable"


@dataclass(frozen=True)
class DecisionReport:
    profile: DRProfile
    decision: object
    p_ci: Optional[tuple] = None
    r_ci: Optional[tuple] = None
    d_ci: Optional[tuple] = None
    p_star_ci: Optional[tuple] = None
    predicted_delta_ci: Optional[tuple] = None
    warnings: tuple = field(default_factory=tuple)
    n_pilot: Optional[int] = None
    source: str = ""

    @property
    def p_star(self):
        return self.decision.p_star

    @property
    def predicted_delta(self):
        return self.decision.predicted_delta

    @property
    def verdict(self):
        return self.decision.verdict

    @property
    def recoveries(self):
        return self.profile.recoveries

    @property
    def disruptions(self):
        return self.profile.disruptions


def _expand(table):
    """One unit per task, in cell order, for resampling a bare count table."""
    cells = ((False, False, table.a), (True, False, table.b), (False, True, table.c), (True, True, table.d_count))
    baseline = np.concatenate([np.full(count, base, dtype=bool) for base, _, count in cells])
    intervention = np.concatenate([np.full(count, inter, dtype=bool) for _, inter, count in cells])
    return PairedOutcomes.from_lists(baseline, intervention)


def _p_star_interval(table, point, n_iter, seed, confidence):
    """Percentile interval of d / (r + d) under joint resampling of the four cells."""
    cells = np.array([table.a, table.b, table.c, table.d_count], dtype=np.float64)
    draws = block_generator(seed, P_STAR_STREAM).multinomial(table.n_tasks, cells / cells.sum(), size=n_iter)
    a, b, c, d_count = draws.T
    failures, successes = a + c, b + d_count
    with np.errstate(divide="ignore", invalid="ignore"):
        recovery = c / failures
        disruption = b / successes
        p_star = disruption / (recovery + disruption)
    p_star = p_star[np.isfinite(p_star)]
    if p_star.size == 0:
        return None
    tail = (1.0 - confidence) / 2.0 * 100.0
    low, high = np.percentile(p_star, [tail, 100.0 - tail])
    if point is not None:
        low, high = min(low, float(point)), max(high, float(point))
    return float(low), float(high)


def _intervals(pairs, table, p_star, n_iter, seed, confidence):
    baseline, intervention = pairs.baseline, pairs.intervention
    options = dict(n_iter=n_iter, seed=seed, confidence=confidence)
    p_ci = success_ci(~baseline, **options)
    r_ci = success_ci(intervention[~baseline], **options) if (~baseline).any() else None
    d_ci = success_ci(~intervention[baseline], **options) if baseline.any() else None
    delta_ci = None
    if pairs.n_units >= 2:
        result = paired_bootstrap(pairs, n_iter=max(n_iter, 1000), seed=seed, confidence=confidence)
        delta_ci = (result.ci_low, result.ci_high)
    return p_ci, r_ci, d_ci, _p_star_interval(table, p_star, n_iter, seed, confidence), delta_ci


def _warnings(profile, decision, p_ci, n_pilot, table):
    warnings = []
    if profile.r is None:
        warnings.append(PilotWarning.R_UNDEFINED)
    if profile.d is None:
        warnings.append(PilotWarning.D_UNDEFINED)
    if profile.r is not None and profile.d is not None and profile.r + profile.d == 0:
        warnings.append(PilotWarning.THRESHOLD_UNDEFINED)
    if decision.prefer_selection:
        warnings.append(PilotWarning.PREFER_SELECTION)
    if p_ci is not None and decision.p_star is not None:
        boundary = float(decision.p_star + decision.margin)
        if p_ci[0] <= boundary <= p_ci[1]:
            warnings.append(PilotWarning.CI_OVERLAPS_THRESHOLD)
    if p_ci is None:
        warnings.append(PilotWarning.INTERVALS_UNAVAILABLE)
    if n_pilot is not None and n_pilot < get_setting("PILOT_WARNING_TASKS"):
        warnings.append(PilotWarning.PILOT_TOO_SMALL)
    if table is not None and not recovery_dominates(table):
        warnings.append(PilotWarning.RECOVERY_NOT_DOMINANT)
    return tuple(warnings)


def _check_size(n_pilot):
    floor = get_setting("MIN_PILOT_TASKS")
    if n_pilot < floor:
        raise ParameterError(f"pilot needs at least {floor} tasks, got {n_pilot}", location="n_pilot")


def run_pilot(source, n_pilot=None, margin=None, seed=0, n_seeds=1, n_iter=None, confidence=None):
    """
    Estimate the disruption-recovery profile on a pilot and walk the decision tree.

    Args:
        source: ExperimentConfig (simulated pilot), PairedDataset (ingested
            log), OutcomeTable (published counts) or DRProfile (published
            rates without counts)
        n_pilot: Matched tasks to use; required for configs, defaults to
            every task otherwise
        margin: Deployment safety margin (defaults to DEFAULT_MARGIN)
        seed: Master seed for simulation and bootstrap
        n_seeds: Seeds per task when simulating
        n_iter: Bootstrap iterations (defaults to BOOTSTRAP_ITERATIONS)
        confidence: Interval level (defaults to CONFIDENCE_LEVEL)

    Returns:
        DecisionReport
    """
    n_iter = int(get_setting("BOOTSTRAP_ITERATIONS", n_iter))
    confidence = get_setting("CONFIDENCE_LEVEL", confidence)

    if isinstance(source, DRProfile):
        decision = decide(source, margin=margin)
        return DecisionReport(
            profile=source,
            decision=decision,
            warnings=_warnings(source, decision, None, n_pilot, None),
            n_pilot=n_pilot,
            source="rates",
        )

    if isinstance(source, ExperimentConfig):
        if n_pilot is None:
            raise ParameterError("simulated pilots need n_pilot", location="n_pilot")
        _check_size(n_pilot)
        dataset = run_experiment(source, n_pilot, n_seeds=n_seeds, master_seed=seed).dataset
        label = f"simulated:{source.name}"
    elif isinstance(source, PairedDataset):
        available = len(source.task_ids)
        n_pilot = available if n_pilot is None else n_pilot
        if n_pilot > available:
            raise InputError(f"pilot of {n_pilot} tasks requested but only {available} matched tasks available")
        _check_size(n_pilot)
        dataset = source.head(n_pilot)
        label = "log"
    elif isinstance(source, OutcomeTable):
        if n_pilot is not None and n_pilot > source.n_tasks:
            raise InputError(
                f"pilot of {n_pilot} tasks requested but only {source.n_tasks} matched tasks available"
            )
        n_pilot = source.n_tasks
        _check_size(n_pilot)
        dataset = None
        label = "counts"
    else:
        raise InputError(f"cannot run a pilot on {type(source).__name__}")

    if dataset is not None:
        table = dataset.outcome_table()
        pairs = dataset.paired_outcomes()
    else:
        table = source
        pairs = _expand(source)

    profile = compute_profile(table)
    decision = decide(profile, margin=margin)
    p_ci, r_ci, d_ci, p_star_ci, delta_ci = _intervals(pairs, table, decision.p_star, n_iter, seed, confidence)
    report = DecisionReport(
        profile=profile,
        decision=decision,
        p_ci=p_ci,
        r_ci=r_ci,
        d_ci=d_ci,
        p_star_ci=p_star_ci,
        predicted_delta_ci=delta_ci,
        warnings=_warnings(profile, decision, p_ci, n_pilot, table),
        n_pilot=n_pilot,
        source=label,
    )
    logger.info("pilot on %d tasks: %s", n_pilot, decision.verdict.value)
    return report


def _interval_text(interval):
    if interval is None:
        return "unavailable"
    return f"[{format_rate(interval[0])}, {format_rate(interval[1])}]"


@dataclass(frozen=True)
class RenderedTree:
    lines: tuple
    summary: dict

    @property
    def text(self):
        return "\n".join(self.lines)


def _number(value):
    return None if value is None else float(value)


def render_decision_tree(report):
    """
    Human-readable trace (one line per branch taken, then the verdict) plus a
    machine-readable summary of the same report.
    """
    decision = report.decision
    lines = [f"{index}. {step.render()}" for index, step in enumerate(decision.trace, start=1)]
    lines.append(f"=> {decision.verdict.value}")

    profile = report.profile
    summary = {
        "verdict": decision.verdict.value,
        "p": _number(profile.p),
        "r": _number(profile.r),
        "d": _number(profile.d),
        "p_star": _number(decision.p_star),
        "margin": _number(decision.margin),
        "predicted_delta": _number(decision.predicted_delta),
        "prefer_selection": decision.prefer_selection,
        "p_ci": report.p_ci,
        "r_ci": report.r_ci,
        "d_ci": report.d_ci,
        "p_star_ci": report.p_star_ci,
        "predicted_delta_ci": report.predicted_delta_ci,
        "n_pilot": report.n_pilot,
        "recoveries": report.recoveries,
        "disruptions": report.disruptions,
        "warnings": [warning.value for warning in report.warnings],
        "trace": decision.labels,
    }
    return RenderedTree(lines=tuple(lines), summary=summary)


def report_lines(report):
    """Estimate block printed above the decision tree."""
    profile = report.profile
    lines = [
        f"p  = {format_rate(profile.p)}  {_interval_text(report.p_ci)}",
        f"r  = {format_rate(profile.r)}  {_interval_text(report.r_ci)}",
        f"d  = {format_rate(profile.d)}  {_interval_text(report.d_ci)}",
        f"p* = {format_rate(report.p_star)}  {_interval_text(report.p_star_ci)}",
        f"predicted delta = {format_rate(report.predicted_delta)}  {_interval_text(report.predicted_delta_ci)}",
    ]
    if profile.has_counts:
        lines.append(
            f"tasks = {profile.n_tasks}, recoveries = {profile.recoveries}, disruptions = {profile.disruptions}"
        )
    lines.extend(f"warning: {warning.value}" for warning in report.warnings)
    return lines
