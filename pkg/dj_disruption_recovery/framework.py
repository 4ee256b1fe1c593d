"""
Paired outcome accounting and the disruption-recovery algebra.

Running a baseline agent and the same agent with intervention on N matched
tasks gives a 2x2 table::

                      intervention fail   intervention succeed
    baseline fail            A                   C   (recoveries)
    baseline succeed         B (disruptions)     D

with F = A + C baseline failures and S = B + D baseline successes. From it:

    p = F / N      baseline failure rate
    r = C / F      recovery rate      (undefined when F = 0)
    d = B / S      disruption rate    (undefined when S = 0)

    delta_success = p * r - (1 - p) * d

so intervention helps in expectation exactly when p > p* = d / (r + d).

All rates are kept as exact ``Fraction`` values next to the counts they came
from; floats only appear at the reporting edge.
"""

import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .conf import get_setting
from .exceptions import EmptyInputError, ParameterError, UndefinedMetricError
from .utils import as_fraction, format_rate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OutcomeTable:
    """
    Paired baseline/intervention outcome counts over matched tasks.

    ``a`` counts fail/fail, ``b`` succeed/fail (disruptions), ``c`` fail/succeed
    (recoveries) and ``d_count`` succeed/succeed.
    """

    n_tasks: int
    a: int
    b: int
    c: int
    d_count: int

    def __post_init__(self):
        for name in ("n_tasks", "a", "b", "c", "d_count"):
            if getattr(self, name) < 0:
                raise ParameterError("counts must be non-negative", location=name)
        if self.a + self.b + self.c + self.d_count != self.n_tasks:
            raise ParameterError(
                f"a + b + c + d_count = {self.a + self.b + self.c + self.d_count} "
                f"does not equal n_tasks = {self.n_tasks}",
                location="n_tasks",
            )

    @classmethod
    def from_cells(cls, a, b, c, d_count):
        return cls(n_tasks=a + b + c + d_count, a=a, b=b, c=c, d_count=d_count)

    @classmethod
    def from_counts(cls, failures, recoveries, successes, disruptions):
        """
        Build a table from the F/C/S/B form used when publishing rates.

        Args:
            failures: F, baseline failures
            recoveries: C, baseline failures that succeed under intervention
            successes: S, baseline successes
            disruptions: B, baseline successes that fail under intervention
        """
        if recoveries > failures or disruptions > successes:
            raise ParameterError("recoveries/disruptions exceed their base counts")
        return cls.from_cells(
            a=failures - recoveries,
            b=disruptions,
            c=recoveries,
            d_count=successes - disruptions,
        )

    @property
    def failures(self):
        return self.a + self.c

    @property
    def successes(self):
        return self.b + self.d_count

    @property
    def recoveries(self):
        return self.c

    @property
    def disruptions(self):
        return self.b

    @property
    def baseline_success_rate(self):
        return Fraction(self.successes, self.n_tasks) if self.n_tasks else None

    @property
    def intervention_success_rate(self):
        if not self.n_tasks:
            return None
        return Fraction(self.c + self.d_count, self.n_tasks)

    def __add__(self, other):
        return OutcomeTable(
            n_tasks=self.n_tasks + other.n_tasks,
            a=self.a + other.a,
            b=self.b + other.b,
            c=self.c + other.c,
            d_count=self.d_count + other.d_count,
        )


@dataclass(frozen=True)
class DRProfile:
    """
    Failure, recovery and disruption rates of one agent/mechanism pairing.

    ``r`` and ``d`` are ``None`` when undefined (no baseline failures or no
    baseline successes). That is distinct from a measured zero rate.
    Counts are ``None`` for profiles built from published rates alone.
    """

    p: Fraction
    r: Optional[Fraction]
    d: Optional[Fraction]
    f_count: Optional[int] = None
    s_count: Optional[int] = None
    n_tasks: Optional[int] = None
    recoveries: Optional[int] = None
    disruptions: Optional[int] = None

    @classmethod
    def from_rates(cls, p, r=None, d=None):
        """Build a rate-only profile; values are converted to exact fractions."""
        p, r, d = as_fraction(p), as_fraction(r), as_fraction(d)
        for name, value in (("p", p), ("r", r), ("d", d)):
            if value is not None and not 0 <= value <= 1:
                raise ParameterError("rate outside [0, 1]", location=name)
        return cls(p=p, r=r, d=d)

    @property
    def r_defined(self):
        return self.r is not None

    @property
    def d_defined(self):
        return self.d is not None

    @property
    def has_counts(self):
        return self.n_tasks is not None

    @property
    def disruption_ratio(self):
        """d / r, infinite when r = 0 < d, ``None`` when undefined or 0/0."""
        if self.r is None or self.d is None:
            return None
        if self.r == 0:
            return float("inf") if self.d > 0 else None
        return self.d / self.r

    def as_dict(self):
        return {
            "p": float(self.p),
            "r": None if self.r is None else float(self.r),
            "d": None if self.d is None else float(self.d),
            "f_count": self.f_count,
            "s_count": self.s_count,
            "n_tasks": self.n_tasks,
        }


def compute_profile(table):
    """
    Derive p, r and d from a paired outcome table.

    Args:
        table: OutcomeTable over matched tasks

    Returns:
        DRProfile with exact rational rates

    Raises:
        EmptyInputError: when the table holds no tasks
    """
    if table.n_tasks == 0:
        raise EmptyInputError("outcome table has no tasks")

    failures, successes = table.failures, table.successes
    return DRProfile(
        p=Fraction(failures, table.n_tasks),
        r=Fraction(table.c, failures) if failures else None,
        d=Fraction(table.b, successes) if successes else None,
        f_count=failures,
        s_count=successes,
        n_tasks=table.n_tasks,
        recoveries=table.c,
        disruptions=table.b,
    )


def reconstruct(profile):
    """Recover the OutcomeTable a count-backed profile was computed from."""
    if not profile.has_counts:
        raise ParameterError("profile carries no counts to reconstruct", location="n_tasks")

    failures = profile.p * profile.n_tasks
    successes = profile.n_tasks - failures
    recoveries = profile.r * failures if profile.r is not None else Fraction(0)
    disruptions = profile.d * successes if profile.d is not None else Fraction(0)
    for value in (failures, recoveries, disruptions):
        if value.denominator != 1:
            raise ParameterError("profile rates do not correspond to integer counts")
    return OutcomeTable.from_counts(
        failures=int(failures),
        recoveries=int(recoveries),
        successes=int(successes),
        disruptions=int(disruptions),
    )


def _check_unit_interval(**values):
    for name, value in values.items():
        if value is None or not 0 <= value <= 1:
            raise ParameterError(f"expected a rate in [0, 1], got {value!r}", location=name)


def threshold(r, d):
    """
    Deployment threshold p* = d / (r + d).

    Raises:
        UndefinedMetricError: when r + d = 0 (intervention changes no outcome)
    """
    _check_unit_interval(r=r, d=d)
    if r + d == 0:
        raise UndefinedMetricError("threshold undefined: r + d = 0, intervention has no effect")
    return d / (r + d)


def delta_success(p, r, d):
    """Expected change in success rate, p * r - (1 - p) * d."""
    _check_unit_interval(p=p, r=r, d=d)
    return p * r - (1 - p) * d


def recovery_dominates(table):
    """True when more baseline failures were recovered than successes disrupted."""
    return table.recoveries > table.disruptions


class Verdict(str, enum.Enum):
    DEPLOY = "deploy"
    DO_NOT_DEPLOY = "do_not_deploy"
    PREFER_SELECTION = "prefer_selection"
    TRIVIAL_ALL_FAIL = "trivial_all_fail"
    TRIVIAL_ALL_SUCCEED = "trivial_all_succeed"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class TraceStep:
    """One branch taken through the deployment decision tree."""

    label: str
    values: dict = field(default_factory=dict)

    def render(self):
        if not self.values:
            return self.label
        shown = ", ".join(f"{key}={_render_value(value)}" for key, value in self.values.items())
        return f"{self.label} [{shown}]"


def _render_value(value):
    if isinstance(value, (Fraction, float)):
        return format_rate(value)
    return str(value)


@dataclass(frozen=True)
class Decision:
    verdict: Verdict
    p_star: Optional[Fraction]
    margin: Fraction
    predicted_delta: Optional[Fraction]
    trace: tuple
    prefer_selection: bool = False
    disruption_ratio: Optional[float] = None

    @property
    def deploys(self):
        return self.verdict is Verdict.DEPLOY

    @property
    def labels(self):
        return [step.label for step in self.trace]


def decide(profile, margin=None):
    """
    Walk the deployment decision tree for a disruption-recovery profile.

    Args:
        profile: DRProfile from a pilot (or a published rate-only profile)
        margin: Safety margin p must clear above p*; defaults to DEFAULT_MARGIN

    Returns:
        Decision with verdict, p*, predicted delta and the branch trace
    """
    margin = as_fraction(get_setting("DEFAULT_MARGIN", margin))
    if not 0 <= margin < 1:
        raise ParameterError(f"margin must lie in [0, 1), got {float(margin)}", location="margin")

    p, r, d = profile.p, profile.r, profile.d
    estimates = {"p": p, "r": _or_undefined(r), "d": _or_undefined(d)}

    if r is None:
        return Decision(
            verdict=Verdict.TRIVIAL_ALL_SUCCEED,
            p_star=None,
            margin=margin,
            predicted_delta=-d if d is not None else None,
            trace=(TraceStep("F = 0: every task succeeds at baseline", estimates),),
        )
    if d is None:
        return Decision(
            verdict=Verdict.TRIVIAL_ALL_FAIL,
            p_star=None,
            margin=margin,
            predicted_delta=r,
            trace=(TraceStep("S = 0: every task fails at baseline", estimates),),
        )

    trace = [TraceStep("F > 0 and S > 0", estimates)]
    if r + d == 0:
        trace.append(TraceStep("r + d = 0: intervention changes no outcome"))
        return Decision(
            verdict=Verdict.UNDEFINED,
            p_star=None,
            margin=margin,
            predicted_delta=Fraction(0),
            trace=tuple(trace),
        )

    p_star = threshold(r, d)
    predicted = delta_success(p, r, d)
    trace.append(TraceStep("p* = d / (r + d)", {"p*": p_star}))

    ratio = profile.disruption_ratio
    prefer_selection = ratio is not None and ratio > 1
    if prefer_selection:
        trace.append(TraceStep("d/r > 1: prefer selection over intervention", {"d": d, "r": r}))
    else:
        trace.append(TraceStep("d/r <= 1", {"d": d, "r": r}))

    compared = {"p": p, "p*": p_star, "margin": margin}
    if p > p_star + margin:
        trace.append(TraceStep("p > p* + margin", compared))
        verdict = Verdict.DEPLOY
    else:
        trace.append(TraceStep("p <= p* + margin", compared))
        verdict = Verdict.PREFER_SELECTION if prefer_selection else Verdict.DO_NOT_DEPLOY

    logger.debug("decision %s (p=%s, p*=%s, margin=%s)", verdict.value, float(p), float(p_star), float(margin))
    return Decision(
        verdict=verdict,
        p_star=p_star,
        margin=margin,
        predicted_delta=predicted,
        trace=tuple(trace),
        prefer_selection=prefer_selection,
        disruption_ratio=None if ratio is None else float(ratio),
    )


def _or_undefined(value):
    return "undefined" if value is None else value
