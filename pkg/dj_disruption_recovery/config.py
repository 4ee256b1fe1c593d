"""
Simulator configuration.

A config file is a YAML key/value tree::

    name: glm-hotpotqa
    agent:
      p_fail: 0.297
      step_budget: 15
    critic:
      fail_score: {alpha: 6, beta: 2}
      succeed_score: {alpha: 2, beta: 6}
    mechanism:
      kind: rollback
      recovery_prob: 0.25
      disruption_prob: 0.15
    policy:
      policy: learned_threshold
      tau: 0.6
    calibration:
      temperature: 2.27

Unknown keys are rejected. Validation errors carry the dotted location of
the offending field.
"""

import enum
import logging
from pathlib import Path
from typing import Annotated, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import integrate, stats

from .calibration import CalibrationModel
from .exceptions import ConfigValidationError, InputError

logger = logging.getLogger(__name__)

Probability = Annotated[float, Field(ge=0.0, le=1.0)]


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BetaSpec(_Spec):
    alpha: float = Field(gt=0.0)
    beta: float = Field(gt=0.0)

    @property
    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    def distribution(self):
        return stats.beta(self.alpha, self.beta)


class AnswerSteps(_Spec):
    """Uniform conclusion-step range for episodes that do not answer early."""

    low: int = Field(2, ge=0)
    high: Optional[int] = Field(None, ge=0)


class AgentSpec(_Spec):
    p_fail: Probability
    early_answer_frac: Probability = 0.0
    step_budget: int = Field(15, ge=1)
    answer_steps: AnswerSteps = AnswerSteps()

    @model_validator(mode="after")
    def _check_answer_steps(self):
        low, high = self.answer_range()
        if low > high:
            raise ValueError(f"answer_steps range [{low}, {high}] is empty")
        if high >= self.step_budget:
            raise ValueError(f"answer_steps.high must be below step_budget ({self.step_budget})")
        return self

    def answer_range(self):
        """Inclusive (low, high) step-index range for non-early conclusions."""
        last = self.step_budget - 1
        high = last if self.answer_steps.high is None else self.answer_steps.high
        return min(self.answer_steps.low, last), high


class CriticSpec(_Spec):
    fail_score: BetaSpec
    succeed_score: BetaSpec
    target_auroc: Optional[Probability] = None

    @model_validator(mode="after")
    def _check_separation(self):
        if self.target_auroc is not None and self.target_auroc > 0.5:
            if self.fail_score.mean <= self.succeed_score.mean:
                raise ValueError(
                    "fail_score mean must exceed succeed_score mean when target_auroc > 0.5"
                )
        return self

    def theoretical_auroc(self):
        """P(fail-episode score > success-episode score) under the two Beta laws."""
        failing = self.fail_score.distribution()
        succeeding = self.succeed_score.distribution()
        value, _ = integrate.quad(lambda x: failing.pdf(x) * succeeding.cdf(x), 0.0, 1.0, limit=200)
        return float(value)


class MechanismKind(str, enum.Enum):
    ROLLBACK = "rollback"
    APPEND = "append"
    NONE = "none"


class MechanismSpec(_Spec):
    kind: MechanismKind = MechanismKind.ROLLBACK
    recovery_prob: Probability = 0.0
    disruption_prob: Probability = 0.0
    cascade_multiplier: float = Field(1.0, ge=1.0)
    no_answer_prob: Probability = 0.0


class PolicyKind(str, enum.Enum):
    NONE = "none"
    LEARNED_THRESHOLD = "learned_threshold"
    RANDOM_RATE = "random_rate"
    MATCHED_RATE = "matched_rate"
    LATE_ONLY = "late_only"


class PolicySpec(_Spec):
    policy: PolicyKind = PolicyKind.LEARNED_THRESHOLD
    tau: Probability = 0.6
    rate: Optional[Probability] = None
    after_step: int = Field(5, ge=0)
    min_step: int = Field(0, ge=0)
    intervention_budget: int = Field(3, ge=0)
    calibrated: bool = True

    @model_validator(mode="after")
    def _check_rate(self):
        if self.policy is PolicyKind.RANDOM_RATE and self.rate is None:
            raise ValueError("random_rate policy needs a rate")
        return self


class CalibrationSpec(_Spec):
    temperature: float = Field(1.0, ge=0.01, le=50.0)


class ExperimentConfig(_Spec):
    name: str = "experiment"
    agent: AgentSpec
    critic: CriticSpec
    mechanism: MechanismSpec = MechanismSpec()
    policy: PolicySpec = PolicySpec()
    calibration: Optional[CalibrationSpec] = None

    @model_validator(mode="after")
    def _check_min_step(self):
        if self.policy.min_step >= self.agent.step_budget:
            raise ValueError(
                f"policy.min_step ({self.policy.min_step}) must be below "
                f"agent.step_budget ({self.agent.step_budget})"
            )
        return self

    def calibration_model(self):
        if self.calibration is None:
            return None
        return CalibrationModel(temperature=self.calibration.temperature)

    def evolve(self, **sections):
        """
        Return a re-validated copy with the given sections merged in.

        ``config.evolve(policy={"tau": 0.4}, name="tau-0.4")``
        """
        data = self.model_dump(mode="json")
        for key, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            elif isinstance(value, BaseModel):
                data[key] = value.model_dump(mode="json")
            else:
                data[key] = value
        return parse_config(data)


def _location(error):
    return ".".join(str(part) for part in error["loc"]) or None


def parse_config(data):
    """
    Validate a mapping into an ExperimentConfig.

    Raises:
        ConfigValidationError: naming the first invalid field
    """
    if not isinstance(data, dict):
        raise ConfigValidationError("config must be a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigValidationError(first["msg"], location=_location(first)) from exc


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigValidationError(f"cannot parse {path}: {exc}") from exc
    config = parse_config(data)
    logger.debug("loaded config %s from %s", config.name, path)
    return config
