"""
Critic score post-processing and quality metrics.

Critic scores are predicted failure probabilities. Temperature scaling rescales
their logits by a single fitted T; ECE, AUROC and F1 measure how the scores
line up with the episodes' final outcomes (label 1 = the episode failed).
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import expit, log_expit, logit
from scipy.stats import rankdata
from sklearn.metrics import precision_recall_fscore_support

from .conf import get_setting
from .exceptions import DegenerateFitError, EmptyInputError, ParameterError, UndefinedMetricError
from .utils import clamp_scores

logger = logging.getLogger(__name__)

MIN_TEMPERATURE = 0.01
MAX_TEMPERATURE = 50.0
GRID_POINTS = 50
MAX_ITERATIONS = 200


@dataclass(frozen=True)
class ScoredSample:
    raw_score: float
    label: int


@dataclass(frozen=True)
class CalibrationModel:
    temperature: float
    fit_nll: float = 0.0
    n_fit: int = 0

    def __post_init__(self):
        if not MIN_TEMPERATURE <= self.temperature <= MAX_TEMPERATURE:
            raise ParameterError(
                f"temperature must lie in [{MIN_TEMPERATURE}, {MAX_TEMPERATURE}], got {self.temperature}",
                location="temperature",
            )

    def apply(self, raw_score):
        return apply(self, raw_score)


def samples_from_arrays(scores, labels):
    return [ScoredSample(raw_score=float(s), label=int(y)) for s, y in zip(scores, labels)]


def samples_from_episodes(records):
    """Every recorded step's raw score, labelled with its episode's final outcome."""
    samples = []
    for record in records:
        label = 0 if record.succeeded else 1
        samples.extend(ScoredSample(raw_score=step.raw_score, label=label) for step in record.steps)
    return samples


def _arrays(samples):
    if not samples:
        raise EmptyInputError("no scored samples")
    scores = clamp_scores([sample.raw_score for sample in samples])
    labels = np.array([sample.label for sample in samples], dtype=np.int64)
    return np.atleast_1d(scores), labels


def _require_both_labels(labels, what):
    positives = int(labels.sum())
    if positives == 0 or positives == labels.size:
        raise UndefinedMetricError(f"{what} needs both failed and succeeded samples")


def apply(model, raw_score):
    """
    Calibrated failure probability, logistic(logit(s) / T).

    Returns a float for scalar input and an array otherwise.
    """
    scores = clamp_scores(raw_score)
    if model.temperature == 1.0:
        return scores
    return _scaled(scores, model.temperature)


def _scaled(scores, temperature):
    scaled = expit(logit(scores) / temperature)
    return float(scaled) if np.ndim(scaled) == 0 else scaled


def _mean_nll(logits, labels, temperature):
    z = logits / temperature
    # log q = log_expit(z), log(1 - q) = log_expit(-z)
    losses = np.where(labels == 1, -log_expit(z), -log_expit(-z))
    return float(np.mean(losses))


def nll(samples, temperature):
    """Mean binary negative log-likelihood of the samples after scaling by ``temperature``."""
    scores, labels = _arrays(samples)
    return _mean_nll(logit(scores), labels, temperature)


def fit_temperature(samples, xtol=1e-6):
    """
    Fit the temperature minimizing mean NLL.

    The search runs over log T on [log 0.01, log 50]: a 50-point grid finds the
    basin, then golden-section refines inside the bracketing grid cell.

    Args:
        samples: ScoredSample list with both labels present
        xtol: Relative tolerance on log T handed to the golden-section search

    Returns:
        CalibrationModel with the fitted temperature and its NLL

    Raises:
        DegenerateFitError: when every sample carries the same label
    """
    scores, labels = _arrays(samples)
    positives = int(labels.sum())
    if scores.size < 2 or positives in (0, scores.size):
        raise DegenerateFitError("temperature fit needs at least two samples with both labels")

    logits = logit(scores)

    def objective(log_t):
        return _mean_nll(logits, labels, math.exp(log_t))

    lower, upper = math.log(MIN_TEMPERATURE), math.log(MAX_TEMPERATURE)
    grid = np.linspace(lower, upper, GRID_POINTS)
    values = np.array([objective(x) for x in grid])
    best = int(np.argmin(values))

    if best in (0, GRID_POINTS - 1):
        log_t = float(grid[best])
        logger.warning("temperature fit hit the search boundary (T=%.4g)", math.exp(log_t))
    elif values[best] < values[best - 1] and values[best] < values[best + 1]:
        result = optimize.minimize_scalar(
            objective,
            bracket=(grid[best - 1], grid[best], grid[best + 1]),
            method="golden",
            options={"xtol": xtol, "maxiter": MAX_ITERATIONS},
        )
        log_t = float(np.clip(result.x, lower, upper))
    else:
        # flat NLL around the grid minimum
        log_t = float(grid[best])

    temperature = math.exp(log_t)
    model = CalibrationModel(temperature=temperature, fit_nll=objective(log_t), n_fit=int(scores.size))
    logger.debug(
        "fitted T=%.4f on %d samples (NLL %.5f -> %.5f)",
        temperature, scores.size, objective(0.0), model.fit_nll,
    )
    return model


def ece(samples, n_bins=None, model=None):
    """
    Expected calibration error over equal-width bins on [0, 1].

    Args:
        samples: ScoredSample list
        n_bins: Number of bins (defaults to ECE_BINS)
        model: Optional CalibrationModel applied to the scores first

    Returns:
        Sum over bins of (bin_count / n) * |mean score - failure frequency|
    """
    n_bins = get_setting("ECE_BINS", n_bins)
    if n_bins < 1:
        raise ParameterError("n_bins must be at least 1", location="n_bins")
    scores, labels = _arrays(samples)
    if model is not None:
        scores = np.atleast_1d(apply(model, scores))

    bins = np.minimum((scores * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    score_sums = np.bincount(bins, weights=scores, minlength=n_bins)
    label_sums = np.bincount(bins, weights=labels, minlength=n_bins)

    occupied = counts > 0
    gaps = np.abs(score_sums[occupied] - label_sums[occupied]) / counts[occupied]
    return float(np.sum(counts[occupied] / scores.size * gaps))


def auroc(samples):
    """
    Probability that a failed sample outscores a succeeded one (ties count 1/2).

    Mann-Whitney U from average ranks.
    """
    scores, labels = _arrays(samples)
    _require_both_labels(labels, "AUROC")
    ranks = rankdata(scores)
    n_fail = int(labels.sum())
    n_success = labels.size - n_fail
    u_statistic = ranks[labels == 1].sum() - n_fail * (n_fail + 1) / 2.0
    return float(u_statistic / (n_fail * n_success))


class PositiveClass(str, enum.Enum):
    FAILURE = "failure"
    SUCCESS = "success"


@dataclass(frozen=True)
class F1Score:
    f1: float
    precision: float
    recall: float
    zero_division: bool = False


def f1_at(samples, tau, positive_class=PositiveClass.FAILURE, model=None):
    """
    F1 of the thresholded predictor ``score > tau`` -> failure.

    With ``positive_class=SUCCESS`` the predictor and labels are mirrored.
    ``zero_division`` is set when precision or recall had an empty denominator
    and was taken as 0.
    """
    scores, labels = _arrays(samples)
    if model is not None:
        scores = np.atleast_1d(apply(model, scores))
    predicted = (scores > tau).astype(np.int64)
    if PositiveClass(positive_class) is PositiveClass.SUCCESS:
        predicted, labels = 1 - predicted, 1 - labels

    zero_division = predicted.sum() == 0 or labels.sum() == 0
    if zero_division:
        logger.warning("F1 at tau=%s has an empty denominator; reporting 0 where undefined", tau)
    precision, recall, f1, _ = precision_recall_fscore_support(
        labels, predicted, average="binary", pos_label=1, zero_division=0
    )
    return F1Score(f1=float(f1), precision=float(precision), recall=float(recall), zero_division=bool(zero_division))


def intervention_rate(episodes):
    """Mean number of triggered interventions per episode."""
    if not episodes:
        raise EmptyInputError("no episodes")
    return float(np.mean([episode.n_interventions for episode in episodes]))


def rate_reduction(uncalibrated, calibrated):
    """Relative drop in interventions per task when switching to calibrated scores."""
    before = intervention_rate(uncalibrated)
    if before == 0:
        raise UndefinedMetricError("uncalibrated episodes never intervened")
    return 1.0 - intervention_rate(calibrated) / before


def synthetic_samples(n, temperature, seed, spread=0.8):
    """
    Scores overconfident by a known temperature.

    Logits z ~ N(0, spread^2), labels ~ Bernoulli(logistic(z)) and scores
    logistic(temperature * z), so scaling the scores back by ``temperature``
    gives the true failure probabilities.
    """
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, spread, size=n)
    labels = (rng.random(n) < expit(z)).astype(np.int64)
    return samples_from_arrays(expit(temperature * z), labels)


@dataclass(frozen=True)
class CalibrationSummary:
    model: CalibrationModel
    ece_before: float
    ece_after: float
    auroc: float
    f1: F1Score
    n_samples: int
    n_bins: int

    @property
    def relative_reduction(self) -> Optional[float]:
        if self.ece_before == 0:
            return None
        return 1.0 - self.ece_after / self.ece_before


def calibration_summary(samples, n_bins=None, tau=0.6, positive_class=PositiveClass.FAILURE):
    """Fit a temperature and report ECE before/after, AUROC and F1 at ``tau`` after scaling."""
    n_bins = get_setting("ECE_BINS", n_bins)
    model = fit_temperature(samples)
    return CalibrationSummary(
        model=model,
        ece_before=ece(samples, n_bins=n_bins),
        ece_after=ece(samples, n_bins=n_bins, model=model),
        auroc=auroc(samples),
        f1=f1_at(samples, tau, positive_class=positive_class, model=model),
        n_samples=len(samples),
        n_bins=n_bins,
    )
