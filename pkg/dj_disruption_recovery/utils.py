from fractions import Fraction

import numpy as np
from joblib import effective_n_jobs
from scipy.special import expit, logit

from .conf import get_setting
from .exceptions import ParameterError


def clamp_scores(scores, epsilon=None):
    """
    Clamp critic probabilities into the open interval (eps, 1 - eps).

    Saturated critics emit exact 0 or 1, which would turn into infinite
    logits under temperature scaling.

    Args:
        scores: Scalar or array-like of probabilities
        epsilon: Distance kept from each boundary (defaults to SCORE_EPSILON)

    Returns:
        numpy array (or float for scalar input) of clamped scores
    """
    epsilon = get_setting("SCORE_EPSILON", epsilon)
    clamped = np.clip(np.asarray(scores, dtype=np.float64), epsilon, 1.0 - epsilon)
    if clamped.ndim == 0:
        return float(clamped)
    return clamped


def shift_odds(probability, log_odds):
    """Return ``probability`` with its log-odds moved by ``log_odds``."""
    if probability <= 0.0:
        return 0.0
    if probability >= 1.0:
        return 1.0
    return float(expit(logit(probability) + log_odds))


def as_fraction(value):
    """
    Convert a count ratio, decimal string or float into an exact Fraction.

    Strings such as ``"58/234"`` or ``"0.893"`` are parsed exactly; floats go
    through their shortest repr so ``0.12`` becomes ``3/25`` rather than the
    binary expansion.
    """
    if value is None:
        return None
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    return Fraction(str(value).strip())


def format_rate(value, digits=4):
    """Format an optional rate for report text; absent values render as 'undefined'."""
    if value is None:
        return "undefined"
    return f"{float(value):.{digits}f}"


def resolve_jobs(n_jobs=None):
    """
    Worker count for joblib fan-out; ``None`` falls back to N_JOBS.

    Negative values follow joblib (-1 is every core).

    Raises:
        ParameterError: for zero workers
    """
    n_jobs = get_setting("N_JOBS", n_jobs)
    if n_jobs == 0:
        raise ParameterError("n_jobs must be non-zero; use -1 for every core", location="n_jobs")
    return effective_n_jobs(n_jobs)
