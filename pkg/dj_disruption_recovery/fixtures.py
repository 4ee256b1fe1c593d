"""
Published measurements shipped as YAML fixtures.

Every fixture file has three top-level keys: ``kind`` (what the data
describes), ``provenance`` (where the numbers come from) and ``data``.
Fixtures are looked up by bare name in the package ``fixtures/`` directory or
by path.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import yaml

from .exceptions import ConfigValidationError, InputError
from .framework import DRProfile, OutcomeTable

logger = logging.getLogger(__name__)

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"

KINDS = (
    "rate_profile",
    "outcome_counts",
    "critic_quality",
    "calibration_results",
    "oracle_ceilings",
    "critic_selection",
    "power_targets",
    "cascade_stats",
    "intervention_rates",
    "threshold_sweep",
    "heuristic_policies",
    "results_table",
    "per_seed_results",
)

# kinds a pilot decision can be computed from
PROFILE_KINDS = ("rate_profile", "outcome_counts")


@dataclass(frozen=True)
class Fixture:
    name: str
    kind: str
    provenance: str
    data: dict
    path: Path

    def rows(self):
        return list(self.data.get("rows", []))

    def row(self, model):
        """The row published for ``model``."""
        for entry in self.rows():
            if entry.get("model") == model:
                return entry
        known = ", ".join(str(entry.get("model")) for entry in self.rows())
        raise InputError(f"fixture {self.name} has no row for model {model!r} (known: {known})")


def available_fixtures():
    return sorted(path.stem for path in FIXTURE_DIR.glob("*.yaml"))


def resolve_fixture(name_or_path):
    """Path of a fixture given a bare name (``alfworld_pilot``) or a file path."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    candidate = FIXTURE_DIR / f"{path.stem}.yaml"
    if path.parent == Path(".") and candidate.is_file():
        return candidate
    raise InputError(f"unknown fixture {name_or_path!r} (available: {', '.join(available_fixtures())})")


def is_fixture_document(document):
    return isinstance(document, dict) and "kind" in document and "data" in document


def fixture_from_document(document, path):
    if not isinstance(document, dict):
        raise ConfigValidationError("fixture must be a mapping")
    for key in ("kind", "provenance", "data"):
        if key not in document:
            raise ConfigValidationError("field required", location=key)
    if document["kind"] not in KINDS:
        raise ConfigValidationError(f"unknown fixture kind {document['kind']!r}", location="kind")
    if not isinstance(document["data"], dict):
        raise ConfigValidationError("expected a mapping", location="data")
    path = Path(path)
    return Fixture(
        name=path.stem,
        kind=document["kind"],
        provenance=" ".join(str(document["provenance"]).split()),
        data=document["data"],
        path=path,
    )


def load_fixture(name_or_path):
    """
    Load and validate a fixture.

    Raises:
        InputError: when no fixture of that name or path exists
        ConfigValidationError: when the file is not a well-formed fixture
    """
    path = resolve_fixture(name_or_path)
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigValidationError(f"{path.name}: invalid YAML ({exc})") from exc
    fixture = fixture_from_document(document, path)
    logger.debug("loaded fixture %s (%s)", fixture.name, fixture.kind)
    return fixture


def profile_source(fixture, model=None):
    """
    Pilot input described by a fixture.

    ``rate_profile`` fixtures give a rate-only DRProfile; ``outcome_counts``
    fixtures give the OutcomeTable of one model's F/C/S/B counts.
    """
    if fixture.kind == "rate_profile":
        data = fixture.data
        return DRProfile.from_rates(data["p"], data.get("r"), data.get("d"))
    if fixture.kind == "outcome_counts":
        rows = fixture.rows()
        if model is None:
            if len(rows) != 1:
                raise InputError(f"fixture {fixture.name} holds several models; pick one with --model")
            entry = rows[0]
        else:
            entry = fixture.row(model)
        return OutcomeTable.from_counts(
            failures=entry["failures"],
            recoveries=entry["recoveries"],
            successes=entry["successes"],
            disruptions=entry["disruptions"],
        )
    raise InputError(f"fixture {fixture.name} ({fixture.kind}) carries no pilot profile")
