"""
Episode log files: one JSON object per line.

Each line carries ``task_id``, ``seed``, ``condition``, ``outcome``,
``n_steps``, ``interventions`` and ``answered``. Simulated logs also carry
``steps`` (every emitted step) and ``latent_outcome`` so that reading a log
back reproduces the in-memory records exactly; both are optional on input.
"""

import json
import logging
from pathlib import Path

from .exceptions import EmptyInputError, InputError
from .records import Condition, EpisodeRecord, Outcome, PairedDataset, Step

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("task_id", "seed", "condition", "outcome", "n_steps", "interventions")


def _step_dict(step, with_trigger=True):
    entry = {"step": step.index, "raw_score": step.raw_score, "calibrated_score": step.calibrated_score}
    if with_trigger:
        entry["triggered"] = step.triggered
    return entry


def record_to_dict(record):
    line = {
        "task_id": record.task_id,
        "seed": record.seed,
        "condition": record.condition.value,
        "outcome": record.outcome.value,
        "n_steps": record.n_steps,
        "interventions": [_step_dict(step, with_trigger=False) for step in record.interventions],
        "answered": record.answered,
    }
    if record.steps:
        line["steps"] = [_step_dict(step) for step in record.steps]
    if record.latent_outcome is not None:
        line["latent_outcome"] = record.latent_outcome.value
    return line


def record_from_dict(line, location=""):
    missing = [name for name in REQUIRED_FIELDS if name not in line]
    if missing:
        raise InputError(f"{location}missing fields: {', '.join(missing)}")
    try:
        if "steps" in line:
            steps = tuple(
                Step(
                    index=int(entry["step"]),
                    raw_score=float(entry["raw_score"]),
                    calibrated_score=float(entry["calibrated_score"]),
                    triggered=bool(entry.get("triggered", False)),
                )
                for entry in line["steps"]
            )
        else:
            steps = tuple(
                Step(
                    index=int(entry["step"]),
                    raw_score=float(entry["raw_score"]),
                    calibrated_score=float(entry["calibrated_score"]),
                    triggered=True,
                )
                for entry in line["interventions"]
            )
        latent = line.get("latent_outcome")
        return EpisodeRecord(
            task_id=str(line["task_id"]),
            seed=int(line["seed"]),
            condition=Condition(line["condition"]),
            outcome=Outcome(line["outcome"]),
            n_steps=int(line["n_steps"]),
            steps=steps,
            n_interventions=len(line["interventions"]),
            latent_outcome=Outcome(latent) if latent is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{location}malformed record: {exc}") from exc


def dumps(record):
    return json.dumps(record_to_dict(record), separators=(",", ":"))


def write_log(records, path):
    """Write records (or a PairedDataset) to ``path``; returns the number of lines."""
    if isinstance(records, PairedDataset):
        records = records.records()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(dumps(record))
            handle.write("\n")
            count += 1
    logger.debug("wrote %d episode lines to %s", count, path)
    return count


def read_log(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"log file not found: {path}")
    records = []
    with path.open(encoding="utf-8") as handle:
        for number, text in enumerate(handle, start=1):
            if not text.strip():
                continue
            location = f"{path.name}:{number}: "
            try:
                line = json.loads(text)
            except json.JSONDecodeError as exc:
                raise InputError(f"{location}invalid JSON ({exc.msg})") from exc
            records.append(record_from_dict(line, location))
    if not records:
        raise EmptyInputError(f"log {path} holds no episodes")
    return records


def read_dataset(path):
    return PairedDataset.from_records(read_log(path))
