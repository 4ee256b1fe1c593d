"""
Shared plumbing for the dj_disruption_recovery management commands.
"""

import logging
from pathlib import Path

import yaml
from django.core.management.base import BaseCommand, CommandError

from dj_disruption_recovery.config import parse_config
from dj_disruption_recovery.exceptions import ConfigValidationError, DisruptionRecoveryError
from dj_disruption_recovery.fixtures import fixture_from_document, is_fixture_document, load_fixture
from dj_disruption_recovery.logs import read_dataset, read_log

logger = logging.getLogger(__name__)

LOG_SUFFIXES = (".jsonl", ".log", ".ndjson")
YAML_SUFFIXES = (".yaml", ".yml")


class DisruptionRecoveryCommand(BaseCommand):
    """
    Base command: subclasses implement ``run``. Package errors become a
    ``CommandError`` whose return code is the error category's exit code.
    """

    def handle(self, *args, **options):
        try:
            self.run(*args, **options)
        except DisruptionRecoveryError as exc:
            logger.debug("%s failed: %s", self.__class__.__module__, exc)
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, *args, **options):
        raise NotImplementedError

    def emit(self, *lines):
        for line in lines:
            self.stdout.write(line)


def is_log_path(value):
    return Path(value).suffix in LOG_SUFFIXES


def load_input(value, want_dataset=True):
    """
    Resolve a command-line input.

    Returns one of ("log", records-or-dataset), ("config", ExperimentConfig)
    or ("fixture", Fixture). Episode logs are recognised by suffix; YAML
    files holding ``kind`` and ``data`` are fixtures, other YAML files are
    simulator configs; anything else is looked up as a bare fixture name.
    """
    path = Path(value)
    if is_log_path(path):
        return "log", read_dataset(path) if want_dataset else read_log(path)
    if path.is_file() and path.suffix in YAML_SUFFIXES:
        try:
            document = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigValidationError(f"cannot parse {path}: {exc}") from exc
        if is_fixture_document(document):
            return "fixture", fixture_from_document(document, path)
        return "config", parse_config(document)
    return "fixture", load_fixture(value)


def percent(value, signed=False):
    return f"{value * 100:+.1f}" if signed else f"{value * 100:.1f}"
