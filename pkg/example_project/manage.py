#!/usr/bin/env python
"""
Entry point for the example project.

    python manage.py decide alfworld_pilot
    python manage.py simulate config.yaml --tasks 100 --out run.jsonl
"""
import os
import sys


def main():
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "example_project.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install dj-disruption-recovery (pip install -e .) "
            "in the active environment first."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
