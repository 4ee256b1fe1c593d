import json

from dj_disruption_recovery.conf import get_setting
from dj_disruption_recovery.exceptions import InputError
from dj_disruption_recovery.fixtures import PROFILE_KINDS, profile_source
from dj_disruption_recovery.pilot import render_decision_tree, report_lines, run_pilot

from ._base import DisruptionRecoveryCommand, load_input


class Command(DisruptionRecoveryCommand):
    help = "Estimate p, r and d on a pilot and print the deployment decision trace."

    def add_arguments(self, parser):
        parser.add_argument("source", help="Episode log, simulator config, fixture file or fixture name")
        parser.add_argument("--pilot", type=int, default=None, help="Matched tasks in the pilot")
        parser.add_argument("--margin", type=float, default=None, help="Safety margin above p*")
        parser.add_argument("--seed", type=int, default=0, help="Seed for simulation and bootstrap")
        parser.add_argument("--seeds", type=int, default=1, help="Seeds per task for simulated pilots")
        parser.add_argument("--iterations", type=int, default=None, help="Bootstrap iterations")
        parser.add_argument("--model", default=None, help="Row to use from a multi-model counts fixture")

    def run(self, *args, **options):
        kind, source = load_input(options["source"])
        n_pilot = options["pilot"]
        if kind == "fixture":
            if source.kind not in PROFILE_KINDS:
                raise InputError(f"fixture {source.name} ({source.kind}) carries no pilot profile")
            source = profile_source(source, model=options["model"])
        elif kind == "config" and n_pilot is None:
            n_pilot = get_setting("PILOT_WARNING_TASKS")

        report = run_pilot(
            source,
            n_pilot=n_pilot,
            margin=options["margin"],
            seed=options["seed"],
            n_seeds=options["seeds"],
            n_iter=options["iterations"],
        )
        tree = render_decision_tree(report)
        self.emit(*report_lines(report))
        self.emit("", "decision trace:", *tree.lines, "", "summary:")
        self.emit(json.dumps(tree.summary, indent=2, sort_keys=True))
