from dj_disruption_recovery.config import load_config
from dj_disruption_recovery.logs import write_log
from dj_disruption_recovery.simulator import run_experiment
from dj_disruption_recovery.utils import format_rate

from ._base import DisruptionRecoveryCommand


class Command(DisruptionRecoveryCommand):
    help = "Run paired baseline/intervention episodes from a simulator config and write an episode log."

    def add_arguments(self, parser):
        parser.add_argument("config", help="YAML simulator config")
        parser.add_argument("--tasks", type=int, default=100, help="Matched tasks to simulate")
        parser.add_argument("--seeds", type=int, default=1, help="Seeds per task")
        parser.add_argument("--seed", type=int, default=0, help="Master seed")
        parser.add_argument("--out", help="Episode log to write (JSON lines)")
        parser.add_argument("--jobs", type=int, default=None, help="joblib workers (defaults to N_JOBS)")

    def run(self, *args, **options):
        config = load_config(options["config"])
        result = run_experiment(
            config,
            n_tasks=options["tasks"],
            n_seeds=options["seeds"],
            master_seed=options["seed"],
            n_jobs=options["jobs"],
        )
        table, profile = result.table, result.profile
        self.emit(
            f"experiment: {config.name}",
            f"units: {table.n_tasks} ({options['tasks']} tasks x {options['seeds']} seeds)",
            f"fail/fail = {table.a}, disruptions = {table.b}, recoveries = {table.c}, succeed/succeed = {table.d_count}",
            f"p = {format_rate(profile.p)}, r = {format_rate(profile.r)}, d = {format_rate(profile.d)}",
            f"baseline success = {format_rate(result.baseline_success_rate)}",
            f"intervention success = {format_rate(result.intervention_success_rate)}",
            f"delta = {result.delta:+.4f}",
        )
        if options["out"]:
            count = write_log(result.dataset, options["out"])
            self.emit(f"wrote {count} episodes to {options['out']}")
