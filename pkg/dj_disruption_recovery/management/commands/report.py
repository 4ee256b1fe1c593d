from pathlib import Path

from dj_disruption_recovery.logs import read_log
from dj_disruption_recovery.tables import results_from_logs

from ._base import DisruptionRecoveryCommand


class Command(DisruptionRecoveryCommand):
    help = "Tabulate success rates, bootstrap intervals and Holm-corrected significance across episode logs."

    def add_arguments(self, parser):
        parser.add_argument("logs", nargs="+", help="Episode logs; the first supplies the baseline row")
        parser.add_argument("--bootstrap-iters", type=int, default=None, help="Bootstrap iterations")
        parser.add_argument("--alpha", type=float, default=0.05, help="Family-wise significance level")
        parser.add_argument("--seed", type=int, default=0, help="Bootstrap seed")
        parser.add_argument("--format", choices=("text", "csv"), default="text")

    def run(self, *args, **options):
        logs = []
        seen = set()
        for index, path in enumerate(options["logs"]):
            label = Path(path).stem
            if label in seen:
                label = f"{label}-{index}"
            seen.add(label)
            logs.append((label, read_log(path)))

        table = results_from_logs(
            logs, n_iter=options["bootstrap_iters"], seed=options["seed"], alpha=options["alpha"]
        )
        if options["format"] == "csv":
            self.stdout.write(table.to_csv(), ending="")
            return
        self.emit(table.to_text())
        if len(table.frame) > 1:
            self.emit(f"p-values are uncorrected; holm_significant applies Holm-Bonferroni at alpha = {table.alpha}")
