from dj_disruption_recovery.calibration import calibration_summary, samples_from_episodes
from dj_disruption_recovery.logs import read_log
from dj_disruption_recovery.utils import format_rate

from ._base import DisruptionRecoveryCommand


class Command(DisruptionRecoveryCommand):
    help = "Fit a temperature to the critic scores in an episode log and report calibration quality."

    def add_arguments(self, parser):
        parser.add_argument("log", help="Episode log (JSON lines)")
        parser.add_argument("--bins", type=int, default=None, help="Equal-width ECE bins (defaults to ECE_BINS)")
        parser.add_argument("--tau", type=float, default=0.6, help="Threshold for the F1 score")

    def run(self, *args, **options):
        samples = samples_from_episodes(read_log(options["log"]))
        summary = calibration_summary(samples, n_bins=options["bins"], tau=options["tau"])
        reduction = summary.relative_reduction
        self.emit(
            f"samples = {summary.n_samples}",
            f"temperature = {summary.model.temperature:.4f}",
            f"ECE before = {format_rate(summary.ece_before)} ({summary.n_bins} bins)",
            f"ECE after = {format_rate(summary.ece_after)}",
            f"relative reduction = {'undefined' if reduction is None else f'{reduction * 100:.1f}%'}",
            f"AUROC = {format_rate(summary.auroc)}",
            f"F1 (tau={options['tau']:.2f}) = {format_rate(summary.f1.f1)}",
        )
        if summary.f1.zero_division:
            self.emit("warning: F1 had an empty denominator")
