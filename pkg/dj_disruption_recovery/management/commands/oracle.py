from collections import defaultdict

from dj_disruption_recovery.exceptions import InputError
from dj_disruption_recovery.oracle import (
    SELECTION_POWER_CAVEAT,
    bo2_from_records,
    contested_pairs,
    critic_select,
    oracle_intervention_ceiling,
    oracle_rows_from_fixture,
    selection_from_fixture,
)
from dj_disruption_recovery.records import Condition, PairedDataset

from ._base import DisruptionRecoveryCommand, load_input, percent

MODES = ("intervention", "bo2", "select")


def _two_seeds(records):
    by_seed = defaultdict(list)
    for record in records:
        if record.condition is Condition.BASELINE:
            by_seed[record.seed].append(record)
    seeds = sorted(by_seed)
    if len(seeds) < 2:
        raise InputError(f"needs baseline episodes from two seeds, found {len(seeds)}")
    return by_seed[seeds[0]], by_seed[seeds[1]]


class Command(DisruptionRecoveryCommand):
    help = "Upper bounds: oracle intervention ceiling, oracle Best-of-2 and critic-score selection."

    def add_arguments(self, parser):
        parser.add_argument("source", help="Episode log, fixture file or fixture name")
        parser.add_argument("--mode", choices=MODES, default="intervention")
        parser.add_argument("--aggregate", choices=("max", "mean", "final"), default=None)

    def run(self, *args, **options):
        mode = options["mode"]
        kind, source = load_input(options["source"], want_dataset=False)
        if kind == "config":
            raise InputError("oracle bounds need an episode log or a fixture, not a simulator config")
        if kind == "fixture":
            self._fixture(source, mode)
        else:
            self._log(source, mode, options["aggregate"])
        if mode == "select":
            self.emit(SELECTION_POWER_CAVEAT)

    def _log(self, records, mode, aggregate):
        if mode == "intervention":
            ceiling = oracle_intervention_ceiling(PairedDataset.from_records(records))
            self.emit(
                f"units = {ceiling.n_units}",
                f"baseline = {ceiling.baseline_rate:.4f}",
                f"ceiling = {ceiling.ceiling_rate:.4f}",
                f"delta = {ceiling.delta:+.4f}",
            )
        elif mode == "bo2":
            result = bo2_from_records(*_two_seeds(records))
            self.emit(
                f"tasks = {result.n_tasks}",
                f"seed success = {', '.join(f'{rate:.4f}' for rate in result.seed_rates)}",
                f"baseline = {result.baseline_rate:.4f}",
                f"bo2 = {result.bo2_rate:.4f}",
                f"delta = {result.delta:+.4f}",
            )
        else:
            first, second = _two_seeds(records)
            pairs = contested_pairs(first, second, aggregate)
            result = critic_select(pairs, n_tasks=len(first))
            self._selection("log", result)

    def _fixture(self, fixture, mode):
        if mode == "select":
            if fixture.kind != "critic_selection":
                raise InputError(f"select mode needs a critic_selection fixture, got {fixture.kind}")
            for model, result in selection_from_fixture(fixture.data).items():
                self._selection(model, result)
            return

        if fixture.kind != "oracle_ceilings":
            raise InputError(f"{mode} mode needs an oracle_ceilings fixture, got {fixture.kind}")
        for row in oracle_rows_from_fixture(fixture.data):
            if mode == "intervention":
                self.emit(
                    f"{row.model} {row.benchmark}: baseline {percent(row.baseline_rate)}, "
                    f"ceiling {percent(row.ceiling_rate)} ({percent(row.ceiling_delta, signed=True)})"
                )
            else:
                self.emit(
                    f"{row.model} {row.benchmark}: baseline {percent(row.baseline_rate)}, "
                    f"bo2 {percent(row.bo2_rate)} ({percent(row.bo2_delta, signed=True)}), "
                    f"disruption tax {percent(row.tax)}"
                )

    def _selection(self, label, result):
        self.emit(
            f"{label}: contested {result.n_contested}, correct {result.correct}, "
            f"accuracy {percent(result.selection_accuracy)}%, "
            f"critic {percent(result.delta_pp, signed=True)} pp, oracle {percent(result.oracle_delta_pp, signed=True)} pp"
        )
        if result.tied:
            self.emit(f"{label}: {result.n_ties} tied pairs went to the first trajectory")
