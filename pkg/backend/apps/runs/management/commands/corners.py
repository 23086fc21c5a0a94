"""
``manage.py corners <command>``: run one lab command.

Exit status is 0 when every check passes, 1 when a check fails or a
computation breaks down and 2 for invalid configuration.
"""

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.runs.models import VerificationRun
from apps.runs.utils import EXIT_PASSED, RunConfigError, load_config, process_run


class Command(BaseCommand):
    help = "Run a corners lab command and write its report."

    def add_arguments(self, parser):
        parser.add_argument("lab_command", choices=VerificationRun.Command.values)
        parser.add_argument("--config", help="Sectioned key = value configuration file")
        parser.add_argument("--seed", type=int, help="Master seed; drawn fresh and recorded when omitted")
        parser.add_argument("--tol", type=float, help="Pass/fail tolerance")
        parser.add_argument("--threads", type=int, help="Worker threads")
        parser.add_argument("--out", help="Report file (.json) or directory")
        parser.add_argument("--format", choices=("json", "csv"), help="Also write the main table as CSV")
        parser.add_argument("--no-record", action="store_true", help="Do not store a VerificationRun row")

    def handle(self, *args, **options):
        command = options["lab_command"]
        overrides = {
            "seed": options["seed"],
            "tol": options["tol"],
            "threads": options["threads"],
            "out": options["out"],
            "format": options["format"],
        }
        try:
            config = load_config(command, path=options["config"], overrides=overrides)
        except RunConfigError as e:
            raise CommandError(f"invalid configuration: {e}", returncode=2)

        record = settings.CORNERS_LAB_RECORD_RUNS and not options["no_record"]
        outcome = process_run(config, record=record)

        if outcome.exit_code == EXIT_PASSED:
            self.stdout.write(self.style.SUCCESS(f"{command}: passed (seed {config.seed}) -> {outcome.report_path}"))
            return
        if outcome.error:
            raise CommandError(f"{command}: {outcome.error}", returncode=outcome.exit_code)
        listed = "\n".join(f"  - {failure}" for failure in outcome.failures[:20])
        raise CommandError(
            f"{command}: {len(outcome.failures)} checks failed (seed {config.seed}) -> {outcome.report_path}\n{listed}",
            returncode=outcome.exit_code,
        )
