"""
Run service that executes a lab command and records its outcome.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from django.db import transaction
from django.utils import timezone

from ..models import VerificationRun
from .commands import CONFIG_ERRORS, execute
from .config import RunConfig
from .reports import build_report, to_jsonable, write_report, write_table

logger = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunOutcome:
    exit_code: int
    run: VerificationRun
    report_path: Optional[Path] = None
    table_path: Optional[Path] = None
    failures: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_PASSED


class RunProcessor:
    """
    Executes a RunConfig, writes its reports and tracks the VerificationRun.
    """

    def __init__(self, record: bool = True):
        self.record = record

    def _save(self, run: VerificationRun):
        if self.record:
            run.save()

    def _fail(self, run: VerificationRun, message: str):
        run.status = VerificationRun.Status.FAILED
        run.error_message = message
        run.completed_at = timezone.now()
        self._save(run)

    @transaction.atomic
    def process(self, run: VerificationRun, config: RunConfig) -> RunOutcome:
        """
        Run the command of ``config`` and store the verdict on ``run``.

        Args:
            run: VerificationRun tracking this invocation
            config: validated configuration

        Returns:
            RunOutcome with exit code 0 (passed), 1 (a check failed or the
            computation broke down) or 2 (unusable parameters)
        """
        started = time.perf_counter()
        try:
            run.status = VerificationRun.Status.PROCESSING
            self._save(run)

            result = execute(config)
            document = build_report(config.command, result.passed, config.parameters(), result.results)
            meta = {
                "run_id": str(run.id),
                "created_at": timezone.now().isoformat(),
                "duration_seconds": round(time.perf_counter() - started, 3),
                "threads": config.threads,
                "config_file": str(config.source) if config.source else None,
            }
            report_path = write_report(config.report_path, document, meta)
            table_path = None
            if config.format == "csv" and result.table is not None:
                table_path = write_table(config.artifact_path(".csv"), result.table.fieldnames, result.table.rows)

            run.passed = result.passed
            run.report = document["results"]
            run.report_path = str(report_path)
            run.status = VerificationRun.Status.COMPLETED
            run.completed_at = timezone.now()
            run.error_message = None if result.passed else "; ".join(result.failures[:20])
            self._save(run)

            if result.passed:
                logger.info(f"{config.command} passed: report at {report_path}")
            else:
                logger.warning(f"{config.command} failed {len(result.failures)} checks: {run.error_message}")
            return RunOutcome(
                exit_code=EXIT_PASSED if result.passed else EXIT_FAILED,
                run=run,
                report_path=report_path,
                table_path=table_path,
                failures=list(result.failures),
            )

        except CONFIG_ERRORS as e:
            logger.error(f"Invalid parameters for {config.command}: {e}")
            self._fail(run, str(e))
            return RunOutcome(exit_code=EXIT_CONFIG, run=run, error=str(e))

        except Exception as e:
            logger.error(f"{config.command} broke down: {type(e).__name__}: {e}")
            self._fail(run, f"{type(e).__name__}: {e}")
            return RunOutcome(exit_code=EXIT_FAILED, run=run, error=f"{type(e).__name__}: {e}")


def create_run(config: RunConfig, record: bool = True) -> VerificationRun:
    fields = {
        "command": config.command,
        "seed": config.seed,
        "tolerance": config.tol,
        "threads": config.threads,
        "config": to_jsonable(config.parameters()["sections"]),
        "status": VerificationRun.Status.PENDING,
    }
    if record:
        return VerificationRun.objects.create(**fields)
    return VerificationRun(**fields)


def process_run(config: RunConfig, record: bool = True) -> RunOutcome:
    """
    Convenience function to record and process a run.

    Args:
        config: validated configuration
        record: persist the VerificationRun row

    Returns:
        RunOutcome
    """
    run = create_run(config, record)
    processor = RunProcessor(record=record)
    return processor.process(run, config)
