from dataclasses import asdict
from pathlib import Path

import structlog
from django.core.management.base import CommandError

from ...checks import registered_checks, run_checks
from ..base import EXIT_FAILED, SimulatorCommand, write_json

log = structlog.get_logger(__name__)


class Command(SimulatorCommand):
    help = "Run the acceptance suite; writes verify_report.json and exits non-zero on any failure."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--only", action="append", choices=list(registered_checks()),
                            help="run only the named check (repeatable)")
        parser.add_argument("--list", action="store_true", help="list the available checks and exit")

    def run_command(self, **options):
        if options["list"]:
            for name, description in registered_checks().items():
                self.stdout.write(f"{name:<22} {description}")
            return

        config = self.load_config(options)
        results = run_checks(config, options["only"])
        failed = [result for result in results if not result.passed]

        report_path = write_json(Path(config.output_dir) / "verify_report.json", {
            "passed": not failed,
            "checks": [asdict(result) for result in results],
        })
        for result in results:
            status = self.style.SUCCESS("PASS") if result.passed else self.style.ERROR("FAIL")
            self.stdout.write(f"{status} {result.name} ({result.duration_s:.2f}s)")
        self.stdout.write(f"{len(results) - len(failed)}/{len(results)} checks passed, report: {report_path}")
        log.info("verify_done", passed=len(results) - len(failed), total=len(results))

        if failed:
            raise CommandError(f"failed checks: {', '.join(result.name for result in failed)}",
                               returncode=EXIT_FAILED)
