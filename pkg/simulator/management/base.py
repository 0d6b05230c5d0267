"""
Shared plumbing for the simulator management commands: common flags,
config loading and the mapping of domain errors onto exit codes.
"""

import functools
import json
import sys

import structlog
from django.core.management.base import BaseCommand, CommandError
from rest_framework.utils.encoders import JSONEncoder

from ..acquisition import ReadoutError
from ..config import ConfigError, load_config
from ..experiments import FunctionLabel

log = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_READOUT = 2
EXIT_USAGE = 64
EXIT_IO = 74

FUNCTION_CHOICES = [f.value for f in FunctionLabel]


def _usage_error(parser, message):
    if getattr(parser, "called_from_command_line", False):
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)
    raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


def write_json(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, cls=JSONEncoder), encoding="utf-8")
    return path


class SimulatorCommand(BaseCommand):
    """Base for run, verify and scan. Subclasses implement `run_command`."""

    default_function = FunctionLabel.F00.value

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = functools.partial(_usage_error, parser)
        return parser

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON experiment configuration file")
        parser.add_argument("--f", dest="function", choices=FUNCTION_CHOICES, default=self.default_function,
                            help="oracle function label")
        parser.add_argument("--epsilon", type=float, help="initial singlet polarization, overrides the config")
        parser.add_argument("--no-noise", action="store_true", help="disable relaxation")
        parser.add_argument("--out", help="output directory (falls back to SINGLETSIM_OUT)")
        parser.add_argument("--seedless", action="store_true",
                            help="accepted for scripting; every run is deterministic")

    def usage_error(self, message):
        raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)

    def load_config(self, options):
        return load_config(options["config"], epsilon=options["epsilon"], no_noise=options["no_noise"],
                           output_dir=options["out"])

    def handle(self, *args, **options):
        try:
            return self.run_command(**options)
        except CommandError:
            raise
        except ReadoutError as e:
            log.warning("command_readout_failed", command=self.command_name, error=str(e))
            raise CommandError(f"ambiguous readout: {e}", returncode=EXIT_READOUT) from e
        except (ConfigError, ValueError) as e:
            log.error("command_usage_error", command=self.command_name, error=str(e))
            raise CommandError(str(e), returncode=EXIT_USAGE) from e
        except OSError as e:
            log.error("command_io_error", command=self.command_name, error=str(e), exc_info=True)
            raise CommandError(f"I/O error: {e}", returncode=EXIT_IO) from e

    @property
    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def run_command(self, **options):
        raise NotImplementedError("subclasses of SimulatorCommand must provide a run_command() method")
