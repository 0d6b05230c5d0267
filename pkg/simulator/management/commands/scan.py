import csv
import io
from pathlib import Path

import numpy as np
import structlog

from ...experiments import FunctionLabel, epsilon_scan, para_fraction
from ...serializers import ScanRowSerializer
from ..base import SimulatorCommand

log = structlog.get_logger(__name__)

DEFAULT_RANGES = {"epsilon": (0.0, 1.0), "temperature": (10.0, 300.0)}
TEMPERATURE_FIELDS = ("temperature_k", "para_fraction")


class Command(SimulatorCommand):
    help = "Scan the Deutsch run over the initial polarization, or the para fraction over temperature."

    default_function = FunctionLabel.F01.value

    def add_arguments(self, parser):
        parser.add_argument("kind", choices=tuple(DEFAULT_RANGES))
        super().add_arguments(parser)
        parser.add_argument("--from", dest="start", type=float, help="first grid value")
        parser.add_argument("--to", dest="stop", type=float, help="last grid value")
        parser.add_argument("--steps", type=int, default=11, help="number of grid points")
        parser.add_argument("--workers", type=int, default=1, help="rows evaluated in parallel")

    def grid(self, kind, start, stop, steps):
        default_start, default_stop = DEFAULT_RANGES[kind]
        start = default_start if start is None else start
        stop = default_stop if stop is None else stop
        if steps < 1:
            self.usage_error("--steps must be at least 1")
        if start > stop:
            self.usage_error(f"inverted range: --from {start} is above --to {stop}")
        if kind == "epsilon" and not (0 <= start and stop <= 1):
            self.usage_error("epsilon range must lie within [0, 1]")
        if kind == "temperature" and start <= 0:
            self.usage_error("temperatures must be positive")
        return np.linspace(start, stop, steps)

    def run_command(self, **options):
        kind = options["kind"]
        grid = self.grid(kind, options["start"], options["stop"], options["steps"])
        if options["workers"] < 1:
            self.usage_error("--workers must be at least 1")
        config = self.load_config(options)

        if kind == "epsilon":
            rows = epsilon_scan(grid, options["function"], config.system, config.noise, config.acquisition,
                                workers=options["workers"])
            data = ScanRowSerializer(rows, many=True).data
            fields = list(ScanRowSerializer().fields)
        else:
            data = [{"temperature_k": float(t), "para_fraction": para_fraction(t)} for t in grid]
            fields = list(TEMPERATURE_FIELDS)

        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(data)

        path = Path(config.output_dir) / f"scan_{kind}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buffer.getvalue(), encoding="utf-8")
        log.info("scan_written", kind=kind, rows=len(data), path=str(path))
        self.stdout.write(buffer.getvalue(), ending="")
