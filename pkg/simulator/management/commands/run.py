from pathlib import Path

import structlog

from ...acquisition import export_spectrum
from ...experiments import KIND_QUANTUM, KINDS, run
from ...serializers import ExperimentRecordSerializer
from ..base import SimulatorCommand, write_json

log = structlog.get_logger(__name__)


class Command(SimulatorCommand):
    help = "Run one experiment and write its spectrum, sidecar and record into the output directory."

    def add_arguments(self, parser):
        parser.add_argument("kind", choices=KINDS, help="classical-f0, classical-f1 or quantum")
        super().add_arguments(parser)

    def run_command(self, **options):
        config = self.load_config(options)
        kind, f = options["kind"], options["function"]
        record = run(kind, f, config.system, config.noise, config.acquisition)

        out = Path(config.output_dir)
        spectrum_path, _ = export_spectrum(
            record.spectrum, out / f"{kind}_{f}_spectrum.csv", system=config.system,
            params=config.acquisition, readings=record.readings, extra={"kind": kind, "f": f},
        )
        record.spectrum_path = str(spectrum_path)
        record_path = write_json(out / f"{kind}_{f}_record.json", ExperimentRecordSerializer(record).data)
        log.info("run_written", kind=kind, f=f, record=str(record_path))

        bits = record.bits
        if kind == KIND_QUANTUM:
            self.stdout.write(f"result={record.result_bit} {record.verdict}")
        else:
            self.stdout.write(f"f({kind[-1]})={record.result_bit}")
        self.stdout.write(f"I={bits['I']} S={bits['S']}")
