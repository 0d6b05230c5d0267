"""
End-to-end workflows: state preparation from the Werner singlet, classical
evaluation of f(0) and f(1), the one-query Deutsch run, the truth table,
polarization scans and the para-hydrogen fraction.
"""

import enum
import functools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import structlog

from . import pulselang
from .acquisition import (
    AcquisitionParams,
    Calibration,
    ReadoutError,
    Spectrum,
    acquire,
    calibrate,
    read_multiplets,
    transform,
)
from .dynamics import Gradient, NoiseModel, PulseSequence, apply_sequence
from .qcore import (
    SpinSystem,
    partial_transpose_min_eig,
    polarization_estimate,
    singlet_frame,
    werner_state,
)

log = structlog.get_logger(__name__)

THETA_ROT_K = 87.6
MIN_ROTATIONAL_LEVEL = 20
# highest level kept has Boltzmann factor exp(-BOLTZMANN_CUTOFF)
BOLTZMANN_CUTOFF = 40

KIND_CLASSICAL_0 = "classical-f0"
KIND_CLASSICAL_1 = "classical-f1"
KIND_QUANTUM = "quantum"
KINDS = (KIND_CLASSICAL_0, KIND_CLASSICAL_1, KIND_QUANTUM)

PREPARATION_SEQUENCES = {(0, 0): "A", (0, 1): "B", (1, 0): "C"}


class PreparationError(ValueError):
    """Raised when no preparation sequence exists for the requested input."""
    pass


class FunctionLabel(str, enum.Enum):
    F00 = "f00"
    F01 = "f01"
    F10 = "f10"
    F11 = "f11"

    def __call__(self, x: int) -> int:
        return int(self.value[1 + x])

    @property
    def is_constant(self) -> bool:
        return self(0) == self(1)

    @property
    def is_balanced(self) -> bool:
        return not self.is_constant

    @property
    def parity(self) -> int:
        return self(0) ^ self(1)


@dataclass(eq=False)
class ExperimentRecord:
    kind: str
    f: FunctionLabel
    epsilon: float
    noise: NoiseModel
    sequences: tuple
    final_state: np.ndarray
    spectrum: Spectrum
    readings: tuple
    bits: dict
    result_bit: int
    wall_clock: float = 0.0
    spectrum_path: str = None

    @property
    def multiplet_ratio(self) -> float:
        magnitudes = [abs(r.integral) for r in self.readings]
        return min(magnitudes) / max(magnitudes)

    @property
    def verdict(self) -> str:
        return "BALANCED" if self.result_bit else "CONSTANT"


@dataclass
class TruthTableCell:
    kind: str
    f: FunctionLabel
    expected: int
    observed: int = None
    error: str = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.observed == self.expected


@dataclass
class TruthTable:
    cells: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return bool(self.cells) and all(cell.passed for cell in self.cells)

    @property
    def passed_count(self) -> int:
        return sum(cell.passed for cell in self.cells)


@dataclass
class ScanRow:
    epsilon: float
    result_bit: int
    initial_pt_min_eig: float
    final_polarization: float
    final_pt_min_eig: float
    error: str = None

    @property
    def final_npt(self) -> bool:
        return self.final_pt_min_eig < 0


def uf_matrix(f: FunctionLabel) -> np.ndarray:
    """Oracle |x, y> -> |x, y XOR f(x)>."""
    f = FunctionLabel(f)
    u = np.zeros((4, 4), dtype=complex)
    for x in (0, 1):
        for y in (0, 1):
            u[2 * x + (y ^ f(x)), 2 * x + y] = 1
    return u


def uf_sequence(f: FunctionLabel) -> PulseSequence:
    f = FunctionLabel(f)
    return pulselang.builtin("U00" if f is FunctionLabel.F00 else "P" + f.value[1:])


def preparation_sequence(a: int, b: int) -> PulseSequence:
    try:
        name = PREPARATION_SEQUENCES[(a, b)]
    except KeyError:
        raise PreparationError(f"no preparation sequence maps the singlet onto |{a}{b}>") from None
    return pulselang.builtin(name) + PulseSequence((Gradient(),))


def prepare_input(a: int, b: int, system: SpinSystem, noise: NoiseModel) -> np.ndarray:
    return apply_sequence(werner_state(system.epsilon), preparation_sequence(a, b), system, noise)


def _classical_state(f: FunctionLabel, x: int, system: SpinSystem, noise: NoiseModel):
    chain = (("prepare", preparation_sequence(x, 0)), ("oracle", uf_sequence(f)))
    return _run_chain(chain, system, noise), chain


def _deutsch_state(f: FunctionLabel, system: SpinSystem, noise: NoiseModel):
    chain = (
        ("prepare", preparation_sequence(0, 1)),
        ("superpose", pulselang.builtin("acquire_pulse")),
        ("oracle", uf_sequence(f)),
    )
    return _run_chain(chain, system, noise), chain


def _run_chain(chain, system, noise):
    rho = werner_state(system.epsilon)
    for _, seq in chain:
        rho = apply_sequence(rho, seq, system, noise)
    return rho


def _readout(rho, system, noise, params, calibration):
    spectrum = transform(acquire(rho, system, noise, params))
    readings = read_multiplets(spectrum, system, calibration)
    return spectrum.with_phase(calibration.phase0), readings


@functools.lru_cache(maxsize=64)
def reference_calibration(system: SpinSystem, noise: NoiseModel, params: AcquisitionParams) -> Calibration:
    """Phase and magnitude of the classical f00, x=0 spectrum (I_x + S_x)."""
    rho, _ = _classical_state(FunctionLabel.F00, 0, system, noise)
    reference = transform(acquire(rho, system, noise, replace(params, readout_pulse=True)))
    return calibrate(reference, system)


def run_classical(f: FunctionLabel, x: int, system: SpinSystem, noise: NoiseModel,
                  params: AcquisitionParams = AcquisitionParams()) -> ExperimentRecord:
    f = FunctionLabel(f)
    started = time.perf_counter()
    params = replace(params, readout_pulse=True)
    calibration = reference_calibration(system, noise, params)
    rho, chain = _classical_state(f, x, system, noise)
    spectrum, readings = _readout(rho, system, noise, params, calibration)
    bits = {r.spin: r.bit for r in readings}
    record = ExperimentRecord(
        kind=KIND_CLASSICAL_1 if x else KIND_CLASSICAL_0, f=f, epsilon=system.epsilon, noise=noise,
        sequences=chain + (("readout", pulselang.builtin("acquire_pulse")),), final_state=rho,
        spectrum=spectrum, readings=readings, bits=bits, result_bit=bits["S"],
        wall_clock=time.perf_counter() - started,
    )
    log.info("classical_run_done", f=f.value, x=x, bits=bits, epsilon=system.epsilon, noise=noise.enabled)
    return record


def run_deutsch(f: FunctionLabel, system: SpinSystem, noise: NoiseModel,
                params: AcquisitionParams = AcquisitionParams()) -> ExperimentRecord:
    f = FunctionLabel(f)
    started = time.perf_counter()
    calibration = reference_calibration(system, noise, replace(params, readout_pulse=True))
    rho, chain = _deutsch_state(f, system, noise)
    spectrum, readings = _readout(rho, system, noise, replace(params, readout_pulse=False), calibration)
    bits = {r.spin: r.bit for r in readings}
    record = ExperimentRecord(
        kind=KIND_QUANTUM, f=f, epsilon=system.epsilon, noise=noise, sequences=chain,
        final_state=rho, spectrum=spectrum, readings=readings, bits=bits, result_bit=bits["I"],
        wall_clock=time.perf_counter() - started,
    )
    log.info("deutsch_run_done", f=f.value, result_bit=record.result_bit, verdict=record.verdict,
             epsilon=system.epsilon, noise=noise.enabled)
    return record


def run(kind: str, f: FunctionLabel, system: SpinSystem, noise: NoiseModel,
        params: AcquisitionParams = AcquisitionParams()) -> ExperimentRecord:
    if kind == KIND_QUANTUM:
        return run_deutsch(f, system, noise, params)
    if kind in (KIND_CLASSICAL_0, KIND_CLASSICAL_1):
        return run_classical(f, int(kind[-1]), system, noise, params)
    raise ValueError(f"unknown experiment kind {kind!r}, expected one of {KINDS}")


def _evaluate_cell(cell: TruthTableCell, system, noise, params) -> TruthTableCell:
    try:
        record = run(cell.kind, cell.f, system, noise, params)
        cell.observed = record.result_bit
        if cell.kind != KIND_QUANTUM and record.bits["I"] != int(cell.kind[-1]):
            cell.error = f"spin I read {record.bits['I']}, expected the input bit {cell.kind[-1]}"
    except ReadoutError as e:
        cell.error = str(e)
    return cell


def truth_table(system: SpinSystem, noise: NoiseModel, params: AcquisitionParams = AcquisitionParams(),
                workers: int = 1) -> TruthTable:
    params.check_covers(system)
    cells = []
    for kind in KINDS:
        for f in FunctionLabel:
            expected = f.parity if kind == KIND_QUANTUM else f(int(kind[-1]))
            cells.append(TruthTableCell(kind, f, expected))
    evaluate = functools.partial(_evaluate_cell, system=system, noise=noise, params=params)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(evaluate, cells))
    else:
        cells = [evaluate(cell) for cell in cells]
    table = TruthTable(cells)
    for cell in cells:
        if not cell.passed:
            log.warning("truth_table_mismatch", kind=cell.kind, f=cell.f.value, expected=cell.expected,
                        observed=cell.observed, error=cell.error)
    log.info("truth_table_done", passed=table.passed_count, total=len(cells), epsilon=system.epsilon,
             noise=noise.enabled)
    return table


def _scan_row(epsilon: float, f: FunctionLabel, system: SpinSystem, noise: NoiseModel,
              params: AcquisitionParams) -> ScanRow:
    system = replace(system, epsilon=epsilon)
    rho, _ = _deutsch_state(f, system, noise)
    frame = singlet_frame(rho)
    row = ScanRow(
        epsilon=epsilon,
        result_bit=None,
        initial_pt_min_eig=partial_transpose_min_eig(werner_state(epsilon)),
        final_polarization=polarization_estimate(frame),
        final_pt_min_eig=partial_transpose_min_eig(frame),
    )
    try:
        row.result_bit = run_deutsch(f, system, noise, params).result_bit
    except ReadoutError as e:
        row.error = str(e)
    return row


def epsilon_scan(grid, f: FunctionLabel, system: SpinSystem, noise: NoiseModel,
                 params: AcquisitionParams = AcquisitionParams(), workers: int = 1) -> list:
    """One Deutsch run per polarization; final-state figures use the singlet frame."""
    grid = [float(epsilon) for epsilon in grid]
    if any(not 0 <= epsilon <= 1 for epsilon in grid):
        raise ValueError("epsilon values must lie in [0, 1]")
    f = FunctionLabel(f)
    evaluate = functools.partial(_scan_row, f=f, system=system, noise=noise, params=params)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, grid))
    else:
        rows = [evaluate(epsilon) for epsilon in grid]
    log.info("epsilon_scan_done", f=f.value, rows=len(rows))
    return rows


def para_fraction(temperature: float) -> float:
    """Equilibrium para fraction of H2: even J with nuclear weight 1, odd J with 3."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    j_max = max(MIN_ROTATIONAL_LEVEL, math.ceil(math.sqrt(BOLTZMANN_CUTOFF * temperature / THETA_ROT_K)))
    levels = np.arange(j_max + 1)
    nuclear = np.where(levels % 2 == 0, 1, 3)
    weights = nuclear * (2 * levels + 1) * np.exp(-levels * (levels + 1) * THETA_ROT_K / temperature)
    return float(weights[levels % 2 == 0].sum() / weights.sum())
