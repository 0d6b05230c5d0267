"""
Acceptance suite run by `manage.py verify`.

Each check is registered with @check and returns (passed, detail). A check
that raises is reported as failed with the error in its detail.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
import structlog
from scipy.optimize import brentq

from . import acquisition, dynamics, experiments, pulselang, qcore
from .config import Config
from .dynamics import NoiseModel
from .experiments import FunctionLabel

log = structlog.get_logger(__name__)

_checks = {}


@dataclass
class CheckResult:
    name: str
    description: str
    passed: bool
    detail: dict = field(default_factory=dict)
    duration_s: float = 0.0


def check(name: str, description: str):
    def decorator(func):
        _checks[name] = (description, func)
        return func

    return decorator


def registered_checks() -> dict:
    return {name: description for name, (description, _) in _checks.items()}


def run_check(name: str, config: Config) -> CheckResult:
    description, func = _checks[name]
    started = time.perf_counter()
    log.info("check_started", check=name)
    try:
        passed, detail = func(config)
    except Exception as e:
        log.error("check_crashed", check=name, error=str(e), exc_info=True)
        passed, detail = False, {"error": f"{type(e).__name__}: {e}"}
    result = CheckResult(name, description, bool(passed), detail, time.perf_counter() - started)
    log.info("check_finished", check=name, passed=result.passed, duration_s=round(result.duration_s, 3))
    return result


def run_checks(config: Config, only=None) -> list:
    names = list(only) if only else list(_checks)
    unknown = [name for name in names if name not in _checks]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}")
    return [run_check(name, config) for name in names]


def _ideal(config: Config):
    return replace(config.system, epsilon=1.0), NoiseModel.off(config.system)


@check("truth-table", "12-cell truth table, ideal and with decoherence, under 10 s")
def truth_table_check(config: Config):
    detail = {}
    passed = True
    runs = {"ideal": _ideal(config), "noisy": (config.system, replace(config.noise, enabled=True))}
    for label, (system, noise) in runs.items():
        started = time.perf_counter()
        table = experiments.truth_table(system, noise, config.acquisition)
        elapsed = time.perf_counter() - started
        failures = [f"{cell.kind}/{cell.f.value}: {cell.error or cell.observed}"
                    for cell in table.cells if not cell.passed]
        detail[label] = {"passed": table.passed_count, "total": len(table.cells), "noise": noise.enabled,
                         "runtime_s": round(elapsed, 3), "failures": failures}
        passed = passed and table.all_passed and elapsed < 10
    return passed, detail


@check("quantum-signs", "constant f gives Ix - Sx, balanced f gives -Ix - Sx")
def quantum_signs_check(config: Config):
    detail = {}
    for f in FunctionLabel:
        record = experiments.run_deutsch(f, config.system, config.noise, config.acquisition)
        detail[f.value] = {r.spin: r.integral for r in record.readings}
    passed = all(
        (detail[f.value]["I"] > 0) == f.is_constant and detail[f.value]["S"] < 0 for f in FunctionLabel
    )
    return passed, detail


@check("state-preparation", "A, B, C map the pure singlet onto |00>, |01>, |10> with fidelity >= 0.999")
def state_preparation_check(config: Config):
    system, noise = _ideal(config)
    detail = {}
    for a, b in experiments.PREPARATION_SEQUENCES:
        rho = experiments.prepare_input(a, b, system, noise)
        detail[f"{a}{b}"] = qcore.fidelity(rho, qcore.basis_state(a, b))
    return all(value >= 0.999 for value in detail.values()), detail


@check("werner-analytics", "Werner fidelity, purity and PT eigenvalue; NPT threshold at 1/3")
def werner_analytics_check(config: Config):
    worst = 0.0
    for epsilon in np.linspace(0, 1, 50):
        rho = qcore.werner_state(epsilon)
        worst = max(
            worst,
            abs(qcore.fidelity(rho, qcore.bell_state("psi-")) - (1 + 3 * epsilon) / 4),
            abs(qcore.purity(rho) - (1 + 3 * epsilon ** 2) / 4),
            abs(qcore.partial_transpose_min_eig(rho) - (1 - 3 * epsilon) / 4),
        )
    threshold = brentq(lambda e: qcore.partial_transpose_min_eig(qcore.werner_state(e)), 0, 1, xtol=1e-14)
    passed = worst <= 1e-12 and abs(threshold - 1 / 3) <= 1e-9
    return passed, {"max_error": worst, "npt_threshold": threshold}


@check("channel-soundness", "Kraus completeness, trace and positivity, T1/T2 decay laws")
def channel_soundness_check(config: Config):
    noise = replace(config.noise, enabled=True)
    rng = np.random.default_rng(7)
    completeness = trace_error = 0.0
    min_eig = np.inf
    for duration in (0.0, 1e-3, 0.1, 0.58, 1.7, 5.0):
        kraus = dynamics.relaxation_channel(duration, noise)
        completeness = max(completeness, np.max(np.abs(sum(k.conj().T @ k for k in kraus) - np.eye(4))))
    kraus = dynamics.relaxation_channel(0.3, noise)
    for _ in range(1000):
        rho = random_density_matrix(rng)
        out = dynamics.apply_channel(rho, kraus)
        trace_error = max(trace_error, abs(np.trace(out) - 1))
        min_eig = min(min_eig, np.linalg.eigvalsh(out)[0])
    decay_error = max(
        max(abs(x - np.exp(-t / noise.t2)), abs(z - np.exp(-t / noise.t1)))
        for t in (0.1, 0.58, 1.7)
        for x, z in [single_spin_decay(t, noise)]
    )
    passed = completeness <= 1e-12 and trace_error <= 1e-12 and min_eig >= -1e-10 and decay_error <= 1e-9
    return passed, {"completeness": completeness, "trace_error": trace_error, "min_eig": min_eig,
                    "decay_error": decay_error}


@check("spectral-structure", "multiplet centers +-delta/2, doublet splitting J, linewidth 1/(pi T2)")
def spectral_structure_check(config: Config):
    system, noise = config.system, config.noise
    params = replace(config.acquisition, readout_pulse=True)
    rho = qcore.projector(qcore.basis_state(0, 0))
    spec = acquisition.transform(acquisition.acquire(rho, system, noise, params))
    detail = {}
    passed = True
    for spin in qcore.SPINS:
        center = system.offset_hz(spin)
        half_width = acquisition.WINDOW_HALF_WIDTH_J * system.j
        lines = acquisition.find_lines(spec, center, half_width)
        width = acquisition.line_width(spec, center, half_width)
        detail[spin] = {"lines_hz": lines.tolist(), "fwhm_hz": width}
        passed = passed and len(lines) == 2 and abs(lines.mean() - center) <= 0.5 \
            and abs(np.diff(lines)[0] - system.j) <= 0.2 and abs(width - 1 / (np.pi * noise.t2)) <= 0.1
    return passed, detail


@check("decoherence-imbalance", "noisy classical runs through P01 and P10 show a 0.5-0.9 multiplet ratio")
def decoherence_imbalance_check(config: Config):
    noise = replace(config.noise, enabled=True)
    detail = {}
    for f in (FunctionLabel.F01, FunctionLabel.F10):
        record = experiments.run_classical(f, 0, config.system, noise, config.acquisition)
        detail[f.value] = record.multiplet_ratio
    return all(0.5 <= ratio <= 0.9 for ratio in detail.values()), detail


@check("final-polarization", "final polarization of the noisy quantum run in [0.40, 0.75], still NPT")
def final_polarization_check(config: Config):
    noise = replace(config.noise, enabled=True)
    system = replace(config.system, epsilon=0.92)
    detail = {}
    for f in FunctionLabel:
        row = experiments.epsilon_scan([0.92], f, system, noise, config.acquisition)[0]
        detail[f.value] = {"polarization": row.final_polarization, "pt_min_eig": row.final_pt_min_eig}
    passed = all(0.40 <= v["polarization"] <= 0.75 and v["pt_min_eig"] < 0 for v in detail.values())
    return passed, detail


@check("para-fraction", "para fraction at 20 K in [0.9975, 0.9995]; 0.25 at high temperature")
def para_fraction_check(config: Config):
    cold = experiments.para_fraction(20.0)
    hot = experiments.para_fraction(1e6)
    return 0.9975 <= cold <= 0.9995 and abs(hot - 0.25) <= 1e-3, {"20K": cold, "1e6K": hot}


@check("compiler", "product-operator and hard-pulse oracles, composite z and frame commutation")
def compiler_check(config: Config):
    system = config.system
    detail = {
        "U01_po": pulselang.check_equivalence(pulselang.builtin("U01_po"), experiments.uf_matrix("f01"), system),
        "U10_po": pulselang.check_equivalence(pulselang.builtin("U10_po"), experiments.uf_matrix("f10"), system),
    }
    for name, f in (("P01", "f01"), ("P10", "f10"), ("P11", "f11")):
        detail[name] = pulselang.check_equivalence(
            pulselang.builtin(name), experiments.uf_matrix(f), system, "population")
    composite = max(
        pulselang.check_equivalence(pulselang.composite_z(spin, angle),
                                    pulselang.PulseSequence((dynamics.FrameRotation(spin, float(angle)),)),
                                    system)
        for spin in qcore.SPINS for angle in range(-180, 181, 15)
    )
    rng = np.random.default_rng(11)
    commuted = 0.0
    for _ in range(200):
        seq = pulselang.random_sequence(rng, int(rng.integers(1, 12)))
        commuted = max(commuted, pulselang.check_equivalence(seq, pulselang.commute_z_left(seq), system))
    detail.update(composite_z=composite, commute_z_left=commuted)
    passed = (detail["U01_po"] <= 1e-10 and detail["U10_po"] <= 1e-10
              and all(detail[name] <= 0.05 for name in ("P01", "P10", "P11"))
              and composite <= 1e-9 and commuted <= 1e-9)
    return passed, detail


EVENT_COUNTS = {"A": 8, "A_literal": 8, "B": 6, "C": 6, "P01": 9, "P10": 9, "P11": 4, "U00": 0,
                "U01_po": 5, "U10_po": 5, "U11_po": 1, "hadamard": 3, "pseudo_hadamard": 1, "acquire_pulse": 1}


@check("parser", "round trip on builtins and 500 random sequences; builtin event counts")
def parser_check(config: Config):
    rng = np.random.default_rng(3)
    failures = [name for name, text in pulselang.BUILTIN_SEQUENCES.items()
                if pulselang.format(pulselang.parse(text)) != text
                or len(pulselang.builtin(name)) != EVENT_COUNTS[name]]
    mismatches = 0
    for _ in range(500):
        seq = pulselang.random_sequence(rng, int(rng.integers(0, 15)))
        if pulselang.parse(pulselang.format(seq)) != seq:
            mismatches += 1
    return not failures and not mismatches, {"builtin_failures": failures, "random_mismatches": mismatches}


def random_density_matrix(rng) -> np.ndarray:
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def single_spin_decay(t: float, noise: NoiseModel) -> tuple:
    """(Ix coherence factor, Iz deviation factor) after relaxation for time t."""
    ops = dynamics.spin_operators()
    kraus = dynamics.relaxation_channel(t, noise)
    ix = dynamics.apply_channel(np.eye(4) / 4 + 0.1 * ops["Ix"], kraus)
    iz = dynamics.apply_channel(np.eye(4) / 4 + 0.1 * ops["Iz"], kraus)
    x_factor = np.real(np.trace(ix @ ops["Ix"])) / (0.1 * np.real(np.trace(ops["Ix"] @ ops["Ix"])))
    z_factor = np.real(np.trace(iz @ ops["Iz"])) / (0.1 * np.real(np.trace(ops["Iz"] @ ops["Iz"])))
    return x_factor, z_factor
