"""
Spin dynamics: rotating-frame evolution, pulse propagators, the gradient
crusher and the T1/T2 relaxation channels that advance a density matrix
through a pulse sequence.

Rotations follow exp(-i * theta * generator). Pulses are instantaneous;
free evolution and relaxation happen only during delays.
"""

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
import structlog
from scipy.linalg import expm

from .qcore import (
    DensityMatrix,
    InvalidStateError,
    SPINS,
    SpinSystem,
    check_density_matrix,
    coherence_mask,
    hermitize,
)

log = structlog.get_logger(__name__)

DELAY_SYMBOLS = ("tau1", "tau2", "s")


class UnresolvedDelayError(ValueError):
    """Raised when a symbolic delay cannot be turned into seconds."""
    pass


class GradientNotUnitaryError(ValueError):
    """Raised when a gradient is asked for a unitary propagator."""
    pass


class UnphysicalRelaxationError(ValueError):
    """Raised when T2 > 2*T1 or other channel parameters are out of range."""
    pass


class InvariantViolationError(RuntimeError):
    """Raised when evolution produces an invalid density matrix."""
    pass


def _terminates(value: Fraction) -> bool:
    denominator = value.denominator
    for factor in (2, 5):
        while denominator % factor == 0:
            denominator //= factor
    return denominator == 1


@dataclass(frozen=True)
class DelayExpression:
    """Sum of (coefficient, symbol) terms; symbol is tau1, tau2 or s."""
    terms: tuple = ()

    def __post_init__(self):
        for coefficient, symbol in self.terms:
            if symbol not in DELAY_SYMBOLS:
                raise UnresolvedDelayError(f"unknown delay symbol {symbol!r}")
            if Fraction(coefficient) < 0:
                raise UnresolvedDelayError("delay terms must be non-negative")
            if not _terminates(Fraction(coefficient)):
                raise UnresolvedDelayError(f"delay coefficient {coefficient} has no finite decimal form")

    @classmethod
    def seconds(cls, value) -> "DelayExpression":
        return cls(((Fraction(value), "s"),))

    @property
    def is_symbolic(self) -> bool:
        return any(symbol != "s" for _, symbol in self.terms)

    def resolve(self, system: SpinSystem = None) -> float:
        if self.is_symbolic and system is None:
            raise UnresolvedDelayError("symbolic delay needs a spin system to resolve")
        total = 0.0
        for coefficient, symbol in self.terms:
            unit = 1.0 if symbol == "s" else getattr(system, symbol)
            total += float(coefficient) * unit
        if not math.isfinite(total):
            raise UnresolvedDelayError("delay resolves to an infinite duration (j = 0?)")
        return total


@dataclass(frozen=True)
class HardPulse:
    angle: float
    phase: float = 0.0


@dataclass(frozen=True)
class SelectivePulse:
    spin: str
    angle: float
    phase: float = 0.0


@dataclass(frozen=True)
class FrameRotation:
    """z rotation of one spin; the sign of angle gives the sense."""
    spin: str
    angle: float


@dataclass(frozen=True)
class CouplingEvolution:
    """Rotation about the 2IzSz product operator."""
    angle: float


@dataclass(frozen=True)
class Delay:
    expression: DelayExpression


@dataclass(frozen=True)
class Gradient:
    pass


PulseEvent = Union[HardPulse, SelectivePulse, FrameRotation, CouplingEvolution, Delay, Gradient]
TRANSVERSE_EVENTS = (HardPulse, SelectivePulse)


@dataclass(frozen=True)
class PulseSequence:
    """Events in time order, applied left to right."""
    events: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, index):
        return self.events[index]

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.events + other.events)

    @property
    def contains_gradient(self) -> bool:
        return any(isinstance(event, Gradient) for event in self.events)


@dataclass(frozen=True)
class NoiseModel:
    enabled: bool = True
    t1: float = 1.7
    t2: float = 0.58
    equilibrium_excited_population: float = 0.5
    substeps_per_delay: int = 1

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise UnphysicalRelaxationError("t1 and t2 must be positive")
        if self.t2 > 2 * self.t1:
            raise UnphysicalRelaxationError(f"t2={self.t2} exceeds 2*t1={2 * self.t1}")
        if not 0 <= self.equilibrium_excited_population <= 1:
            raise UnphysicalRelaxationError("equilibrium population must lie in [0, 1]")
        if self.substeps_per_delay < 1:
            raise UnphysicalRelaxationError("substeps_per_delay must be at least 1")

    @classmethod
    def from_system(cls, system: SpinSystem, enabled: bool = True, **kwargs) -> "NoiseModel":
        return cls(enabled=enabled, t1=system.t1, t2=system.t2, **kwargs)

    @classmethod
    def off(cls, system: SpinSystem = None) -> "NoiseModel":
        if system is None:
            return cls(enabled=False)
        return cls.from_system(system, enabled=False)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_EYE2 = np.eye(2, dtype=complex)


def single_spin_operator(axis: str) -> np.ndarray:
    return _PAULI[axis] / 2


@functools.lru_cache(maxsize=None)
def _spin_operators() -> dict:
    ops = {}
    for axis in "xyz":
        ops["I" + axis] = np.kron(single_spin_operator(axis), _EYE2)
        ops["S" + axis] = np.kron(_EYE2, single_spin_operator(axis))
    ops["I+"] = ops["Ix"] + 1j * ops["Iy"]
    ops["S+"] = ops["Sx"] + 1j * ops["Sy"]
    for value in ops.values():
        value.flags.writeable = False
    return ops


def spin_operators() -> dict:
    """Two-spin operators keyed Ix, Iy, Iz, Sx, Sy, Sz, I+, S+."""
    return _spin_operators()


def hamiltonian(system: SpinSystem) -> np.ndarray:
    """Secular rotating-frame Hamiltonian in rad/s."""
    ops = spin_operators()
    return (2 * np.pi * (system.delta / 2) * (ops["Iz"] - ops["Sz"])
            + 2 * np.pi * system.j * ops["Iz"] @ ops["Sz"])


def free_evolution(duration: float, system: SpinSystem) -> np.ndarray:
    if duration < 0:
        raise UnresolvedDelayError(f"negative duration {duration}")
    return expm(-1j * hamiltonian(system) * duration)


def _transverse(axis_ops: dict, prefix: str, phase_deg: float) -> np.ndarray:
    phase = np.deg2rad(phase_deg)
    return axis_ops[prefix + "x"] * np.cos(phase) + axis_ops[prefix + "y"] * np.sin(phase)


def event_propagator(event: PulseEvent, system: SpinSystem) -> np.ndarray:
    return _cached_propagator(event, system)


@functools.lru_cache(maxsize=1024)
def _cached_propagator(event: PulseEvent, system: SpinSystem) -> np.ndarray:
    ops = spin_operators()
    if isinstance(event, Gradient):
        raise GradientNotUnitaryError("a gradient is a dephasing channel, not a unitary")
    if isinstance(event, Delay):
        u = free_evolution(event.expression.resolve(system), system)
    elif isinstance(event, HardPulse):
        generator = _transverse(ops, "I", event.phase) + _transverse(ops, "S", event.phase)
        u = expm(-1j * np.deg2rad(event.angle) * generator)
    elif isinstance(event, SelectivePulse):
        u = expm(-1j * np.deg2rad(event.angle) * _transverse(ops, event.spin, event.phase))
    elif isinstance(event, FrameRotation):
        u = expm(-1j * np.deg2rad(event.angle) * ops[event.spin + "z"])
    elif isinstance(event, CouplingEvolution):
        u = expm(-1j * np.deg2rad(event.angle) * 2 * ops["Iz"] @ ops["Sz"])
    else:
        raise TypeError(f"not a pulse event: {event!r}")
    u.flags.writeable = False
    return u


def sequence_propagator(seq: PulseSequence, system: SpinSystem) -> np.ndarray:
    """Matrix product of event propagators, last event leftmost."""
    if seq.contains_gradient:
        raise GradientNotUnitaryError("sequence contains a gradient")
    u = np.eye(4, dtype=complex)
    for event in seq:
        u = event_propagator(event, system) @ u
    return u


def apply_gradient(rho: DensityMatrix) -> DensityMatrix:
    """Crush every coherence of nonzero order; keep populations and zero-quantum terms."""
    return hermitize(np.where(coherence_mask(0), rho, 0))


def _single_spin_kraus(duration: float, noise: NoiseModel) -> list:
    gamma = 1 - math.exp(-duration / noise.t1)
    dephasing_rate = 1 / noise.t2 - 1 / (2 * noise.t1)
    lam = 1 - math.exp(-2 * duration * dephasing_rate)
    p0 = 1 - noise.equilibrium_excited_population

    damping = [
        math.sqrt(p0) * np.array([[1, 0], [0, math.sqrt(1 - gamma)]]),
        math.sqrt(p0) * np.array([[0, math.sqrt(gamma)], [0, 0]]),
        math.sqrt(1 - p0) * np.array([[math.sqrt(1 - gamma), 0], [0, 1]]),
        math.sqrt(1 - p0) * np.array([[0, 0], [math.sqrt(gamma), 0]]),
    ]
    dephasing = [
        np.array([[1, 0], [0, math.sqrt(1 - lam)]]),
        np.array([[0, 0], [0, math.sqrt(lam)]]),
    ]
    return [phase @ amp for amp in damping for phase in dephasing]


def relaxation_channel(duration: float, noise: NoiseModel) -> tuple:
    """Kraus operators of independent per-spin amplitude and phase damping."""
    if duration < 0:
        raise UnresolvedDelayError(f"negative duration {duration}")
    if noise.t2 > 2 * noise.t1:
        raise UnphysicalRelaxationError(f"t2={noise.t2} exceeds 2*t1={2 * noise.t1}")
    if duration == 0 or not noise.enabled:
        return (np.eye(4, dtype=complex),)
    single = _single_spin_kraus(duration, noise)
    return tuple(np.kron(k_i, k_s).astype(complex) for k_i in single for k_s in single)


def apply_channel(rho: DensityMatrix, kraus: tuple) -> DensityMatrix:
    stacked = np.asarray(kraus)
    return hermitize(np.einsum("kij,jl,kml->im", stacked, rho, stacked.conj()))


def apply_sequence(rho: DensityMatrix, seq: PulseSequence, system: SpinSystem,
                   noise: NoiseModel) -> DensityMatrix:
    rho = np.array(rho, dtype=complex)
    for event in seq:
        if isinstance(event, Gradient):
            rho = apply_gradient(rho)
        elif isinstance(event, Delay):
            rho = _evolve_delay(rho, event.expression.resolve(system), system, noise)
        else:
            u = event_propagator(event, system)
            rho = hermitize(u @ rho @ u.conj().T)
    try:
        check_density_matrix(rho)
    except InvalidStateError as e:
        log.error("sequence_invariant_violation", events=len(seq), error=str(e))
        raise InvariantViolationError(str(e)) from e
    log.debug("sequence_applied", events=len(seq), noise=noise.enabled)
    return rho


def _evolve_delay(rho, duration, system, noise):
    slices = noise.substeps_per_delay if noise.enabled else 1
    step = duration / slices
    u = free_evolution(step, system)
    kraus = relaxation_channel(step, noise) if noise.enabled else None
    for _ in range(slices):
        rho = hermitize(u @ rho @ u.conj().T)
        if kraus is not None:
            rho = apply_channel(rho, kraus)
    return rho
