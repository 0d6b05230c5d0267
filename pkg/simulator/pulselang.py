"""
Text notation for pulse sequences.

One whitespace-separated token per event, written in time order:

    item    ::= pulse | delay | "G"
    pulse   ::= ANGLE [TARGET] AXIS
    ANGLE   ::= ["-"] number                       (degrees)
    TARGET  ::= "I" | "S"
    AXIS    ::= "x" | "y" | "-x" | "-y" | "z" | "-z" | "@" number | "J"
    delay   ::= "[" term ("+" term)* "]"
    term    ::= [number] ("tau1" | "tau2") | number ("s" | "ms" | "us")

`J` (coupling evolution) is only valid untargeted and `z` (frame rotation)
only targeted. Negative pulse angles are stored as positive angles with the
phase advanced by 180 degrees.
"""

from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np
import structlog
from pyparsing import (
    Char,
    Literal,
    Opt,
    ParseBaseException,
    ParseFatalException,
    Regex,
    Suppress,
    ZeroOrMore,
)

from .dynamics import (
    CouplingEvolution,
    Delay,
    DelayExpression,
    FrameRotation,
    Gradient,
    HardPulse,
    PulseSequence,
    SelectivePulse,
    sequence_propagator,
)
from .qcore import SpinSystem, unitary_distance

log = structlog.get_logger(__name__)


class SequenceSyntaxError(ValueError):
    """Raised when sequence text does not follow the token grammar."""

    def __init__(self, message: str, position: int, token: str):
        super().__init__(f"token {position} ({token!r}): {message}")
        self.position = position
        self.token = token


class UnknownSequenceError(KeyError):
    """Raised for a builtin sequence name that does not exist."""
    pass


BUILTIN_SEQUENCES = {
    "A": "[tau1] 90y [tau2] 180x [tau2] 180y [2tau1] 90x",
    "A_literal": "[tau1] 90y [tau2] 180x [tau2] 180y [tau1] 90x",
    "B": "[tau1] 90y [tau2] 180x [tau2] 90y",
    "C": "[tau1] 90y [tau2] 180x [tau2] 90-y",
    "P01": "90-x [tau1] 90@45 [2tau1+tau2] 180x [tau2] 90@135 [tau1] 90-x",
    "P10": "90x [tau1] 90@45 [2tau1+tau2] 180x [tau2] 90@135 [tau1] 90x",
    "P11": "90y [2tau1] 90-y 90x",
    "U00": "",
    "U01_po": "90S-y 90Iz 90Sz -90J 90Sy",
    "U10_po": "90S-y 90I-z 90Sz 90J 90Sy",
    "U11_po": "180Sx",
    "hadamard": "180Iz 180Sz 90-y",
    "pseudo_hadamard": "90-y",
    "acquire_pulse": "90y",
}

_AXIS_PHASES = {"x": 0.0, "y": 90.0, "-x": 180.0, "-y": 270.0}
_PHASE_AXES = {phase: axis for axis, phase in _AXIS_PHASES.items()}
_UNIT_SCALE = {"s": Fraction(1), "ms": Fraction(1, 1000), "us": Fraction(1, 1000000)}


def _number(text: str) -> float:
    return float(text) + 0.0


def _build_pulse(source, loc, tokens):
    angle = _number(tokens["angle"])
    target = tokens.get("target")
    axis = tokens["axis"]
    if axis in ("z", "-z"):
        if target is None:
            raise ParseFatalException(source, loc, "z rotations need a target spin (I or S)")
        return FrameRotation(target, -angle if axis == "-z" else angle)
    if axis == "J":
        if target is not None:
            raise ParseFatalException(source, loc, "coupling evolution cannot target a single spin")
        return CouplingEvolution(angle)
    phase = _number(axis[1:]) if axis.startswith("@") else _AXIS_PHASES[axis]
    angle, phase = normalize_rotation(angle, phase)
    if target is None:
        return HardPulse(angle, phase)
    return SelectivePulse(target, angle, phase)


def _build_tau_term(tokens):
    text = tokens[0]
    coefficient = Fraction(text[:-4]) if len(text) > 4 else Fraction(1)
    return [(coefficient, text[-4:])]


def _build_literal_term(tokens):
    text = tokens[0]
    unit = text[-2:] if text[-2:] in ("ms", "us") else "s"
    return [(Fraction(text[:-len(unit)]) * _UNIT_SCALE[unit], "s")]


_NUMBER = r"\d+(?:\.\d+)?"
_ANGLE = Regex(r"-?" + _NUMBER)("angle")
_TARGET = Char("IS")("target")
_AXIS = (Regex(r"-?[xyz]") | Regex(r"@" + _NUMBER) | Literal("J"))("axis")
_PULSE = (_ANGLE + Opt(_TARGET) + _AXIS).set_parse_action(_build_pulse)

_TAU_TERM = Regex(r"(?:" + _NUMBER + r")?tau[12]").set_parse_action(_build_tau_term)
_LITERAL_TERM = Regex(_NUMBER + r"(?:ms|us|s)").set_parse_action(_build_literal_term)
_TERM = _TAU_TERM | _LITERAL_TERM
_DELAY = (Suppress("[") + _TERM + ZeroOrMore(Suppress("+") + _TERM) + Suppress("]")).set_parse_action(
    lambda tokens: Delay(DelayExpression(tuple(tokens)))
)
_GRADIENT = Literal("G").set_parse_action(lambda: Gradient())
_ITEM = _GRADIENT | _DELAY | _PULSE


def normalize_rotation(angle: float, phase: float) -> tuple:
    if angle < 0:
        angle, phase = -angle, phase + 180
    return angle + 0.0, phase % 360 + 0.0


def parse(source: str) -> PulseSequence:
    events = []
    for position, token in enumerate(source.split(), start=1):
        try:
            events.append(_ITEM.parse_string(token, parse_all=True)[0])
        except ParseBaseException as e:
            raise SequenceSyntaxError(e.msg, position, token) from e
    return PulseSequence(tuple(events))


def _fmt_number(value) -> str:
    if isinstance(value, Fraction):
        with localcontext() as ctx:
            ctx.prec = 50
            exact = (Decimal(value.numerator) / Decimal(value.denominator)).normalize()
        return f"{exact:f}"
    return np.format_float_positional(value, unique=True, trim="-")


def _fmt_axis(phase: float) -> str:
    return _PHASE_AXES.get(phase % 360, "@" + _fmt_number(phase % 360))


def _fmt_term(coefficient: Fraction, symbol: str) -> str:
    if symbol != "s":
        return symbol if coefficient == 1 else _fmt_number(coefficient) + symbol
    for unit in ("s", "ms", "us"):
        scaled = coefficient / _UNIT_SCALE[unit]
        if scaled >= 1 or unit == "us":
            return _fmt_number(scaled) + unit


def format_event(event) -> str:
    if isinstance(event, Gradient):
        return "G"
    if isinstance(event, Delay):
        return "[" + "+".join(_fmt_term(c, s) for c, s in event.expression.terms) + "]"
    if isinstance(event, CouplingEvolution):
        return _fmt_number(event.angle) + "J"
    if isinstance(event, FrameRotation):
        axis = "-z" if event.angle < 0 else "z"
        return _fmt_number(abs(event.angle)) + event.spin + axis
    if isinstance(event, HardPulse):
        return _fmt_number(event.angle) + _fmt_axis(event.phase)
    if isinstance(event, SelectivePulse):
        return _fmt_number(event.angle) + event.spin + _fmt_axis(event.phase)
    raise TypeError(f"not a pulse event: {event!r}")


def format(seq: PulseSequence) -> str:
    return " ".join(format_event(event) for event in seq)


def builtin(name: str) -> PulseSequence:
    try:
        return parse(BUILTIN_SEQUENCES[name])
    except KeyError:
        raise UnknownSequenceError(f"no builtin sequence named {name!r}") from None


def read_sequence_file(path) -> list:
    """One sequence per line; '#' starts a comment, blank lines are skipped."""
    sequences = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            sequences.append(parse(text))
        except SequenceSyntaxError as e:
            log.error("sequence_file_syntax_error", path=str(path), line=lineno, error=str(e))
            raise
    log.info("sequence_file_loaded", path=str(path), sequences=len(sequences))
    return sequences


def commute_z_left(seq: PulseSequence) -> PulseSequence:
    """Move every frame rotation to the start of the sequence.

    A transverse pulse that a z rotation of angle zeta crosses has its phase
    advanced by zeta. A hard pulse crossed by different I and S angles is
    split into two selective pulses.
    """
    z_angle = {"I": 0.0, "S": 0.0}
    moved = []
    for event in reversed(seq.events):
        if isinstance(event, FrameRotation):
            z_angle[event.spin] += event.angle
        elif isinstance(event, HardPulse):
            if (z_angle["I"] - z_angle["S"]) % 360 == 0:
                moved.append(HardPulse(event.angle, (event.phase + z_angle["I"]) % 360))
            else:
                moved.append(SelectivePulse("S", event.angle, (event.phase + z_angle["S"]) % 360))
                moved.append(SelectivePulse("I", event.angle, (event.phase + z_angle["I"]) % 360))
        elif isinstance(event, SelectivePulse):
            moved.append(SelectivePulse(event.spin, event.angle, (event.phase + z_angle[event.spin]) % 360))
        else:
            moved.append(event)
    leading = [FrameRotation(spin, angle) for spin, angle in z_angle.items() if angle % 360 != 0]
    return PulseSequence(tuple(leading) + tuple(reversed(moved)))


def drop_z(seq: PulseSequence) -> PulseSequence:
    return PulseSequence(tuple(event for event in seq if not isinstance(event, FrameRotation)))


def composite_z(spin: str, angle: float) -> PulseSequence:
    """z rotation of one spin built from transverse pulses: 90-x, angle y, 90x."""
    theta, phase = normalize_rotation(angle, 90.0)
    return PulseSequence((
        SelectivePulse(spin, 90.0, 180.0),
        SelectivePulse(spin, theta, phase),
        SelectivePulse(spin, 90.0, 0.0),
    ))


def _as_unitary(item, system: SpinSystem):
    if isinstance(item, PulseSequence):
        return sequence_propagator(item, system)
    return np.asarray(item, dtype=complex)


def check_equivalence(a, b, system: SpinSystem, mode: str = "global-phase") -> float:
    """Distance between two sequences' propagators; either side may be a literal matrix."""
    distance = unitary_distance(_as_unitary(a, system), _as_unitary(b, system), mode)
    log.debug("equivalence_checked", mode=mode, distance=distance)
    return distance


def random_sequence(rng, length: int, frame_rotations: bool = True, delays: bool = True) -> PulseSequence:
    """Random canonical sequence for property checks; no gradients."""
    kinds = ["hard", "selective", "coupling"]
    if frame_rotations:
        kinds.append("z")
    if delays:
        kinds.append("delay")
    events = []
    for _ in range(length):
        kind = kinds[rng.integers(len(kinds))]
        angle = round(float(rng.uniform(-360, 360)), 1)
        spin = "IS"[rng.integers(2)]
        if kind == "hard":
            events.append(HardPulse(*normalize_rotation(angle, round(float(rng.uniform(0, 360)), 1))))
        elif kind == "selective":
            events.append(SelectivePulse(spin, *normalize_rotation(angle, round(float(rng.uniform(0, 360)), 1))))
        elif kind == "coupling":
            events.append(CouplingEvolution(angle + 0.0))
        elif kind == "z":
            events.append(FrameRotation(spin, angle + 0.0))
        else:
            symbol = ("tau1", "tau2", "s")[rng.integers(3)]
            if symbol == "s":
                term = (Fraction(int(rng.integers(1, 5000)), 1000000), "s")
            else:
                term = (Fraction(int(rng.integers(1, 4))), symbol)
            events.append(Delay(DelayExpression((term,))))
    return PulseSequence(tuple(events))
