import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from simulator import pulselang
from simulator.dynamics import (
    CouplingEvolution,
    Delay,
    DelayExpression,
    FrameRotation,
    Gradient,
    HardPulse,
    PulseSequence,
    SelectivePulse,
)
from simulator.experiments import uf_matrix
from simulator.qcore import SpinSystem

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


class ParseTests(SimpleTestCase):
    def test_pulse_tokens(self):
        seq = pulselang.parse("90x 180-y 90@45 90S-y 45Iz 30S-z -90J G")
        self.assertEqual(seq.events, (
            HardPulse(90.0, 0.0),
            HardPulse(180.0, 270.0),
            HardPulse(90.0, 45.0),
            SelectivePulse("S", 90.0, 270.0),
            FrameRotation("I", 45.0),
            FrameRotation("S", -30.0),
            CouplingEvolution(-90.0),
            Gradient(),
        ))

    def test_negative_angles_flip_the_phase(self):
        self.assertEqual(pulselang.parse("-90x"), pulselang.parse("90-x"))
        self.assertEqual(pulselang.parse("-90Sy"), pulselang.parse("90S-y"))

    def test_delay_terms(self):
        (delay,) = pulselang.parse("[2tau1+tau2]")
        self.assertEqual(delay, Delay(DelayExpression(((Fraction(2), "tau1"), (Fraction(1), "tau2")))))
        (literal,) = pulselang.parse("[1.5ms]")
        self.assertAlmostEqual(literal.expression.resolve(), 0.0015)
        (micro,) = pulselang.parse("[250us+0.5tau1]")
        self.assertAlmostEqual(micro.expression.resolve(SpinSystem()), 250e-6 + 0.5 / (4 * 492))

    def test_empty_text_is_empty_sequence(self):
        self.assertEqual(len(pulselang.parse("   ")), 0)

    def test_syntax_errors_report_token_position(self):
        cases = {"90x 90Ix [tau3]": (3, "[tau3]"), "90q": (1, "90q"), "90z": (1, "90z"),
                 "90x 90IJ": (2, "90IJ"), "[tau1": (1, "[tau1"), "x90": (1, "x90")}
        for text, (position, token) in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(pulselang.SequenceSyntaxError) as ctx:
                    pulselang.parse(text)
                self.assertEqual(ctx.exception.position, position)
                self.assertEqual(ctx.exception.token, token)


class FormatTests(SimpleTestCase):
    def test_builtins_are_canonical(self):
        for name, text in pulselang.BUILTIN_SEQUENCES.items():
            with self.subTest(name=name):
                self.assertEqual(pulselang.format(pulselang.parse(text)), text)

    def test_literal_delays_pick_a_readable_unit(self):
        for text in ("[1.5ms]", "[250us]", "[2s]", "[0.5tau2]"):
            with self.subTest(text=text):
                self.assertEqual(pulselang.format(pulselang.parse(text)), text)

    def test_programmatic_delays_survive_format_and_parse(self):
        for coefficient, symbol in ((Fraction(3, 8), "s"), (Fraction(7, 4), "tau1"), (Fraction(1, 20000), "s")):
            with self.subTest(coefficient=coefficient, symbol=symbol):
                seq = PulseSequence((Delay(DelayExpression(((coefficient, symbol),))),))
                self.assertEqual(pulselang.parse(pulselang.format(seq)), seq)

    def test_random_sequences_survive_format_and_parse(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            seq = pulselang.random_sequence(rng, int(rng.integers(0, 12)))
            self.assertEqual(pulselang.parse(pulselang.format(seq)), seq)

    def test_builtin_event_counts(self):
        counts = {"A": 8, "B": 6, "C": 6, "P01": 9, "P10": 9, "P11": 4, "U00": 0,
                  "U01_po": 5, "U10_po": 5, "U11_po": 1, "hadamard": 3}
        for name, count in counts.items():
            self.assertEqual(len(pulselang.builtin(name)), count)

    def test_unknown_builtin(self):
        with self.assertRaises(pulselang.UnknownSequenceError):
            pulselang.builtin("Z99")


class SequenceFileTests(SimpleTestCase):
    def test_reads_one_sequence_per_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "sequences.txt"
            path.write_text("# preparation\n[tau1] 90y\n\n90x G  # crush\n", encoding="utf-8")
            sequences = pulselang.read_sequence_file(path)
        self.assertEqual([len(seq) for seq in sequences], [2, 2])
        self.assertTrue(sequences[1].contains_gradient)

    def test_reports_bad_lines(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.txt"
            path.write_text("90x\n90w\n", encoding="utf-8")
            with self.assertRaises(pulselang.SequenceSyntaxError):
                pulselang.read_sequence_file(path)


class CompilerTests(SimpleTestCase):
    def setUp(self):
        self.system = SpinSystem()

    def test_product_operator_oracles_match_uf(self):
        for name, f in (("U01_po", "f01"), ("U10_po", "f10"), ("U11_po", "f11")):
            with self.subTest(name=name):
                distance = pulselang.check_equivalence(pulselang.builtin(name), uf_matrix(f), self.system)
                self.assertLessEqual(distance, 1e-10)

    def test_identity_oracle(self):
        self.assertLessEqual(pulselang.check_equivalence(pulselang.builtin("U00"), np.eye(4), self.system), 1e-12)

    def test_hard_pulse_oracles_match_uf_populations(self):
        for name, f in (("P01", "f01"), ("P10", "f10"), ("P11", "f11")):
            with self.subTest(name=name):
                distance = pulselang.check_equivalence(pulselang.builtin(name), uf_matrix(f), self.system,
                                                       "population")
                self.assertLessEqual(distance, 0.05)

    def test_hadamard_up_to_diagonal_phases(self):
        hh = np.kron(H, H)
        seq = pulselang.builtin("hadamard")
        self.assertLessEqual(pulselang.check_equivalence(seq, hh, self.system, "diagonal-phases"), 1e-6)
        self.assertLessEqual(pulselang.check_equivalence(seq, hh, self.system, "population"), 1e-9)

    def test_composite_z_matches_frame_rotation(self):
        for spin in "IS":
            for angle in (-135.0, -90.0, 30.0, 90.0, 180.0):
                with self.subTest(spin=spin, angle=angle):
                    composite = pulselang.composite_z(spin, angle)
                    self.assertEqual(len(composite), 3)
                    target = PulseSequence((FrameRotation(spin, angle),))
                    self.assertLessEqual(pulselang.check_equivalence(composite, target, self.system), 1e-10)

    def test_commute_z_left_preserves_the_propagator(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            seq = pulselang.random_sequence(rng, int(rng.integers(1, 10)))
            moved = pulselang.commute_z_left(seq)
            self.assertLessEqual(pulselang.check_equivalence(seq, moved, self.system), 1e-9)
            rotations = [isinstance(event, FrameRotation) for event in moved]
            self.assertEqual(rotations, sorted(rotations, reverse=True))

    def test_hard_pulse_splits_under_unequal_z(self):
        moved = pulselang.commute_z_left(pulselang.parse("90x 90Iz"))
        self.assertEqual(moved.events[0], FrameRotation("I", 90.0))
        self.assertEqual(set(moved.events[1:]), {SelectivePulse("I", 90.0, 90.0), SelectivePulse("S", 90.0, 0.0)})

    def test_drop_z_keeps_populations_of_product_operator_oracles(self):
        for name, f in (("U01_po", "f01"), ("U10_po", "f10")):
            with self.subTest(name=name):
                seq = pulselang.drop_z(pulselang.commute_z_left(pulselang.builtin(name)))
                self.assertFalse(any(isinstance(event, FrameRotation) for event in seq))
                distance = pulselang.check_equivalence(seq, uf_matrix(f), self.system, "population")
                self.assertLessEqual(distance, 1e-9)
