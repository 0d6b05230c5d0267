import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from simulator import acquisition, qcore
from simulator.acquisition import AcquisitionParams, Calibration, Fid, Spectrum
from simulator.dynamics import NoiseModel
from simulator.qcore import SpinSystem


def readout_spectrum(rho, system=SpinSystem(), noise=NoiseModel()):
    params = AcquisitionParams(readout_pulse=True)
    return acquisition.transform(acquisition.acquire(rho, system, noise, params))


class AcquisitionParamsTests(SimpleTestCase):
    def test_dwell(self):
        self.assertAlmostEqual(AcquisitionParams().dwell, 5e-4)

    def test_rejects_bad_points(self):
        for points in (1000, 512, 3000):
            with self.subTest(points=points), self.assertRaises(acquisition.InvalidAcquisitionError):
                AcquisitionParams(points=points)

    def test_window_must_cover_both_multiplets(self):
        AcquisitionParams().check_covers(SpinSystem())
        with self.assertRaises(acquisition.InvalidAcquisitionError):
            AcquisitionParams(spectral_width=400).check_covers(SpinSystem())


class AcquireTests(SimpleTestCase):
    def test_uncovered_window_is_rejected_before_sampling(self):
        rho = qcore.projector(qcore.basis_state(0, 0))
        with self.assertRaises(acquisition.InvalidAcquisitionError):
            acquisition.acquire(rho, SpinSystem(), NoiseModel(), AcquisitionParams(spectral_width=400))

    def test_envelope_decays_with_t2(self):
        system = SpinSystem()
        params = AcquisitionParams(points=1024, readout_pulse=True)
        rho = qcore.projector(qcore.basis_state(0, 0))
        decaying = acquisition.acquire(rho, system, NoiseModel(), params)
        lasting = acquisition.acquire(rho, system, NoiseModel(t1=1e6, t2=1e6), params)
        t = decaying.times
        assert_allclose(decaying.samples, lasting.samples * np.exp(-t / 0.58 + t / 1e6), atol=1e-12)


class TransformTests(SimpleTestCase):
    def test_zero_fid_gives_zero_spectrum(self):
        spectrum = acquisition.transform(Fid(5e-4, np.zeros(1024, dtype=complex)))
        assert_allclose(spectrum.values, 0)
        self.assertEqual(spectrum.baseline, 0)

    def test_parseval(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            samples = rng.normal(size=1024) + 1j * rng.normal(size=1024)
            spectrum = acquisition.transform(Fid(5e-4, samples))
            time_energy = 5e-4 * np.sum(np.abs(samples) ** 2)
            freq_energy = spectrum.df * np.sum(np.abs(spectrum.values) ** 2)
            self.assertAlmostEqual(freq_energy / time_energy, 1.0, delta=1e-12)

    def test_single_exponential_line(self):
        t = np.arange(16384) * 5e-4
        fid = Fid(5e-4, np.exp(2j * np.pi * 246.0 * t - t / 0.58))
        spectrum = acquisition.transform(fid)
        lines = acquisition.find_lines(spectrum, 246.0, 11.5)
        self.assertEqual(len(lines), 1)
        self.assertAlmostEqual(lines[0], 246.0, delta=spectrum.df)
        self.assertAlmostEqual(acquisition.line_width(spectrum, 246.0, 11.5), 0.549, delta=0.05)


class SpectrumStructureTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = SpinSystem()
        cls.spectrum = readout_spectrum(qcore.projector(qcore.basis_state(0, 0)), cls.system)

    def test_axis(self):
        self.assertEqual(len(self.spectrum.freq_axis), 16384)
        self.assertAlmostEqual(self.spectrum.df, 2000 / 16384)

    def test_multiplet_centers_and_splitting(self):
        for spin, center in (("I", 246.0), ("S", -246.0)):
            with self.subTest(spin=spin):
                lines = acquisition.find_lines(self.spectrum, center, 11.5)
                self.assertEqual(len(lines), 2)
                self.assertAlmostEqual(lines.mean(), center, delta=0.5)
                self.assertAlmostEqual(lines[1] - lines[0], 4.6, delta=0.2)

    def test_linewidth_follows_t2(self):
        width = acquisition.line_width(self.spectrum, 246.0, 11.5)
        self.assertAlmostEqual(width, 1 / (np.pi * 0.58), delta=0.1)

    def test_integrals_hold_half_the_first_point(self):
        # s(0) = 1 for |00> after the read pulse, shared by the two multiplets
        integrals = acquisition.integrate_multiplets(self.spectrum, self.system, 0.0)
        self.assertAlmostEqual(integrals["I"], 0.25, delta=0.01)
        self.assertAlmostEqual(integrals["S"], 0.25, delta=0.01)


class CalibrationTests(SimpleTestCase):
    def setUp(self):
        self.system = SpinSystem()
        self.reference = readout_spectrum(qcore.projector(qcore.basis_state(0, 0)), self.system)

    def test_recovers_a_phase_offset(self):
        rotation = np.exp(1j * np.deg2rad(30.0))
        shifted = Spectrum(self.reference.freq_axis, self.reference.values * rotation, 0.0,
                           self.reference.baseline * rotation)
        self.assertAlmostEqual(acquisition.calibrate_phase(shifted, self.system), -30.0, delta=0.5)

    def test_empty_reference_cannot_be_phased(self):
        empty = readout_spectrum(qcore.maximally_mixed(), self.system)
        with self.assertRaises(acquisition.CalibrationError):
            acquisition.calibrate(empty, self.system)

    def test_reads_bits_from_signs(self):
        calibration = acquisition.calibrate(self.reference, self.system)
        flipped = readout_spectrum(qcore.projector(qcore.basis_state(1, 0)), self.system)
        readings = acquisition.read_multiplets(flipped, self.system, calibration)
        self.assertEqual({r.spin: r.bit for r in readings}, {"I": 1, "S": 0})

    def test_weak_multiplets_are_ambiguous(self):
        calibration = Calibration(0.0, 1e6)
        with self.assertRaises(acquisition.AmbiguousReadingError) as ctx:
            acquisition.read_multiplets(self.reference, self.system, calibration)
        self.assertEqual(len(ctx.exception.readings), 2)

    def test_classify(self):
        self.assertEqual(acquisition.classify(0.2, 0.1), 0)
        self.assertEqual(acquisition.classify(-0.2, 0.1), 1)
        self.assertIsNone(acquisition.classify(0.05, 0.1))


class ExportTests(SimpleTestCase):
    def test_csv_and_sidecar(self):
        system = SpinSystem()
        params = AcquisitionParams(points=1024, readout_pulse=True)
        rho = qcore.projector(qcore.basis_state(0, 0))
        spectrum = acquisition.transform(acquisition.acquire(rho, system, NoiseModel(), params))
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, sidecar_path = acquisition.export_spectrum(
                spectrum, Path(tmp) / "out" / "spectrum.csv", system=system, params=params,
                extra={"kind": "test"},
            )
            header = csv_path.read_text(encoding="utf-8").splitlines()[0]
            loaded = acquisition.read_spectrum_csv(csv_path)
            sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))

        self.assertEqual(header, "freq_hz,real,imag")
        assert_allclose(loaded.freq_axis, spectrum.freq_axis, rtol=1e-5)
        assert_allclose(loaded.values, spectrum.values, rtol=1e-5, atol=1e-9)
        self.assertEqual(sidecar["kind"], "test")
        self.assertEqual(sidecar["params"]["points"], 1024)
        self.assertEqual(sidecar["plot"]["figure_left_to_right"], ["I", "S"])
        self.assertAlmostEqual(sidecar["plot"]["multiplets_ppm"]["I"], -7.55)
