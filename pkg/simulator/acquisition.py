"""
Readout: FID synthesis, Fourier transform, zeroth-order phasing, multiplet
integration and the positive/negative absorption bit convention.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import structlog
from scipy.signal import find_peaks, peak_widths

from .dynamics import HardPulse, NoiseModel, event_propagator, hamiltonian, spin_operators
from .qcore import SPINS, DensityMatrix, SpinSystem, check_density_matrix

log = structlog.get_logger(__name__)

WINDOW_HALF_WIDTH_J = 2.5
THRESHOLD_FRACTION = 0.05
MIN_POINTS = 1024
# below this the reference carries no usable signal
CALIBRATION_FLOOR = 1e-9
# multiplet order in the published figures; plot metadata only
FIGURE_ORDER = ("I", "S")


class InvalidAcquisitionError(ValueError):
    """Raised for acquisition parameters that cannot digitize the spectrum."""
    pass


class ReadoutError(RuntimeError):
    """Base class for failures to turn a spectrum into bits."""
    pass


class CalibrationError(ReadoutError):
    """Raised when the phasing reference has no signal."""
    pass


class AmbiguousReadingError(ReadoutError):
    """Raised when a multiplet integral falls inside the threshold band."""

    def __init__(self, message: str, readings: tuple):
        super().__init__(message)
        self.readings = readings


@dataclass(frozen=True)
class AcquisitionParams:
    spectral_width: float = 2000.0
    points: int = 16384
    readout_pulse: bool = False

    def __post_init__(self):
        if self.points < MIN_POINTS or self.points & (self.points - 1):
            raise InvalidAcquisitionError(f"points must be a power of two >= {MIN_POINTS}, got {self.points}")
        if self.spectral_width <= 0:
            raise InvalidAcquisitionError("spectral_width must be positive")

    @property
    def dwell(self) -> float:
        return 1 / self.spectral_width

    def check_covers(self, system: SpinSystem):
        """Both multiplets must fall inside the spectral window."""
        if self.spectral_width <= system.delta + 4 * system.j:
            raise InvalidAcquisitionError(
                f"spectral_width {self.spectral_width} Hz does not cover delta + 4J = "
                f"{system.delta + 4 * system.j} Hz"
            )


@dataclass(frozen=True, eq=False)
class Fid:
    dwell: float
    samples: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dwell


@dataclass(frozen=True, eq=False)
class Spectrum:
    freq_axis: np.ndarray
    values: np.ndarray
    phase0: float = 0.0
    # first-point offset spread evenly over every bin by the DFT
    baseline: complex = 0j

    @property
    def df(self) -> float:
        return float(self.freq_axis[1] - self.freq_axis[0])

    def absorption(self, phase0: float = None) -> np.ndarray:
        phase = self.phase0 if phase0 is None else phase0
        return np.real((self.values - self.baseline) * np.exp(1j * np.deg2rad(phase)))

    def window(self, center: float, half_width: float) -> np.ndarray:
        return np.abs(self.freq_axis - center) <= half_width

    def with_phase(self, phase0: float) -> "Spectrum":
        return Spectrum(self.freq_axis, self.values, phase0, self.baseline)


@dataclass(frozen=True)
class MultipletReading:
    spin: str
    center: float
    integral: float
    bit: int = None


@dataclass(frozen=True)
class Calibration:
    phase0: float
    reference_magnitude: float

    @property
    def threshold(self) -> float:
        return THRESHOLD_FRACTION * self.reference_magnitude


def acquire(rho: DensityMatrix, system: SpinSystem, noise: NoiseModel, params: AcquisitionParams) -> Fid:
    """Sample Tr[rho(t) (I+ + S+)] under free evolution with exp(-t/T2) decay.

    The decay is applied with noise off as well so lines keep a finite width.
    """
    params.check_covers(system)
    rho = check_density_matrix(rho)
    if params.readout_pulse:
        u = event_propagator(HardPulse(90.0, 90.0), system)
        rho = u @ rho @ u.conj().T
    ops = spin_operators()
    detector = ops["I+"] + ops["S+"]

    energies, vectors = np.linalg.eigh(hamiltonian(system))
    rho_eig = vectors.conj().T @ rho @ vectors
    det_eig = vectors.conj().T @ detector @ vectors
    # s(t) = sum_jk rho_jk F_kj exp(-i (E_j - E_k) t)
    amplitudes = (rho_eig * det_eig.T).ravel()
    omegas = (energies[:, None] - energies[None, :]).ravel()

    times = np.arange(params.points) * params.dwell
    samples = np.exp(-1j * np.outer(times, omegas)) @ amplitudes
    samples *= np.exp(-times / noise.t2)
    log.debug("fid_acquired", points=params.points, readout_pulse=params.readout_pulse)
    return Fid(params.dwell, samples)


def transform(fid: Fid) -> Spectrum:
    """Dwell-scaled DFT with the transmitter at the center of the axis."""
    n = len(fid.samples)
    values = fid.dwell * np.fft.fftshift(np.fft.fft(fid.samples))
    freq_axis = np.fft.fftshift(np.fft.fftfreq(n, d=fid.dwell))
    baseline = fid.dwell * fid.samples[0] / 2 if n else 0j
    return Spectrum(freq_axis, values, 0.0, complex(baseline))


def multiplet_windows(system: SpinSystem) -> dict:
    return {spin: (system.offset_hz(spin), WINDOW_HALF_WIDTH_J * system.j) for spin in SPINS}


def calibrate_phase(reference: Spectrum, system: SpinSystem) -> float:
    """Zeroth-order phase (degrees) maximizing the real part in both multiplet windows."""
    total = 0j
    for center, half_width in multiplet_windows(system).values():
        mask = reference.window(center, half_width)
        total += np.sum(reference.values[mask] - reference.baseline) * reference.df
    if abs(total) < CALIBRATION_FLOOR:
        raise CalibrationError("reference spectrum has no signal to phase against")
    phase0 = float(-np.rad2deg(np.angle(total)))
    log.debug("phase_calibrated", phase0=phase0)
    return phase0


def integrate_multiplets(spec: Spectrum, system: SpinSystem, phase0: float) -> dict:
    absorption = spec.absorption(phase0)
    return {
        spin: float(np.sum(absorption[spec.window(center, half_width)]) * spec.df)
        for spin, (center, half_width) in multiplet_windows(system).items()
    }


def calibrate(reference: Spectrum, system: SpinSystem) -> Calibration:
    phase0 = calibrate_phase(reference, system)
    integrals = integrate_multiplets(reference, system, phase0)
    magnitude = float(np.mean([abs(value) for value in integrals.values()]))
    log.info("reference_calibrated", phase0=phase0, reference_magnitude=magnitude)
    return Calibration(phase0, magnitude)


def classify(integral: float, threshold: float):
    if integral > threshold:
        return 0
    if integral < -threshold:
        return 1
    return None


def read_multiplets(spec: Spectrum, system: SpinSystem, calibration: Calibration) -> tuple:
    integrals = integrate_multiplets(spec, system, calibration.phase0)
    readings = tuple(
        MultipletReading(spin, system.offset_hz(spin), integrals[spin],
                         classify(integrals[spin], calibration.threshold))
        for spin in SPINS
    )
    unreadable = [r.spin for r in readings if r.bit is None]
    if unreadable:
        log.warning("ambiguous_multiplets", spins=unreadable, threshold=calibration.threshold,
                    integrals=integrals)
        raise AmbiguousReadingError(
            f"multiplet integral of spin(s) {', '.join(unreadable)} below threshold "
            f"{calibration.threshold:.3e}", readings
        )
    return readings


def build_sidecar(spec: Spectrum, system: SpinSystem, params: AcquisitionParams,
                  readings: tuple = (), extra: dict = None) -> dict:
    sidecar = {
        "params": asdict(params),
        "phase0_deg": spec.phase0,
        "baseline": [spec.baseline.real, spec.baseline.imag],
        "readings": [
            {"spin": r.spin, "center_hz": r.center, "integral": r.integral, "bit": r.bit}
            for r in readings
        ],
        "plot": {
            "ref_freq_mhz": system.ref_freq,
            "center_ppm": system.center_ppm,
            "ppm_of_hz": "center_ppm - freq_hz / ref_freq_mhz",
            "multiplets_ppm": {spin: float(system.ppm(system.offset_hz(spin))) for spin in SPINS},
            "figure_left_to_right": list(FIGURE_ORDER),
        },
    }
    if extra:
        sidecar.update(extra)
    return sidecar


def export_spectrum(spec: Spectrum, path, *, system: SpinSystem, params: AcquisitionParams,
                    readings: tuple = (), extra: dict = None) -> tuple:
    """Write the CSV spectrum and its JSON sidecar; returns both paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([spec.freq_axis, spec.values.real, spec.values.imag])
    np.savetxt(path, table, delimiter=",", header="freq_hz,real,imag", comments="", fmt="%.6g")
    sidecar_path = path.with_suffix(".json")
    sidecar = build_sidecar(spec, system, params, readings, extra)
    sidecar_path.write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    log.info("spectrum_exported", path=str(path), sidecar=str(sidecar_path), points=len(spec.values))
    return path, sidecar_path


def read_spectrum_csv(path) -> Spectrum:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Spectrum(table[:, 0], table[:, 1] + 1j * table[:, 2])


def _window_absorption(spec: Spectrum, center: float, half_width: float, phase0: float = None):
    mask = spec.window(center, half_width)
    return spec.freq_axis[mask], spec.absorption(phase0)[mask]


def find_lines(spec: Spectrum, center: float, half_width: float, phase0: float = None,
               min_height: float = 0.1) -> np.ndarray:
    """Frequencies of absorption maxima above min_height of the window maximum."""
    freqs, absorption = _window_absorption(spec, center, half_width, phase0)
    peaks, _ = find_peaks(absorption, height=min_height * absorption.max())
    return freqs[peaks]


def line_width(spec: Spectrum, center: float, half_width: float, phase0: float = None) -> float:
    """Full width at half maximum of the strongest line in the window (Hz)."""
    _, absorption = _window_absorption(spec, center, half_width, phase0)
    peaks, _ = find_peaks(absorption)
    if not len(peaks):
        raise ReadoutError(f"no line found near {center} Hz")
    strongest = peaks[np.argmax(absorption[peaks])]
    widths = peak_widths(absorption, [strongest], rel_height=0.5)[0]
    return float(widths[0] * spec.df)
