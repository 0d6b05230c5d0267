"""
Two-spin state algebra: canonical states, overlaps, entanglement diagnostics
and the physical parameters of the hydride spin pair.

Basis order is |00>, |01>, |10>, |11> with the first label on spin I and
|0> = spin up (m = +1/2).
"""

import math
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray

log = structlog.get_logger(__name__)

StateVector = NDArray[np.complex128]
DensityMatrix = NDArray[np.complex128]

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
UNITARY_ATOL = 1e-10

# total m_F of each basis state
M_F = np.array([1, 0, 0, -1])
COHERENCE_ORDERS = (-2, -1, 0, 1, 2)

SPINS = ("I", "S")
DISTANCE_MODES = ("global-phase", "diagonal-phases", "population")

_SQRT_HALF = 1 / math.sqrt(2)
_BELL_ALIASES = {
    "phi+": "phi+", "φ+": "phi+",
    "phi-": "phi-", "φ-": "phi-", "φ−": "phi-",
    "psi+": "psi+", "ψ+": "psi+",
    "psi-": "psi-", "ψ-": "psi-", "ψ−": "psi-",
}
_BELL_AMPLITUDES = {
    "phi+": (1, 0, 0, 1),
    "phi-": (1, 0, 0, -1),
    "psi+": (0, 1, 1, 0),
    "psi-": (0, 1, -1, 0),
}

_PHASE_RESTARTS = 10
_PHASE_SEED = 20010411
_PHASE_TOL = 1e-10
_PHASE_MAX_SWEEPS = 500


class InvalidStateError(ValueError):
    """Raised when a vector or matrix is not a valid two-spin state."""
    pass


class InvalidSystemError(ValueError):
    """Raised when spin-system parameters are unphysical."""
    pass


class NonUnitaryError(ValueError):
    """Raised when an operator expected to be unitary is not."""
    pass


class UnknownBellStateError(ValueError):
    """Raised for a Bell-state label outside phi+, phi-, psi+, psi-."""
    pass


@dataclass(frozen=True)
class SpinSystem:
    """Physical parameters of the two hydride spins.

    delta and j are in Hz, t1 and t2 in seconds, ref_freq in MHz and the
    chemical shifts in ppm.
    """
    delta: float = 492.0
    j: float = 4.6
    t1: float = 1.7
    t2: float = 0.58
    epsilon: float = 0.92
    ref_freq: float = 400.0
    shift_i: float = -7.55
    shift_s: float = -6.32

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidSystemError("delta must be positive")
        if self.j < 0:
            raise InvalidSystemError("j must be non-negative")
        if self.t1 <= 0 or self.t2 <= 0:
            raise InvalidSystemError("t1 and t2 must be positive")
        if self.t2 > 2 * self.t1:
            raise InvalidSystemError("t2 must not exceed 2*t1")
        if not 0 <= self.epsilon <= 1:
            raise InvalidSystemError("epsilon must lie in [0, 1]")

    @property
    def tau1(self) -> float:
        return 1 / (4 * self.delta)

    @property
    def tau2(self) -> float:
        return math.inf if self.j == 0 else 1 / (4 * self.j)

    def offset_hz(self, spin: str) -> float:
        """Resonance offset of a spin from the transmitter, which sits midway."""
        if spin not in SPINS:
            raise InvalidSystemError(f"unknown spin {spin!r}")
        return self.delta / 2 if spin == "I" else -self.delta / 2

    @property
    def center_ppm(self) -> float:
        return (self.shift_i + self.shift_s) / 2

    def ppm(self, freq_hz):
        """Map a transmitter-relative frequency onto the chemical-shift axis."""
        return self.center_ppm - np.asarray(freq_hz) / self.ref_freq


def basis_state(a: int, b: int) -> StateVector:
    if a not in (0, 1) or b not in (0, 1):
        raise InvalidStateError(f"basis labels must be bits, got ({a}, {b})")
    psi = np.zeros(4, dtype=complex)
    psi[2 * a + b] = 1
    return psi


def bell_state(label: str) -> StateVector:
    key = _BELL_ALIASES.get(label)
    if key is None:
        raise UnknownBellStateError(f"unknown Bell state {label!r}")
    return _SQRT_HALF * np.array(_BELL_AMPLITUDES[key], dtype=complex)


def bell_from_basis(a: int, b: int) -> StateVector:
    """Bell state that the disentangling network maps onto |ab>."""
    if a not in (0, 1) or b not in (0, 1):
        raise InvalidStateError(f"basis labels must be bits, got ({a}, {b})")
    psi = np.zeros(4, dtype=complex)
    psi[b] = _SQRT_HALF
    psi[2 + (1 - b)] = _SQRT_HALF * (-1) ** a
    return psi


def disentangler() -> NDArray[np.complex128]:
    """(H x 1) . CNOT with spin I as control."""
    hadamard = _SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    return np.kron(hadamard, np.eye(2)) @ cnot


def projector(psi: StateVector) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > HERMITIAN_ATOL:
        raise InvalidStateError("state vector must be normalized")
    return np.outer(psi, psi.conj())


def maximally_mixed() -> DensityMatrix:
    return np.eye(4, dtype=complex) / 4


def werner_state(epsilon: float) -> DensityMatrix:
    if not 0 <= epsilon <= 1:
        raise InvalidStateError(f"epsilon must lie in [0, 1], got {epsilon}")
    return (1 - epsilon) * maximally_mixed() + epsilon * projector(bell_state("psi-"))


def hermitize(rho: DensityMatrix) -> DensityMatrix:
    return (rho + rho.conj().T) / 2


def check_density_matrix(rho) -> DensityMatrix:
    """Return rho as a complex array, or raise InvalidStateError."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_ATOL:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > TRACE_ATOL:
        raise InvalidStateError(f"density matrix trace is {np.trace(rho).real:.3e}, expected 1")
    min_eig = np.linalg.eigvalsh(hermitize(rho))[0]
    if min_eig < -PSD_ATOL:
        raise InvalidStateError(f"density matrix has negative eigenvalue {min_eig:.3e}")
    return rho


def fidelity(rho: DensityMatrix, psi: StateVector) -> float:
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho @ psi))


def purity(rho: DensityMatrix) -> float:
    return float(np.real(np.trace(rho @ rho)))


def polarization_estimate(rho: DensityMatrix) -> float:
    """Werner polarization that reproduces rho's singlet overlap."""
    return (4 * fidelity(rho, bell_state("psi-")) - 1) / 3


def partial_transpose(rho: DensityMatrix) -> DensityMatrix:
    """Partial transpose over spin S."""
    return np.asarray(rho).reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def partial_transpose_min_eig(rho: DensityMatrix) -> float:
    return float(np.linalg.eigvalsh(hermitize(partial_transpose(rho)))[0])


def singlet_frame(rho: DensityMatrix) -> DensityMatrix:
    """Bell-diagonal state with rho's spectrum, largest weight on the singlet.

    The dominant eigenvalue goes to psi-, the remaining ones (descending) to
    psi+, phi+ and phi-. Werner states are fixed points.
    """
    weights = np.linalg.eigvalsh(hermitize(np.asarray(rho)))[::-1]
    frame = np.zeros((4, 4), dtype=complex)
    for weight, label in zip(weights, ("psi-", "psi+", "phi+", "phi-")):
        frame += weight * projector(bell_state(label))
    return frame


@dataclass(frozen=True, eq=False)
class CoherenceDecomposition:
    blocks: dict

    def reconstruct(self) -> DensityMatrix:
        return sum(self.blocks.values())

    def __getitem__(self, order: int) -> NDArray[np.complex128]:
        return self.blocks[order]


def coherence_mask(order: int) -> NDArray[np.bool_]:
    return (M_F[:, None] - M_F[None, :]) == order


def coherence_orders(rho: DensityMatrix) -> CoherenceDecomposition:
    rho = np.asarray(rho, dtype=complex)
    return CoherenceDecomposition({p: np.where(coherence_mask(p), rho, 0) for p in COHERENCE_ORDERS})


def check_unitary(u) -> NDArray[np.complex128]:
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise NonUnitaryError(f"expected a 4x4 operator, got shape {u.shape}")
    deviation = np.linalg.norm(u.conj().T @ u - np.eye(4))
    if deviation > UNITARY_ATOL:
        raise NonUnitaryError(f"operator deviates from unitarity by {deviation:.3e}")
    return u


def unitary_distance(u, v, mode: str = "global-phase") -> float:
    """Distance between two-spin unitaries under the chosen equivalence.

    global-phase:     1 - |Tr(u^dagger v)|/4
    diagonal-phases:  global-phase distance minimized over D1 . v . D2
    population:       largest change of any basis transition probability
    """
    u, v = check_unitary(u), check_unitary(v)
    if mode == "global-phase":
        return float(max(0.0, 1 - abs(np.trace(u.conj().T @ v)) / 4))
    if mode == "population":
        return float(np.max(np.abs(np.abs(u) ** 2 - np.abs(v) ** 2)))
    if mode == "diagonal-phases":
        return float(max(0.0, 1 - _max_phase_overlap(u.conj() * v) / 4))
    raise ValueError(f"unknown distance mode {mode!r}, expected one of {DISTANCE_MODES}")


def _max_phase_overlap(w: NDArray[np.complex128]) -> float:
    """max |sum_jk w_jk d1_j d2_k| over unit-modulus d1, d2.

    Coordinate ascent: each phase has a closed-form optimum given the rest.
    """
    rng = np.random.default_rng(_PHASE_SEED)
    best = 0.0
    for _ in range(_PHASE_RESTARTS):
        d1 = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        d2 = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        value = abs(d1 @ w @ d2)
        for _ in range(_PHASE_MAX_SWEEPS):
            previous = value
            for j in range(4):
                coeff = w[j] @ d2
                rest = d1 @ w @ d2 - d1[j] * coeff
                d1[j] = _align(rest, coeff)
            for k in range(4):
                coeff = d1 @ w[:, k]
                rest = d1 @ w @ d2 - d2[k] * coeff
                d2[k] = _align(rest, coeff)
            value = abs(d1 @ w @ d2)
            if value - previous < _PHASE_TOL:
                break
        best = max(best, value)
    log.debug("phase_overlap_maximized", overlap=best)
    return best


def _align(rest: complex, coeff: complex) -> complex:
    if abs(coeff) == 0:
        return 1.0 + 0j
    target = np.angle(rest) if abs(rest) > 0 else 0.0
    return np.exp(1j * (target - np.angle(coeff)))
