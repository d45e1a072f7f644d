"""Optical state algebra for a pair of three-arm Michelson interferometers.

Each interferometer routes a photon through a symmetric 3x3 fiber coupler
(a "tritter") into one of three delay arms (short/medium/long = 0/1/2) and
back through the same coupler to one of three detectors.  Two energy-time
correlated photons analyzed this way carry an entangled qutrit encoded in
which delay arm each photon took.

This module holds the pure state algebra: coupler construction, the
entangled states post-selected on each arrival-time peak, the derived
fringe phases, and the symmetric noise mixture.  Everything here is an
immutable value; all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, LambdaOutOfRange, NonUnitarizable

# Phase step acquired when a photon changes ports in a symmetric 3x3 coupler,
# the qutrit analog of the pi/2 on reflection at a 50/50 beam splitter.
TRITTER_PHASE = 2.0 * np.pi / 3.0

#: Sentinel accepted by :func:`build_tritter` for a perfectly balanced coupler.
IDEAL = "ideal"

TWO_PI = 2.0 * np.pi

# Tolerance for comparing phases after reduction mod 2*pi.
PHASE_TOL = 1e-9


def reduce_phase(x):
    """Reduce phase(s) to the canonical interval [0, 2*pi)."""
    return np.asarray(x, dtype=float) % TWO_PI if np.ndim(x) else float(x) % TWO_PI


def phases_equal(a, b, tol: float = PHASE_TOL) -> bool:
    """Compare phases modulo 2*pi, tolerating wrap-around at the boundary."""
    d = (float(a) - float(b)) % TWO_PI
    return min(d, TWO_PI - d) <= tol


def ideal_tritter_matrix() -> np.ndarray:
    """The canonical balanced coupler: U[j, k] = exp(i*t*j*k) / sqrt(3)."""
    j = np.arange(3)
    return np.exp(1j * TRITTER_PHASE * np.outer(j, j)) / np.sqrt(3.0)


def _nearest_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary in Frobenius norm (polar decomposition via SVD)."""
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _target_intensities(imbalance) -> np.ndarray:
    """Expand an imbalance request into a 3x3 target intensity table.

    A 3-vector (f0, f1, f2) is applied circulantly: input port a sends
    fraction f0 straight through to output a, f1 to output a+1, f2 to
    output a+2.  A 3x3 array is taken as the full table, columns indexed
    by input port.
    """
    arr = np.asarray(imbalance, dtype=float)
    if arr.shape == (3,):
        table = np.empty((3, 3))
        for a in range(3):
            for j in range(3):
                table[j, a] = arr[(j - a) % 3]
        return table
    if arr.shape == (3, 3):
        return arr.copy()
    raise ValueError(f"imbalance must be a 3-vector or 3x3 table, got shape {arr.shape}")


@dataclass(frozen=True)
class TritterUnitary:
    """A 3x3 unitary modeling a six-port symmetric coupler.

    ``matrix`` carries the complex amplitudes (row = output, column = input);
    ``imbalance`` records the requested per-port intensity splitting table.
    """

    matrix: np.ndarray
    imbalance: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        m.setflags(write=False)
        dev = np.abs(m @ m.conj().T - np.eye(3)).max()
        if dev > 1e-12:
            raise NonUnitarizable(f"matrix is not unitary (deviation {dev:.3e})")

    @property
    def intensities(self) -> np.ndarray:
        """Achieved splitting intensities |U|^2."""
        return np.abs(self.matrix) ** 2

    def is_ideal(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.matrix - ideal_tritter_matrix()).max() <= tol)


def build_tritter(imbalance=IDEAL) -> TritterUnitary:
    """Construct a coupler unitary from requested intensity fractions.

    With ``IDEAL`` (or fractions all 1/3) this is exactly the balanced
    coupler with the discrete-Fourier phase pattern arg(U[j,k]) = t*j*k.
    Otherwise the moduli are set to sqrt of the requested fractions while
    keeping the Fourier phases, and the result is projected onto the
    nearest unitary.  Raises :class:`NonUnitarizable` when the projection
    moves any intensity by more than 0.05, which signals a splitting table
    no unitary can approximate.
    """
    if isinstance(imbalance, str):
        if imbalance != IDEAL:
            raise ValueError(f"unknown imbalance sentinel {imbalance!r}")
        ideal = ideal_tritter_matrix()
        return TritterUnitary(matrix=ideal, imbalance=np.full((3, 3), 1.0 / 3.0))

    target = _target_intensities(imbalance)
    col_sums = target.sum(axis=0)
    if np.abs(col_sums - 1.0).max() > 1e-9:
        raise ValueError(f"fractions per input port must sum to 1, got {col_sums}")
    if target.min() <= 0.0 or target.max() >= 1.0:
        raise ValueError("each splitting fraction must lie in (0, 1)")

    if np.abs(target - 1.0 / 3.0).max() <= 1e-12:
        return TritterUnitary(matrix=ideal_tritter_matrix(), imbalance=target)

    seeded = np.sqrt(target) * np.sqrt(3.0) * ideal_tritter_matrix()
    unitary = _nearest_unitary(seeded)
    drift = np.abs(np.abs(unitary) ** 2 - target).max()
    if drift > 0.05:
        raise NonUnitarizable(
            f"re-unitarization moved an intensity by {drift:.3f} (> 0.05); "
            "requested splitting is unphysical"
        )
    return TritterUnitary(matrix=unitary, imbalance=target)


def imbalance_fractions(deviation: float) -> np.ndarray:
    """Splitting triple whose straight-through port deviates by ``deviation``
    (relative to the balanced 1/3), the other two ports absorbing the excess
    equally.  ``deviation=0.10`` is a "10 percent" imbalanced coupler."""
    if not -0.5 < deviation < 2.0:
        raise ValueError("deviation out of sensible range")
    return np.array([1.0 + deviation, 1.0 - deviation / 2.0, 1.0 - deviation / 2.0]) / 3.0


@dataclass(frozen=True)
class PhaseSettings:
    """The six controllable arm phases (radians); alpha on Alice's side,
    beta on Bob's.  Arithmetic keeps raw values; comparisons reduce mod 2*pi."""

    alpha: tuple = (0.0, 0.0, 0.0)
    beta: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.alpha) != 3 or len(self.beta) != 3:
            raise ValueError("alpha and beta must each hold three phases")

    def reduced(self) -> "PhaseSettings":
        return PhaseSettings(
            alpha=tuple(reduce_phase(a) for a in self.alpha),
            beta=tuple(reduce_phase(b) for b in self.beta),
        )

    def equivalent_to(self, other: "PhaseSettings", tol: float = PHASE_TOL) -> bool:
        return all(
            phases_equal(x, y, tol)
            for x, y in zip(self.alpha + self.beta, other.alpha + other.beta)
        )


@dataclass(frozen=True)
class PhasePair:
    """The two fringe phases (phi_r, phi_l) steering a detector pair's
    central-peak coincidence rate; see :func:`phase_pair`."""

    phi_r: float
    phi_l: float
    detector_pair: tuple

    def reduced(self) -> tuple:
        return (reduce_phase(self.phi_r), reduce_phase(self.phi_l))


@dataclass(frozen=True)
class InterferometerGeometry:
    """Arm lengths and coherence scales defining the timing structure.

    ``arms_alice``/``arms_bob`` are the (short, medium, long) arm lengths in
    meters.  The arm steps must match between arms and across sides to within
    the downconverted-photon coherence length, otherwise the time-bin
    interference picture breaks down.
    """

    arms_alice: tuple = (1.0, 1.24, 1.48)
    arms_bob: tuple = (1.0, 1.24, 1.48)
    delta_tau: float = 1.2e-9
    photon_coherence_length: float = 45e-6
    pump_coherence_length: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "arms_alice", tuple(float(x) for x in self.arms_alice))
        object.__setattr__(self, "arms_bob", tuple(float(x) for x in self.arms_bob))
        for side in (self.arms_alice, self.arms_bob):
            if len(side) != 3 or not (side[0] < side[1] < side[2]):
                raise ValueError("arm lengths must be three increasing values")
        if min(self.delta_tau, self.photon_coherence_length, self.pump_coherence_length) <= 0:
            raise ValueError("timing and coherence scales must be positive")
        steps = self.path_steps()
        if max(steps) - min(steps) >= self.photon_coherence_length:
            raise ValueError(
                "arm steps differ by more than the photon coherence length; "
                "peaks would not overlap between path combinations"
            )

    def path_steps(self) -> tuple:
        """All four single-step path differences (l-m, m-s on each side)."""
        sa, ma, la = self.arms_alice
        sb, mb, lb = self.arms_bob
        return (la - ma, ma - sa, lb - mb, mb - sb)

    def path_difference(self) -> float:
        """Representative single-step path-length difference (meters)."""
        return float(np.mean(self.path_steps()))


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over one arrival-time peak's path basis.

    Central states live on {|00>, |11>, |22>} (both photons in the same
    arm); right/left lateral states live on the two-dimensional bases
    {|01>, |12>} and {|10>, |21>}.
    """

    amplitudes: np.ndarray
    peak_tag: str

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        amps.setflags(write=False)
        expected = {"central": 3, "right": 2, "left": 2}
        if self.peak_tag not in expected:
            raise ValueError(f"unknown peak_tag {self.peak_tag!r}")
        if amps.shape != (expected[self.peak_tag],):
            raise DimensionMismatch(
                f"{self.peak_tag} state needs {expected[self.peak_tag]} amplitudes"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized (|norm - 1| = {abs(norm-1):.3e})")

    @property
    def basis_labels(self) -> tuple:
        return {
            "central": ("|00>", "|11>", "|22>"),
            "right": ("|01>", "|12>"),
            "left": ("|10>", "|21>"),
        }[self.peak_tag]

    def overlap(self, other: "StateVector") -> complex:
        if self.peak_tag != other.peak_tag:
            raise DimensionMismatch("states belong to different peaks")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def embedded_central(self) -> np.ndarray:
        """Central state embedded in the 9-dim two-photon space (|ab> -> 3a+b)."""
        if self.peak_tag != "central":
            raise DimensionMismatch("only central states embed in the 9-dim space")
        out = np.zeros(9, dtype=complex)
        out[[0, 4, 8]] = self.amplitudes
        return out


def central_state(phases: PhaseSettings, pair: tuple) -> StateVector:
    """Entangled qutrit state post-selected on the central arrival-time peak
    for coincidence (Alice detector j, Bob detector k).

    The three relative coefficient phases are
    ``t*a*(j-k) + (alpha_a - alpha_0) + (beta_a - beta_0) + t`` for arm
    a = 1, 2 (zero for a = 0), so the nine detector pairs fall into three
    identical-state classes keyed by (j - k) mod 3.
    """
    j, k = _check_pair(pair)
    t = TRITTER_PHASE
    a = np.arange(3)
    rel = t * a * (j - k) + _arm_deltas(phases) + t * (a > 0)
    amps = np.exp(1j * rel) / np.sqrt(3.0)
    return StateVector(amplitudes=amps, peak_tag="central")


def lateral_state(phases: PhaseSettings, pair: tuple, side: str) -> StateVector:
    """Entangled qubit-like state post-selected on a lateral peak.

    ``side="right"`` (Bob's photon one arrival step late) lives on
    {|01>, |12>}; ``side="left"`` on {|10>, |21>}.  The single relative
    phase is the lateral fringe phase for that detector pair.
    """
    j, k = _check_pair(pair)
    theta = lateral_phase(phases, pair, side)
    amps = np.array([1.0, np.exp(1j * theta)]) / np.sqrt(2.0)
    return StateVector(amplitudes=amps, peak_tag=side)


def lateral_phase(phases: PhaseSettings, pair: tuple, side: str) -> float:
    """Relative phase of the second component of a lateral-peak state."""
    j, k = _check_pair(pair)
    t = TRITTER_PHASE
    al, be = phases.alpha, phases.beta
    if side == "right":
        return t * (j - k) + (al[1] - al[0]) + (be[2] - be[1]) - t
    if side == "left":
        return t * (j - k) + (al[2] - al[1]) + (be[1] - be[0]) - t
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def phase_pair(phases: PhaseSettings, pair: tuple) -> PhasePair:
    """The (phi_r, phi_l) pair for a detector combination.

    Defined so the central state's coefficients are
    (1, exp(i*phi_r), exp(i*(phi_r + phi_l))) / sqrt(3).  For pair (0,0)
    with beta = 0 this gives phi_r = alpha_1 - alpha_0 + t and
    phi_l = alpha_2 - alpha_1; beta differences enter symmetrically.
    """
    j, k = _check_pair(pair)
    t = TRITTER_PHASE
    al, be = phases.alpha, phases.beta
    phi_r = t * (j - k) + (al[1] - al[0]) + (be[1] - be[0]) + t
    phi_l = t * (j - k) + (al[2] - al[1]) + (be[2] - be[1])
    return PhasePair(phi_r=phi_r, phi_l=phi_l, detector_pair=(j, k))


@dataclass(frozen=True)
class DensityState:
    """Symmetric noise mixture: lam * |psi><psi| + (1 - lam) * I/9 on the
    9-dim two-photon space, with the pure part a central-peak state."""

    lam: float
    pure_part: StateVector
    dimension: int = 9

    def matrix(self) -> np.ndarray:
        psi = self.pure_part.embedded_central()
        return self.lam * np.outer(psi, psi.conj()) + (1.0 - self.lam) * np.eye(9) / 9.0

    def purity(self) -> float:
        return self.lam**2 + (1.0 - self.lam**2) / 9.0

    def eigenvalues(self) -> np.ndarray:
        """Spectrum without diagonalization: lam + (1-lam)/9 once, (1-lam)/9
        eight times."""
        lo = (1.0 - self.lam) / 9.0
        return np.array([self.lam + lo] + [lo] * 8)


def mix_with_noise(state: StateVector, lam: float) -> DensityState:
    """Mix a central-peak pure state with the maximally mixed state."""
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"mixing weight must be in [0, 1], got {lam}")
    if state.peak_tag != "central":
        raise DimensionMismatch("noise mixture is defined on the 9-dim central subspace")
    return DensityState(lam=float(lam), pure_part=state)


def fidelity_to_target(rho: DensityState, target: StateVector) -> float:
    """Overlap Tr(rho |target><target|).

    Equals (1 + 8*lam)/9 when the target is the mixture's own pure part.
    """
    if target.peak_tag != "central":
        raise DimensionMismatch("target must be a central-peak state")
    ov = abs(rho.pure_part.overlap(target)) ** 2
    return float(rho.lam * ov + (1.0 - rho.lam) / 9.0)


def _check_pair(pair) -> tuple:
    j, k = pair
    j, k = int(j), int(k)
    if not (0 <= j <= 2 and 0 <= k <= 2):
        raise ValueError(f"detector indices must be in 0..2, got {pair}")
    return j, k


def _arm_deltas(phases: PhaseSettings) -> np.ndarray:
    al = np.asarray(phases.alpha)
    be = np.asarray(phases.beta)
    return (al - al[0]) + (be - be[0])
