"""Coincidence-rate formulas and the exhaustive path-amplitude model.

Two routes to the same physics live here.  The closed forms
(:func:`coincidence_rate`, :func:`lateral_rate`) evaluate the interference
fringes directly from the derived phase pairs.  The oracle
(:func:`oracle_joint_distribution`) instead enumerates all nine path
combinations through the two interferometers, groups them by arrival-time
difference into the five histogram peaks, and sums amplitudes coherently
within each group.  For balanced couplers the two routes agree to machine
precision; the oracle additionally handles imbalanced couplers.

Conventions fixed by the enumeration (and verified against the closed
forms in the test suite):

* Each photon crosses its coupler twice (Michelson layout), entering
  through the circulator port 0; the amplitude into detector j via arm a
  is ``U[j, a] * exp(i*(phi_a + ARM_OFFSET[a])) * U[a, 0]``.
* Bob's coupler acts with conjugated entries, i.e. his detector ports are
  labeled with the opposite phase winding to Alice's.  This is the
  labeling under which equal detector indices (j = k) form one state
  class, as the central-peak states require.
* ``ARM_OFFSET = (0, t/2, 2t)`` on both sides is the fixed per-arm phase
  bookkeeping for port changes inside the couplers; it is what puts the
  +t terms into the central states and the -t into the lateral states.
* Peaks are keyed by (Bob arm - Alice arm): +1 is the right lateral peak
  (pairs 01 and 12, Bob arriving one delay step late), -1 the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeViolation
from .states import (
    TRITTER_PHASE,
    InterferometerGeometry,
    PhaseSettings,
    TritterUnitary,
    lateral_phase,
    phase_pair,
)

#: Arrival-time peak labels in table order (units of delta_tau).
PEAKS = (-2, -1, 0, 1, 2)

#: Number of path pairs feeding each peak for balanced couplers.
PEAK_PATH_COUNTS = (1, 2, 3, 2, 1)

# Fixed per-arm phase offsets inside each interferometer (port-change
# bookkeeping; see module docstring).  Applied once per photon.
ARM_OFFSET = np.array([0.0, TRITTER_PHASE / 2.0, 2.0 * TRITTER_PHASE])

# Margin above which a coherence-length ratio counts as "much greater".
REGIME_MARGIN = 10.0


def three_cosine_sum(phi_r, phi_l):
    """cos(phi_r) + cos(phi_l) + cos(phi_r + phi_l), vectorized."""
    phi_r = np.asarray(phi_r, dtype=float)
    phi_l = np.asarray(phi_l, dtype=float)
    return np.cos(phi_r) + np.cos(phi_l) + np.cos(phi_r + phi_l)


def eq_rate(phi_r, phi_l, lam):
    """Relative central-peak coincidence rate at explicit fringe phases.

    (1/3) * [3 + 2*lam*(cos(phi_r) + cos(phi_l) + cos(phi_r + phi_l))],
    ranging over [1 - lam, 1 + 2*lam].  Divide by 9 for the per-event
    probability of a detector pair given central-peak post-selection.
    """
    return (3.0 + 2.0 * lam * three_cosine_sum(phi_r, phi_l)) / 3.0


def coincidence_rate(phases: PhaseSettings, lam: float, pair: tuple) -> float:
    """Relative central-peak rate for a detector pair under the noise mixture."""
    pp = phase_pair(phases, pair)
    return float(eq_rate(pp.phi_r, pp.phi_l, lam))


def lateral_rate(phases: PhaseSettings, lam: float, pair: tuple, side: str) -> float:
    """Relative lateral-peak rate: 1 + lam*cos(theta), the qubit-like fringe."""
    theta = lateral_phase(phases, pair, side)
    return float(1.0 + lam * np.cos(theta))


@dataclass(frozen=True)
class JointDistribution:
    """Probability table over (Alice detector, Bob detector, arrival peak).

    ``table[j, k, p]`` with peak axis ordered as :data:`PEAKS`.  An
    unconditioned table sums to 1; ``condition_on_peak`` renormalizes
    within one arrival-time window.
    """

    table: np.ndarray
    conditioning: str = "unconditioned"
    peak: int | None = None

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=float)
        object.__setattr__(self, "table", tab)
        tab.setflags(write=False)
        if tab.shape != (3, 3, 5):
            raise ValueError(f"table must have shape (3, 3, 5), got {tab.shape}")
        if abs(tab.sum() - 1.0) > 1e-12:
            raise ValueError("distribution table must sum to 1")

    def cell(self, j: int, k: int, peak: int) -> float:
        return float(self.table[j, k, PEAKS.index(peak)])

    def peak_marginals(self) -> np.ndarray:
        """Total probability of each arrival-time peak, ordered as PEAKS."""
        return self.table.sum(axis=(0, 1))

    def detector_table(self, peak: int) -> np.ndarray:
        """Conditional (3, 3) detector-pair distribution within one peak."""
        sl = self.table[:, :, PEAKS.index(peak)]
        return sl / sl.sum()

    def condition_on_peak(self, peak: int) -> "JointDistribution":
        idx = PEAKS.index(peak)
        cond = np.zeros_like(self.table)
        cond[:, :, idx] = self.table[:, :, idx] / self.table[:, :, idx].sum()
        return JointDistribution(table=cond, conditioning="given-peak", peak=peak)


@dataclass(frozen=True)
class FringeSeries:
    """Sampled interference fringe: rates or counts versus scan phase.

    ``channel`` is (alice detector, bob detector, peak); metadata records
    how synthetic series were produced (scan ratio, mixing weight, ...).
    """

    phases: np.ndarray
    values: np.ndarray
    channel: tuple = (0, 0, 0)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "phases", ph)
        object.__setattr__(self, "values", vals)
        ph.setflags(write=False)
        vals.setflags(write=False)
        if ph.ndim != 1 or ph.shape != vals.shape:
            raise ValueError("phases and values must be matching 1-d arrays")
        if ph.size > 1 and not np.all(np.diff(ph) > 0):
            raise ValueError("scan phases must be strictly increasing")

    def __len__(self) -> int:
        return int(self.phases.size)

    def span(self) -> float:
        return float(self.phases[-1] - self.phases[0]) if len(self) else 0.0

    def with_values(self, values, **meta) -> "FringeSeries":
        md = dict(self.metadata)
        md.update(meta)
        return FringeSeries(phases=self.phases, values=values, channel=self.channel, metadata=md)


@dataclass(frozen=True)
class RegimeReport:
    """Whether the coherence-length hierarchy supports the time-bin picture."""

    single_photon_interference_suppressed: bool
    pump_coherent_over_paths: bool
    margins: dict

    @property
    def ok(self) -> bool:
        return self.single_photon_interference_suppressed and self.pump_coherent_over_paths


def validate_regime(geometry: InterferometerGeometry) -> RegimeReport:
    """Check the two coherence-length separations.

    The photon coherence length must be far below the arm path difference
    (no single-photon interference) and the pump coherence length far above
    it (pair creation time undefined across the delay steps).  "Far" means
    a ratio above 10.
    """
    diff = geometry.path_difference()
    photon_margin = diff / geometry.photon_coherence_length
    pump_margin = geometry.pump_coherence_length / diff
    return RegimeReport(
        single_photon_interference_suppressed=bool(photon_margin > REGIME_MARGIN),
        pump_coherent_over_paths=bool(pump_margin > REGIME_MARGIN),
        margins={"photon": float(photon_margin), "pump": float(pump_margin)},
    )


def _exit_amplitudes(tritter: TritterUnitary, arm_phases, conjugate: bool) -> np.ndarray:
    """Per-photon amplitude table amp[detector j, arm a] for a double pass."""
    u = np.conj(tritter.matrix) if conjugate else tritter.matrix
    col = np.exp(1j * (np.asarray(arm_phases, dtype=float) + ARM_OFFSET)) * u[:, 0]
    return u * col[None, :]


def oracle_joint_distribution(
    geometry: InterferometerGeometry,
    phases: PhaseSettings,
    tritter_a: TritterUnitary,
    tritter_b: TritterUnitary,
    lam: float,
    *,
    allow_regime_violation: bool = False,
) -> JointDistribution:
    """Full (detector, detector, peak) distribution by path enumeration.

    Joint amplitudes for the 9 path pairs are grouped by arrival-time
    difference; groups are summed coherently, squared, and mixed with
    weight (1 - lam) of white noise spread over the 45 cells in proportion
    to the incoherent (which-path) weights.  With balanced couplers the
    central-peak conditional equals the closed-form rate / 9 exactly, and
    the noise placement makes that conditional exactly the symmetric
    mixture.
    """
    report = validate_regime(geometry)
    if not report.ok and not allow_regime_violation:
        raise RegimeViolation(f"coherence margins too small: {report.margins}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing weight must be in [0, 1], got {lam}")

    amp_a = _exit_amplitudes(tritter_a, phases.alpha, conjugate=False)
    amp_b = _exit_amplitudes(tritter_b, phases.beta, conjugate=True)
    joint = np.einsum("ja,kb->jkab", amp_a, amp_b)

    coherent = np.zeros((3, 3, 5))
    incoherent = np.zeros((3, 3, 5))
    for idx, peak in enumerate(PEAKS):
        pairs = [(a, a + peak) for a in range(3) if 0 <= a + peak <= 2]
        group = np.stack([joint[:, :, a, b] for a, b in pairs], axis=-1)
        coherent[:, :, idx] = np.abs(group.sum(axis=-1)) ** 2
        incoherent[:, :, idx] = (np.abs(group) ** 2).sum(axis=-1)

    # Both components sum to exactly 1 for unitary couplers (column
    # orthonormality kills the cross terms in the total).
    table = lam * coherent + (1.0 - lam) * incoherent
    table /= table.sum()
    return JointDistribution(table=table)


def conditioned_central_state(
    phases: PhaseSettings,
    tritter_a: TritterUnitary,
    tritter_b: TritterUnitary,
) -> np.ndarray:
    """Two-photon state at the detectors post-selected on the central peak.

    Returns the normalized 9-dim vector (|jk> -> 3j + k) for a noiseless
    source; used to quantify how coupler imbalance degrades the entangled
    resource.
    """
    amp_a = _exit_amplitudes(tritter_a, phases.alpha, conjugate=False)
    amp_b = _exit_amplitudes(tritter_b, phases.beta, conjugate=True)
    psi = np.einsum("ja,ka->jk", amp_a, amp_b).reshape(9)
    return psi / np.linalg.norm(psi)


def scan_settings(s: float, ratio: float, base: PhaseSettings | None = None) -> PhaseSettings:
    """Arm phases realizing the standard two-phase scan at scan value s.

    Drives Alice's arms so the (0, 0) channel sees exactly
    (phi_r, phi_l) = (ratio * s, s); ``base`` adds fixed offsets on top.
    """
    t = TRITTER_PHASE
    base = base if base is not None else PhaseSettings()
    alpha = (
        base.alpha[0],
        base.alpha[1] + ratio * s - t,
        base.alpha[2] + (1.0 + ratio) * s - t,
    )
    return PhaseSettings(alpha=alpha, beta=base.beta)


def fringe_curve(grid, ratio: float, lam: float, channel: tuple = (0, 0, 0)) -> FringeSeries:
    """Model fringe along the standard two-phase scan.

    The scan variable s drives both fringe phases with a fixed ratio:
    phi_l = s and phi_r = ratio * s for the (0, 0) central channel, other
    channels picking up their class offset t*(j - k).  Peak 0 gives the
    three-cosine fringe; peaks +1/-1 give the single-cosine lateral
    fringes recorded by the same scan.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("scan grid must not be empty")
    if not np.isfinite(ratio):
        raise ValueError("scan ratio must be finite")
    j, k, peak = channel
    t = TRITTER_PHASE
    offset = t * (int(j) - int(k))
    if peak == 0:
        vals = eq_rate(ratio * grid + offset, grid + offset, lam)
    elif peak == 1:
        vals = 1.0 + lam * np.cos(ratio * grid - 2.0 * t + offset)
    elif peak == -1:
        vals = 1.0 + lam * np.cos(grid - t + offset)
    else:
        raise ValueError("fringe channels exist for peaks -1, 0, +1 only")
    return FringeSeries(
        phases=grid,
        values=vals,
        channel=(int(j), int(k), int(peak)),
        metadata={"ratio": float(ratio), "lam": float(lam), "kind": "model"},
    )
