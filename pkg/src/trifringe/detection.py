"""Seeded event-level simulation of the coincidence detection chain.

Turns a joint (detector, detector, peak) distribution into realistic
start/stop event streams: Poisson pair arrivals thinned by detector
efficiencies, Gaussian timing jitter on the arrival-time differences,
uniform accidental background over the histogram span, and time-of-arrival
histogramming with windowed peak selection.  Streams are bit-reproducible
for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import NoSidebandBins
from .interference import PEAKS, JointDistribution

#: truth_peak value marking accidental (untagged) events in array form.
NO_TRUTH = np.int8(-128)


@dataclass(frozen=True)
class DetectorConfig:
    """Detector efficiencies and background behavior.

    ``dark_accidental_rate`` is the expected accidental coincidences per
    second per (start, stop) channel for ungated operation, spread
    uniformly over the histogram span.  When ``gated_on_alice`` is set the
    stop detector only arms inside gates opened at the pair rate, scaling
    the accidental exposure by the gate duty cycle.
    """

    eta_alice: float = 0.10
    eta_bob: float = 0.20
    gated_on_alice: bool = True
    dark_accidental_rate: float = 0.0
    gate_width: float = 100e-9

    def __post_init__(self):
        if not (0.0 <= self.eta_alice <= 1.0 and 0.0 <= self.eta_bob <= 1.0):
            raise ValueError("efficiencies must be in [0, 1]")
        if self.dark_accidental_rate < 0 or self.gate_width <= 0:
            raise ValueError("rates must be >= 0 and gate width > 0")


@dataclass(frozen=True)
class TimingConfig:
    """Arrival-time structure: peak spacing, selection window, jitter,
    histogram binning, and the +-span covered by the histogram."""

    delta_tau: float = 1.2e-9
    window: float = 1.0e-9
    jitter_sigma: float = 1.0e-10
    histogram_bin: float = 5.0e-11
    span: float = 3.6e-9

    def __post_init__(self):
        if self.window > self.delta_tau:
            raise ValueError("window wider than the peak spacing; peaks would overlap")
        if min(self.delta_tau, self.window, self.histogram_bin, self.span) <= 0:
            raise ValueError("all timing scales must be positive")
        if self.jitter_sigma < 0:
            raise ValueError("jitter sigma must be >= 0")
        n = self.span / self.histogram_bin
        if abs(n - round(n)) > 1e-9:
            raise ValueError("histogram bin must divide the span evenly")

    @property
    def n_bins(self) -> int:
        """Bins covering [-span, +span]."""
        return 2 * int(round(self.span / self.histogram_bin))

    def bin_edges(self) -> np.ndarray:
        return np.linspace(-self.span, self.span, self.n_bins + 1)

    def sideband_width(self) -> float:
        """Total arrival-time-difference range outside the five peak windows."""
        return 2.0 * self.span - 5.0 * self.window


@dataclass(frozen=True)
class EventRecord:
    """One coincidence: start (Alice) and stop (Bob) channel plus the
    measured arrival-time difference.  Synthetic events keep a provenance
    tag naming the true peak; accidentals carry None."""

    start_channel: int
    stop_channel: int
    time_difference: float
    truth_peak: int | None = None


@dataclass(frozen=True)
class EventStream:
    """Column-oriented, time-ordered stream of coincidence events."""

    start_channels: np.ndarray
    stop_channels: np.ndarray
    time_differences: np.ndarray
    truth_peaks: np.ndarray
    duration: float

    def __len__(self) -> int:
        return int(self.start_channels.size)

    def __iter__(self) -> Iterator[EventRecord]:
        for i in range(len(self)):
            tp = int(self.truth_peaks[i])
            yield EventRecord(
                start_channel=int(self.start_channels[i]),
                stop_channel=int(self.stop_channels[i]),
                time_difference=float(self.time_differences[i]),
                truth_peak=None if tp == NO_TRUTH else tp,
            )


@dataclass(frozen=True)
class Histogram:
    """Binned arrival-time differences per (start, stop) channel.

    ``counts`` has shape (3, 3, n_bins); ``peak_counts`` (3, 3, 5) holds the
    windowed counts per peak (classified from the raw time differences, not
    the bins) and ``noise_counts`` what fell outside every window.
    """

    counts: np.ndarray
    bin_edges: np.ndarray
    peak_counts: np.ndarray
    noise_counts: np.ndarray
    total_events: int
    duration: float
    timing: TimingConfig

    def channel_counts(self, j: int, k: int) -> np.ndarray:
        return self.counts[j, k]

    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def effective_accidental_rate(det: DetectorConfig, pair_rate: float) -> float:
    """Accidental coincidence rate per channel after gating.

    Gated operation exposes the stop detector only for ``gate_width`` per
    gate at the pair rate, so the configured rate is scaled by the duty
    cycle min(1, pair_rate * gate_width).
    """
    if not det.gated_on_alice:
        return det.dark_accidental_rate
    duty = min(1.0, pair_rate * det.gate_width)
    return det.dark_accidental_rate * duty


def simulate_run(
    dist: JointDistribution,
    det: DetectorConfig,
    timing: TimingConfig,
    pair_rate: float,
    duration: float,
    seed: int,
) -> EventStream:
    """Generate a time-ordered coincidence stream for one run.

    True coincidences arrive as a Poisson process at
    ``pair_rate * eta_alice * eta_bob`` thinned over the distribution's 45
    cells; each gets a time difference of peak * delta_tau plus Gaussian
    jitter.  Accidentals arrive per channel at the effective (gated) rate
    with time differences uniform over the span.  Events whose jittered
    time difference leaves the span are dropped.
    """
    if pair_rate < 0 or duration < 0:
        raise ValueError("pair rate and duration must be >= 0")
    rng = np.random.default_rng(seed)

    mean_true = pair_rate * duration * det.eta_alice * det.eta_bob
    n_true = rng.poisson(mean_true) if mean_true > 0 else 0
    cells = rng.multinomial(n_true, dist.table.reshape(45)) if n_true else np.zeros(45, int)
    cell_idx = np.repeat(np.arange(45), cells)
    j_true, k_true, p_idx = np.unravel_index(cell_idx, (3, 3, 5))
    peaks_true = np.asarray(PEAKS)[p_idx]
    td_true = peaks_true * timing.delta_tau + rng.normal(0.0, timing.jitter_sigma, n_true)
    t_true = rng.uniform(0.0, duration, n_true)

    acc_rate = effective_accidental_rate(det, pair_rate)
    n_acc = rng.poisson(9 * acc_rate * duration) if acc_rate > 0 and duration > 0 else 0
    j_acc = rng.integers(0, 3, n_acc)
    k_acc = rng.integers(0, 3, n_acc)
    td_acc = rng.uniform(-timing.span, timing.span, n_acc)
    t_acc = rng.uniform(0.0, duration, n_acc)

    start = np.concatenate([j_true, j_acc]).astype(np.int8)
    stop = np.concatenate([k_true, k_acc]).astype(np.int8)
    td = np.concatenate([td_true, td_acc])
    truth = np.concatenate([peaks_true.astype(np.int8), np.full(n_acc, NO_TRUTH)])
    t_abs = np.concatenate([t_true, t_acc])

    keep = np.abs(td) <= timing.span
    order = np.argsort(t_abs[keep], kind="stable")
    return EventStream(
        start_channels=start[keep][order],
        stop_channels=stop[keep][order],
        time_differences=td[keep][order],
        truth_peaks=truth[keep][order],
        duration=float(duration),
    )


def classify_peaks(time_differences, timing: TimingConfig) -> np.ndarray:
    """Window classification: peak index in -2..2, or NO_TRUTH for the
    noise floor (outside every window)."""
    td = np.asarray(time_differences, dtype=float)
    nearest = np.clip(np.rint(td / timing.delta_tau), -2, 2).astype(np.int8)
    inside = np.abs(td - nearest * timing.delta_tau) <= timing.window / 2.0
    return np.where(inside, nearest, NO_TRUTH)


def bin_events(events: EventStream, timing: TimingConfig) -> Histogram:
    """Histogram a stream and classify events into peak windows."""
    td = events.time_differences
    counts = np.zeros((3, 3, timing.n_bins), dtype=np.int64)
    bins = np.minimum(
        ((td + timing.span) / timing.histogram_bin).astype(np.int64), timing.n_bins - 1
    )
    np.add.at(counts, (events.start_channels, events.stop_channels, bins), 1)

    labels = classify_peaks(td, timing)
    peak_counts = np.zeros((3, 3, 5), dtype=np.int64)
    noise_counts = np.zeros((3, 3), dtype=np.int64)
    for idx, peak in enumerate(PEAKS):
        mask = labels == peak
        np.add.at(peak_counts[:, :, idx], (events.start_channels[mask], events.stop_channels[mask]), 1)
    mask = labels == NO_TRUTH
    np.add.at(noise_counts, (events.start_channels[mask], events.stop_channels[mask]), 1)

    return Histogram(
        counts=counts,
        bin_edges=timing.bin_edges(),
        peak_counts=peak_counts,
        noise_counts=noise_counts,
        total_events=len(events),
        duration=events.duration,
        timing=timing,
    )


def estimate_accidentals(hist: Histogram) -> np.ndarray:
    """Accidental rate per channel from the out-of-peak sidebands.

    Returns a (3, 3) array of expected accidental counts per peak window
    per second, i.e. the mean sideband count density scaled to the window
    width.  Subtract ``estimate * duration`` from windowed counts for net
    quantities.
    """
    width = hist.timing.sideband_width()
    if width <= 0:
        raise NoSidebandBins("histogram span does not extend beyond the five peak windows")
    if hist.duration <= 0:
        raise ValueError("histogram has no exposure time")
    density = hist.noise_counts / (width * hist.duration)
    return density * hist.timing.window
