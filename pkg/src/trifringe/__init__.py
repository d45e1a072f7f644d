"""Simulation and parameter-recovery toolkit for energy-time entangled
qutrit interferometry: tritter state algebra, coincidence-rate models with
an exhaustive path-enumeration cross-check, seeded detection Monte Carlo,
fringe fitting, and a trit key-distribution session layer."""

from .errors import (
    ConfigError,
    DegenerateScan,
    DimensionMismatch,
    EmptySeries,
    LambdaOutOfRange,
    NoConvergence,
    NonUnitarizable,
    NoSidebandBins,
    RegimeViolation,
    TrifringeError,
)
from .states import (
    IDEAL,
    TRITTER_PHASE,
    DensityState,
    InterferometerGeometry,
    PhasePair,
    PhaseSettings,
    StateVector,
    TritterUnitary,
    build_tritter,
    central_state,
    fidelity_to_target,
    imbalance_fractions,
    lateral_state,
    mix_with_noise,
    phase_pair,
)
from .interference import (
    PEAKS,
    FringeSeries,
    JointDistribution,
    RegimeReport,
    coincidence_rate,
    conditioned_central_state,
    eq_rate,
    fringe_curve,
    lateral_rate,
    oracle_joint_distribution,
    scan_settings,
    validate_regime,
)
from .detection import (
    DetectorConfig,
    EventRecord,
    EventStream,
    Histogram,
    TimingConfig,
    bin_events,
    estimate_accidentals,
    simulate_run,
)
from .estimation import (
    AnalysisResult,
    CosineFit,
    FitResult,
    RatioEstimate,
    analyze_fringe,
    estimate_r,
    fidelity_from_lambda,
    fit_cosine,
    fit_fringe,
    net_series,
    v_star,
    visibility,
)
from .qkd import BasisSet, SessionStats, run_session
from .config import ScenarioConfig, parse_config_text, serialize_config

__version__ = "0.1.0"
