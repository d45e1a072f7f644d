"""Exception types shared across the toolkit."""


class TrifringeError(Exception):
    """Base class for all toolkit errors."""


class NonUnitarizable(TrifringeError):
    """Requested coupler splitting cannot be realized by a nearby unitary."""


class LambdaOutOfRange(TrifringeError):
    """Noise mixing weight outside [0, 1]."""


class DimensionMismatch(TrifringeError):
    """Operands live in incompatible state spaces."""


class RegimeViolation(TrifringeError):
    """Coherence-length margins do not support the indistinguishability picture."""


class NoSidebandBins(TrifringeError):
    """Histogram span leaves no region outside the arrival-time peaks."""


class NoConvergence(TrifringeError):
    """Iterative fit failed to converge."""


class DegenerateScan(TrifringeError):
    """Scan does not cover enough phase range to constrain the fit."""


class EmptySeries(TrifringeError):
    """Operation requires a non-empty fringe series."""


class ConfigError(TrifringeError):
    """Invalid or unparseable scenario configuration."""
