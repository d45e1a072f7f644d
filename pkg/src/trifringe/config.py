"""Flat key = value scenario configuration.

The on-disk format is line-oriented text: one ``key = value`` per line,
dotted section prefixes, ``#`` comments, blank lines ignored.  Values are
typed by a fixed schema; unknown keys are rejected.  Serialization is
canonical (sorted keys, 12 significant digits, locale-independent), so
parse -> serialize -> parse is idempotent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SCENARIOS = ("fringe", "histogram", "fit", "qkd", "oracle-check")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"not a comma-separated number list: {text!r}") from exc


def format_value(value) -> str:
    """Canonical locale-independent text for a config value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"non-finite value cannot be serialized: {value}")
        return f"{value:.12g}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, tuple):
        return ",".join(format_value(float(v)) for v in value)
    return str(value)


# key -> (parser, default).  Defaults describe a desk-scale synthetic run.
SCHEMA = {
    "scenario": (str, "fringe"),
    "seed": (int, 12345),
    "out": (str, "out"),
    "model.lambda": (float, 0.982),
    "tritter.deviation": (float, 0.0),
    "phases.alpha": (_parse_float_list, (0.0, 0.0, 0.0)),
    "phases.beta": (_parse_float_list, (0.0, 0.0, 0.0)),
    "geometry.alice_arms_m": (_parse_float_list, (1.0, 1.24, 1.48)),
    "geometry.bob_arms_m": (_parse_float_list, (1.0, 1.24, 1.48)),
    "geometry.photon_coherence_m": (float, 45e-6),
    "geometry.pump_coherence_m": (float, 100.0),
    "geometry.delta_tau_s": (float, 1.2e-9),
    "detector.eta_alice": (float, 0.10),
    "detector.eta_bob": (float, 0.20),
    "detector.gated_on_alice": (_parse_bool, False),
    "detector.dark_accidental_rate": (float, 0.0),
    "detector.gate_width_s": (float, 100e-9),
    "timing.delta_tau_s": (float, 1.2e-9),
    "timing.window_s": (float, 1.0e-9),
    "timing.jitter_sigma_s": (float, 1.0e-10),
    "timing.histogram_bin_s": (float, 5.0e-11),
    "timing.span_s": (float, 3.6e-9),
    "scan.start_rad": (float, 0.0),
    "scan.stop_rad": (float, 6.0 * math.pi),
    "scan.points": (int, 150),
    "scan.ratio": (float, 1.0),
    "scan.channel_j": (int, 0),
    "scan.channel_k": (int, 0),
    "scan.dwell_s": (float, 5.0),
    "run.pair_rate_hz": (float, 1.0e4),
    "run.duration_s": (float, 60.0),
    "qkd.rounds": (int, 100000),
    "qkd.lambda_grid": (_parse_float_list, (0.0, 0.5, 1.0)),
    "oracle.trials": (int, 1000),
    "oracle.lambda_grid": (_parse_float_list, (0.0, 0.3, 0.7, 1.0)),
    "oracle.tolerance": (float, 1.0e-10),
    "fit.input_csv": (str, ""),
}


def parse_config_text(text: str) -> dict:
    """Parse flat key = value text into a raw string mapping."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def serialize_config(mapping: dict) -> str:
    """Canonical text for a raw string mapping (sorted keys)."""
    lines = [f"{key} = {mapping[key]}" for key in sorted(mapping)]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ScenarioConfig:
    """Typed scenario configuration; ``values`` maps schema keys to typed
    values, overrides applied on top of defaults."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {key: default for key, (_, default) in SCHEMA.items()}
        merged.update(self.values)
        object.__setattr__(self, "values", merged)
        scenario = merged["scenario"]
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
        self._validate()

    def _validate(self):
        v = self.values
        if v["scan.points"] < 1:
            raise ConfigError("scan.points must be >= 1 (empty scan grid)")
        if v["scan.stop_rad"] <= v["scan.start_rad"]:
            raise ConfigError("scan.stop_rad must exceed scan.start_rad")
        if not 0.0 <= v["model.lambda"] <= 1.0:
            raise ConfigError("model.lambda must be in [0, 1]")
        if v["qkd.rounds"] <= 0:
            raise ConfigError("qkd.rounds must be positive")
        if v["run.duration_s"] < 0 or v["scan.dwell_s"] <= 0:
            raise ConfigError("durations must be positive")
        if not (0 <= v["scan.channel_j"] <= 2 and 0 <= v["scan.channel_k"] <= 2):
            raise ConfigError("scan channel indices must be in 0..2")
        for key in ("phases.alpha", "phases.beta"):
            if len(v[key]) != 3:
                raise ConfigError(f"{key} must hold three phases")
        for key in ("geometry.alice_arms_m", "geometry.bob_arms_m"):
            if len(v[key]) != 3:
                raise ConfigError(f"{key} must hold three arm lengths")
        if v["oracle.trials"] < 1:
            raise ConfigError("oracle.trials must be >= 1")
        if not -0.5 < v["tritter.deviation"] < 2.0:
            raise ConfigError("tritter.deviation out of range")

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def from_mapping(cls, raw: dict) -> "ScenarioConfig":
        """Build from a raw string mapping, rejecting unknown keys."""
        typed = {}
        for key, text in raw.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            parser, _ = SCHEMA[key]
            try:
                typed[key] = parser(text)
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {text!r} ({exc})") from exc
        return cls(values=typed)

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        return cls.from_mapping(parse_config_text(text))

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def to_mapping(self) -> dict:
        return {key: format_value(val) for key, val in self.values.items()}

    def to_text(self) -> str:
        return serialize_config(self.to_mapping())

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        vals = dict(self.values)
        vals.update(overrides)
        return ScenarioConfig(values=vals)
