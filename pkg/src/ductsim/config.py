"""System configuration: parameter container, validation, file parsing."""

import dataclasses
import math
from dataclasses import dataclass


class ConfigurationError(ValueError):
    """Raised when a configuration value violates a named invariant."""


@dataclass(frozen=True)
class SystemConfig:
    """All scenario, power, channel and solver parameters for one run.

    Distances are meters except system_separation (km); powers are watts;
    angles are degrees. Defaults are the desk-scale setup used by the
    fast regression checks; configs/paper.cfg holds the full-scale values.
    """

    num_victim_bs: int = 2
    num_aggressor_bs: int = 2
    antennas_per_bs: int = 16
    ues_per_cell: int = 3
    pilot_len: int = 64
    ul_power: float = 10.0 ** -1.6  # 14 dBm
    dl_power: float = 10.0  # 40 dBm
    noise_power: float = 1e-14
    rician_k: float = 1000.0
    duct_loss: float = 3e-9
    system_separation: float = 86.0
    cell_side: float = 250.0
    restricted_radius: float = 20.0
    angular_spread: float = 10.0
    antenna_spacing_ratio: float = 0.5
    gp_snapshots: int | None = None
    shadowing_sigma_db: float = 4.0
    rng_seed: int = 1
    fp_tolerance: float = 1e-3
    fp_max_iters: int = 100
    trials: int = 200
    unique_pilots: bool = False
    paper_literal_null_scalar: bool = False
    single_duct_angle: bool = False

    @property
    def num_gp_snapshots(self):
        """Guard-period snapshot count; defaults to 10x the antenna count."""
        if self.gp_snapshots is not None:
            return self.gp_snapshots
        return 10 * self.antennas_per_bs

    def validate(self):
        """Raise ConfigurationError naming the first violated invariant."""
        def positive_int(name):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")

        def positive(name):
            v = getattr(self, name)
            if not v > 0:
                raise ConfigurationError(f"{name} must be positive, got {v!r}")

        for name in ("num_victim_bs", "num_aggressor_bs", "antennas_per_bs",
                     "ues_per_cell", "pilot_len", "fp_max_iters", "trials"):
            positive_int(name)
        for name in ("ul_power", "dl_power", "noise_power", "duct_loss",
                     "system_separation", "cell_side", "fp_tolerance"):
            positive(name)
        if not isinstance(self.rng_seed, int) or self.rng_seed < 0:
            raise ConfigurationError(
                f"rng_seed must be a nonnegative integer, got {self.rng_seed!r}")
        if self.rician_k < 0:
            raise ConfigurationError(
                f"rician_k must be nonnegative, got {self.rician_k!r}")
        if self.shadowing_sigma_db < 0:
            raise ConfigurationError(
                f"shadowing_sigma_db must be nonnegative, got {self.shadowing_sigma_db!r}")
        if not 0 <= self.angular_spread < 90:
            raise ConfigurationError(
                f"angular_spread must lie in [0, 90) degrees, got {self.angular_spread!r}")
        if self.pilot_len < self.ues_per_cell:
            raise ConfigurationError(
                "pilot_len must be at least ues_per_cell so in-cell pilots are "
                f"distinct, got pilot_len={self.pilot_len} < {self.ues_per_cell}")
        if self.unique_pilots:
            total = (self.num_victim_bs + self.num_aggressor_bs) * self.ues_per_cell
            if total > self.pilot_len:
                raise ConfigurationError(
                    "unique_pilots requires pilot_len >= total UE count, got "
                    f"{self.pilot_len} < {total}")
        if not 0 < self.antenna_spacing_ratio <= 0.5:
            raise ConfigurationError(
                "antenna_spacing_ratio must lie in (0, 0.5] to keep the "
                f"angle-root mapping unambiguous, got {self.antenna_spacing_ratio!r}")
        inradius = self.cell_side * math.sqrt(3.0) / 2.0
        if not 0 <= self.restricted_radius < inradius:
            raise ConfigurationError(
                "restricted_radius must lie in [0, cell inradius), got "
                f"{self.restricted_radius!r} vs inradius {inradius:.3f}")
        if self.gp_snapshots is not None:
            if not isinstance(self.gp_snapshots, int) or \
                    self.gp_snapshots < self.antennas_per_bs:
                raise ConfigurationError(
                    "gp_snapshots must be an integer >= antennas_per_bs, got "
                    f"{self.gp_snapshots!r}")
        return self

    def replace(self, **changes):
        """Copy with fields changed; revalidates."""
        return dataclasses.replace(self, **changes).validate()

    def as_dict(self):
        out = dataclasses.asdict(self)
        out["gp_snapshots"] = self.num_gp_snapshots
        return out


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemConfig)}


def _coerce(key, raw):
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    if typ is bool:
        if raw.lower() in ("true", "false"):
            return raw.lower() == "true"
        raise ConfigurationError(f"{key} must be true or false, got {raw!r}")
    if typ is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"{key} must be an integer, got {raw!r}") from None
    if typ == (int | None):
        if raw.lower() == "none":
            return None
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"{key} must be an integer or none, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"{key} must be a number, got {raw!r}") from None


def parse_config(text):
    """Parse key = value lines into a validated SystemConfig.

    Blank lines and # comments are ignored. Unknown keys are errors.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"line {lineno}: unknown configuration key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate configuration key {key!r}")
        values[key] = _coerce(key, raw)
    return SystemConfig(**values).validate()


def load_config(path):
    """Read and parse a configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
