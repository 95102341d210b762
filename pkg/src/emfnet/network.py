"""Network configuration, geometry, propagation, and unit conversions.

Base stations form a homogeneous Poisson process of density ``density``
on a disk of radius ``disk_radius`` around the typical user, with an
exclusion radius around the origin.  All internal quantities are SI
(W, m, Hz, rad); dB/dBm conversion happens only at the I/O boundary.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from .antenna import AntennaPattern

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN = 1.380649e-23
REFERENCE_TEMP_K = 290.0
DEFAULT_NOISE_FIGURE_DB = 6.0

CONFIG_KEYS = (
    "f_hz",
    "bw_hz",
    "lambda_per_km2",
    "tau_m",
    "z_m",
    "pt_dbm",
    "re_m",
    "n_elements",
    "alpha",
    "m",
    "kmax",
    "d_m",
    "sigma2_dbm",
    "pattern",
)


class ConfigError(ValueError):
    """Invalid, missing, or unknown configuration input."""


class UserKind(str, enum.Enum):
    """User role in the exposure analysis.

    The active user is served by the nearest BS's boresight beam, the
    idle user sits d meters from an active user, and the random user is
    uncorrelated with any serving beam (interference-only exposure).
    """

    ACTIVE = "au"
    IDLE = "iu"
    RANDOM = "ru"

    @classmethod
    def parse(cls, value) -> "UserKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown user kind {value!r}; expected one of "
                f"{', '.join(k.value for k in cls)}"
            ) from None


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w / 1e-3)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class NetworkConfig:
    """All scalar network and physics parameters, validated once."""

    carrier_freq: float  # Hz
    bandwidth: float  # Hz
    density: float  # BS per m^2
    disk_radius: float  # m
    bs_height: float  # m
    eirp: float  # W
    exclusion_radius: float  # m
    pathloss_exp: float
    nakagami_m: int
    pattern: AntennaPattern
    separation: float  # m, AU-to-IU distance d
    noise_figure_db: float = DEFAULT_NOISE_FIGURE_DB
    noise_power_override: float | None = None  # W

    def __post_init__(self):
        if self.carrier_freq <= 0 or self.bandwidth <= 0:
            raise ConfigError("carrier frequency and bandwidth must be positive")
        if self.density <= 0:
            raise ConfigError("BS density must be positive")
        if not 0 <= self.exclusion_radius < self.disk_radius:
            raise ConfigError("need 0 <= exclusion radius < disk radius")
        if self.bs_height < 0:
            raise ConfigError("BS height must be nonnegative")
        if self.eirp <= 0:
            raise ConfigError("EIRP must be positive")
        if self.pathloss_exp <= 2:
            raise ConfigError("path loss exponent must exceed 2")
        if not (isinstance(self.nakagami_m, (int, np.integer)) and self.nakagami_m >= 1):
            raise ConfigError("Nakagami m must be a positive integer")
        if self.separation < 0:
            raise ConfigError("separation d must be nonnegative")
        if self.separation >= self.mean_cell_radius:
            raise ConfigError(
                f"separation d={self.separation} m reaches the mean cell "
                f"radius {self.mean_cell_radius:.1f} m; the idle user must "
                "stay inside the serving cell"
            )
        if self.noise_power_override is not None and self.noise_power_override <= 0:
            raise ConfigError("noise power override must be positive")

    @property
    def mean_cell_radius(self) -> float:
        return 1.0 / (2.0 * math.sqrt(self.density))

    @property
    def kappa(self) -> float:
        """Free-space constant (4 pi f / c)^2."""
        return (4.0 * math.pi * self.carrier_freq / SPEED_OF_LIGHT) ** 2

    def with_pattern(self, pattern: AntennaPattern) -> "NetworkConfig":
        return replace(self, pattern=pattern)

    def to_dict(self) -> dict:
        """Flat key-value form using the standard config keys."""
        out = {
            "f_hz": self.carrier_freq,
            "bw_hz": self.bandwidth,
            "lambda_per_km2": self.density * 1e6,
            "tau_m": self.disk_radius,
            "z_m": self.bs_height,
            "pt_dbm": watts_to_dbm(self.eirp),
            "re_m": self.exclusion_radius,
            "n_elements": self.pattern.n_elements,
            "alpha": self.pathloss_exp,
            "m": self.nakagami_m,
            "kmax": self.pattern.k_max,
            "d_m": self.separation,
            "pattern": self.pattern.kind,
        }
        if self.noise_power_override is not None:
            out["sigma2_dbm"] = watts_to_dbm(self.noise_power_override)
        return out

    def config_hash(self) -> str:
        blob = ";".join(
            f"{k}={self.to_dict()[k]!r}" for k in sorted(self.to_dict())
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def table1_config(**overrides) -> NetworkConfig:
    """Reference configuration from the standard simulation parameters."""
    base = dict(
        carrier_freq=3.5e9,
        bandwidth=20e6,
        density=10e-6,
        disk_radius=3000.0,
        bs_height=30.0,
        eirp=dbm_to_watts(48.0),
        exclusion_radius=0.3,
        pathloss_exp=3.25,
        nakagami_m=1,
        pattern=AntennaPattern(kind="multi_cos", n_elements=64, k_max=10),
        separation=10.0,
        noise_power_override=dbm_to_watts(-95.40),
    )
    base.update(overrides)
    return NetworkConfig(**base)


def _config_from_items(items: dict) -> NetworkConfig:
    unknown = set(items) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    missing = set(CONFIG_KEYS) - {"sigma2_dbm"} - set(items)
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(sorted(missing))}")

    def num(key):
        try:
            return float(items[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key} is not a number: {items[key]!r}") from exc

    def integer(key):
        v = num(key)
        if v != int(v):
            raise ConfigError(f"config key {key} must be an integer, got {items[key]!r}")
        return int(v)

    pattern = AntennaPattern(
        kind=str(items["pattern"]).strip(),
        n_elements=integer("n_elements"),
        k_max=integer("kmax"),
    )
    override = dbm_to_watts(num("sigma2_dbm")) if "sigma2_dbm" in items else None
    return NetworkConfig(
        carrier_freq=num("f_hz"),
        bandwidth=num("bw_hz"),
        density=num("lambda_per_km2") * 1e-6,
        disk_radius=num("tau_m"),
        bs_height=num("z_m"),
        eirp=dbm_to_watts(num("pt_dbm")),
        exclusion_radius=num("re_m"),
        pathloss_exp=num("alpha"),
        nakagami_m=integer("m"),
        pattern=pattern,
        separation=num("d_m"),
        noise_power_override=override,
    )


def load_config(path) -> NetworkConfig:
    """Parse a flat ``key = value`` config file with # comments."""
    items = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in items:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
            items[key] = value
    return _config_from_items(items)


def save_config(cfg: NetworkConfig, path) -> None:
    with open(path, "w") as fh:
        for key, value in cfg.to_dict().items():
            fh.write(f"{key} = {value}\n")


def pathloss(cfg: NetworkConfig, r) -> np.ndarray | float:
    """Channel power gain kappa^-1 (r^2 + z^2)^(-alpha/2) at horizontal
    distance r from a BS at height z."""
    r = np.asarray(r, dtype=float)
    out = (r ** 2 + cfg.bs_height ** 2) ** (-cfg.pathloss_exp / 2.0) / cfg.kappa
    return float(out) if out.ndim == 0 else out


def mean_rx_power(cfg: NetworkConfig, r) -> np.ndarray | float:
    """Fading- and gain-free mean received power P_t l(r)."""
    return cfg.eirp * pathloss(cfg, r)


def nearest_bs_pdf(cfg: NetworkConfig, r) -> np.ndarray | float:
    """PDF of the distance to the nearest BS, conditioned on at least
    one BS inside the disk and none inside the exclusion radius."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= cfg.exclusion_radius) or np.any(r_arr > cfg.disk_radius):
        raise ValueError(
            f"r outside the support ({cfg.exclusion_radius}, {cfg.disk_radius}]"
        )
    lam = cfg.density
    norm = math.exp(-lam * math.pi * cfg.exclusion_radius ** 2) - math.exp(
        -lam * math.pi * cfg.disk_radius ** 2
    )
    out = 2 * math.pi * lam * r_arr * np.exp(-lam * math.pi * r_arr ** 2) / norm
    return float(out) if out.ndim == 0 else out


def iu_geometry(r0, theta, d):
    """Distance W and angle offset delta from a BS at (r0, theta) to the
    idle user sitting d meters from the active user.

    Law of cosines: W = sqrt(r0^2 + d^2 - 2 r0 d cos theta) and
    delta = sign(theta) arccos((r0 - d cos theta)/W).  Accepts arrays.
    """
    r0 = np.asarray(r0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    w = np.sqrt(r0 ** 2 + d ** 2 - 2.0 * r0 * d * np.cos(theta))
    if np.any(w <= 0):
        raise ValueError("idle user coincides with a BS (W = 0)")
    arg = np.clip((r0 - d * np.cos(theta)) / w, -1.0, 1.0)
    delta = np.sign(theta) * np.arccos(arg)
    if w.ndim == 0:
        return float(w), float(delta)
    return w, delta


def noise_power(cfg: NetworkConfig) -> float:
    """Thermal noise power k T0 B_w F in watts, unless overridden."""
    if cfg.noise_power_override is not None:
        return cfg.noise_power_override
    return (
        BOLTZMANN
        * REFERENCE_TEMP_K
        * cfg.bandwidth
        * db_to_linear(cfg.noise_figure_db)
    )


def emfe_to_ipd(cfg: NetworkConfig, p) -> np.ndarray | float:
    """Incident power density (kappa / 4 pi) * received power."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("received power must be nonnegative")
    out = cfg.kappa / (4.0 * math.pi) * p
    return float(out) if out.ndim == 0 else out
