"""Model parameters: parsing, unit normalization, validation.

Config files are flat UTF-8 ``key = value`` text. Keys carrying a ``_db``,
``_dbm``, ``_dbi`` or ``_dbsm`` suffix are converted to linear units at load,
so provenance of decibel inputs stays explicit. Every key can be overridden
via the environment (``ISAC_<KEY>``) or ``--set key=value`` on the CLI.
"""

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Optional

from . import fbc
from .errors import ConfigError, OutOfRangeError

ENV_PREFIX = "ISAC_"

BOLTZMANN = 1.38e-23  # W*s
STANDARD_TEMP = 290.0  # K

# Safety factor applied to the zero-rate SNR when tau is not configured.
TAU_SAFETY = 1.05
DEFAULT_SENSING_SNR_THRESHOLD = 10.0  # linear, i.e. 10 dB


@dataclass(frozen=True)
class SystemParams:
    """Unit-normalized snapshot of every model parameter (SI units, linear gains)."""

    P_t: float  # total power, W
    alpha: float  # power split: P_c = alpha*P_t, P_s = (1-alpha)*P_t
    W: float  # bandwidth, Hz
    T: float  # radar scan period, s
    L: int  # packet length, bits
    N: int  # blocklength, symbols
    epsilon: float  # decoding error probability
    N_c: float  # communication noise power, W
    D: float  # maximum ranging distance, m
    kappa: float  # path-loss exponent
    sigma_wl: float  # radar wavelength, m
    G_t: float  # transmit antenna gain, linear
    G_r: float  # receive antenna gain, linear
    rho_bar: float  # mean radar cross section, m^2
    varphi: float  # system loss factor, linear
    tau: float  # communication SNR acceptance threshold, linear
    d: float  # sensing SNR detection threshold, linear
    varpi: float  # deferral interval, s
    zeta: float  # PAoI threshold, s
    theta: Optional[float] = None  # Chernoff parameter, 1/s; None = optimize
    varsigma: float = BOLTZMANN
    chi: float = STANDARD_TEMP

    @property
    def P_c(self) -> float:
        return self.alpha * self.P_t

    @property
    def P_s(self) -> float:
        return (1.0 - self.alpha) * self.P_t


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


# Table I defaults, plus the repo choices for the symbols the table omits
# (alpha, d in linear; tau is derived at load when absent).
_DEFAULTS = {
    "P_t": 10.0,
    "alpha": 0.5,
    "W": 25e3,
    "T": 1e-3,
    "L": 100,
    "N": 100,
    "epsilon": 1e-3,
    "N_c_dbm": -23.0,
    "D": 100.0,
    "kappa": 2.0,
    "sigma_wl": 4e-3,
    "G_t_dbi": 10.0,
    "G_r_dbi": 10.0,
    "rho_bar_dbsm": 10.0,
    "varphi_db": 10.0,
    "d": DEFAULT_SENSING_SNR_THRESHOLD,
    "varpi": 0.5e-3,
    "zeta": 6e-3,
}

_DB_SUFFIXES = {
    "_dbm": dbm_to_watts,
    "_dbi": db_to_linear,
    "_dbsm": db_to_linear,
    "_db": db_to_linear,
}

_FIELDS = {f.name for f in dataclasses.fields(SystemParams)} - {"varsigma", "chi"}
_INT_FIELDS = {"L", "N"}


def _base_key(key: str):
    """Map a raw config key to (field, converter)."""
    for suffix, conv in _DB_SUFFIXES.items():
        if key.endswith(suffix):
            base = key[: -len(suffix)]
            if base in _FIELDS:
                return base, conv
    if key in _FIELDS:
        return key, None
    raise ConfigError(f"unknown config key: {key!r}")


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        raw[key.strip()] = val.strip()
    return raw


def _coerce(key: str, val):
    if isinstance(val, str):
        if val.lower() in ("none", ""):
            return None
        try:
            val = float(val)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {val!r} as a number") from None
    return val


def load_params(source: str = "", overrides=None, environ=None) -> SystemParams:
    """Build a validated SystemParams from config text, env, and overrides.

    Precedence (lowest to highest): Table I defaults, `source` text,
    ``ISAC_*`` environment variables, explicit `overrides` mapping.
    """
    environ = os.environ if environ is None else environ

    raw = dict(_DEFAULTS)
    user = parse_config_text(source)
    for key, val in user.items():
        _absorb(raw, key, val)
    for env_key, val in environ.items():
        if env_key.startswith(ENV_PREFIX):
            key = env_key[len(ENV_PREFIX):]
            try:  # verbatim first: D (distance) and d (SNR threshold) both exist
                _base_key(key)
            except ConfigError:
                key = key.lower()
            _absorb(raw, key, val)
    for key, val in (overrides or {}).items():
        _absorb(raw, key, val)

    fields = {}
    for key, val in raw.items():
        base, conv = _base_key(key)
        val = _coerce(key, val)
        if val is not None and conv is not None:
            val = conv(val)
        fields[base] = val

    return _build(fields)


def _absorb(raw: dict, key: str, val):
    """Insert key, dropping any earlier spelling (linear vs dB) of the same field."""
    base, _ = _base_key(key)
    for existing in [k for k in raw if _base_key(k)[0] == base]:
        del raw[existing]
    raw[key] = val


def _build(fields: dict) -> SystemParams:
    for f in _INT_FIELDS:
        if f in fields and fields[f] is not None:
            v = fields[f]
            if v != int(v):
                raise OutOfRangeError(f, v, "positive integer")
            fields[f] = int(v)

    tau = fields.pop("tau", None)
    theta = fields.get("theta", None)
    fields["theta"] = theta
    p = SystemParams(tau=1.0, **fields)  # placeholder tau, validated below
    _validate(p, skip_tau=True)

    if tau is None:
        tau = TAU_SAFETY * fbc.min_positive_snr(p)
    p = dataclasses.replace(p, tau=float(tau))
    _validate(p)
    return p


def _validate(p: SystemParams, skip_tau: bool = False) -> None:
    pos = ["P_t", "W", "T", "L", "N", "N_c", "D", "kappa", "sigma_wl",
           "G_t", "G_r", "rho_bar", "varphi", "varpi", "zeta"]
    for f in pos:
        v = getattr(p, f)
        if v is None or not v > 0:
            raise OutOfRangeError(f, v, "> 0")
    if not 0.0 <= p.alpha <= 1.0:
        raise OutOfRangeError("alpha", p.alpha, "[0, 1]")
    if not 0.0 < p.epsilon < 1.0:
        raise OutOfRangeError("epsilon", p.epsilon, "(0, 1)")
    if p.d < 0:
        raise OutOfRangeError("d", p.d, ">= 0")
    if not skip_tau and not p.tau > 0:
        raise OutOfRangeError("tau", p.tau, "> 0")
    if p.theta is not None and not p.theta > 0:
        raise OutOfRangeError("theta", p.theta, "> 0 or unset")


def sensing_noise(p: SystemParams) -> float:
    """Sensing noise power W * Boltzmann * temperature * loss, watts."""
    return p.W * p.varsigma * p.chi * p.varphi


def serialize(p: SystemParams) -> str:
    """Flat config text (linear units) such that load_params(serialize(p)) == p."""
    lines = []
    for f in dataclasses.fields(SystemParams):
        if f.name in ("varsigma", "chi"):
            continue
        v = getattr(p, f.name)
        lines.append(f"{f.name} = {'none' if v is None else repr(v)}")
    return "\n".join(lines) + "\n"
