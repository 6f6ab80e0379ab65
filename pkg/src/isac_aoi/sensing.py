"""Radar side: echo power, Swerling-I detection probability, packet arrivals."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllPowerToComm, MgfDiverges
from .params import SystemParams, sensing_noise

_FOUR_PI_CUBED = (4.0 * math.pi) ** 3


@dataclass(frozen=True)
class ArrivalModel:
    """Bernoulli-per-scan packet generation: inter-arrivals are Geometric(detect_prob)*T."""

    T: float  # scan period, s
    detect_prob: float  # successful-detection probability per scan

    def __post_init__(self):
        if not 0.0 < self.detect_prob <= 1.0:
            raise ValueError(f"detect_prob={self.detect_prob} not in (0, 1]")
        if not self.T > 0:
            raise ValueError(f"T={self.T} must be > 0")


def echo_power(p: SystemParams, rho: float) -> float:
    """Radar echo power for a target of cross section rho, watts."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    return p.P_s * p.G_t * p.G_r * p.sigma_wl ** 2 * rho / (_FOUR_PI_CUBED * p.D ** (2 * p.kappa))


def sdp_exponent(p: SystemParams) -> float:
    """Exponent of the Swerling-I detection probability (linear in d)."""
    if p.alpha >= 1.0:
        if p.d > 0:
            raise AllPowerToComm("alpha=1 leaves no sensing power; SDP -> 0")
        return 0.0
    return (p.d * _FOUR_PI_CUBED * p.D ** (2 * p.kappa) * sensing_noise(p)
            / (p.P_s * p.G_t * p.G_r * p.sigma_wl ** 2 * p.rho_bar))


def sdp(p: SystemParams) -> float:
    """Probability that a scan's echo SNR exceeds d, under exponential RCS."""
    return math.exp(-sdp_exponent(p))


def arrival_model(p: SystemParams) -> ArrivalModel:
    return ArrivalModel(T=p.T, detect_prob=sdp(p))


def arrival_theta_max(model: ArrivalModel) -> float:
    """Largest theta for which the inter-arrival MGF converges."""
    if model.detect_prob == 1.0:
        return math.inf
    return -math.log1p(-model.detect_prob) / model.T


def arrival_mgf(theta: float, model: ArrivalModel) -> float:
    """MGF of the inter-arrival time K*T, K ~ Geometric(detect_prob) on {1,2,...}.

    Closed form ((e^{-theta T} - 1)/P_s + 1)^{-1}; converges for any theta <= 0
    and for 0 < theta < -ln(1 - P_s)/T.
    """
    ps = model.detect_prob
    if theta > 0 and ps < 1.0:
        if theta * model.T > math.log(1e300) or math.exp(theta * model.T) * (1.0 - ps) >= 1.0:
            raise MgfDiverges("arrival geometric series", arrival_theta_max(model))
    x = -theta * model.T
    if x > 700.0:  # deep negative theta: closed form ~ ps*e^{theta T}, avoid overflow
        return ps * math.exp(-x)
    return 1.0 / ((math.exp(x) - 1.0) / ps + 1.0)


def sample_interarrival(model: ArrivalModel, rng: np.random.Generator) -> float:
    """One inter-arrival draw: number of scans to first detection, times T."""
    return float(rng.geometric(model.detect_prob)) * model.T
