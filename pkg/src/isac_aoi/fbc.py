"""Finite-blocklength coding math: Gaussian Q, channel dispersion, rate, airtime."""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import NonPositiveRate

_SQRT2 = math.sqrt(2.0)
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateResult:
    rate: float  # bits/second, may be <= 0
    snr: float  # linear
    dispersion: float  # in [0, 1)


def evaluate(gamma: float, p) -> "RateResult":
    return RateResult(rate=fbc_rate(gamma, p), snr=gamma, dispersion=dispersion(gamma))


def q_func(x):
    """Gaussian tail probability P[Z > x] for standard normal Z."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2) if np.ndim(x) else 0.5 * erfc(x / _SQRT2)


@functools.lru_cache(maxsize=None)
def q_inv(eps: float) -> float:
    """Inverse of q_func on (0, 1), by bracketed root-finding on q_func itself."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps={eps} not in (0, 1)")
    if eps == 0.5:
        return 0.0
    # q_func spans (~1e-198, 1) on [-30, 30]; brentq refines to machine precision.
    return brentq(lambda x: q_func(x) - eps, -30.0, 30.0, xtol=1e-14, rtol=8.9e-16)


def dispersion(gamma):
    """Channel dispersion 1 - (1+gamma)^-2, in [0, 1)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("gamma must be >= 0")
    out = 1.0 - (1.0 + g) ** -2
    return float(out) if np.ndim(gamma) == 0 else out


def fbc_rate(gamma, p):
    """Short-packet achievable rate in bits/second; may be <= 0 at low SNR."""
    g = np.asarray(gamma, dtype=float)
    pen = np.sqrt(dispersion(g) / p.N) * q_inv(p.epsilon)
    out = (p.W / _LN2) * (np.log1p(g) - pen)
    return float(out) if np.ndim(gamma) == 0 else out


def airtime(gamma, p):
    """Per-attempt transmission time L / R(gamma), seconds."""
    r = fbc_rate(gamma, p)
    if np.any(np.asarray(r) <= 0):
        raise NonPositiveRate(
            f"rate <= 0 at gamma={gamma!r}; raise tau above min_positive_snr"
        )
    out = p.L / np.asarray(r, dtype=float)
    return float(out) if np.ndim(gamma) == 0 else out


def min_positive_snr(p) -> float:
    """Unique gamma* > 0 where the rate crosses zero (0 when eps >= 0.5).

    Below gamma* the FBC penalty dominates and the rate is negative.
    """
    if p.epsilon >= 0.5:
        return 0.0

    qi = q_inv(p.epsilon)

    def f(g):
        return math.log1p(g) - math.sqrt(dispersion(g) / p.N) * qi

    lo = 1e-12
    while f(lo) >= 0.0:  # pragma: no cover - lo is always in the negative region
        lo *= 0.1
    hi = 1.0
    while f(hi) <= 0.0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-300, rtol=1e-13)
