"""Communication side: channel acceptance, retransmission loop, service-time law.

A packet at the head of the queue repeatedly (i) waits out deferral intervals
of length varpi until the channel SNR clears tau, then (ii) transmits once at
airtime phi(gamma(h)) and decodes with probability eta = (1-epsilon)^L. With
b failed attempts and c total deferrals the service time is
c*varpi + (b+1)*phi(gamma(h)).

The service-time MGF integrates a single channel gain h over the whole retry
sum (gain fixed per packet); h follows the unit exponential truncated to
[h_min, inf), h_min = tau*N_c/P_c.

Integrand modes: the literature form of the MGF integral carries the factor
p*eta*e^{-h} with an integral starting at h_min, but the truncated density is
e^{-(h-h_min)} = e^{-h}/p, so the expectation works out to eta * int e^{-h}/D(h) dh
-- one factor p less. Both forms are implemented ('paper-literal' and
'density-consistent'); the Monte Carlo service sampler arbitrates, and
'density-consistent' is the verified default (see README). They coincide as
p -> 1.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq
from scipy.special import comb

from . import fbc
from .errors import AllPowerToSensing, MgfDiverges, TauTooLow
from .params import SystemParams

DEFAULT_INTEGRAND = "density-consistent"

PER_PACKET_GAIN = "per-packet-gain"
PER_ATTEMPT_GAIN = "per-attempt-gain"


@dataclass(frozen=True)
class ServiceModel:
    p_accept: float  # P[channel acceptable per evaluation] = exp(-h_min)
    eta: float  # decode success probability (1-eps)^L
    h_min: float  # channel gain floor tau*N_c/P_c
    varpi: float  # deferral interval, s
    params: SystemParams


def build_service_model(p: SystemParams) -> ServiceModel:
    if p.alpha <= 0.0:
        raise AllPowerToSensing("alpha=0 leaves no communication power")
    h_min = p.tau * p.N_c / p.P_c
    if math.exp(-h_min) == 0.0:
        raise AllPowerToSensing(
            f"communication power alpha*P_t={p.P_c:.3g} W too small: the channel "
            "is never in an acceptable state"
        )
    # gamma(h_min) = P_c*h_min/N_c = tau exactly
    if fbc.fbc_rate(p.tau, p) <= 0.0:
        raise TauTooLow(
            f"rate non-positive at the acceptance floor (tau={p.tau:.6g}); "
            f"need tau > {fbc.min_positive_snr(p):.6g}"
        )
    return ServiceModel(
        p_accept=math.exp(-h_min),
        eta=(1.0 - p.epsilon) ** p.L,
        h_min=h_min,
        varpi=p.varpi,
        params=p,
    )


def gain_to_snr(model: ServiceModel, h):
    return model.params.P_c * np.asarray(h, dtype=float) / model.params.N_c


def attempt_airtime(model: ServiceModel, h):
    """Airtime phi(gamma(h)) for gain h >= h_min, seconds."""
    return fbc.airtime(gain_to_snr(model, h), model.params)


def service_pmf(model: ServiceModel, b: int, c: int, h: float) -> float:
    """P[b failed attempts, c total deferrals]; the service time at gain h is
    then c*varpi + (b+1)*phi(gamma(h))."""
    if b < 0 or c < 0:
        raise ValueError("b and c must be >= 0")
    if h < model.h_min:
        raise ValueError("h below the acceptance floor h_min")
    p, eta = model.p_accept, model.eta
    return float(comb(c + b, c, exact=True)) * (1.0 - p) ** c * p ** (b + 1) * (1.0 - eta) ** b * eta


def _deferral_theta_max(model: ServiceModel) -> float:
    if model.p_accept == 1.0:
        return math.inf
    return -math.log1p(-model.p_accept) / model.varpi


def service_theta_max(model: ServiceModel) -> float:
    """Largest theta satisfying both MGF convergence constraints."""
    p, eta = model.p_accept, model.eta
    phi_min = attempt_airtime(model, model.h_min)  # worst-case (largest) airtime

    def g(theta):
        # e^{theta*phi_min} p(1-eta) + e^{varpi*theta}(1-p) - 1, increasing in theta
        def term(x, coef):
            if coef == 0.0:
                return 0.0
            return 1e300 if x > 700.0 else math.exp(x) * coef  # finite cap keeps brentq happy

        return term(theta * phi_min, p * (1.0 - eta)) + term(model.varpi * theta, 1.0 - p) - 1.0

    if p * (1.0 - eta) == 0.0 and p == 1.0:
        return math.inf
    hi = 1.0
    cap = _deferral_theta_max(model)
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e18:  # pragma: no cover
            return min(cap, math.inf)
    root = brentq(g, 0.0, hi, xtol=1e-300, rtol=1e-13)
    return min(cap, root)


def _check_convergence(theta: float, model: ServiceModel):
    """Returns (A, phi_min) with A = 1 - e^{varpi*theta}(1-p), or raises."""
    p, eta = model.p_accept, model.eta
    defer = math.exp(model.varpi * theta) * (1.0 - p) if model.varpi * theta < 700 else math.inf
    if defer >= 1.0:
        raise MgfDiverges("deferral geometric series", _deferral_theta_max(model))
    A = 1.0 - defer
    phi_min = attempt_airtime(model, model.h_min)
    if theta * phi_min > 700 or math.exp(theta * phi_min) * p * (1.0 - eta) >= A:
        raise MgfDiverges("retransmission series at worst-case gain", service_theta_max(model))
    return A, phi_min


def service_mgf(theta: float, model: ServiceModel, integrand: str = DEFAULT_INTEGRAND,
                tol: float = 1e-9) -> float:
    """MGF of the packet service time, by adaptive quadrature.

    Substituting h = h_min - ln(u) maps the semi-infinite gain integral onto
    u in (0, 1] with a bounded, smooth integrand; no truncation heuristic.
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    if integrand not in ("density-consistent", "paper-literal"):
        raise ValueError(f"unknown integrand mode {integrand!r}")
    p, eta = model.p_accept, model.eta
    A, _ = _check_convergence(theta, model)
    peta = p * (1.0 - eta)
    prm = model.params
    scale = prm.P_c / prm.N_c
    qinv = fbc.q_inv(prm.epsilon)
    w_ln2 = prm.W / math.log(2.0)

    def f(u):
        if u <= 0.0:
            return 1.0 / (A - peta)
        h = model.h_min - math.log(u)
        g = scale * h
        rate = w_ln2 * (math.log1p(g) - math.sqrt((1.0 - (1.0 + g) ** -2) / prm.N) * qinv)
        return 1.0 / (A * math.exp(-theta * prm.L / rate) - peta)

    with warnings.catch_warnings():
        # near the convergence edge QUADPACK reports roundoff; the estimate is
        # still well inside our tolerance-halving stability check
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _err = quad(f, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    out = eta * p * val
    if integrand == "paper-literal":
        out *= p
    return out


def sample_service(model: ServiceModel, rng: np.random.Generator,
                   mode: str = PER_PACKET_GAIN):
    """One service-time draw: (seconds, attempts, deferrals)."""
    s, a, c = sample_service_batch(model, rng, 1, mode)
    return float(s[0]), int(a[0]), int(c[0])


def sample_service_batch(model: ServiceModel, rng: np.random.Generator, n: int,
                         mode: str = PER_PACKET_GAIN):
    """Vectorized service sampling: arrays (service_s, attempts, deferrals).

    attempts = b+1 ~ Geometric(eta); total deferrals c ~ NegBinomial(attempts,
    p_accept) (c_i >= 0 per attempt); gain truncated-exponential on
    [h_min, inf), drawn once per packet or once per attempt.
    """
    attempts = rng.geometric(model.eta, size=n)
    deferrals = rng.negative_binomial(attempts, model.p_accept)
    if mode == PER_PACKET_GAIN:
        h = model.h_min + rng.standard_exponential(n)
        air = attempts * attempt_airtime(model, h)
    elif mode == PER_ATTEMPT_GAIN:
        total = int(attempts.sum())
        h = model.h_min + rng.standard_exponential(total)
        phi = np.asarray(attempt_airtime(model, h))
        starts = np.concatenate(([0], np.cumsum(attempts)[:-1]))
        air = np.add.reduceat(phi, starts)
    else:
        raise ValueError(f"unknown gain mode {mode!r}")
    return deferrals * model.varpi + air, attempts, deferrals
