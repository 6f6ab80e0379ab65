"""SNC upper bound on the peak-AoI violation probability, and its optimization.

The bound for Chernoff parameter theta > 0 is

    e^{-theta*zeta} * M_A(theta) / (M_S(theta)^{-1} - M_A(-theta))

valid under the stability condition M_A(-theta) * M_S(theta) < 1, where M_A is
the inter-arrival MGF and M_S the service-time MGF. theta is free; the
optimizer searches it on a log grid inside the joint convergence interval and
refines with golden-section. The power split alpha is optimized the same way
(grid + golden refinement), with infeasible splits treated as +inf.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import sensing, service
from .errors import AllPowerToComm, AllPowerToSensing, MgfDiverges, NoFeasibleAlpha, TauTooLow
from .params import SystemParams

# Fallback cap when every convergence limit is infinite (degenerate models only).
_THETA_CAP_FALLBACK = 1e7

_THETA_GRID = 64
_ALPHA_GRID = 128
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class BoundResult:
    pavp_bound: float  # raw bound, may exceed 1; +inf when unstable/infeasible
    theta_star: float
    alpha: float
    stable: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def clamped(self) -> float:
        """Bound clamped to 1 for reporting (a probability bound above 1 is vacuous)."""
        return min(self.pavp_bound, 1.0)


def _infeasible(alpha, reason) -> BoundResult:
    return BoundResult(pavp_bound=math.inf, theta_star=math.nan, alpha=alpha,
                       stable=False, diagnostics={"reason": reason})


def _bound_given(theta, p, arr_model, svc_model, integrand):
    m_a_pos = sensing.arrival_mgf(theta, arr_model)
    m_a_neg = sensing.arrival_mgf(-theta, arr_model)
    m_s = service.service_mgf(theta, svc_model, integrand=integrand)
    product = m_a_neg * m_s
    diag = {"arrival_mgf": m_a_pos, "arrival_mgf_neg": m_a_neg,
            "service_mgf": m_s, "stability_product": product}
    if product >= 1.0:
        return BoundResult(math.inf, theta, p.alpha, stable=False, diagnostics=diag)
    value = math.exp(-theta * p.zeta) * m_a_pos / (1.0 / m_s - m_a_neg)
    return BoundResult(value, theta, p.alpha, stable=True, diagnostics=diag)


def pavp_bound(theta: float, p: SystemParams,
               integrand: str = service.DEFAULT_INTEGRAND) -> BoundResult:
    """Evaluate the PAVP bound at a fixed theta > 0."""
    if not theta > 0:
        raise ValueError("theta must be > 0")
    arr = sensing.arrival_model(p)
    svc = service.build_service_model(p)
    return _bound_given(theta, p, arr, svc, integrand)


def theta_cap(p: SystemParams, arr_model=None, svc_model=None) -> float:
    """Tightest convergence limit on theta (arrival and service constraints)."""
    arr_model = arr_model or sensing.arrival_model(p)
    svc_model = svc_model or service.build_service_model(p)
    cap = min(sensing.arrival_theta_max(arr_model), service.service_theta_max(svc_model))
    return cap if math.isfinite(cap) else _THETA_CAP_FALLBACK


def _golden_min(f, lo, hi, xtol):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def optimize_theta(p: SystemParams, alpha: float,
                   integrand: str = service.DEFAULT_INTEGRAND) -> BoundResult:
    """Minimize the bound over theta in the feasible interval, at a fixed alpha.

    Returns an infeasible sentinel (pavp_bound = +inf) when no stable theta
    exists for this power split.
    """
    if not 0.0 < alpha < 1.0:
        return _infeasible(alpha, f"alpha={alpha} outside (0, 1)")
    p = dataclasses.replace(p, alpha=alpha)
    try:
        arr = sensing.arrival_model(p)
        svc = service.build_service_model(p)
    except (TauTooLow, AllPowerToComm, AllPowerToSensing) as exc:
        return _infeasible(alpha, str(exc))
    except ValueError as exc:  # e.g. detection probability underflows to zero
        return _infeasible(alpha, str(exc))

    cap = theta_cap(p, arr, svc)
    grid = np.geomspace(cap * 1e-4, cap * (1.0 - 1e-9), _THETA_GRID)

    def evaluate(theta):
        try:
            return _bound_given(theta, p, arr, svc, integrand)
        except MgfDiverges as exc:
            return _infeasible(alpha, str(exc))

    results = [evaluate(t) for t in grid]
    values = [r.pavp_bound for r in results]
    i = int(np.argmin(values))
    if not math.isfinite(values[i]):
        return _infeasible(alpha, "no stable theta in (0, theta_cap)")

    lo = grid[i - 1] if i > 0 else grid[i] * 0.5
    hi = grid[i + 1] if i + 1 < len(grid) else grid[i]
    t_star, _ = _golden_min(lambda t: evaluate(t).pavp_bound, lo, hi,
                            xtol=1e-6 * grid[i])
    best = evaluate(t_star)
    if best.pavp_bound > values[i]:  # refinement never worsens the grid answer
        best = results[i]
    return best


def optimize_alpha(p: SystemParams,
                   integrand: str = service.DEFAULT_INTEGRAND) -> BoundResult:
    """Minimize the theta-optimized bound over the power split alpha in (0, 1)."""
    grid = np.linspace(0.0, 1.0, _ALPHA_GRID + 2)[1:-1]
    results = [optimize_theta(p, a, integrand=integrand) for a in grid]
    values = [r.pavp_bound for r in results]
    i = int(np.argmin(values))
    if not math.isfinite(values[i]):
        raise NoFeasibleAlpha("every alpha grid point is unstable or infeasible")

    lo = grid[i - 1] if i > 0 else grid[i] * 0.5
    hi = grid[i + 1] if i + 1 < len(grid) else 0.5 * (grid[i] + 1.0)
    a_star, _ = _golden_min(lambda a: optimize_theta(p, a, integrand=integrand).pavp_bound,
                            lo, hi, xtol=1e-4)
    best = optimize_theta(p, a_star, integrand=integrand)
    if best.pavp_bound > values[i]:  # unimodality is observed, not proven: keep grid winner
        best = results[i]
    return best


def alpha_grid_results(p: SystemParams, n: int = _ALPHA_GRID,
                       integrand: str = service.DEFAULT_INTEGRAND):
    """(alpha, BoundResult) pairs on the default alpha grid, for reports."""
    grid = np.linspace(0.0, 1.0, n + 2)[1:-1]
    return [(float(a), optimize_theta(p, float(a), integrand=integrand)) for a in grid]
