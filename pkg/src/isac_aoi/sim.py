"""Discrete-event simulation of the scan/evaluate/transmit pipeline.

Scans fire every T seconds; each successful detection (probability P_s(d))
enqueues a packet. A single FCFS server works each packet through the
deferral/transmission/retransmission loop; the peak AoI of packet n is
T^D(n+1) - T^A(n). The simulator is the ground-truth oracle for the analytic
MGFs and the SNC bound.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from . import sensing, service
from .errors import NonProgress
from .params import SystemParams

_QUEUE_LIMIT = 1_000_000
_Z95 = 1.959963984540054


@dataclass
class PacketTrace:
    """Per-packet timestamps and counters (parallel arrays)."""

    index: np.ndarray
    t_gen: np.ndarray
    t_start: np.ndarray
    attempts: np.ndarray
    deferrals: np.ndarray
    t_depart: np.ndarray

    @property
    def paoi(self) -> np.ndarray:
        """delta_A(n) = T^D(n+1) - T^A(n); one entry per packet except the last."""
        return self.t_depart[1:] - self.t_gen[:-1]


@dataclass
class SimStats:
    pavp_hat: float
    pavp_ci: tuple  # Wilson 95% interval
    n_paoi: int
    paoi_samples: np.ndarray
    sdp_hat: float
    mean_attempts: float
    mean_deferrals: float
    n_packets: int
    seed: object


def wilson_ci(k: int, n: int, z: float = _Z95) -> tuple:
    """Wilson score 95% interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@njit(cache=True)
def _fcfs_recursion(t_gen, svc):
    """Service-start recursion Z(n) = max(T^A(n), Z(n-1) + S(n-1))."""
    n = t_gen.size
    t_start = np.empty(n)
    t_depart = np.empty(n)
    prev_depart = 0.0
    for i in range(n):
        s = t_gen[i] if t_gen[i] > prev_depart else prev_depart
        t_start[i] = s
        prev_depart = s + svc[i]
        t_depart[i] = prev_depart
    return t_start, t_depart


def run_sim(p: SystemParams, n_packets: int, seed,
            gain_mode: str = service.PER_PACKET_GAIN,
            collect_trace: bool = False,
            warmup_frac: float = 0.01,
            service_sampler=None):
    """Simulate n_packets through the system; returns (SimStats, trace or None).

    Deterministic for a fixed seed. `service_sampler(rng, n) -> (svc, attempts,
    deferrals)` overrides the built-in service law (used by tests).
    """
    if n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    rng = np.random.default_rng(seed)

    ps = sensing.sdp(p)
    scans = rng.geometric(ps, size=n_packets).astype(np.int64)
    t_gen = np.cumsum(scans) * p.T

    if service_sampler is None:
        model = service.build_service_model(p)
        svc, attempts, deferrals = service.sample_service_batch(model, rng, n_packets, gain_mode)
    else:
        svc, attempts, deferrals = service_sampler(rng, n_packets)
    svc = np.asarray(svc, dtype=float)

    t_start, t_depart = _fcfs_recursion(t_gen, svc)

    # Backlog estimate: waiting time over mean inter-arrival.
    max_wait = float(np.max(t_start - t_gen))
    if max_wait * ps / p.T > _QUEUE_LIMIT:
        raise NonProgress(
            f"queue length estimate exceeds {_QUEUE_LIMIT}; service cannot keep up"
        )

    paoi = t_depart[1:] - t_gen[:-1]
    warm = min(int(warmup_frac * paoi.size), paoi.size - 1)
    samples = paoi[warm:]
    k = int(np.count_nonzero(samples > p.zeta))
    stats = SimStats(
        pavp_hat=k / samples.size,
        pavp_ci=wilson_ci(k, samples.size),
        n_paoi=samples.size,
        paoi_samples=samples,
        sdp_hat=n_packets / float(scans.sum()),
        mean_attempts=float(np.mean(attempts[warm:])),
        mean_deferrals=float(np.mean(deferrals[warm:])),
        n_packets=n_packets,
        seed=seed,
    )
    trace = None
    if collect_trace:
        trace = PacketTrace(
            index=np.arange(1, n_packets + 1),
            t_gen=t_gen,
            t_start=t_start,
            attempts=np.asarray(attempts),
            deferrals=np.asarray(deferrals),
            t_depart=t_depart,
        )
    return stats, trace


def departure_recursion_check(trace: PacketTrace, tol: float = 1e-9) -> bool:
    """Recompute departures via the FCFS max-plus recursion
    T^D(n) = max_{v<=n} { T^A(v) + sum_{l=v..n} T^S(l) } and compare."""
    svc = trace.t_depart - trace.t_start
    cum = np.cumsum(svc)
    base = trace.t_gen - (cum - svc)  # T^A(v) - sum_{l<v} T^S(l)
    recomputed = cum + np.maximum.accumulate(base)
    return bool(np.max(np.abs(recomputed - trace.t_depart)) < tol)


def dump_trace(trace: PacketTrace, fh) -> None:
    """Delimited trace dump: one row per packet, seconds with 9 decimals."""
    fh.write("n,t_gen,t_start,attempts,deferrals,t_depart,paoi\n")
    paoi = trace.paoi
    for i in range(trace.index.size):
        a = paoi[i] if i < paoi.size else math.nan
        fh.write(
            f"{trace.index[i]},{trace.t_gen[i]:.9f},{trace.t_start[i]:.9f},"
            f"{trace.attempts[i]},{trace.deferrals[i]},{trace.t_depart[i]:.9f},{a:.9f}\n"
        )


def pooled_pavp(stats_list) -> tuple:
    """Pool PAoI samples from replications: (pavp_hat, wilson_ci, n)."""
    n = sum(s.n_paoi for s in stats_list)
    k = sum(round(s.pavp_hat * s.n_paoi) for s in stats_list)
    return k / n, wilson_ci(k, n), n
