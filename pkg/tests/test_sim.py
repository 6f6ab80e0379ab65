import dataclasses
import io
import math

import numpy as np
import pytest

from isac_aoi import sensing, service, sim
from isac_aoi.errors import NonProgress


def constant_service(value):
    def sampler(rng, n):
        return np.full(n, value), np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
    return sampler


class TestDeterministicPipeline:
    def test_dd1_exact_peak_age(self, defaults):
        # certain detection (threshold 0) + constant service shorter than the
        # scan period: no queueing, every peak age is exactly T + phi
        p = dataclasses.replace(defaults, d=0.0)
        phi = 0.4 * p.T
        stats, trace = sim.run_sim(p, 500, seed=1, collect_trace=True,
                                   service_sampler=constant_service(phi))
        assert np.allclose(trace.t_gen, p.T * np.arange(1, 501))
        assert np.allclose(trace.t_start, trace.t_gen)
        assert np.allclose(trace.paoi, p.T + phi, atol=1e-12)
        assert stats.pavp_hat == 0.0  # zeta = 6e-3 > T + phi
        assert stats.sdp_hat == 1.0

    def test_dd1_queue_builds_when_service_exceeds_period(self, defaults):
        p = dataclasses.replace(defaults, d=0.0)
        phi = 1.5 * p.T
        _, trace = sim.run_sim(p, 200, seed=1, collect_trace=True,
                               service_sampler=constant_service(phi))
        # server is the bottleneck: departures stride by phi, waits grow linearly
        assert np.allclose(np.diff(trace.t_depart), phi, atol=1e-12)
        waits = trace.t_start - trace.t_gen
        assert np.all(np.diff(waits) > 0)


class TestDeterminism:
    def test_same_seed_bitwise_identical(self, recipe):
        a, ta = sim.run_sim(recipe, 20_000, seed=42, collect_trace=True)
        b, tb = sim.run_sim(recipe, 20_000, seed=42, collect_trace=True)
        assert np.array_equal(ta.t_depart, tb.t_depart)
        assert np.array_equal(ta.attempts, tb.attempts)
        assert a.pavp_hat == b.pavp_hat

    def test_different_seed_differs(self, recipe):
        _, ta = sim.run_sim(recipe, 5_000, seed=1, collect_trace=True)
        _, tb = sim.run_sim(recipe, 5_000, seed=2, collect_trace=True)
        assert not np.array_equal(ta.t_depart, tb.t_depart)


class TestRecursionCheck:
    @pytest.mark.parametrize("mode", [service.PER_PACKET_GAIN, service.PER_ATTEMPT_GAIN])
    def test_departures_satisfy_max_plus_form(self, recipe, mode):
        _, trace = sim.run_sim(recipe, 1000, seed=7, gain_mode=mode, collect_trace=True)
        assert sim.departure_recursion_check(trace, tol=1e-9)

    def test_detects_corruption(self, recipe):
        _, trace = sim.run_sim(recipe, 1000, seed=7, collect_trace=True)
        trace.t_depart[500] += 1e-6
        assert not sim.departure_recursion_check(trace, tol=1e-9)


class TestAgainstAnalytics:
    def test_detection_rate(self, recipe):
        stats, _ = sim.run_sim(recipe, 200_000, seed=11)
        target = sensing.sdp(recipe)
        se = math.sqrt(target * (1 - target) / (200_000 / target))
        assert abs(stats.sdp_hat - target) < 3 * se

    def test_mean_attempts(self, recipe):
        stats, _ = sim.run_sim(recipe, 200_000, seed=12)
        model = service.build_service_model(recipe)
        assert stats.mean_attempts == pytest.approx(1.0 / model.eta, rel=5e-3)
        assert stats.mean_deferrals == pytest.approx(
            (1.0 / model.p_accept - 1.0) / model.eta, rel=2e-2)

    def test_pavp_within_own_ci(self, recipe):
        stats, _ = sim.run_sim(recipe, 100_000, seed=13)
        lo, hi = stats.pavp_ci
        assert lo <= stats.pavp_hat <= hi

    def test_trace_and_stats_agree_on_paoi(self, recipe):
        stats, trace = sim.run_sim(recipe, 10_000, seed=14, collect_trace=True)
        warm = trace.paoi.size - stats.n_paoi
        assert np.array_equal(stats.paoi_samples, trace.paoi[warm:])


class TestGuards:
    def test_nonprogress(self, defaults):
        p = dataclasses.replace(defaults, d=0.0)
        with pytest.raises(NonProgress):
            sim.run_sim(p, 10, seed=0, service_sampler=constant_service(1e3))

    def test_bad_packet_count(self, recipe):
        with pytest.raises(ValueError):
            sim.run_sim(recipe, 0, seed=0)


class TestWilson:
    def test_degenerate(self):
        assert sim.wilson_ci(0, 0) == (0.0, 1.0)

    def test_contains_point_estimate(self):
        lo, hi = sim.wilson_ci(30, 1000)
        assert lo < 0.03 < hi
        assert 0.0 <= lo and hi <= 1.0

    def test_shrinks_with_n(self):
        lo1, hi1 = sim.wilson_ci(30, 1000)
        lo2, hi2 = sim.wilson_ci(300, 10_000)
        assert hi2 - lo2 < hi1 - lo1


class TestTraceDump:
    def test_format(self, recipe):
        _, trace = sim.run_sim(recipe, 50, seed=3, collect_trace=True)
        buf = io.StringIO()
        sim.dump_trace(trace, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "n,t_gen,t_start,attempts,deferrals,t_depart,paoi"
        assert len(lines) == 51
        assert lines[-1].endswith("nan")  # last packet has no successor
        first = lines[1].split(",")
        assert first[0] == "1" and len(first) == 7


class TestPooling:
    def test_pooled_counts(self, recipe):
        runs = [sim.run_sim(recipe, 20_000, seed=s)[0] for s in (1, 2, 3)]
        hat, (lo, hi), n = sim.pooled_pavp(runs)
        assert n == sum(r.n_paoi for r in runs)
        assert lo <= hat <= hi
        total_k = sum(round(r.pavp_hat * r.n_paoi) for r in runs)
        assert hat == total_k / n
