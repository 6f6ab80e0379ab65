import dataclasses
import math

import numpy as np
import pytest

from isac_aoi import fbc, params, service
from isac_aoi.errors import AllPowerToSensing, MgfDiverges, TauTooLow


@pytest.fixture(scope="module")
def model(recipe):
    return service.build_service_model(recipe)


class TestBuild:
    def test_decode_probability(self, model):
        # (1 - 1e-3)^100, mpmath oracle
        assert model.eta == pytest.approx(0.90479214711370904, rel=1e-12)

    def test_acceptance_probability_reference(self, defaults):
        p = dataclasses.replace(defaults, tau=10.0)
        m = service.build_service_model(p)
        assert m.h_min == pytest.approx(10 * p.N_c / 5.0, rel=1e-12)  # 1.00238e-5
        assert m.p_accept == pytest.approx(0.99998997630556502, rel=1e-12)

    def test_alpha_zero(self, defaults):
        with pytest.raises(AllPowerToSensing):
            service.build_service_model(dataclasses.replace(defaults, alpha=0.0))

    def test_tau_below_zero_rate(self, defaults):
        bad = dataclasses.replace(defaults, tau=0.5 * fbc.min_positive_snr(defaults))
        with pytest.raises(TauTooLow):
            service.build_service_model(bad)

    def test_zero_threshold_means_always_acceptable(self, defaults):
        # tau -> 0 gives p_accept -> 1 and h_min -> 0, but then the floor rate
        # is non-positive, which build rejects
        with pytest.raises(TauTooLow):
            service.build_service_model(dataclasses.replace(defaults, tau=1e-15))


class TestPmf:
    def test_immediate_success(self, model):
        assert service.service_pmf(model, 0, 0, model.h_min) == pytest.approx(
            model.p_accept * model.eta, rel=1e-12)

    def test_normalization(self, recipe):
        m = dataclasses.replace(service.build_service_model(recipe),
                                p_accept=0.9, eta=0.9)
        total = sum(service.service_pmf(m, b, c, m.h_min)
                    for b in range(201) for c in range(201))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_no_deferrals_when_always_acceptable(self, recipe):
        m = dataclasses.replace(service.build_service_model(recipe), p_accept=1.0)
        assert service.service_pmf(m, 2, 0, m.h_min) > 0
        assert service.service_pmf(m, 2, 3, m.h_min) == 0.0

    def test_marginal_over_deferrals_is_geometric(self, recipe):
        # summing out c at fixed b leaves the decode-failure geometric law
        m = dataclasses.replace(service.build_service_model(recipe),
                                p_accept=0.7, eta=0.8)
        for b in (0, 1, 4):
            marg = sum(service.service_pmf(m, b, c, m.h_min) for c in range(4000))
            assert marg == pytest.approx((1 - m.eta) ** b * m.eta, abs=1e-12)


class TestMgf:
    def test_normalization_at_zero(self, model):
        assert service.service_mgf(0.0, model) == pytest.approx(1.0, abs=1e-8)

    def test_paper_literal_breaks_normalization_when_p_below_one(self, recipe):
        # the surplus acceptance-probability factor shows up directly at theta=0
        p = params.load_params("tau = 8e5", environ={})  # p_accept ~ 0.45
        m = service.build_service_model(p)
        lit = service.service_mgf(0.0, m, integrand="paper-literal")
        assert lit == pytest.approx(m.p_accept, rel=1e-6)

    def test_deterministic_single_attempt_limit(self):
        # huge tau puts nearly all gain mass where the airtime is ~constant;
        # with p=1, eta=1 the service time degenerates to one attempt
        p = params.load_params("tau = 5e8", environ={})
        m = dataclasses.replace(service.build_service_model(p),
                                p_accept=1.0, eta=1.0)
        theta = 1000.0
        phi_min = service.attempt_airtime(m, m.h_min)
        assert service.service_mgf(theta, m) == pytest.approx(
            math.exp(theta * phi_min), rel=1e-3)

    def test_monte_carlo_oracle(self, model):
        rng = np.random.default_rng(77)
        theta = 300.0
        s, _, _ = service.sample_service_batch(model, rng, 500_000)
        hat = float(np.mean(np.exp(theta * s)))
        assert hat == pytest.approx(service.service_mgf(theta, model), rel=1e-2)

    def test_increasing_in_theta(self, model):
        cap = service.service_theta_max(model)
        grid = np.linspace(0.0, 0.9 * cap, 12)
        vals = [service.service_mgf(t, model) for t in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_decreasing_in_reliability(self, model):
        theta = 300.0
        base = service.service_mgf(theta, model)
        better_eta = dataclasses.replace(model, eta=min(1.0, model.eta * 1.05))
        worse_p = dataclasses.replace(model, p_accept=model.p_accept * 0.9)
        assert service.service_mgf(theta, better_eta) < base
        assert service.service_mgf(theta, worse_p) > base

    def test_stable_under_tolerance_halving(self, model):
        a = service.service_mgf(300.0, model, tol=1e-9)
        b = service.service_mgf(300.0, model, tol=5e-10)
        assert abs(a - b) / a < 1e-7

    def test_divergence_names_constraint(self, model):
        cap = service.service_theta_max(model)
        with pytest.raises(MgfDiverges) as exc:
            service.service_mgf(cap * 1.01, model)
        assert exc.value.critical_theta == pytest.approx(cap, rel=1e-9)

    def test_deferral_constraint_diverges_first_when_p_small(self, recipe):
        p = params.load_params("tau = 8e5", environ={})
        m = service.build_service_model(p)
        dmax = -math.log1p(-m.p_accept) / m.varpi
        with pytest.raises(MgfDiverges) as exc:
            service.service_mgf(dmax * 1.05, m)
        assert "deferral" in exc.value.constraint or exc.value.critical_theta <= dmax

    def test_negative_theta_rejected(self, model):
        with pytest.raises(ValueError):
            service.service_mgf(-1.0, model)


class TestSampler:
    def test_single_attempt_when_reliable(self, recipe):
        m = dataclasses.replace(service.build_service_model(recipe),
                                p_accept=1.0, eta=1.0)
        rng = np.random.default_rng(0)
        t, attempts, deferrals = service.sample_service(m, rng)
        assert attempts == 1 and deferrals == 0 and t > 0

    def test_immediate_success_frequency(self, model):
        rng = np.random.default_rng(3)
        _, attempts, deferrals = service.sample_service_batch(model, rng, 1_000_000)
        hat = np.mean((attempts == 1) & (deferrals == 0))
        target = model.p_accept * model.eta
        se = math.sqrt(target * (1 - target) / attempts.size)
        assert abs(hat - target) < 3 * se

    def test_per_attempt_mode_redraws_gain(self, model):
        rng = np.random.default_rng(9)
        s, a, c = service.sample_service_batch(model, rng, 100_000,
                                               mode=service.PER_ATTEMPT_GAIN)
        assert s.shape == a.shape == c.shape
        assert np.all(s > 0)

    def test_unknown_mode(self, model):
        with pytest.raises(ValueError):
            service.sample_service_batch(model, np.random.default_rng(0), 10, mode="nope")
