import numpy as np
import pytest
from hypothesis import given, strategies as st

from asis_panel.model import (DomainError, ModelSpec, PanelDataset, VarianceMode,
                              compute_precisions, generate_synthetic, posterior_oracle_mu)

pos = st.floats(min_value=1e-4, max_value=1e4, allow_nan=False)


class TestPanelDataset:
    def test_cached_sums(self):
        y = np.arange(12.0).reshape(3, 4)
        d = PanelDataset(y)
        assert d.n_individuals == 3 and d.n_periods == 4
        np.testing.assert_allclose(d.individual_sums, y.sum(axis=1), rtol=1e-12)
        assert d.grand_mean == pytest.approx(y.mean(), rel=1e-12)

    def test_immutable(self):
        d = PanelDataset(np.ones((2, 2)))
        with pytest.raises(ValueError):
            d.y[0, 0] = 5.0

    def test_input_copied(self):
        y = np.ones((2, 3))
        d = PanelDataset(y)
        y[0, 0] = 99.0
        assert d.y[0, 0] == 1.0

    @pytest.mark.parametrize("bad", [np.array([[1.0, np.nan]]), np.array([[np.inf]]), np.ones(3), np.ones((0, 2))])
    def test_rejects_bad_y(self, bad):
        with pytest.raises(DomainError):
            PanelDataset(bad)

    def test_covariate_shape(self):
        with pytest.raises(DomainError):
            PanelDataset(np.ones((2, 3)), covariates=np.ones((2, 3)))
        with pytest.raises(DomainError):
            PanelDataset(np.ones((2, 3)), covariates=np.full((2, 3, 1), np.nan))
        d = PanelDataset(np.ones((2, 3)), covariates=np.zeros((2, 3, 2)))
        assert d.n_covariates == 2


class TestModelSpec:
    @pytest.mark.parametrize("field", ["sigma_eps_sq", "sigma_alpha_sq", "tau_alpha_sq"])
    @pytest.mark.parametrize("value", [0.0, -1.0, np.inf])
    def test_rejects_nonpositive(self, field, value):
        kw = dict(sigma_eps_sq=1.0, sigma_alpha_sq=1.0, tau_alpha_sq=1.0)
        kw[field] = value
        with pytest.raises(DomainError):
            ModelSpec(**kw)

    def test_hyperpriors_iff_sampled(self):
        with pytest.raises(DomainError):
            ModelSpec(1.0, 1.0, variance_mode=VarianceMode.SAMPLED)
        with pytest.raises(DomainError):
            ModelSpec(1.0, 1.0, variance_hyperpriors=((2, 1), (2, 1)))
        s = ModelSpec(1.0, 1.0, variance_mode="sampled", variance_hyperpriors=((2, 1), (2, 1)))
        assert s.variance_mode is VarianceMode.SAMPLED


class TestPrecisions:
    def test_unit_case(self):
        p = compute_precisions(ModelSpec(1.0, 1.0, tau_alpha_sq=100.0), 10, 10)
        assert p.lambda_alpha == pytest.approx(11.0, abs=1e-12)
        assert p.lambda_mu_sa == pytest.approx(10.01, abs=1e-12)
        assert p.lambda_mu_aa == pytest.approx(100.01, abs=1e-12)

    def test_noisy_case(self):
        p = compute_precisions(ModelSpec(10.0, 1.0, tau_alpha_sq=100.0), 10, 10)
        assert p.lambda_alpha == pytest.approx(2.0, abs=1e-12)

    def test_large_panel(self):
        p = compute_precisions(ModelSpec(100.0, 1.0, tau_alpha_sq=100.0), 500, 100)
        assert p.lambda_mu_aa == pytest.approx(500.01, abs=1e-9)

    def test_rejects_bad_sizes(self):
        with pytest.raises(DomainError):
            compute_precisions(ModelSpec(1.0, 1.0), 0, 3)

    @given(pos, pos, pos, st.integers(1, 1000), st.integers(1, 1000))
    def test_identity_and_positivity(self, se, sa, tau, N, T):
        spec = ModelSpec(se, sa, tau_alpha_sq=tau)
        p = compute_precisions(spec, N, T)
        assert p.lambda_alpha == 1 / se * T + 1 / sa
        assert abs((1 / se) * T / p.lambda_alpha + (1 / sa) / p.lambda_alpha - 1) <= 1e-14
        assert p.lambda_mu_sa > 1 / tau and p.lambda_mu_aa > 1 / tau


class TestGenerateSynthetic:
    def test_deterministic(self):
        spec = ModelSpec(1.0, 1.0)
        a = generate_synthetic(spec, 0.3, 7, 5, 123)
        b = generate_synthetic(spec, 0.3, 7, 5, 123)
        assert np.array_equal(a.y, b.y)
        assert not np.array_equal(a.y, generate_synthetic(spec, 0.3, 7, 5, 124).y)

    def test_degenerate_noise_rows_constant(self):
        d = generate_synthetic(ModelSpec(1e-12, 1.0), 0.0, 20, 8, 1)
        assert np.all(np.ptp(d.y, axis=1) < 1e-5)

    def test_grand_mean_variance(self):
        # brute force: regenerate many times and compare to (sa + se/T)/N
        spec = ModelSpec(1.0, 1.0)
        N, T = 500, 100
        sd = np.sqrt((1.0 + 1.0 / T) / N)
        d = generate_synthetic(spec, 0.0, N, T, 2024)
        assert abs(d.grand_mean) < 4 * sd
        means = np.array([generate_synthetic(spec, 0.0, N, T, s).grand_mean for s in range(1000)])
        assert means.var() == pytest.approx(sd ** 2, rel=0.15)


def _importance_oracle(data, spec, n, seed):
    # mu ~ prior, alpha_i ~ N(mu, sa); weight by the likelihood of y
    rng = np.random.default_rng(seed)
    N, T = data.y.shape
    mu = spec.phi_alpha + np.sqrt(spec.tau_alpha_sq) * rng.standard_normal(n)
    alpha = mu[:, None] + np.sqrt(spec.sigma_alpha_sq) * rng.standard_normal((n, N))
    resid = data.y[None, :, :] - alpha[:, :, None]
    logw = -0.5 * np.sum(resid ** 2, axis=(1, 2)) / spec.sigma_eps_sq
    w = np.exp(logw - logw.max())
    w /= w.sum()
    m = np.sum(w * mu)
    v = np.sum(w * (mu - m) ** 2)
    n_eff = 1.0 / np.sum(w ** 2)
    return m, v, n_eff


class TestPosteriorOracle:
    def test_single_observation_flat_prior(self):
        d = PanelDataset(np.array([[1.7]]))
        mean, var = posterior_oracle_mu(d, ModelSpec(1.0, 1.0, 0.0, 1e12))
        assert mean == pytest.approx(1.7, rel=1e-6)
        assert var == pytest.approx(2.0, rel=1e-6)

    def test_dogmatic_prior(self):
        d = PanelDataset(np.random.default_rng(0).normal(size=(5, 4)))
        mean, var = posterior_oracle_mu(d, ModelSpec(1.0, 1.0, 0.7, 1e-12))
        assert mean == pytest.approx(0.7, rel=1e-6)
        assert var == pytest.approx(1e-12, rel=1e-6)

    def test_matches_importance_sampling(self):
        spec = ModelSpec(1.0, 0.5, phi_alpha=0.3, tau_alpha_sq=2.0)
        d = generate_synthetic(spec, 1.0, 3, 2, 11)
        mean, var = posterior_oracle_mu(d, spec)
        m, v, n_eff = _importance_oracle(d, spec, 10 ** 6, 5)
        assert abs(m - mean) < 3 * np.sqrt(var / n_eff)
        # sd of a sample variance of normals is about var * sqrt(2 / n)
        assert abs(v - var) < 3 * var * np.sqrt(2 / n_eff)

    def test_rejects_sampled_mode(self):
        spec = ModelSpec(1.0, 1.0, variance_mode="sampled", variance_hyperpriors=((2, 1), (2, 1)))
        with pytest.raises(DomainError):
            posterior_oracle_mu(PanelDataset(np.ones((2, 2))), spec)

    @given(pos, pos, pos, st.integers(1, 50), st.integers(1, 50))
    def test_variance_below_prior(self, se, sa, tau, N, T):
        d = PanelDataset(np.zeros((N, T)))
        _, var = posterior_oracle_mu(d, ModelSpec(se, sa, tau_alpha_sq=tau))
        assert var < tau
