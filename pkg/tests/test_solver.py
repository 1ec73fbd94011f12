import numpy as np
import pytest

from mrisk import (Dataset, FitOptions, RankDeficientDesign, fit, fit_ridge,
                   scaled_loss)


def make_data(rng, n, p, noise="gauss", beta_scale=1.0):
    X = rng.standard_normal((n, p))
    beta = beta_scale * rng.standard_normal(p)
    if noise == "gauss":
        eps = rng.standard_normal(n)
    elif noise == "t2":
        eps = rng.standard_t(2, size=n)
    elif noise == "none":
        eps = np.zeros(n)
    else:
        raise ValueError(noise)
    return Dataset(X, X @ beta + eps, beta_star=beta)


def objective(data, loss, beta, mu=0.0):
    val = float(np.sum(loss.rho(data.y - data.X @ beta)))
    if mu > 0:
        val += 0.5 * data.n * mu * float(beta @ beta)
    return val


class TestDatasetValidation:
    def test_underparametrized_only(self, rng):
        X = rng.standard_normal((5, 5))
        with pytest.raises(ValueError, match="n > p"):
            Dataset(X, np.zeros(5))

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError, match="y length"):
            Dataset(rng.standard_normal((6, 2)), np.zeros(5))

    def test_bad_sigma_shape(self, rng):
        with pytest.raises(ValueError, match="sigma"):
            Dataset(rng.standard_normal((6, 2)), np.zeros(6),
                    sigma=np.eye(3))


class TestFit:
    def test_exact_recovery_noiseless(self, rng):
        data = make_data(rng, 60, 4, noise="none")
        for lam in (0.5, 3.0):
            res = fit(data, scaled_loss("huber", lam))
            assert res.converged
            np.testing.assert_allclose(res.beta_hat, data.beta_star, atol=1e-8)
            assert np.max(np.abs(res.residuals)) < 1e-7
            assert res.kkt_residual <= 1e-8

    def test_huge_lambda_matches_ols(self, rng):
        # all residuals stay in the quadratic region, so the fit is OLS
        data = make_data(rng, 50, 2)
        ols = np.linalg.solve(data.X.T @ data.X, data.X.T @ data.y)
        res = fit(data, scaled_loss("huber", 1e6))
        assert res.converged
        np.testing.assert_allclose(res.beta_hat, ols, atol=1e-6)

    def test_heavy_noise_kkt_and_objective(self, rng):
        data = make_data(rng, 200, 50, noise="t2")
        loss = scaled_loss("huber", 1.0)
        res = fit(data, loss)
        assert res.converged
        assert res.kkt_residual <= 1e-8
        assert objective(data, loss, res.beta_hat) < objective(
            data, loss, np.zeros(data.p)
        )

    def test_pseudo_huber_converges(self, rng):
        data = make_data(rng, 150, 30, noise="t2")
        res = fit(data, scaled_loss("pseudo_huber", 1.5))
        assert res.converged
        assert res.kkt_residual <= 1e-8

    def test_objective_monotone(self, rng):
        data = make_data(rng, 200, 40, noise="t2")
        res = fit(data, scaled_loss("huber", 1.0))
        path = res.objective_path
        slack = 1e-9 * (1 + abs(path[0]))
        assert np.all(np.diff(path) <= slack)

    def test_psi_vals_consistent(self, rng):
        data = make_data(rng, 100, 10, noise="t2")
        loss = scaled_loss("huber", 2.0)
        res = fit(data, loss)
        np.testing.assert_array_equal(res.psi_vals, loss.psi(res.residuals))

    def test_permutation_equivariance(self, rng):
        data = make_data(rng, 120, 15, noise="t2")
        loss = scaled_loss("huber", 1.0)
        res = fit(data, loss)
        perm = rng.permutation(data.n)
        permuted = Dataset(data.X[perm], data.y[perm])
        res_p = fit(permuted, loss)
        np.testing.assert_allclose(res_p.beta_hat, res.beta_hat, atol=1e-10)

    def test_rank_deficient_raises(self, rng):
        X = rng.standard_normal((40, 3))
        X[:, 2] = X[:, 0] + X[:, 1]
        with pytest.raises(RankDeficientDesign):
            fit(Dataset(X, rng.standard_normal(40)), scaled_loss("huber", 1.0))

    def test_max_iter_exhaustion_flagged(self, rng):
        data = make_data(rng, 200, 50, noise="t2")
        res = fit(data, scaled_loss("huber", 1.0), FitOptions(max_iter=1))
        assert not res.converged
        assert res.iterations == 1

    def test_warm_start_keeps_solution(self, rng):
        data = make_data(rng, 100, 20, noise="t2")
        loss = scaled_loss("huber", 1.0)
        res = fit(data, loss)
        res2 = fit(data, loss, beta0=res.beta_hat)
        assert res2.iterations == 0
        np.testing.assert_array_equal(res2.beta_hat, res.beta_hat)

    def test_invalid_options(self):
        with pytest.raises(ValueError):
            FitOptions(kkt_tol=0.0)
        with pytest.raises(ValueError):
            FitOptions(max_iter=0)


class TestFitRidge:
    def test_invalid_mu(self, rng):
        data = make_data(rng, 30, 3)
        with pytest.raises(ValueError):
            fit_ridge(data, scaled_loss("huber", 1.0), mu=0.0)
        with pytest.raises(ValueError):
            fit_ridge(data, scaled_loss("huber", 1.0), mu=-1.0)

    def test_huge_mu_shrinks_to_zero(self, rng):
        data = make_data(rng, 60, 5)
        res = fit_ridge(data, scaled_loss("huber", 1.0), mu=1e8)
        assert np.linalg.norm(res.beta_hat) <= 1e-4

    def test_ridge_kkt_identity(self, rng):
        data = make_data(rng, 150, 30, noise="t2")
        loss = scaled_loss("huber", 1.5)
        mu = data.n ** -0.25
        res = fit_ridge(data, loss, mu=mu)
        assert res.converged
        kkt = np.linalg.norm(
            data.X.T @ loss.psi(data.y - data.X @ res.beta_hat)
            - data.n * mu * res.beta_hat
        ) / data.n
        assert kkt <= 1e-8

    def test_shrinkage_inequality(self, rng):
        # ||b_mu - b||^2 <= ||b||^2 - ||b_mu||^2 for the ridge-perturbed fit
        data = make_data(rng, 200, 60, noise="t2", beta_scale=0.0)
        loss = scaled_loss("huber", 1.0)
        plain = fit(data, loss)
        ridge = fit_ridge(data, loss, mu=data.n ** -0.25)
        lhs = float(np.sum((ridge.beta_hat - plain.beta_hat) ** 2))
        rhs = float(plain.beta_hat @ plain.beta_hat) - float(
            ridge.beta_hat @ ridge.beta_hat
        )
        assert lhs <= rhs + 1e-6

    def test_noiseless_ridge_keeps_kkt(self, rng):
        data = make_data(rng, 60, 5, noise="none")
        loss = scaled_loss("huber", 1.0)
        for mu in (1e-3, 0.1):
            res = fit_ridge(data, loss, mu=mu)
            assert res.converged
            kkt = np.linalg.norm(
                data.X.T @ loss.psi(data.y - data.X @ res.beta_hat)
                - data.n * mu * res.beta_hat
            ) / data.n
            assert kkt <= 1e-8
            # the penalty shrinks toward 0, away from the interpolating point
            assert np.linalg.norm(res.beta_hat) <= np.linalg.norm(data.beta_star)

    def test_smoothing_converges_with_n(self):
        # mu = n^{-1/4}: the ridge fit approaches the plain fit as n grows,
        # and the psi gap obeys (1/n)||psi_mu - psi||^2 <= mu ||b_mu|| ||b - b_mu||
        gaps = []
        for n in (400, 1600):
            rng = np.random.default_rng(99)
            p = int(0.3 * n)
            X = rng.standard_normal((n, p))
            y = rng.standard_t(2, size=n)
            data = Dataset(X, y, beta_star=np.zeros(p))
            loss = scaled_loss("huber", 2.0)
            mu = n ** -0.25
            plain = fit(data, loss)
            ridge = fit_ridge(data, loss, mu=mu, beta0=plain.beta_hat)
            gap = np.linalg.norm(ridge.beta_hat - plain.beta_hat)
            gaps.append(gap)
            psi_gap = float(np.sum((ridge.psi_vals - plain.psi_vals) ** 2)) / n
            bound = mu * np.linalg.norm(ridge.beta_hat) * gap
            assert psi_gap <= bound + 1e-8
        assert gaps[1] < gaps[0]
