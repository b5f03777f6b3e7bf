import math

import numpy as np
import pytest

from wienerchaos.sampler import empirical_moment, hermite_eval
from wienerchaos.timeseries import (
    InvalidModelError,
    breuer_major_constant,
    finite_n_variance,
    gaussian_path,
    geometric,
    hermite_partial_sum,
    joint_experiment,
    regvar,
    rosenblatt_cumulants,
    simulate_partial_sums,
    summable,
    taqqu_normalizer,
    white_noise,
)


def lag_cov(path, k):
    x = path - path.mean()
    return float(np.mean(x[:-k] * x[k:]))


def exact_cov_oracle(model, n, reps, seed):
    """Sample covariance matrix of many paths."""
    paths = np.stack([gaussian_path(model, n, seed, r) for r in range(reps)])
    return paths.T @ paths / reps


def slow_tail(K, q):
    return 2.0 ** (-q * K) / (1 - 2.0**-q)


def half_powers(k):
    return 0.5**k


class TestModels:
    def test_r0_is_one(self):
        for m in (white_noise(), geometric(0.3), regvar(0.4)):
            assert m(0)[()] == 1.0

    def test_regvar_default(self):
        assert regvar(0.3)(np.array([3.0]))[0] == pytest.approx(4**-0.3)

    def test_user_slow_factor(self):
        m = regvar(0.2, L=np.log1p)
        assert m(np.array([5.0]))[0] == pytest.approx(5**-0.2 * math.log(6))


class TestPaths:
    def test_white(self):
        n = 4096
        p = gaussian_path(white_noise(), n, 1)
        assert abs(lag_cov(p, 1)) < 4 / math.sqrt(n)

    def test_ar1(self):
        n = 4096
        covs = [lag_cov(gaussian_path(geometric(0.5), n, 2, r), 1) for r in range(40)]
        est = np.mean(covs)
        se = np.std(covs, ddof=1) / math.sqrt(len(covs))
        assert abs(est - 0.5) < 4 * se + 2 / n

    def test_regvar_variance(self):
        x = np.concatenate([gaussian_path(regvar(0.3), 4096, 3, r)[::512] for r in range(400)])
        assert empirical_moment(x[:, None], [2]).within(1.0)

    def test_covariance_matches_model(self):
        m = geometric(-0.4)
        c = exact_cov_oracle(m, 6, 20000, 4)
        target = m(np.subtract.outer(np.arange(6), np.arange(6)))
        assert np.max(np.abs(c - target)) < 0.05

    def test_invalid_model(self):
        bad = summable(lambda k: np.where(k == 1, 0.9, np.where(k == 2, -0.9, 0.0)), slow_tail)
        with pytest.raises(InvalidModelError):
            gaussian_path(bad, 8, 1)

    def test_cholesky_fallback(self):
        # k^{-D} with r(1) = 1 is degenerate: the embedding fails and so does Cholesky
        flat = regvar(0.3, L=np.ones_like)
        with pytest.raises(InvalidModelError):
            gaussian_path(flat, 64, 1)

    def test_reproducible(self):
        a = gaussian_path(regvar(0.3), 1000, 5, 3)
        b = gaussian_path(regvar(0.3), 1000, 5, 3)
        np.testing.assert_array_equal(a, b)


class TestPartialSums:
    def test_q1_random_walk(self, rng):
        p = rng.standard_normal(20)
        s = hermite_partial_sum(p, 1, (0.0, 0.5, 1.0))
        np.testing.assert_allclose(s.values, [0, p[:10].sum(), p.sum()])

    def test_constant_path(self):
        s = hermite_partial_sum(np.full(8, 3.0), 2, (0.25, 0.5, 1.0))
        np.testing.assert_allclose(s.values, [16, 32, 64])

    def test_double_loop_oracle(self, rng):
        p = rng.standard_normal(100)
        grid = (0.25, 0.5, 0.75, 1.0)
        s = hermite_partial_sum(p, 3, grid)
        for t, v in zip(grid, s.values):
            naive = 0.0
            for k in range(int(100 * t)):
                naive += hermite_eval(3, p[k])
            assert v == pytest.approx(naive, rel=1e-12)

    def test_mc_variance(self):
        m = geometric(0.5)
        for q in (2, 3):
            s = simulate_partial_sums(m, 256, (q,), 2000, 8, grid=(1.0,))[:, 0, 0]
            assert empirical_moment(s[:, None], [2]).within(finite_n_variance(m, q, 256))

    def test_increment_independence(self):
        s = simulate_partial_sums(geometric(0.5), 1024, (2,), 2000, 9, grid=(0.5, 1.0))[:, 0]
        a, b = s[:, 0], s[:, 1] - s[:, 0]
        prod = (a / a.std()) * (b / b.std())
        assert abs(prod.mean()) < 4 * prod.std(ddof=1) / math.sqrt(len(prod))

    def test_workers_identical(self):
        a = simulate_partial_sums(geometric(0.5), 128, (2, 3), 40, 1, workers=1)
        b = simulate_partial_sums(geometric(0.5), 128, (2, 3), 40, 1, workers=3)
        assert a.tobytes() == b.tobytes()


class TestConstants:
    def test_geometric_closed_form(self):
        m = geometric(0.5)
        assert breuer_major_constant(m, 2) ** 2 == pytest.approx(10 / 3, rel=1e-14)
        for q in (2, 3):
            assert breuer_major_constant(m, q, "series") ** 2 == pytest.approx(
                breuer_major_constant(m, q, "closed") ** 2, abs=1e-10
            )
        assert breuer_major_constant(m, 3) ** 2 == pytest.approx(6 * 9 / 7)

    def test_white(self):
        assert breuer_major_constant(white_noise(), 4) ** 2 == pytest.approx(24)

    def test_user_summable(self):
        m = summable(half_powers, slow_tail)
        assert breuer_major_constant(m, 2) ** 2 == pytest.approx(10 / 3, abs=1e-9)

    def test_regvar_zeta(self):
        m = regvar(0.8)
        k = np.arange(1, 2_000_001)
        partial = 1 + 2 * np.sum((1.0 + k) ** -1.6)
        tail = 2 * (2_000_001.5) ** -0.6 / 0.6
        assert breuer_major_constant(m, 2) ** 2 == pytest.approx(2 * (partial + tail), rel=1e-6)

    def test_divergent(self):
        with pytest.raises(ValueError):
            breuer_major_constant(regvar(0.3), 2)

    def test_finite_n_variance(self):
        assert finite_n_variance(white_noise(), 3, 50) == 300
        assert finite_n_variance(geometric(0.5), 2, 2) == pytest.approx(5.0)

    def test_breuer_major_limit(self):
        m = geometric(0.5)
        for q in (2, 3):
            a2 = breuer_major_constant(m, q) ** 2
            assert finite_n_variance(m, q, 2**15) / 2**15 == pytest.approx(a2, rel=0.05)

    def test_taqqu(self):
        norm, b = taqqu_normalizer(regvar(0.3), 1024)
        assert b == pytest.approx(0.28**-0.5)
        assert norm == pytest.approx(1024**0.7 * (1024 / 1025) ** 0.3)
        norm1, _ = taqqu_normalizer(regvar(0.3, L=np.ones_like), 1024)
        assert norm1 == pytest.approx(1024**0.7)
        with pytest.raises(ValueError):
            taqqu_normalizer(regvar(0.5), 10)

    def test_taqqu_variance_limit_is_twice_bd_squared(self):
        m = regvar(0.3)
        _, b = taqqu_normalizer(m, 1)
        ratios = [finite_n_variance(m, 2, n) / n**1.4 for n in (2**12, 2**16, 2**20)]
        assert ratios[0] < ratios[1] < ratios[2] < 2 * b**2
        assert ratios[2] == pytest.approx(2 * b**2, rel=0.02)


class TestRosenblatt:
    def test_values(self):
        r = rosenblatt_cumulants(0.7)
        assert r.kappa2 == 1.0
        assert r.kappa3 == pytest.approx(2.067, abs=1e-3)
        assert r.kappa4 == pytest.approx(7.632, abs=1e-3)

    @pytest.mark.parametrize("H", [0.55, 0.7, 0.85, 0.95])
    def test_positive(self, H):
        r = rosenblatt_cumulants(H)
        assert r.kappa3 > 0 and r.kappa4 > 0

    def test_matches_finite_n_trend(self):
        # exact finite-n standardized kappa_3 of S_{2,n}: 8 tr(R^3) / (2 tr R^2)^{3/2}
        from scipy.linalg import toeplitz

        m = regvar(0.3)
        vals = []
        for n in (256, 1024):
            lam = np.linalg.eigvalsh(toeplitz(m(np.arange(n))))
            vals.append(8 * np.sum(lam**3) / (2 * np.sum(lam**2)) ** 1.5)
        target = rosenblatt_cumulants(0.7).kappa3
        assert vals[0] > vals[1] > target

    def test_bad_input(self):
        with pytest.raises(ValueError):
            rosenblatt_cumulants(0.4)
        with pytest.raises(ValueError):
            rosenblatt_cumulants(0.7, grid=8)


class TestJoint:
    def test_refuses_small_D(self):
        with pytest.raises(ValueError):
            joint_experiment(regvar(0.2), 5, 64, 10, 1)
        with pytest.raises(ValueError):
            joint_experiment(regvar(0.5), 3, 64, 10, 1)

    def test_small_run(self):
        rep = joint_experiment(regvar(0.8), 3, 256, 300, 2)
        assert rep.case == 1
        assert rep.samples.shape == (300, 2)
        assert rep.cross_covariance.within(0.0)
