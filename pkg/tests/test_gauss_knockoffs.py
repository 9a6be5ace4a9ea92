import numpy as np
import pytest

from phknockoff.exceptions import NotPositiveDefiniteError
from phknockoff.gauss_knockoffs import (
    DEFAULT_PSD_SLACK,
    GaussianKnockoffSampler,
    KnockoffConfig,
    ar1_covariance,
    equicorrelated_s,
    joint_covariance,
    read_matrix_csv,
    sample_design,
    sample_knockoffs,
    write_matrix_csv,
)


def test_ar1_single_variable():
    np.testing.assert_array_equal(ar1_covariance(1, 0.5), [[1.0]])


def test_ar1_three_variables():
    expected = [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]]
    np.testing.assert_allclose(ar1_covariance(3, 0.5), expected, rtol=0, atol=1e-15)


def test_ar1_eigenvalues():
    cov = ar1_covariance(2, 0.9)
    np.testing.assert_allclose(np.linalg.eigvalsh(cov), [0.1, 1.9], atol=1e-12)


def test_ar1_rejects_unit_correlation():
    with pytest.raises(NotPositiveDefiniteError):
        ar1_covariance(3, 1.0)


def test_sample_design_empty(rng):
    X = sample_design(0, ar1_covariance(4, 0.5), rng)
    assert X.shape == (0, 4)


@pytest.mark.parametrize("cov", [np.eye(2), ar1_covariance(3, 0.5)])
def test_sample_design_moments(cov):
    X = sample_design(100_000, cov, np.random.default_rng(1))
    emp = X.T @ X / X.shape[0]
    assert np.max(np.abs(emp - cov)) < 0.02


def test_sample_design_not_pd(rng):
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefiniteError):
        sample_design(5, bad, rng)


def test_equicorrelated_identity():
    cfg = equicorrelated_s(np.eye(4))
    np.testing.assert_allclose(cfg.s, DEFAULT_PSD_SLACK * np.ones(4), rtol=1e-14)


@pytest.mark.parametrize("rho,lam_min", [(0.5, 0.5), (0.9, 0.1)])
def test_equicorrelated_two_variables(rho, lam_min):
    cov = ar1_covariance(2, rho)
    expected = DEFAULT_PSD_SLACK * min(2 * np.linalg.eigvalsh(cov).min(), 1.0)
    assert np.isclose(expected, DEFAULT_PSD_SLACK * min(2 * lam_min, 1.0))
    np.testing.assert_allclose(equicorrelated_s(cov).s, expected, rtol=1e-12)


def test_equicorrelated_rejects_singular():
    with pytest.raises(NotPositiveDefiniteError):
        equicorrelated_s(np.ones((2, 2)))


def test_zero_s_reproduces_design(rng):
    cov = ar1_covariance(4, 0.5)
    X = sample_design(50, cov, rng)
    Xk = sample_knockoffs(X, cov, KnockoffConfig(np.zeros(4)), rng)
    np.testing.assert_allclose(Xk, X, atol=1e-12)


def test_identity_unit_s_is_independent():
    sampler = GaussianKnockoffSampler(np.eye(3), KnockoffConfig(np.ones(3)))
    np.testing.assert_allclose(sampler.mean_map, np.zeros((3, 3)), atol=1e-15)
    np.testing.assert_allclose(sampler.cond_cov, np.eye(3), atol=1e-15)


def test_joint_moments():
    cov = ar1_covariance(3, 0.5)
    cfg = equicorrelated_s(cov)
    rng = np.random.default_rng(2)
    X = sample_design(100_000, cov, rng)
    Xk = sample_knockoffs(X, cov, cfg, rng)
    Z = np.hstack([X, Xk])
    emp = Z.T @ Z / Z.shape[0]
    assert np.max(np.abs(emp - joint_covariance(cov, cfg.s))) < 0.02


def test_swap_symmetry_paired_moments():
    cov = ar1_covariance(4, 0.5)
    rng = np.random.default_rng(3)
    n = 100_000
    X = sample_design(n, cov, rng)
    Xk = sample_knockoffs(X, cov, equicorrelated_s(cov), rng)
    for i in range(4):
        a, b = X[:, i], Xk[:, i]
        # Moments that are not swap-invariant by construction: compare
        # E[a^2] with E[b^2] and E[a^3 b] with E[a b^3] via paired differences.
        for diff in (a**2 - b**2, a**3 * b - a * b**3, a * X[:, (i + 1) % 4] - b * X[:, (i + 1) % 4]):
            se = diff.std(ddof=1) / np.sqrt(n)
            assert abs(diff.mean()) <= 3 * se + 1e-12


def test_joint_covariance_psd():
    for rho in (0.0, 0.3, 0.5, 0.8, 0.95):
        cov = ar1_covariance(30, rho)
        s = equicorrelated_s(cov).s
        assert np.linalg.eigvalsh(joint_covariance(cov, s)).min() >= -1e-12
        unslacked = np.full(30, min(2 * np.linalg.eigvalsh(cov).min(), 1.0))
        assert np.linalg.eigvalsh(joint_covariance(cov, unslacked)).min() >= -1e-8


def test_non_psd_conditional_raises():
    cov = ar1_covariance(3, 0.9)
    with pytest.raises(NotPositiveDefiniteError):
        GaussianKnockoffSampler(cov, KnockoffConfig(np.ones(3)))


def test_determinism():
    cov = ar1_covariance(6, 0.5)
    cfg = equicorrelated_s(cov)

    def draw():
        rng = np.random.default_rng(99)
        X = sample_design(40, cov, rng)
        return X, sample_knockoffs(X, cov, cfg, rng)

    (X1, K1), (X2, K2) = draw(), draw()
    assert np.array_equal(X1, X2) and np.array_equal(K1, K2)


def test_matrix_csv_round_trip(tmp_path, rng):
    M = rng.standard_normal((7, 3))
    path = tmp_path / "m.csv"
    write_matrix_csv(path, M)
    assert path.read_text().splitlines()[0] == "1,2,3"
    np.testing.assert_array_equal(read_matrix_csv(path), M)
