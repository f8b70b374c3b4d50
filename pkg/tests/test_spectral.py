import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from ssl_lab.errors import ContractViolation, ParameterError
from ssl_lab.graph import (PerturbedThreshold, WeightedGraph, build_laplacian,
                           build_weight_matrix, connected_components, weighted_indicators)
from ssl_lab.spectral import (covariance_column, covariance_from, covariance_submatrix,
                              eigendecompose, projection_residual, spectral_report, truncate)

from conftest import random_covariance, random_graph

TWO = np.array([[1.0, -1.0], [-1.0, 1.0]])


@pytest.fixture(scope="module")
def disc_decomp(disconnected):
    return eigendecompose(build_laplacian(disconnected))


@pytest.fixture(scope="module")
def chi(disconnected):
    return weighted_indicators(connected_components(disconnected), disconnected)


# -- eigendecomposition ------------------------------------------------------------

def test_two_by_two():
    d = eigendecompose(TWO)
    np.testing.assert_allclose(d.eigenvalues, [0, 2], atol=1e-15)
    np.testing.assert_allclose(d.eigenvectors[:, 0], np.array([1, 1]) / math.sqrt(2), atol=1e-15)
    v2 = d.eigenvectors[:, 1]
    assert np.allclose(v2, np.array([1, -1]) / math.sqrt(2)) or np.allclose(v2, np.array([-1, 1]) / math.sqrt(2))


def test_disconnected_zero_eigenvalues(disc_decomp):
    assert np.all(disc_decomp.eigenvalues[:3] <= 1e-10 * disc_decomp.norm)
    assert disc_decomp.eigenvalues[3] > 1e-3


@given(st.integers(0, 2**32 - 1), st.integers(2, 30), st.sampled_from([0.0, 0.5]))
def test_reconstruction_and_orthonormality(seed, n, p):
    L = build_laplacian(random_graph(np.random.default_rng(seed), n), p).matrix
    d = eigendecompose(L)
    Phi = d.eigenvectors
    assert np.linalg.norm(Phi * d.eigenvalues @ Phi.T - L) <= 1e-8 * np.linalg.norm(L)
    np.testing.assert_allclose(Phi.T @ Phi, np.eye(n), atol=1e-12)
    assert np.all(np.diff(d.eigenvalues) >= 0)


def test_asymmetric_rejected():
    with pytest.raises(ContractViolation):
        eigendecompose(np.array([[1.0, 0.0], [1.0, 1.0]]))


# -- covariance ------------------------------------------------------------------------

@pytest.mark.parametrize("sigma,tau2,alpha,lam", [(0, 0.3, 1.7, 1.0), (2, 1, 1, 3.0), (2, 1, 2, 9.0)])
def test_spectral_map_values(sigma, tau2, alpha, lam):
    d = eigendecompose(np.diag([0.0, 2.0]) if sigma else TWO)
    cov = covariance_from(d, tau2, alpha)
    k = 1 if sigma else 0
    assert math.isclose(cov.inv_eigenvalues[k], lam, rel_tol=1e-14)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 1.0, 2.0, 3.7]), st.floats(0.01, 5.0))
def test_spectral_map_identity(seed, alpha, tau2):
    L = build_laplacian(random_graph(np.random.default_rng(seed), 12)).matrix
    cov = covariance_from(eigendecompose(L), tau2, alpha)
    # independent route: eigenvalues of the assembled inverse covariance
    P = sla.fractional_matrix_power((L + tau2 * np.eye(12)) / tau2, alpha).real
    expected = np.sort(np.linalg.eigvalsh(0.5 * (P + P.T)))
    # eigvalsh on P is backward stable, so its small eigenvalues carry an
    # absolute error of order eps * ||P|| (P reaches ~1e7 for alpha 3.7)
    np.testing.assert_allclose(np.sort(cov.inv_eigenvalues), expected, rtol=1e-10,
                               atol=1e-13 * expected[-1])


def test_two_node_column_solves_shifted_system():
    cov = covariance_from(eigendecompose(TWO), 1.0, 1.0)
    c1 = covariance_column(cov, 0)
    np.testing.assert_allclose(c1, [2 / 3, 1 / 3], rtol=1e-14)
    np.testing.assert_allclose(np.linalg.solve(TWO + np.eye(2), [1.0, 0.0]), c1, rtol=1e-14)
    np.testing.assert_allclose(covariance_submatrix(cov, [1]), [[2 / 3]], rtol=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(2, 50))
def test_column_consistency(seed, n):
    r = np.random.default_rng(seed)
    cov = random_covariance(r, n)
    d = cov.decomposition
    C = d.eigenvectors @ np.diag(1 / cov.inv_eigenvalues) @ d.eigenvectors.T
    j = int(r.integers(n))
    np.testing.assert_allclose(cov.column(j), C[:, j], atol=1e-10)
    idx = r.permutation(n)[: max(1, n // 3)]
    np.testing.assert_allclose(cov.submatrix(idx), C[np.ix_(idx, idx)], atol=1e-10)
    np.testing.assert_allclose(cov.matrix @ cov.precision, np.eye(n), atol=1e-8)
    assert np.linalg.eigvalsh(cov.submatrix(idx))[0] > 0
    assert cov.inv_eigenvalues[0] >= 1.0 - 1e-15


def test_alpha_one_matches_resolvent(rng):
    L = build_laplacian(random_graph(rng, 10)).matrix
    cov = covariance_from(eigendecompose(L), 0.4, 1.0)
    np.testing.assert_allclose(cov.matrix, 0.4 * np.linalg.inv(L + 0.4 * np.eye(10)), atol=1e-12)


def test_large_tau_is_identity(rng):
    cov = random_covariance(rng, 15, tau2=1e6, alpha=1.0)
    for j in range(15):
        e = np.zeros(15)
        e[j] = 1
        assert np.linalg.norm(cov.column(j) - e) <= 1e-3


def test_disconnected_columns_near_block_indicator(disc_decomp, chi):
    tau = 0.01
    cov = covariance_from(disc_decomp, tau**2, 1.0)
    for k in range(3):
        members = np.flatnonzero(chi[k])
        j = members[0]
        err = np.linalg.norm(cov.column(j) - chi[k, j] * chi[k])
        assert err <= 10 * tau**2
    # and the error shrinks like tau^{2 alpha}
    e1 = np.linalg.norm(covariance_from(disc_decomp, 1e-2, 1.0).column(0) - chi[0, 0] * chi[0])
    e2 = np.linalg.norm(covariance_from(disc_decomp, 1e-4, 1.0).column(0) - chi[0, 0] * chi[0])
    assert 50 < e1 / e2 < 200


def test_submatrix_all_nodes_is_covariance(rng):
    cov = random_covariance(rng, 8)
    np.testing.assert_allclose(cov.submatrix(np.arange(8)), cov.matrix, atol=1e-14)


def test_submatrix_index_validation(rng):
    cov = random_covariance(rng, 5)
    with pytest.raises(ValueError):
        cov.submatrix([1, 1])
    with pytest.raises(IndexError):
        cov.submatrix([5])
    with pytest.raises(ValueError):
        cov.submatrix([])


def test_parameter_validation(disc_decomp):
    with pytest.raises(ParameterError):
        covariance_from(disc_decomp, 0.0, 1.0)
    with pytest.raises(ParameterError):
        covariance_from(disc_decomp, 0.1, -1.0)


def test_minus_one_without_cancellation(disc_decomp):
    cov = covariance_from(disc_decomp, 1e-2, 2.0)
    np.testing.assert_allclose(cov.inv_eigenvalues_minus_one()[3:], cov.inv_eigenvalues[3:] - 1, rtol=1e-12)


# -- truncation -------------------------------------------------------------------

def test_full_rank_truncation_equals_covariance(rng):
    cov = random_covariance(rng, 12)
    t = truncate(cov, 12)
    x = rng.standard_normal(12)
    np.testing.assert_allclose(t.apply(x), cov.apply(x), atol=1e-10)


def test_rank_one_truncation(rng):
    cov = random_covariance(rng, 10)
    t = truncate(cov, 1)
    phi = cov.vectors[:, 0]
    np.testing.assert_allclose(t.matrix, np.outer(phi, phi), atol=1e-14)


def test_small_tau_truncation_is_indicator_projector(disc_decomp, chi):
    t = truncate(covariance_from(disc_decomp, 1e-6, 1.0), 3)
    assert np.linalg.norm(t.matrix - chi.T @ chi, 2) <= 1e-4


def test_truncation_rank_validation(rng):
    cov = random_covariance(rng, 4)
    with pytest.raises(ValueError):
        truncate(cov, 0)
    with pytest.raises(ValueError):
        truncate(cov, 5)


# -- diagnostics ---------------------------------------------------------------------

def test_projection_residual_cases(rng):
    B = np.linalg.qr(rng.standard_normal((8, 3)))[0].T
    v = B.T @ rng.standard_normal(3)
    assert projection_residual(v, B) <= 1e-12
    w = rng.standard_normal(8)
    w -= B.T @ (B @ w)
    assert math.isclose(projection_residual(w, B), np.linalg.norm(w), rel_tol=1e-12)
    with pytest.raises(ContractViolation):
        projection_residual(w, 2 * B)


def test_disconnected_eigenvectors_in_indicator_span(disc_decomp, chi):
    for k in range(3):
        assert projection_residual(disc_decomp.eigenvectors[:, k], chi) <= 1e-10


def test_spectral_report_disconnected(disc_decomp):
    rep = spectral_report(covariance_from(disc_decomp, 0.01, 1.0), 3)
    # zero eigenvalues come back from eigh at roundoff level (~N eps |L|)
    assert abs(rep.lambda_K - 1.0) <= 1e-10
    assert rep.lambda_K_plus_1 > 1
    assert rep.gap > 0


def test_spectral_report_last_index(rng):
    cov = random_covariance(rng, 6)
    rep = spectral_report(cov, 5)
    assert np.isfinite(rep.lambda_K_plus_1)
    with pytest.raises(ValueError):
        spectral_report(cov, 6)


def _slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def test_low_lying_drift_is_linear(mixture, chi):
    tau2 = 0.01
    ratios = np.geomspace(1e-3, 1e-1, 5)
    l2, l3, r2, r3 = [], [], [], []
    for ratio in ratios:
        g = build_weight_matrix(mixture.cloud, PerturbedThreshold(0.25, ratio * tau2))
        cov = covariance_from(eigendecompose(build_laplacian(g)), tau2, 1.0)
        lm1 = cov.inv_eigenvalues_minus_one()
        l2.append(lm1[1])
        l3.append(lm1[2])
        r2.append(projection_residual(cov.vectors[:, 1], chi))
        r3.append(projection_residual(cov.vectors[:, 2], chi))
    for series in (l2, l3, r2, r3):
        assert 0.9 <= _slope(ratios, series) <= 1.1


def test_fourth_eigenvalue_scales_like_inverse_tau_squared(mixture):
    g = build_weight_matrix(mixture.cloud, PerturbedThreshold(0.25, 1e-4))
    d = eigendecompose(build_laplacian(g))
    lam4 = [covariance_from(d, t * t, 1.0).inv_eigenvalues[3] for t in (0.1, 0.05)]
    assert 3.4 <= lam4[1] / lam4[0] <= 4.6
