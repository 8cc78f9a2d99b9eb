import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import mp_phi_bar, random_pd

from road.exceptions import (
    ConstraintViolationError,
    DegenerateDirectionError,
    DimensionMismatchError,
    RoadError,
    SingularCovarianceError,
)
from road.model import (
    GaussianPair,
    classify,
    conditional_error_rates,
    derived_params,
    fisher_direction,
    l1,
    linf,
    linf_mat,
    normalized_fisher_direction,
    oracle_rate,
    phi_bar,
)

# mpmath, 40 digits
PB_196 = 0.024997895148220436
PB_1 = 0.15865525393145705
PB_TWO_DIM = 0.10295160536603415


def test_derived_params_symmetric():
    mu_a, mu_d = derived_params(GaussianPair([1, 0], [-1, 0], np.eye(2)))
    np.testing.assert_array_equal(mu_a, [0, 0])
    np.testing.assert_array_equal(mu_d, [1, 0])


def test_derived_params_arithmetic():
    mu_a, mu_d = derived_params(GaussianPair([2, 1], [0, 1], np.eye(2)))
    np.testing.assert_array_equal(mu_a, [1, 1])
    np.testing.assert_array_equal(mu_d, [1, 0])


@pytest.mark.parametrize(
    "mu1, mu2, sigma",
    [
        ([3, 3], [3, 3], np.eye(2)),
        ([1, 0], [0, 0], [[1, 0.5], [0.4, 1]]),
        ([1, 0], [0, 0], [[1, 2], [2, 1]]),
        ([1, 0], [0, 0], [[-1, 0], [0, 1]]),
        ([1, 0, 0], [0, 0], np.eye(2)),
    ],
    ids=["equal-means", "asymmetric", "indefinite", "negative-diagonal", "dims"],
)
def test_gaussian_pair_rejects(mu1, mu2, sigma):
    with pytest.raises(RoadError):
        GaussianPair(mu1, mu2, sigma)


def test_gaussian_pair_round_trip():
    g = GaussianPair([1, 2], [0, -1], [[2, 0.5], [0.5, 1]])
    h = GaussianPair.from_dict(g.to_dict())
    np.testing.assert_array_equal(h.sigma, g.sigma)
    np.testing.assert_array_equal(h.mu_d, g.mu_d)


def test_norms():
    assert l1([1, -2, 3]) == 6
    assert linf([1, -5, 3]) == 5
    assert linf_mat([[1, -7], [2, 3]]) == 7
    assert l1(np.zeros(3)) == linf(np.zeros(3)) == 0


def test_phi_bar_values():
    assert phi_bar(0) == 0.5
    assert phi_bar(1.96) == pytest.approx(PB_196, abs=1e-12)
    assert phi_bar(-1.96) == pytest.approx(1 - PB_196, abs=1e-12)


@pytest.mark.parametrize("z", np.linspace(0, 8, 33))
def test_phi_bar_relative_accuracy(z):
    assert phi_bar(z) == pytest.approx(mp_phi_bar(z), rel=1e-8, abs=1e-12)


def test_phi_bar_far_tail_is_not_cancelled():
    # 1 - Phi(20) would round to zero
    assert phi_bar(20.0) == pytest.approx(mp_phi_bar(20.0), rel=1e-8)


def test_phi_bar_symmetry_grid():
    z = np.linspace(-10, 10, 2001)
    np.testing.assert_allclose(phi_bar(z) + phi_bar(-z), 1.0, atol=1e-12)


def test_classify_examples():
    w, centre = [1, 0], [0, 0]
    assert classify([0.5, 9], w, centre) == 1
    assert classify([-0.5, 9], w, centre) == 2
    assert classify([0, 0], w, centre) == 1


def test_classify_dimension_mismatch():
    with pytest.raises(RoadError):
        classify([1, 2, 3], [1, 0], [0, 0])
    with pytest.raises(DimensionMismatchError):
        classify([1, 2], [1, 0], [0, 0, 0])


def test_error_rates_identity():
    truth = GaussianPair([1, 0], [-1, 0], np.eye(2))
    r1, r2, avg = conditional_error_rates([1, 0], truth.mu_a, truth)
    assert r1 == pytest.approx(PB_1, abs=1e-12)
    assert r2 == pytest.approx(PB_1, abs=1e-12)
    assert avg == pytest.approx(PB_1, abs=1e-12)


def test_error_rates_centre_on_mean():
    truth = GaussianPair([1, 0], [-1, 0], np.eye(2))
    assert conditional_error_rates([1, 0], truth.mu1, truth)[0] == 0.5


def test_error_rates_two_dim(two_dim_truth):
    avg = conditional_error_rates([1, -0.25], two_dim_truth.mu_a, two_dim_truth)[2]
    assert avg == pytest.approx(PB_TWO_DIM, abs=1e-12)


def test_error_rates_degenerate():
    truth = GaussianPair([1, 0], [-1, 0], np.diag([1.0, 0.0]))
    with pytest.raises(DegenerateDirectionError):
        conditional_error_rates([0, 1], truth.mu_a, truth)


def test_oracle_rate(two_dim_truth):
    assert oracle_rate([1, -0.25], two_dim_truth) == pytest.approx(PB_TWO_DIM, abs=1e-12)
    ident = GaussianPair([1, 0], [-1, 0], np.eye(2))
    assert oracle_rate([1, 0], ident) == pytest.approx(PB_1, abs=1e-12)
    with pytest.raises(ConstraintViolationError):
        oracle_rate([0.5, 0], ident)


def test_fisher_direction_examples():
    np.testing.assert_allclose(fisher_direction(np.eye(2), [1, 0]), [1, 0])
    np.testing.assert_allclose(fisher_direction(np.diag([2.0, 4.0]), [1, 1]), [0.5, 0.25])
    with pytest.raises(SingularCovarianceError):
        fisher_direction([[1, 1], [1, 1]], [1, 0])


def test_fisher_direction_residual(rng):
    sigma = random_pd(rng, 6)
    mu = rng.normal(size=6)
    v = fisher_direction(sigma, mu)
    assert linf(sigma @ v - mu) <= 1e-8 * linf(mu)


def test_normalized_fisher_minimizes_on_hyperplane(rng):
    p = 5
    sigma = random_pd(rng, p)
    mu = rng.normal(size=p)
    w = normalized_fisher_direction(sigma, mu)
    best = w @ sigma @ w
    for _ in range(1000):
        v = rng.normal(size=p)
        v = v / (v @ mu)
        assert best <= v @ sigma @ v + 1e-10


@settings(max_examples=200, deadline=None)
@given(
    t=st.floats(min_value=1e-3, max_value=1e3),
    seed=st.integers(0, 2**32 - 1),
)
def test_rule_is_scale_invariant(t, seed):
    rng = np.random.default_rng(seed)
    p = 3
    truth = GaussianPair(rng.normal(size=p), rng.normal(size=p), random_pd(rng, p))
    w = rng.normal(size=p)
    centre = rng.normal(size=p)
    X = rng.normal(size=(50, p))
    np.testing.assert_array_equal(classify(X, w, centre), classify(X, t * w, centre))
    np.testing.assert_allclose(
        conditional_error_rates(w, centre, truth), conditional_error_rates(t * w, centre, truth), atol=1e-12
    )


def test_error_rates_match_monte_carlo(rng):
    truth = GaussianPair([0.8, -0.2, 0.1], [-0.4, 0.3, 0.0], random_pd(rng, 3, ridge=0.5))
    w, centre = np.array([1.0, -0.5, 0.3]), np.array([0.1, 0.0, -0.1])
    r1, r2, _ = conditional_error_rates(w, centre, truth)
    n = 1_000_000
    L = np.linalg.cholesky(truth.sigma)
    for mean, rate, wrong in ((truth.mu1, r1, 2), (truth.mu2, r2, 1)):
        X = mean + rng.standard_normal((n, 3)) @ L.T
        emp = np.mean(classify(X, w, centre) == wrong)
        assert abs(emp - rate) <= 3 * np.sqrt(rate * (1 - rate) / n)
