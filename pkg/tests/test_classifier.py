import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer
from sklearn.utils.estimator_checks import check_estimator

from road.classifier import ROADClassifier
from road.estimators import fit_estimates, gen_synthetic
from road.exceptions import InfeasibleProblemError, RoadError
from road.model import classify
from road.solver import RoadProblem, solve_exact


@pytest.fixture
def data(two_dim_truth):
    return gen_synthetic(two_dim_truth, 400, 4)


def test_params_and_clone():
    clf = ROADClassifier(c=1.5, method="exact")
    assert clf.get_params() == {"c": 1.5, "method": "exact", "tol": 1e-12, "max_iter": 50_000}
    other = clone(clf).set_params(c=3.0)
    assert other.c == 3.0 and clf.c == 1.5


def test_fit_matches_functional_route(data):
    clf = ROADClassifier(c=1.25).fit(data.X, data.labels)
    est = fit_estimates(data)
    sol = solve_exact(RoadProblem(est.sigma_hat, est.mu_d_hat, 1.25))
    np.testing.assert_allclose(clf.direction_, sol.w, atol=1e-12)
    np.testing.assert_allclose(clf.decision_function(data.X), -(data.X - est.mu_a_hat) @ sol.w, atol=1e-12)
    np.testing.assert_array_equal(clf.center_, est.mu_a_hat)
    np.testing.assert_array_equal(clf.predict_group(data.X), classify(data.X, sol.w, est.mu_a_hat))


def test_string_labels_follow_class_order(data):
    y = np.where(data.labels == 1, "alpha", "beta")
    clf = ROADClassifier(c=1.25).fit(data.X, y)
    np.testing.assert_array_equal(clf.classes_, ["alpha", "beta"])
    pred = clf.predict(data.X)
    np.testing.assert_array_equal(pred == "alpha", clf.predict_group(data.X) == 1)
    assert clf.score(data.X, y) > 0.8


def test_error_rate_agrees_with_holdout(two_dim_truth, data):
    clf = ROADClassifier(c=1.25).fit(data.X, data.labels)
    test = gen_synthetic(two_dim_truth, 100_000, 5)
    rate = clf.error_rate(two_dim_truth)
    emp = np.mean(clf.predict(test.X) != test.labels)
    assert abs(emp - rate) <= 3 * np.sqrt(rate * (1 - rate) / len(test))


def test_passes_sklearn_estimator_checks():
    check_estimator(ROADClassifier(c=50.0))


def test_pipeline(data):
    pipe = make_pipeline(FunctionTransformer(lambda X: 2 * X), ROADClassifier(c=1.25))
    pipe.fit(data.X, data.labels)
    np.testing.assert_array_equal(
        pipe.predict(data.X), ROADClassifier(c=1.25).fit(2 * data.X, data.labels).predict(2 * data.X)
    )


def test_errors(data):
    with pytest.raises(NotFittedError):
        ROADClassifier().predict(data.X)
    with pytest.raises(RoadError):
        ROADClassifier().fit(data.X, np.arange(len(data)) % 3)
    with pytest.raises(InfeasibleProblemError):
        ROADClassifier(c=0.1).fit(data.X, data.labels)
    clf = ROADClassifier(c=1.25).fit(data.X, data.labels)
    with pytest.raises(ValueError):
        clf.predict(np.zeros((2, 3)))


def test_high_dimensional_uses_iterative_solver():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 20))
    y = np.repeat([0, 1], 40)
    X[y == 0, 0] += 2
    clf = ROADClassifier(c=3.0).fit(X, y)
    assert clf.solution_.method == "projected_gradient"
    assert clf.solution_.converged
