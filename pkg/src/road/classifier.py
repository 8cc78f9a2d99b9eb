"""scikit-learn compatible ROAD classifier."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets, type_of_target
from sklearn.utils.validation import check_is_fitted, validate_data

from .estimators import LabeledDataset, fit_estimates
from .exceptions import RoadError
from .model import conditional_error_rates
from .solver import RoadProblem, solve


class ROADClassifier(ClassifierMixin, BaseEstimator):
    """Linear discriminant whose direction minimizes ``w' Sigma_hat w``
    subject to ``w' mu_d_hat = 1`` and ``||w||_1 <= c``.

    Parameters
    ----------
    c : float
        L1 budget. Must exceed ``1 / max_j |mu_d_hat_j|`` for the fitted data.
    method : {"auto", "exact", "projected_gradient"}
        Solver route; "auto" enumerates exactly for up to 12 features.
    tol, max_iter :
        Passed to the projected gradient solver.

    Attributes
    ----------
    direction_ : ndarray of shape (n_features,)
        The fitted ``w``. A point ``x`` goes to ``classes_[0]`` when
        ``(x - center_)' w >= 0``.
    center_ : ndarray of shape (n_features,)
        Midpoint of the two class means; the decision threshold passes through it.
    coef_, intercept_ :
        ``-direction_`` and ``direction_' center_``, so that, as elsewhere in
        scikit-learn, a positive :meth:`decision_function` favours ``classes_[1]``.
    estimates_ : SampleEstimates
    solution_ : RoadSolution
    n_iter_ : int
        Solver iterations (1 for the exact enumeration).
    classes_ : ndarray of shape (2,)
        ``classes_[0]`` plays the role of group 1.
    """

    def __init__(self, c=2.0, method="auto", tol=1e-12, max_iter=50_000):
        self.c = c
        self.method = method
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = validate_data(self, X, y)
        check_classification_targets(y)
        y_type = type_of_target(y, input_name="y", raise_unknown=True)
        if y_type != "binary":
            raise RoadError(f"Only binary classification is supported. The type of the target is {y_type}.")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size != 2:
            raise RoadError(f"ROAD needs exactly two classes, got {self.classes_.size} class(es)")
        data = LabeledDataset(X, y_idx + 1)
        self.estimates_ = fit_estimates(data)
        problem = RoadProblem(self.estimates_.sigma_hat, self.estimates_.mu_d_hat, self.c)
        kwargs = {}
        if self.method == "projected_gradient" or (self.method == "auto" and problem.p > 12):
            kwargs = {"tol": self.tol, "max_iter": self.max_iter}
        self.solution_ = solve(problem, method=self.method, **kwargs)
        self.n_iter_ = max(int(self.solution_.iterations), 1)
        self.direction_ = self.solution_.w
        self.center_ = self.estimates_.mu_a_hat
        self.coef_ = -self.direction_
        self.intercept_ = float(self.direction_ @ self.center_)
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_

    def predict_group(self, X):
        """Group labels in {1, 2}; ties (score exactly zero) go to group 1."""
        return np.where(self.decision_function(X) > 0, 2, 1)

    def predict(self, X):
        check_is_fitted(self)
        return self.classes_[self.predict_group(X) - 1]

    def error_rate(self, truth):
        """Exact misclassification probability of the fitted rule under ``truth``."""
        check_is_fitted(self)
        return conditional_error_rates(self.direction_, self.center_, truth)[2]

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.classifier_tags.multi_class = False
        return tags
