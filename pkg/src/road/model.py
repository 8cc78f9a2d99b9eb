"""Two-group Gaussian model, norms, linear discriminant rules and their exact error rates.

Groups are labelled 1 and 2 with equal prior probability. ``mu_d`` is half the
mean difference, ``(mu1 - mu2) / 2``, and the rule ``classify(x, w, center)``
assigns group 1 when ``w'(x - center) >= 0``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import ndtr

from ._validation import as_sym_matrix, as_vector, check_same_dim
from .exceptions import (
    ConstraintViolationError,
    DegenerateDirectionError,
    RoadError,
    SingularCovarianceError,
)

DEGENERATE_TOL = 1e-14


def l1(v):
    return float(np.sum(np.abs(v)))


def linf(v):
    return float(np.max(np.abs(v)))


def linf_mat(m):
    """Elementwise sup norm ``max_ij |M_ij|`` (not the induced row-sum norm)."""
    return float(np.max(np.abs(m)))


@dataclass(frozen=True)
class GaussianPair:
    """True model: ``N(mu1, sigma)`` for group 1 and ``N(mu2, sigma)`` for group 2."""

    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray
    mu_a: np.ndarray = field(init=False, repr=False)
    mu_d: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu1 = as_vector(self.mu1, "mu1")
        mu2 = as_vector(self.mu2, "mu2", p=mu1.size)
        sigma = as_sym_matrix(self.sigma, "sigma", p=mu1.size, psd=True)
        if not np.any(mu1 != mu2):
            raise RoadError("mu1 and mu2 must differ in at least one coordinate")
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu2", mu2)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mu_a", (mu1 + mu2) / 2)
        object.__setattr__(self, "mu_d", (mu1 - mu2) / 2)

    @property
    def p(self):
        return self.mu1.size

    @classmethod
    def from_mu_d(cls, mu_d, sigma, mu_a=None):
        """Build the model with ``mu1 = mu_a + mu_d`` and ``mu2 = mu_a - mu_d``."""
        mu_d = as_vector(mu_d, "mu_d")
        mu_a = np.zeros_like(mu_d) if mu_a is None else as_vector(mu_a, "mu_a", p=mu_d.size)
        return cls(mu_a + mu_d, mu_a - mu_d, sigma)

    def to_dict(self):
        return {"mu1": self.mu1.tolist(), "mu2": self.mu2.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mu1"], d["mu2"], d["sigma"])


def derived_params(model):
    """Return ``(mu_a, mu_d)`` for a :class:`GaussianPair`."""
    return model.mu_a.copy(), model.mu_d.copy()


def phi_bar(z):
    """Standard normal upper tail ``1 - Phi(z)``.

    Evaluated as ``Phi(-z)`` through the complementary error function, which
    keeps full relative precision for large positive ``z``.
    """
    out = ndtr(-np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


def classify(x, w, center):
    """Label ``x`` (one row or a 2-d batch) as 1 if ``w'(x - center) >= 0`` else 2."""
    w = as_vector(w, "w")
    center = as_vector(center, "center", p=w.size)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.size:
        raise RoadError(f"x has dimension {x.shape[-1]}, expected {w.size}")
    score = (x - center) @ w
    labels = np.where(score >= 0, 1, 2)
    return int(labels) if labels.ndim == 0 else labels


def _direction_scale(w, sigma):
    q = float(w @ sigma @ w)
    if q <= DEGENERATE_TOL * max(1.0, linf_mat(sigma)) * max(l1(w), 1.0) ** 2:
        raise DegenerateDirectionError(f"w' Sigma w = {q:.3g} is not positive")
    return np.sqrt(q)


def conditional_error_rates(w, center, truth):
    """Exact per-group misclassification probabilities of ``classify(., w, center)``.

    Returns ``(rate1, rate2, average)`` where ``rate_g`` is the probability that
    a draw from group ``g`` is assigned to the other group.
    """
    w = as_vector(w, "w", p=truth.p)
    center = as_vector(center, "center", p=truth.p)
    scale = _direction_scale(w, truth.sigma)
    rate1 = phi_bar(w @ (truth.mu1 - center) / scale)
    rate2 = phi_bar(-(w @ (truth.mu2 - center)) / scale)
    return rate1, rate2, 0.5 * (rate1 + rate2)


def oracle_rate(w, truth, atol=1e-8):
    """Error rate of the rule centred at ``mu_a`` for a direction with ``w' mu_d = 1``.

    Equals ``phi_bar(1 / sqrt(w' Sigma w))``.
    """
    w = as_vector(w, "w", p=truth.p)
    if abs(w @ truth.mu_d - 1.0) > atol:
        raise ConstraintViolationError(f"w' mu_d = {w @ truth.mu_d:.10g}, expected 1")
    return conditional_error_rates(w, truth.mu_a, truth)[2]


def fisher_direction(sigma, mu_d):
    """Solve ``Sigma v = mu_d`` by Cholesky; a singular ``Sigma`` raises instead of pseudo-inverting."""
    mu_d = as_vector(mu_d, "mu_d")
    sigma = as_sym_matrix(sigma, "sigma", p=mu_d.size)
    check_same_dim(sigma, mu_d)
    try:
        factor = linalg.cho_factor(sigma, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularCovarianceError("sigma is not positive definite") from exc
    diag = np.abs(np.diag(factor[0]))
    if diag.min() <= 1e-12 * diag.max():
        raise SingularCovarianceError("sigma is numerically singular")
    v = linalg.cho_solve(factor, mu_d, check_finite=False)
    if linf(sigma @ v - mu_d) > 1e-8 * max(linf(mu_d), 1e-300):
        raise SingularCovarianceError("sigma is too ill-conditioned for an accurate solve")
    return v


def normalized_fisher_direction(sigma, mu_d):
    """Fisher direction rescaled onto the hyperplane ``w' mu_d = 1``."""
    v = fisher_direction(sigma, mu_d)
    return v / (v @ mu_d)
