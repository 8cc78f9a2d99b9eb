"""Two-dimensional counterexample to the inequality

    w_c' mu_hat_d / sqrt(w_c' Sigma w_c)  <=  1 / sqrt(w_c1' Sigma w_c1)

with ``mu_d = (1, 0)``, ``Sigma = [[1, 1], [1, sigma]]``, ``c = 1 + eps`` and
``mu_hat_d = (1 + a, b)``. The left side exceeds the right whenever ``a - b*eps``
has the sign opposite to ``1 + eps - eps*sigma*(1 + eps)``, which happens
with probability one half under symmetric noise.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleProblemError, RoadError
from .solver import RoadProblem, solve_exact

SMALL = 0.1


@dataclass(frozen=True)
class CounterexampleConfig:
    sigma: float = 2.0
    eps: float = 0.25
    tau: float = 1e-3
    reps: int = 20_000
    seed: int = 0

    def __post_init__(self):
        _check_admissible(self.sigma, self.eps)
        if not 0 < self.tau <= SMALL:
            raise RoadError(f"tau must lie in (0, {SMALL}], got {self.tau}")
        if self.reps < 100:
            raise RoadError(f"reps must be at least 100, got {self.reps}")


def _check_admissible(sigma, eps):
    if not sigma > 1:
        raise RoadError(f"sigma must exceed 1, got {sigma}")
    if not 0 < eps < 1 / sigma:
        raise RoadError(f"eps must lie in (0, 1/sigma) = (0, {1 / sigma:.6g}), got {eps}")


def covariance(sigma):
    return np.array([[1.0, 1.0], [1.0, float(sigma)]])


def sign_factor(sigma, eps):
    """``1 + eps - eps*sigma*(1 + eps)``; its sign decides which perturbations violate."""
    return 1 + eps - eps * sigma * (1 + eps)


def _closed_form_w1(sigma, eps, a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    shift = a + eps * (1 + a)
    w2 = -shift / (1 + a + b)
    w1 = (1 + b * shift / (1 + a + b)) / (1 + a)
    return w1, w2


def _closed_form_is_optimal(sigma, eps, w1, w2, a, b):
    # The closed form is the (+, -) endpoint of the feasible segment. It is the
    # minimizer iff the unconstrained minimizer on the line lies beyond it.
    m1, m2 = 1 + a, b
    f1, f2 = sigma * m1 - m2, m2 - m1  # Sigma^{-1} mu_hat_d up to a positive factor
    scale = f1 * m1 + f2 * m2
    f1, f2 = f1 / scale, f2 / scale
    outside = np.abs(f1) + np.abs(f2) > 1 + eps
    slope = (f1 - w1) * np.where(w1 != 0, np.sign(w1), np.sign(f1 - w1)) + (f2 - w2) * np.where(
        w2 != 0, np.sign(w2), np.sign(f2 - w2)
    )
    return outside & (slope > 0) & (w1 >= 0) & (w2 <= 0)


def ce_closed_forms(sigma, eps, a, b):
    """Return ``(w_c, w_c1, obj_c)`` from the closed-form expressions.

    ``a`` and ``b`` may be scalars or arrays; then ``w_c1`` has shape ``(..., 2)``.
    """
    _check_admissible(sigma, eps)
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if np.any(np.abs(a_arr) > SMALL) or np.any(np.abs(b_arr) > SMALL):
        raise RoadError(f"closed form requires |a|, |b| <= {SMALL}")
    w1, w2 = _closed_form_w1(sigma, eps, a_arr, b_arr)
    if not np.all(_closed_form_is_optimal(sigma, eps, w1, w2, a_arr, b_arr)):
        raise RoadError("closed form does not give the constrained minimizer for these parameters")
    w_c = np.array([1.0, -eps])
    obj_c = 1 - 2 * eps + sigma * eps**2
    return w_c, np.stack([w1, w2], axis=-1), obj_c


def rhs_expansion(sigma, eps, a, b):
    """First-order expansion of ``1 / sqrt(w_c1' Sigma w_c1)`` in ``(a, b)``."""
    obj = 1 - 2 * eps + sigma * eps**2
    lin = a - b * eps
    return (1 + lin + lin * sign_factor(sigma, eps) / obj) / np.sqrt(obj)


@dataclass(frozen=True)
class InequalityComparison:
    lhs: float
    rhs_exact: float
    rhs_expansion: float
    lhs_direct: float
    violated: bool
    solver_gap: float = np.nan


def _rhs_exact(sigma, eps, a, b):
    """Exact right side; closed form inside the small region, exact solver elsewhere."""
    a, b = np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))
    out = np.empty(a.shape)
    cov = covariance(sigma)
    small = (np.abs(a) <= SMALL) & (np.abs(b) <= SMALL)
    if np.any(small):
        w1, w2 = _closed_form_w1(sigma, eps, a[small], b[small])
        ok = _closed_form_is_optimal(sigma, eps, w1, w2, a[small], b[small])
        q = w1**2 + 2 * w1 * w2 + sigma * w2**2
        vals = 1 / np.sqrt(q)
        idx = np.nonzero(small)[0]
        out[idx[ok]] = vals[ok]
        small[idx[~ok]] = False
    for i in np.nonzero(~small)[0]:
        try:
            sol = solve_exact(RoadProblem(cov, [1 + a[i], b[i]], 1 + eps))
        except InfeasibleProblemError:
            out[i] = np.nan
            continue
        out[i] = 1 / np.sqrt(sol.objective)
    return out


def ce_compare_eq21(sigma, eps, a, b, verify=True):
    """Both sides of the inequality for one perturbation ``mu_hat_d = (1 + a, b)``.

    ``violated`` is true when the left side strictly exceeds the exact right
    side. With ``verify`` the closed-form right side is checked against
    :func:`solve_exact` and the objective gap is reported.
    """
    w_c, w_c1, obj_c = ce_closed_forms(sigma, eps, a, b)
    cov = covariance(sigma)
    mu_hat = np.array([1 + a, b])
    lhs = (1 + a - b * eps) / np.sqrt(obj_c)
    lhs_direct = float(w_c @ mu_hat / np.sqrt(w_c @ cov @ w_c))
    q1 = float(w_c1 @ cov @ w_c1)
    rhs_exact = 1 / np.sqrt(q1)
    gap = np.nan
    if verify:
        gap = abs(solve_exact(RoadProblem(cov, mu_hat, 1 + eps)).objective - q1)
    return InequalityComparison(
        lhs=float(lhs),
        rhs_exact=float(rhs_exact),
        rhs_expansion=float(rhs_expansion(sigma, eps, a, b)),
        lhs_direct=lhs_direct,
        violated=bool(lhs > rhs_exact),
        solver_gap=gap,
    )


@dataclass
class CeReport:
    config: CounterexampleConfig
    a: np.ndarray
    b: np.ndarray
    lhs: np.ndarray
    rhs_exact: np.ndarray
    rhs_expansion: np.ndarray
    violated: np.ndarray
    predicted: np.ndarray
    max_solver_gap: float

    @property
    def valid(self):
        """Draws with a feasible perturbed problem; only these are counted."""
        return np.isfinite(self.rhs_exact)

    @property
    def n_infeasible(self):
        return int(np.sum(~self.valid))

    @property
    def violation_fraction(self):
        return float(np.mean(self.violated[self.valid]))

    @property
    def sign_agreement(self):
        v = self.valid
        return float(np.mean(self.violated[v] == self.predicted[v]))

    @property
    def max_expansion_error(self):
        v = self.valid
        return float(np.max(np.abs(self.rhs_exact[v] - self.rhs_expansion[v])))

    def summary(self):
        cfg = self.config
        return (
            f"sigma={cfg.sigma:g} eps={cfg.eps:g} tau={cfg.tau:g} reps={cfg.reps} seed={cfg.seed} "
            f"violation_fraction={self.violation_fraction:.6f} sign_agreement={self.sign_agreement:.6f} "
            f"max_expansion_error={self.max_expansion_error:.3e} infeasible={self.n_infeasible}"
        )

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a", "b", "lhs", "rhs_exact", "rhs_expansion", "violated"])
        rows = zip(self.a, self.b, self.lhs, self.rhs_exact, self.rhs_expansion, self.violated, self.valid)
        for *vals, violated, valid in rows:
            writer.writerow([repr(float(v)) for v in vals] + [int(violated) if valid else ""])


def ce_violation_mc(config, n_verify=100):
    """Monte Carlo estimate of how often the inequality fails.

    ``a`` and ``b`` are independent ``N(0, tau^2)``. The first ``n_verify``
    draws are re-solved with :func:`solve_exact` and the largest objective
    discrepancy is reported as ``max_solver_gap``.
    """
    sigma, eps = config.sigma, config.eps
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    a, b = config.tau * rng.standard_normal((2, config.reps))
    obj = 1 - 2 * eps + sigma * eps**2
    lhs = (1 + a - b * eps) / np.sqrt(obj)
    rhs = _rhs_exact(sigma, eps, a, b)
    predicted = (a - b * eps) * sign_factor(sigma, eps) < 0
    cov = covariance(sigma)
    gap = 0.0
    for i in range(min(n_verify, config.reps)):
        if not np.isfinite(rhs[i]):
            continue
        sol = solve_exact(RoadProblem(cov, [1 + a[i], b[i]], 1 + eps))
        gap = max(gap, abs(sol.objective - 1 / rhs[i] ** 2))
    return CeReport(
        config=config,
        a=a,
        b=b,
        lhs=lhs,
        rhs_exact=rhs,
        rhs_expansion=rhs_expansion(sigma, eps, a, b),
        violated=lhs > rhs,
        predicted=predicted,
        max_solver_gap=gap,
    )


def expansion_order(sigma=2.0, eps=0.25, taus=(1e-2, 5e-3, 2.5e-3), draws=2000, seed=0):
    """Slope of log max|rhs_exact - rhs_expansion| against log tau (2 for a quadratic remainder)."""
    errs = [
        ce_violation_mc(CounterexampleConfig(sigma, eps, tau, draws, seed), n_verify=0).max_expansion_error
        for tau in taus
    ]
    slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
    return float(slope), errs
