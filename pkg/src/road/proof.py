"""Numerical audit of the oracle-efficiency argument.

Covers the two normal-tail inequalities, the feasible-set transformations
that move a direction from ``A1 = {w'mu_d = 1, ||w||_1 <= c}`` to
``A2 = {w'mu_hat_d = 1, ||w||_1 <= c}``, and the chain of plug-in error bounds
linking the fitted rule to the oracle rule.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_sym_matrix, as_vector
from .exceptions import (
    ConstraintViolationError,
    PerturbationTooLargeError,
    RoadError,
)
from .model import conditional_error_rates, l1, linf, linf_mat, oracle_rate, phi_bar
from .solver import RoadProblem, dykstra_project, solve

CHAIN_TOL = 1e-9


class InequalityCheck(NamedTuple):
    lhs: float
    bound: float
    holds: bool


def check_ineq_scale(a, eps):
    """``|phi_bar(a(1+eps)) - phi_bar(a)| <= 2|eps|`` for ``a > 0``, ``|eps| < 1``."""
    if not (a > 0 and abs(eps) < 1):
        raise RoadError(f"need a > 0 and |eps| < 1, got a={a}, eps={eps}")
    lhs = abs(phi_bar(a * (1 + eps)) - phi_bar(a))
    bound = 2 * abs(eps)
    return InequalityCheck(lhs, bound, lhs <= bound)


def check_ineq_shift(a, eps):
    """``|phi_bar((a+eps)^-1/2) - phi_bar(a^-1/2)| <= |eps|`` for ``a > 0``, ``a + eps > 0``."""
    if not (a > 0 and a + eps > 0):
        raise RoadError(f"need a > 0 and a + eps > 0, got a={a}, eps={eps}")
    lhs = abs(phi_bar((a + eps) ** -0.5) - phi_bar(a**-0.5))
    bound = abs(eps)
    return InequalityCheck(lhs, bound, lhs <= bound)


@dataclass
class SweepSummary:
    name: str
    points: int
    violations: int
    max_ratio: float

    @property
    def ok(self):
        return self.points > 0 and self.violations == 0


def _summarize(name, checks):
    lhs = np.array([ch.lhs for ch in checks])
    bound = np.array([ch.bound for ch in checks])
    ratio = np.divide(lhs, bound, out=np.zeros_like(lhs), where=bound > 0)
    return SweepSummary(name, len(checks), int(sum(not ch.holds for ch in checks)), float(ratio.max()))


def sweep_ineq_scale(n_a=100, n_eps=50):
    a_grid = np.logspace(-2, 1, n_a)
    mags = np.logspace(-3, np.log10(0.9), n_eps)
    eps_grid = np.concatenate([-mags[::-1], mags])
    checks = [check_ineq_scale(a, e) for a in a_grid for e in eps_grid]
    return _summarize("scale", checks)


def sweep_ineq_shift(n_a=100, n_eps=70):
    """Grid over ``a`` in [0.01, 100]; ``eps`` covers relative shifts in (-a, 0) and absolute ones up to 100."""
    a_grid = np.logspace(-2, 2, n_a)
    frac = np.logspace(-4, np.log10(0.999), n_eps // 2)
    pos = np.logspace(-4, 2, n_eps // 2)
    checks = []
    for a in a_grid:
        for e in np.concatenate([-a * frac, a * frac, pos]):
            checks.append(check_ineq_shift(a, e))
    return _summarize("shift", checks)


def transform_tilde(w, mu_hat_d):
    """Rescale ``w`` onto the hyperplane ``w' mu_hat_d = 1``."""
    w = as_vector(w, "w")
    mu_hat_d = as_vector(mu_hat_d, "mu_hat_d", p=w.size)
    t = w @ mu_hat_d
    if t <= 1e-8:
        raise RoadError(f"w' mu_hat_d = {t:.3g} is not safely positive")
    return w / t


@dataclass
class TransformReport:
    w: np.ndarray
    pivot: int
    delta: float
    r: float
    positive_case: bool
    w_tilde: np.ndarray
    tilde_in_a2: bool
    w_bar: np.ndarray
    w_star: np.ndarray
    bar_hyperplane_error: float
    bar_l1: float
    bar_in_a1: bool
    star_hyperplane_error: float
    star_l1: float
    star_in_a2: bool
    gap_bar: float = np.nan
    gap_bar_bound: float = np.nan
    gap_bar_bound_r: float = np.nan
    gap_star: float = np.nan
    gap_star_bound: float = np.nan

    @property
    def gaps_hold(self):
        if np.isnan(self.gap_bar):
            return True
        return (
            self.gap_bar <= self.gap_bar_bound + 1e-12
            and self.gap_bar_bound <= self.gap_bar_bound_r + 1e-12
            and self.gap_star <= self.gap_star_bound + 1e-12
        )


def transform_bar_star(w, mu_d, mu_hat_d, c, sigma=None, pivot=None, feas_tol=1e-10):
    """Carry ``w`` in ``A1`` to ``w_star`` in ``A2``.

    The pivot coordinate ``j`` defaults to the largest ``|mu_d_j|`` (lowest
    index on ties). With ``r = 1 - c^2 ||mu_hat_d - mu_d||_inf / (c - 1/|mu_d_j|)``,
    ``w_bar`` scales every coordinate except ``j`` by ``r`` and resets
    coordinate ``j`` so that ``w_bar' mu_d = 1``; then
    ``w_star = w_bar / (w_bar' mu_hat_d)``. A negative pivot entry is handled
    by reflecting that coordinate, which preserves both constraints.

    When ``sigma`` is given, the report also carries the quadratic gaps and
    their bounds.
    """
    w = as_vector(w, "w")
    mu_d = as_vector(mu_d, "mu_d", p=w.size)
    mu_hat_d = as_vector(mu_hat_d, "mu_hat_d", p=w.size)
    c = float(c)
    if abs(w @ mu_d - 1) > feas_tol or l1(w) > c + feas_tol:
        raise ConstraintViolationError("w is not in A1 = {w'mu_d = 1, ||w||_1 <= c}")
    j = int(np.argmax(np.abs(mu_d))) if pivot is None else int(pivot)
    flip = np.ones(w.size)
    if mu_d[j] < 0:
        flip[j] = -1.0
    wf, mf, mhf = w * flip, mu_d * flip, mu_hat_d * flip

    margin = c - 1.0 / mf[j] if mf[j] > 0 else -np.inf
    if not margin > 0:
        raise RoadError(f"c - 1/|mu_d[{j}]| = {margin:.3g} must be positive")
    delta = linf(mu_hat_d - mu_d)
    r = 1.0 - c * c * delta / margin
    if r <= 0:
        raise PerturbationTooLargeError(
            f"r = {r:.4g} <= 0: ||mu_hat_d - mu_d||_inf = {delta:.3g} is too large for c = {c:.3g}"
        )

    head = 1.0 - r * (1.0 - wf[j] * mf[j])
    w_bar_f = r * wf
    w_bar_f[j] = head / mf[j]
    t = w_bar_f @ mhf
    w_star_f = w_bar_f / t
    w_bar, w_star = w_bar_f * flip, w_star_f * flip

    try:
        w_tilde = transform_tilde(w, mu_hat_d)
        tilde_in_a2 = l1(w_tilde) <= c + feas_tol
    except RoadError:
        w_tilde, tilde_in_a2 = np.full(w.size, np.nan), False

    report = TransformReport(
        w=w,
        pivot=j,
        delta=delta,
        r=r,
        positive_case=bool(head > 0),
        w_tilde=w_tilde,
        tilde_in_a2=bool(tilde_in_a2),
        w_bar=w_bar,
        w_star=w_star,
        bar_hyperplane_error=abs(w_bar @ mu_d - 1),
        bar_l1=l1(w_bar),
        bar_in_a1=bool(abs(w_bar @ mu_d - 1) <= 1e-10 and l1(w_bar) <= c + 1e-10),
        star_hyperplane_error=abs(w_star @ mu_hat_d - 1),
        star_l1=l1(w_star),
        star_in_a2=bool(abs(w_star @ mu_hat_d - 1) <= 1e-10 and l1(w_star) <= c + 1e-9),
    )
    if sigma is not None:
        sigma = as_sym_matrix(sigma, "sigma", p=w.size)
        smax = linf_mat(sigma)
        q_w, q_bar, q_star = (float(v @ sigma @ v) for v in (w, w_bar, w_star))
        report.gap_bar = abs(q_w - q_bar)
        report.gap_bar_bound = 2 * c * l1(w - w_bar) * smax
        report.gap_bar_bound_r = 2 * c * (1 - r) * (l1(w) + 1.0 / mf[j]) * smax
        report.gap_star = abs(q_bar - q_star)
        # w_bar = t * w_star with |t - 1| <= ||w_bar||_1 * delta <= c * delta
        report.gap_star_bound = c * delta * (2 + c * delta) * q_star
    return report


def quadratic_gap_bound(w, w_bar, sigma, c):
    """``|w'Sigma w - w_bar'Sigma w_bar| <= 2c ||w - w_bar||_1 ||Sigma||_max`` on the L1 ball."""
    w = as_vector(w, "w")
    w_bar = as_vector(w_bar, "w_bar", p=w.size)
    sigma = as_sym_matrix(sigma, "sigma", p=w.size)
    if l1(w) > c + 1e-9 or l1(w_bar) > c + 1e-9:
        raise ConstraintViolationError("both vectors must lie in the L1 ball of radius c")
    gap = abs(float(w @ sigma @ w - w_bar @ sigma @ w_bar))
    bound = 2 * c * l1(w - w_bar) * linf_mat(sigma)
    return InequalityCheck(gap, bound, gap <= bound + 1e-12)


def random_point_a1(rng, mu_d, c):
    """A random point of ``A1``: mix of the minimum-L1 point and a projected Gaussian draw."""
    j = int(np.argmax(np.abs(mu_d)))
    base = np.zeros(mu_d.size)
    base[j] = 1.0 / mu_d[j]
    edge, _, _ = dykstra_project(base + rng.normal(scale=c, size=mu_d.size), mu_d, c, tol=1e-13)
    theta = rng.choice([1.0, rng.uniform()])
    w = (1 - theta) * base + theta * edge
    return w / (w @ mu_d)


def _random_instance(rng, p_range=(2, 6)):
    p = int(rng.integers(p_range[0], p_range[1] + 1))
    mu_d = rng.normal(size=p)
    c = 1.0 / linf(mu_d) + rng.uniform(0.1, 2.0)
    return mu_d, c


def _random_psd(rng, p):
    A = rng.normal(size=(p, rng.integers(1, p + 1)))
    return A @ A.T


@dataclass
class TransformSweep:
    runs: int
    failures: int
    max_bar_hyperplane_error: float
    max_bar_l1_excess: float
    max_star_hyperplane_error: float
    max_star_l1_excess: float
    gap_failures: int

    @property
    def ok(self):
        return (
            self.runs > 0
            and self.failures == 0
            and self.gap_failures == 0
            and self.max_bar_hyperplane_error <= 1e-10
            and self.max_bar_l1_excess <= 1e-10
            and self.max_star_hyperplane_error <= 1e-10
            and self.max_star_l1_excess <= 1e-9
        )


def sweep_transform(runs=1000, seed=0, reverse=False, eps=0.3):
    """Randomized soundness check of :func:`transform_bar_star`.

    With ``reverse=True`` the start point lies in ``A2`` and is carried to
    ``A1`` around the pivot of the true ``mu_d``, under the perturbation bound
    ``min(eps, eps^3 / (2 + eps^2))`` on that pivot coordinate and
    ``c > eps + 1/max_j |mu_d_j|``.
    """
    rng = np.random.default_rng(seed)
    stats = np.zeros(4)
    failures = gap_failures = 0
    for _ in range(runs):
        mu_d, c = _random_instance(rng)
        sigma = _random_psd(rng, mu_d.size)
        j = int(np.argmax(np.abs(mu_d)))
        if reverse:
            mu_d *= max(1.0, (eps + 0.1) / linf(mu_d))
            c = eps + 1.0 / linf(mu_d) + rng.uniform(0.01, 1.0)
            small = min(eps, eps**3 / (2 + eps**2), eps / (2 * c * c))
            tau = rng.uniform(0.01, 0.99) * small
            mu_hat = mu_d + rng.uniform(-tau, tau, size=mu_d.size)
            # stated consequence of the smallness condition
            if np.sign(mu_hat[j]) != np.sign(mu_d[j]) or c - 1.0 / abs(mu_hat[j]) <= eps / 2:
                failures += 1
                continue
            w = random_point_a1(rng, mu_hat, c)
            start, target = mu_hat, mu_d
        else:
            tau = rng.uniform(0.01, 0.99) * (c - 1.0 / abs(mu_d[j])) / c**2
            mu_hat = mu_d + rng.uniform(-tau, tau, size=mu_d.size)
            w = random_point_a1(rng, mu_d, c)
            start, target = mu_d, mu_hat
        try:
            rep = transform_bar_star(w, start, target, c, sigma=sigma, pivot=j)
        except RoadError:
            failures += 1
            continue
        stats = np.maximum(
            stats,
            [rep.bar_hyperplane_error, rep.bar_l1 - c, rep.star_hyperplane_error, rep.star_l1 - c],
        )
        gap_failures += not rep.gaps_hold
    return TransformSweep(runs, failures, *map(float, stats), gap_failures)


def sweep_gap_bound(pairs=500, seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    for _ in range(pairs):
        p = int(rng.integers(2, 9))
        c = rng.uniform(0.5, 5.0)
        sigma = _random_psd(rng, p)
        w, w_bar = (c * rng.uniform() * v / l1(v) for v in rng.normal(size=(2, p)))
        checks.append(quadratic_gap_bound(w, w_bar, sigma, c))
    return _summarize("gap", checks)


@dataclass
class ChainTerm:
    name: str
    lhs: float = np.nan
    bound: float = np.nan
    holds: bool = False
    error: str = ""


@dataclass
class ChainReport:
    terms: list
    a: float
    w_hat: np.ndarray = None
    w_c1: np.ndarray = None
    w_c: np.ndarray = None

    @property
    def all_hold(self):
        return all(t.holds for t in self.terms)

    def __getitem__(self, name):
        return next(t for t in self.terms if t.name == name)


def error_chain_audit(truth, estimates, c, method="auto"):
    """Evaluate each link of the plug-in error chain against its bound.

    Terms: ``mean_shift`` ``|w_hat'(mu1_hat - mu1)| <= c ||mu1_hat - mu1||_inf``;
    ``sigma_swap`` ``|w_hat'Sigma w_hat - w_hat'Sigma_hat w_hat| <= c^2 ||Sigma_hat - Sigma||_max``;
    ``min_swap`` ``|w_hat'Sigma_hat w_hat - w_c1'Sigma w_c1| <= c^2 ||Sigma_hat - Sigma||_max``;
    ``regret`` ``|W(rule_hat) - W(oracle)| <= c^2 a (1 + c^2 ||Sigma||_max)``.
    Here ``w_hat`` minimizes over ``(Sigma_hat, mu_hat_d)``, ``w_c1`` over
    ``(Sigma, mu_hat_d)`` and ``w_c`` over ``(Sigma, mu_d)``. A subproblem
    that is infeasible marks the dependent terms with an error instead of
    raising.
    """
    sigma = truth.sigma
    ds = linf_mat(estimates.sigma_hat - sigma)
    dm1 = linf(estimates.mu1_hat - truth.mu1)
    dm2 = linf(estimates.mu2_hat - truth.mu2)
    a = max(ds, dm1, dm2)

    def attempt(s, m):
        try:
            return solve(RoadProblem(s, m, c), method=method).w, ""
        except RoadError as exc:
            return None, str(exc)

    w_hat, err_hat = attempt(estimates.sigma_hat, estimates.mu_d_hat)
    w_c1, err_c1 = attempt(sigma, estimates.mu_d_hat)
    w_c, err_c = attempt(sigma, truth.mu_d)

    terms = [ChainTerm(n) for n in ("mean_shift", "sigma_swap", "min_swap", "regret")]

    def fill(term, lhs, bound):
        term.lhs, term.bound = float(lhs), float(bound)
        term.holds = bool(term.lhs <= term.bound + CHAIN_TOL)

    if w_hat is None:
        for t in terms:
            t.error = err_hat
    else:
        fill(terms[0], abs(w_hat @ (estimates.mu1_hat - truth.mu1)), c * dm1)
        q_true = w_hat @ sigma @ w_hat
        q_hat = w_hat @ estimates.sigma_hat @ w_hat
        fill(terms[1], abs(q_true - q_hat), c * c * ds)
        if w_c1 is None:
            terms[2].error = err_c1
        else:
            fill(terms[2], abs(q_hat - w_c1 @ sigma @ w_c1), c * c * ds)
        if w_c is None:
            terms[3].error = err_c
        else:
            w_rate = conditional_error_rates(w_hat, estimates.mu_a_hat, truth)[2]
            fill(terms[3], abs(w_rate - oracle_rate(w_c, truth)), c * c * a * (1 + c * c * linf_mat(sigma)))
    return ChainReport(terms, a, w_hat, w_c1, w_c)
