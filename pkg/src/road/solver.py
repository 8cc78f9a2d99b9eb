"""Solvers for the ROAD program

    minimize  w' Sigma w   subject to  w' mu_d = 1,  ||w||_1 <= c.

Two independent routes are provided. :func:`solve_exact` enumerates KKT
systems over supports and sign patterns and is the reference for small ``p``.
:func:`solve_projected_gradient` scales to large ``p`` and restores feasibility
after each gradient step with Dykstra's algorithm. Both return a
:class:`RoadSolution` certified by :func:`kkt_residual`.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from ._validation import as_sym_matrix, as_vector
from .exceptions import (
    ConstraintViolationError,
    ConvergenceWarning,
    InfeasibleProblemError,
    RoadError,
)
from .model import l1, linf

P_MAX = 12
FEAS_TOL = 1e-9
SIGN_TOL = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class RoadProblem:
    sigma: np.ndarray
    mu_d: np.ndarray
    c: float

    def __post_init__(self):
        mu_d = as_vector(self.mu_d, "mu_d")
        sigma = as_sym_matrix(self.sigma, "sigma", p=mu_d.size)
        if not np.any(mu_d):
            raise RoadError("mu_d must be nonzero")
        c = float(self.c)
        if not c > 0:
            raise RoadError(f"L1 budget c must be positive, got {c}")
        threshold = 1.0 / linf(mu_d)
        if c < threshold - 1e-12:
            raise InfeasibleProblemError(
                f"c = {c:.6g} < 1/||mu_d||_inf = {threshold:.6g}: no feasible direction"
            )
        object.__setattr__(self, "mu_d", mu_d)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "c", c)

    @property
    def p(self):
        return self.mu_d.size

    @property
    def margin(self):
        """``c - 1/||mu_d||_inf``; callers check this against their own slack."""
        return self.c - min_l1_on_hyperplane(self.mu_d)

    def objective(self, w):
        return float(w @ self.sigma @ w)


@dataclass(frozen=True)
class RoadSolution:
    w: np.ndarray
    objective: float
    l1_norm: float
    l1_active: bool
    kkt_residual: float
    method: str
    converged: bool = True
    iterations: int = 0


def min_l1_on_hyperplane(mu_d):
    """Smallest L1 norm on ``{w : w' mu_d = 1}``, attained at ``e_j / mu_d_j`` for the largest ``|mu_d_j|``."""
    mu_d = as_vector(mu_d, "mu_d")
    m = linf(mu_d)
    if m == 0:
        raise RoadError("mu_d must be nonzero")
    return 1.0 / m


def project_l1_ball(v, c):
    """Euclidean projection onto ``{w : ||w||_1 <= c}`` by sort-and-threshold."""
    v = np.asarray(v, dtype=float)
    if not c > 0:
        raise RoadError(f"radius must be positive, got {c}")
    a = np.abs(v)
    if a.sum() <= c:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - c)[0][-1]
    theta = (css[rho] - c) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_hyperplane(v, mu_d):
    """Euclidean projection onto ``{w : w' mu_d = 1}``."""
    return v - (mu_d @ v - 1.0) * mu_d / (mu_d @ mu_d)


def dykstra_project(v, mu_d, c, tol=1e-10, max_rounds=10_000):
    """Project ``v`` onto the hyperplane/L1-ball intersection with Dykstra's algorithm.

    Returns ``(x, rounds, residual)``. ``x`` lies exactly on the hyperplane;
    ``residual`` is its L1 excess ``max(0, ||x||_1 - c)``.
    """
    x = np.asarray(v, dtype=float).copy()
    p_inc = np.zeros_like(x)
    q_inc = np.zeros_like(x)
    residual = np.inf
    scale = 1.0 + linf(x)
    for rounds in range(1, max_rounds + 1):
        y = project_l1_ball(x + p_inc, c)
        p_inc = x + p_inc - y
        x_prev = x
        x = project_hyperplane(y + q_inc, mu_d)
        q_inc = y + q_inc - x
        residual = max(0.0, l1(x) - c)
        # feasibility alone can occur before the iterates settle on the projection
        if residual <= tol and linf(x - x_prev) <= tol * scale:
            break
    return x, rounds, residual


def power_iteration(sigma, n_iter=50):
    """Largest-eigenvalue estimate by ``n_iter`` power steps from a fixed start."""
    p = sigma.shape[0]
    x = np.ones(p) + np.linspace(0.0, 0.5, p)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(n_iter):
        y = sigma @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        lam = float(x @ y)
        x = y / norm
    return max(lam, float(x @ sigma @ x))


def _is_positive_definite(sigma):
    try:
        factor = linalg.cholesky(sigma, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return False
    d = np.abs(np.diag(factor))
    return d.min() > 1e-10 * d.max()


def _finish(problem, w, method, converged=True, iterations=0):
    w = np.asarray(w, dtype=float)
    norm = l1(w)
    return RoadSolution(
        w=w,
        objective=problem.objective(w),
        l1_norm=norm,
        l1_active=bool(norm >= problem.c - 1e-9),
        kkt_residual=kkt_residual(problem, w),
        method=method,
        converged=converged,
        iterations=iterations,
    )


def _batched_solve(mats, rhs):
    try:
        return np.linalg.solve(mats, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return (np.linalg.pinv(mats) @ rhs[..., None])[..., 0]


def solve_exact(problem, p_max=P_MAX):
    """Global minimizer by KKT enumeration.

    If ``Sigma`` is positive definite and the normalized Fisher direction fits
    the budget, that is the answer. Otherwise every support ``S`` and sign
    pattern ``s`` gives an equality-constrained QP with ``mu_S' w = 1`` and
    ``s' w = c``; its KKT solution is kept when sign-consistent, and the
    lowest objective wins (ties broken by the lexicographically smallest sign
    pattern). For singular ``Sigma`` the equality-only KKT point on every
    support is also a candidate, since the optimum may then lie inside the ball.
    """
    p, c = problem.p, problem.c
    if p > p_max:
        raise RoadError(f"p = {p} exceeds p_max = {p_max} for exact enumeration")
    sigma, mu = problem.sigma, problem.mu_d

    pd = _is_positive_definite(sigma)
    if pd:
        v = linalg.cho_solve(linalg.cho_factor(sigma, lower=True), mu)
        w = v / (v @ mu)
        if l1(w) <= c:
            return _finish(problem, w, "exact")

    best_obj, best_key, best_w = np.inf, None, None

    def consider(objs, keys, ws):
        nonlocal best_obj, best_key, best_w
        for obj, key, w in zip(objs, keys, ws):
            if obj < best_obj - TIE_TOL or (obj <= best_obj + TIE_TOL and key < best_key):
                best_obj, best_key, best_w = min(obj, best_obj), key, w

    for k in range(1, p + 1):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k)))
        for support in itertools.combinations(range(p), k):
            idx = np.array(support)
            s_sub, mu_s = sigma[np.ix_(idx, idx)], mu[idx]
            if not np.any(mu_s):
                continue
            n = signs.shape[0]
            mats = np.zeros((n, k + 2, k + 2))
            mats[:, :k, :k] = 2.0 * s_sub
            mats[:, :k, k] = mu_s
            mats[:, k, :k] = mu_s
            mats[:, :k, k + 1] = signs
            mats[:, k + 1, :k] = signs
            rhs = np.zeros((n, k + 2))
            rhs[:, k] = 1.0
            rhs[:, k + 1] = c
            sol = _batched_solve(mats, rhs)
            resid = np.max(np.abs(np.einsum("nij,nj->ni", mats, sol) - rhs), axis=1)
            ws = sol[:, :k]
            ok = (
                (resid <= 1e-9 * max(1.0, c))
                & np.all(signs * ws >= -SIGN_TOL, axis=1)
                & np.all(np.isfinite(ws), axis=1)
            )
            if not pd:
                # equality-only candidate on this support
                m2 = np.zeros((k + 1, k + 1))
                m2[:k, :k] = 2.0 * s_sub
                m2[:k, k] = mu_s
                m2[k, :k] = mu_s
                r2 = np.zeros(k + 1)
                r2[k] = 1.0
                x2 = np.linalg.lstsq(m2, r2, rcond=None)[0]
                if np.max(np.abs(m2 @ x2 - r2)) <= 1e-9 and l1(x2[:k]) <= c + SIGN_TOL:
                    full = np.zeros(p)
                    full[idx] = x2[:k]
                    consider([float(full @ sigma @ full)], [tuple(np.sign(full))], [full])
            if not np.any(ok):
                continue
            full = np.zeros((int(ok.sum()), p))
            full[:, idx] = ws[ok]
            objs = np.einsum("ni,ij,nj->n", full, sigma, full)
            keys = [tuple(_expand(sg, idx, p)) for sg in signs[ok]]
            consider(objs, keys, full)

    if best_w is None:
        warnings.warn(
            "every KKT system was singular or infeasible; falling back to projected gradient",
            ConvergenceWarning,
            stacklevel=2,
        )
        return solve_projected_gradient(problem)
    return _finish(problem, best_w, "exact")


def _expand(sg, idx, p):
    out = np.zeros(p)
    out[idx] = sg
    return out


def solve_projected_gradient(problem, tol=1e-12, max_iter=50_000):
    """Projected gradient descent with fixed step ``1 / (2 * lambda_max)``.

    ``lambda_max`` comes from 50 power-iteration steps, inflated by 5%.
    Feasibility is restored after every step by :func:`dykstra_project`.
    Stops once the objective decrease falls below ``tol`` with both
    constraints satisfied to ``1e-9``; otherwise the returned solution has
    ``converged=False`` and a :class:`ConvergenceWarning` is emitted.
    """
    if not tol > 0:
        raise RoadError("tol must be positive")
    sigma, mu, c = problem.sigma, problem.mu_d, problem.c
    j = int(np.argmax(np.abs(mu)))
    w = np.zeros(problem.p)
    w[j] = 1.0 / mu[j]
    lam = 1.05 * power_iteration(sigma)
    if lam <= 0:
        return _finish(problem, w, "projected_gradient")
    step = 1.0 / (2.0 * lam)
    f = problem.objective(w)
    converged = False
    for it in range(1, max_iter + 1):
        w_new, _, excess = dykstra_project(w - step * 2.0 * (sigma @ w), mu, c)
        f_new = problem.objective(w_new)
        decrease = f - f_new
        w, f = w_new, f_new
        if abs(decrease) < tol and excess <= FEAS_TOL and abs(mu @ w - 1.0) <= FEAS_TOL:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"projected gradient stopped after {max_iter} iterations without meeting tol={tol:g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return _finish(problem, w, "projected_gradient", converged=converged, iterations=it)


def solve(problem, method="auto", **kwargs):
    """Dispatch to the exact solver for ``p <= P_MAX`` and to projected gradient otherwise."""
    if method == "auto":
        method = "exact" if problem.p <= P_MAX else "projected_gradient"
    if method == "exact":
        return solve_exact(problem, **kwargs)
    if method == "projected_gradient":
        return solve_projected_gradient(problem, **kwargs)
    raise RoadError(f"unknown method {method!r}")


def _stationarity(a, mu, support, signs, lam, nu):
    """Max residual of ``a - lam*mu + nu*g`` with the best ``g`` off the support."""
    r = a - lam * mu
    out = np.empty_like(r)
    out[support] = r[support] + nu * signs[support]
    off = ~support
    out[off] = r[off] - np.clip(r[off], -nu, nu)
    return float(np.max(np.abs(out)))


def kkt_residual(problem, w, support_tol=1e-7):
    """First-order optimality residual of a feasible ``w``.

    Minimizes ``||2 Sigma w - lam*mu_d + nu*g||_inf + nu * (c - ||w||_1)``
    over ``lam``, ``nu >= 0`` and subgradients ``g`` of the L1 norm
    (``g_i = sign(w_i)`` where ``|w_i| > support_tol``, ``|g_i| <= 1``
    elsewhere). The minimization is a small LP; a least-squares fit of
    ``(lam, nu)`` on the support is tried as well and the smaller value is
    returned. Zero certifies optimality.
    """
    w = as_vector(w, "w", p=problem.p)
    mu, c = problem.mu_d, problem.c
    norm = l1(w)
    if abs(w @ mu - 1.0) > 1e-6 or norm > c + 1e-6:
        raise ConstraintViolationError(
            f"w is infeasible: w'mu_d - 1 = {w @ mu - 1.0:.3g}, ||w||_1 - c = {norm - c:.3g}"
        )
    a = 2.0 * problem.sigma @ w
    support = np.abs(w) > support_tol
    signs = np.sign(w)
    slack = max(0.0, c - norm)

    candidates = []
    # least squares on the support rows
    A = np.column_stack([mu[support], -signs[support]])
    lam, nu = np.linalg.lstsq(A, a[support], rcond=None)[0]
    if nu < 0:
        nu = 0.0
        denom = mu[support] @ mu[support]
        lam = (mu[support] @ a[support]) / denom if denom > 0 else 0.0
    candidates.append((lam, nu))

    # exact L-infinity minimization: variables t, lam, nu, h_off
    off = np.nonzero(~support)[0]
    sup = np.nonzero(support)[0]
    m = off.size
    nvar = 3 + m
    cost = np.zeros(nvar)
    cost[0] = 1.0
    cost[2] = slack
    rows, rhs = [], []
    for i in sup:
        for sgn in (1.0, -1.0):
            row = np.zeros(nvar)
            row[0], row[1], row[2] = -1.0, -sgn * mu[i], sgn * signs[i]
            rows.append(row)
            rhs.append(-sgn * a[i])
    for k, i in enumerate(off):
        for sgn in (1.0, -1.0):
            row = np.zeros(nvar)
            row[0], row[1], row[3 + k] = -1.0, -sgn * mu[i], -sgn
            rows.append(row)
            rhs.append(-sgn * a[i])
            row = np.zeros(nvar)
            row[2], row[3 + k] = -1.0, sgn
            rows.append(row)
            rhs.append(0.0)
    bounds = [(0, None), (None, None), (0, None)] + [(None, None)] * m
    res = linprog(
        cost,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 0:
        candidates.append((res.x[1], max(res.x[2], 0.0)))

    return min(_stationarity(a, mu, support, signs, lam, nu) + nu * slack for lam, nu in candidates)
