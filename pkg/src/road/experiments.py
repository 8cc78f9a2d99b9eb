"""Monte Carlo check that the regret ``|W(fitted rule) - W(oracle rule)|`` shrinks with ``n``."""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimators import fit_estimates, gen_synthetic
from .exceptions import InfeasibleProblemError, InsufficientDataError, RoadError
from .model import GaussianPair, conditional_error_rates, linf, linf_mat, oracle_rate
from .solver import RoadProblem, solve

ENVELOPE_CONST = 50.0


def two_dim_model(sigma=2.0):
    """``mu_d = (1, 0)``, ``Sigma = [[1, 1], [1, sigma]]``, centred at the origin."""
    return GaussianPair.from_mu_d([1.0, 0.0], [[1.0, 1.0], [1.0, sigma]])


def band_model(p=50, rho=0.3, signal=0.5):
    """Tridiagonal ``Sigma = I + rho * (band-1)`` with ``mu_d = signal * e_1``."""
    sigma = np.eye(p) + rho * (np.eye(p, k=1) + np.eye(p, k=-1))
    mu_d = np.zeros(p)
    mu_d[0] = signal
    return GaussianPair.from_mu_d(mu_d, sigma)


@dataclass(frozen=True)
class ConvergenceConfig:
    truth: GaussianPair
    c: float
    n_grid: tuple
    reps: int
    seed: int = 0
    method: str = "auto"

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or min(grid) < 4 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise RoadError(f"n_grid must be increasing with every n >= 4, got {grid}")
        if self.reps < 1:
            raise RoadError("reps must be positive")
        margin = self.c - 1.0 / linf(self.truth.mu_d)
        if margin < 0.05:
            raise RoadError(f"c - 1/||mu_d||_inf = {margin:.4g} is below the required margin 0.05")
        object.__setattr__(self, "n_grid", grid)


@dataclass(frozen=True)
class RegretRecord:
    n: int
    replicate: int
    w_hat_rate: float
    oracle_rate: float
    abs_regret: float
    d_n: float
    failed: bool = False


def default_an(n, p):
    """``sqrt(log(max(p, 2)) / n)``, the sup-norm concentration rate of Gaussian means and covariances."""
    if n < 2:
        raise RoadError("n must be at least 2")
    return float(np.sqrt(np.log(max(p, 2)) / n))


def envelope(c, a_n, sigma):
    """``c^2 a_n (1 + c^2 ||Sigma||_max)``."""
    return c * c * a_n * (1 + c * c * linf_mat(sigma))


def oracle_solution(truth, c, method="auto"):
    return solve(RoadProblem(truth.sigma, truth.mu_d, c), method=method)


def run_replicate(config, n, replicate, w_c_rate):
    truth = config.truth
    d_n = envelope(config.c, default_an(n, truth.p), truth.sigma)
    ss = np.random.SeedSequence(config.seed, spawn_key=(n, replicate))
    est = fit_estimates(gen_synthetic(truth, n, ss))
    try:
        sol = solve(RoadProblem(est.sigma_hat, est.mu_d_hat, config.c), method=config.method)
    except InfeasibleProblemError:
        return RegretRecord(n, replicate, np.nan, w_c_rate, np.nan, d_n, failed=True)
    rate = conditional_error_rates(sol.w, est.mu_a_hat, truth)[2]
    return RegretRecord(n, replicate, rate, w_c_rate, abs(rate - w_c_rate), d_n)


def run_convergence(config, threads=1):
    """One :class:`RegretRecord` per ``(n, replicate)``, ordered by ``n`` then replicate.

    Each replicate draws from its own stream ``SeedSequence(seed, spawn_key=(n, replicate))``
    so results do not depend on ``threads``.
    """
    w_c = oracle_solution(config.truth, config.c, config.method)
    if w_c.method == "projected_gradient" and w_c.kkt_residual > 1e-5:
        raise RoadError(f"oracle solution is not certified (KKT residual {w_c.kkt_residual:.3g})")
    w_c_rate = oracle_rate(w_c.w, config.truth)
    jobs = [(n, r) for n in config.n_grid for r in range(config.reps)]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda job: run_replicate(config, *job, w_c_rate), jobs))
    return [run_replicate(config, n, r, w_c_rate) for n, r in jobs]


def _by_n(records):
    groups = {}
    for rec in records:
        groups.setdefault(rec.n, []).append(rec)
    return dict(sorted(groups.items()))


def summarize(records):
    """Per-``n`` rows: ``n, median_abs_regret, q90_abs_regret, d_n, fail_frac``."""
    rows = []
    for n, recs in _by_n(records).items():
        ok = np.array([r.abs_regret for r in recs if not r.failed])
        med = float(np.median(ok)) if ok.size else np.nan
        q90 = float(np.quantile(ok, 0.9)) if ok.size else np.nan
        fail = sum(r.failed for r in recs) / len(recs)
        rows.append({"n": n, "median_abs_regret": med, "q90_abs_regret": q90, "d_n": recs[0].d_n, "fail_frac": fail})
    return rows


def fit_slope(records, min_reps=10):
    """Least-squares slope of log(median regret) against log(n)."""
    ns, meds = [], []
    for n, recs in _by_n(records).items():
        ok = [r.abs_regret for r in recs if not r.failed]
        if len(ok) >= min_reps:
            ns.append(n)
            meds.append(np.median(ok))
    if len(ns) < 3:
        raise InsufficientDataError(f"need 3 sample sizes with >= {min_reps} successful replicates, got {len(ns)}")
    meds = np.asarray(meds)
    if np.any(meds <= 0):
        raise InsufficientDataError("median regret is zero; slope undefined")
    return float(np.polyfit(np.log(ns), np.log(meds), 1)[0])


def count_inversions(values):
    """Number of consecutive increases in a sequence that should be non-increasing."""
    v = np.asarray(values, dtype=float)
    return int(np.sum(np.diff(v) > 0))


def envelope_exceedance(records, const=ENVELOPE_CONST):
    """Fraction of successful replicates at each ``n`` with regret above ``const * d_n``."""
    out = {}
    for n, recs in _by_n(records).items():
        ok = [r for r in recs if not r.failed]
        out[n] = sum(r.abs_regret > const * r.d_n for r in ok) / len(ok) if ok else np.nan
    return out


def write_records_csv(records, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["n", "replicate", "w_hat_rate", "oracle_rate", "abs_regret", "d_n", "failed"])
    for r in records:
        writer.writerow(
            [r.n, r.replicate, repr(r.w_hat_rate), repr(r.oracle_rate), repr(r.abs_regret), repr(r.d_n), int(r.failed)]
        )


def write_summary_csv(rows, fh):
    fields = ["n", "median_abs_regret", "q90_abs_regret", "d_n", "fail_frac"]
    writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def plot_regret(rows, path):
    """Log-log plot of median regret against ``n`` with the ``d_n`` reference line, saved as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "road"
    n = [r["n"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(n, [r["median_abs_regret"] for r in rows], "o-", label="median |regret|")
    ax.loglog(n, [r["q90_abs_regret"] for r in rows], "s--", label="90% quantile")
    ax.loglog(n, [r["d_n"] for r in rows], "k:", label="d_n")
    ax.set_xlabel("n per group")
    ax.set_ylabel("|W(fitted) - W(oracle)|")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


