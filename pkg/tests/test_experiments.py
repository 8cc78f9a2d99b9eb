import io

import numpy as np
import pytest

from road import experiments as ex
from road.exceptions import InsufficientDataError, RoadError
from road.model import conditional_error_rates, oracle_rate

AN_100_2 = 0.08325546111576978  # sqrt(log 2 / 100)


def test_default_an():
    assert ex.default_an(100, 2) == pytest.approx(AN_100_2, abs=1e-15)
    assert ex.default_an(100, 1) == ex.default_an(100, 2)
    assert ex.default_an(400, 50) == pytest.approx(np.sqrt(np.log(50) / 400))
    with pytest.raises(RoadError):
        ex.default_an(1, 2)


def test_envelope():
    assert ex.envelope(1.25, 0.1, [[1, 1], [1, 2]]) == pytest.approx(1.5625 * 0.1 * (1 + 1.5625 * 2))


def test_models():
    a = ex.two_dim_model(3.0)
    np.testing.assert_array_equal(a.mu_d, [1, 0])
    assert a.sigma[1, 1] == 3
    b = ex.band_model(p=6)
    assert b.p == 6 and b.sigma[0, 1] == 0.3 and b.sigma[0, 2] == 0


@pytest.mark.parametrize(
    "kwargs",
    [{"c": 1.01}, {"n_grid": (100, 50)}, {"n_grid": (2, 10)}, {"n_grid": ()}, {"reps": 0}],
)
def test_config_validation(kwargs):
    base = {"truth": ex.two_dim_model(), "c": 1.25, "n_grid": (50, 100), "reps": 2}
    with pytest.raises(RoadError):
        ex.ConvergenceConfig(**{**base, **kwargs})


def _records(ns, meds, reps=11, failed_every=0):
    out = []
    for n, m in zip(ns, meds):
        for r in range(reps):
            failed = bool(failed_every) and r % failed_every == 0
            out.append(ex.RegretRecord(n, r, np.nan, 0.1, np.nan if failed else m, 0.0, failed))
    return out


@pytest.mark.parametrize("alpha", [-0.5, -1.0])
def test_fit_slope_recovers_power_law(alpha):
    ns = [100, 200, 400, 800]
    recs = _records(ns, [3.0 * n**alpha for n in ns])
    assert ex.fit_slope(recs) == pytest.approx(alpha, abs=1e-12)


def test_fit_slope_needs_enough_points():
    with pytest.raises(InsufficientDataError):
        ex.fit_slope(_records([100, 200], [0.1, 0.05]))
    with pytest.raises(InsufficientDataError):
        ex.fit_slope(_records([100, 200, 400], [0.1, 0.05, 0.02], reps=11, failed_every=2))
    with pytest.raises(InsufficientDataError):
        ex.fit_slope(_records([100, 200, 400], [0.1, 0.0, 0.02]))


def test_count_inversions():
    assert ex.count_inversions([3, 2, 2, 1]) == 0
    assert ex.count_inversions([3, 4, 2, 5]) == 2


def test_summary_and_exceedance():
    recs = _records([10, 20], [0.2, 0.1], reps=4, failed_every=2)
    rows = ex.summarize(recs)
    assert [r["n"] for r in rows] == [10, 20]
    assert rows[0]["median_abs_regret"] == pytest.approx(0.2)
    assert rows[0]["fail_frac"] == 0.5
    exc = ex.envelope_exceedance(recs, const=1.0)
    assert exc == {10: 1.0, 20: 1.0}


def test_oracle_record_has_zero_regret_at_truth():
    truth = ex.two_dim_model()
    sol = ex.oracle_solution(truth, 1.25)
    rate = conditional_error_rates(sol.w, truth.mu_a, truth)[2]
    assert abs(rate - oracle_rate(sol.w, truth)) == 0


def test_replicate_is_reproducible_and_thread_independent():
    cfg = ex.ConvergenceConfig(ex.two_dim_model(), 1.25, (50, 100), reps=4, seed=3)
    one = ex.run_convergence(cfg, threads=1)
    two = ex.run_convergence(cfg, threads=2)
    assert one == two
    assert [(r.n, r.replicate) for r in one] == [(n, k) for n in (50, 100) for k in range(4)]
    assert all(r.d_n == pytest.approx(ex.envelope(1.25, ex.default_an(r.n, 2), cfg.truth.sigma)) for r in one)


def test_regret_shrinks_with_n():
    cfg = ex.ConvergenceConfig(ex.two_dim_model(), 1.5, (200, 800), reps=40, seed=0)
    rows = ex.summarize(ex.run_convergence(cfg))
    assert rows[1]["median_abs_regret"] < rows[0]["median_abs_regret"]
    assert all(r["fail_frac"] == 0 for r in rows)


def test_csv_writers():
    recs = _records([10], [0.25], reps=2)
    buf = io.StringIO()
    ex.write_records_csv(recs, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,replicate,w_hat_rate,oracle_rate,abs_regret,d_n,failed"
    assert lines[1] == "10,0,nan,0.1,0.25,0.0,0"
    buf = io.StringIO()
    ex.write_summary_csv(ex.summarize(recs), buf)
    assert buf.getvalue().splitlines() == ["n,median_abs_regret,q90_abs_regret,d_n,fail_frac", "10,0.25,0.25,0.0,0.0"]


def test_plot(tmp_path):
    pytest.importorskip("matplotlib")
    path = tmp_path / "r.svg"
    ex.plot_regret(ex.summarize(_records([10, 20, 40], [0.3, 0.2, 0.1])), path)
    text = path.read_text()
    assert text.startswith("<?xml") and "<svg" in text
