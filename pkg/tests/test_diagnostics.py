import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lisretrieval import diagnostics as dg
from lisretrieval.errors import DimensionError


def ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi**2)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + e[i]
    return x


def naive_autocorr(x, k):
    x = x - x.mean()
    return float(x[:-k] @ x[k:] / (x @ x)) if k else 1.0


def test_autocorr_matches_direct_sum(rng):
    x = rng.normal(size=300)
    rho = dg.autocorr(x, max_lag=10)
    np.testing.assert_allclose(rho, [naive_autocorr(x, k) for k in range(11)], atol=1e-12)


def test_autocorr_cases(rng):
    n = 10_000
    rho = dg.autocorr(rng.normal(size=n), max_lag=20)
    assert rho[0] == pytest.approx(1.0)
    assert np.all(np.abs(rho[1:]) < 3 / np.sqrt(n))
    alt = np.tile([1.0, -1.0], 500)
    assert dg.autocorr(alt, 1)[1] == pytest.approx(-1.0, abs=2e-3)
    assert dg.autocorr(ar1(0.9, 100_000, 0), 1)[1] == pytest.approx(0.9, abs=0.02)
    with pytest.raises(ValueError):
        dg.autocorr(np.ones(10))
    with pytest.raises(ValueError):
        dg.autocorr(np.ones(1))


def test_ess_cases(rng):
    n = 100_000
    assert dg.ess(rng.normal(size=n)) == pytest.approx(n, rel=0.1)
    assert dg.ess(ar1(0.9, n, 1)) / n == pytest.approx(0.1 / 1.9, rel=0.2)
    assert dg.ess(np.tile([1.0, -1.0], 500)) == 1000


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50).filter(lambda a: abs(a) > 1e-3), st.floats(-100, 100))
def test_ess_affine_invariance(a, b):
    x = ar1(0.5, 2000, 3)
    assert dg.ess(a * x + b) == pytest.approx(dg.ess(x), rel=1e-9)


def test_sample_speed():
    assert dg.sample_speed(100, 10.0) == 10.0
    np.testing.assert_array_equal(dg.sample_speed(np.array([10.0, 20.0]), 2.0), [5.0, 10.0])
    with pytest.raises(ValueError):
        dg.sample_speed(1.0, 0.0)


def test_ess_report(rng):
    x = np.column_stack([rng.normal(size=5000), ar1(0.9, 5000, 2), np.ones(5000)])
    rep = dg.ess_report(x, 2.0)
    assert rep.n_eff[2] == 5000
    assert rep.min_n_eff == rep.n_eff[1]
    assert rep.speed == pytest.approx(rep.n_eff[1] / 2.0)
    assert np.all((rep.n_eff > 0) & (rep.n_eff <= 5000))


def test_histogram_contract():
    with pytest.raises(ValueError):
        dg.Histogram(np.array([0.0, 1.0, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        dg.Histogram(np.array([0.0, 1.0, 2.0]), np.array([0.6, 0.6]))
    with pytest.raises(DimensionError):
        dg.Histogram(np.array([0.0, 1.0]), np.array([0.5, 0.5]))


def test_histograms(rng):
    const = dg.marginal_histograms([np.full((10, 1), 3.0)])[0][0]
    np.testing.assert_array_equal(const.masses, [1.0])
    x = rng.normal(size=(100_000, 1))
    h = dg.marginal_histograms([x])[0][0]
    assert h.masses.sum() == pytest.approx(1.0) and h.masses.size == 50
    centers = 0.5 * (h.bin_edges[1:] + h.bin_edges[:-1])
    mu = h.masses @ centers
    sd = np.sqrt(h.masses @ (centers - mu) ** 2)
    assert abs(h.masses @ ((centers - mu) / sd) ** 3) < 0.1
    a, b = dg.marginal_histograms([x, rng.normal(1.0, 1.0, size=(500, 1))])
    np.testing.assert_array_equal(a[0].bin_edges, b[0].bin_edges)
    with pytest.raises(ValueError):
        dg.marginal_histograms([np.empty((0, 2))])
    with pytest.raises(DimensionError):
        dg.marginal_histograms([np.zeros((3, 2)), np.zeros((3, 1))])


def test_outliers_go_to_end_bins():
    h = dg.histogram([-100.0, 0.5, 100.0], np.array([0.0, 1.0, 2.0]))
    np.testing.assert_allclose(h.masses, [2 / 3, 1 / 3])


def test_hellinger_cases():
    e = np.array([0.0, 1.0, 2.0])
    p, q = dg.Histogram(e, np.array([1.0, 0.0])), dg.Histogram(e, np.array([0.5, 0.5]))
    assert dg.hellinger(p, q) == pytest.approx(np.sqrt(2 - np.sqrt(2)) / np.sqrt(2), abs=1e-12)
    assert dg.hellinger(p, q) == pytest.approx(0.541196, abs=1e-6)
    assert dg.hellinger(p, p) == 0.0
    assert dg.hellinger(p, dg.Histogram(e, np.array([0.0, 1.0]))) == 1.0
    with pytest.raises(ValueError):
        dg.hellinger(p, dg.Histogram(np.array([0.0, 1.0, 3.0]), np.array([1.0, 0.0])))


def masses(k):
    return st.lists(st.floats(0, 1), min_size=k, max_size=k).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: np.array(v) / sum(v))


@settings(max_examples=200, deadline=None)
@given(masses(6), masses(6), masses(6))
def test_hellinger_metric_axioms(a, b, c):
    e = np.arange(7.0)
    p, q, r = (dg.Histogram(e, m / m.sum()) for m in (a, b, c))
    pq, qp = dg.hellinger(p, q), dg.hellinger(q, p)
    assert pq == qp and 0.0 <= pq <= 1.0
    assert dg.hellinger(p, r) <= pq + dg.hellinger(q, r) + 1e-12


def test_posterior_hellinger(rng):
    a = rng.normal(size=(100_000, 3))
    assert dg.split_half_hellinger(a) < 0.05
    assert dg.posterior_hellinger(a, a) == 0.0
    b = rng.normal(size=(20_000, 3)) + np.array([0.0, 0.0, 30.0])
    per = dg.marginal_hellinger(a, b)
    assert per[2] > 0.99 and per[0] < 0.05
    assert dg.posterior_hellinger(a, b) == pytest.approx(per.mean())
    with pytest.raises(DimensionError):
        dg.posterior_hellinger(a, b[:, :2])


def test_sample_hellinger_tracks_analytic_linear_lis():
    from lisretrieval.linear import exact_posterior, lis_posterior, random_linear_problem
    from lisretrieval.lis import build_lis, whitened_jacobian

    problem, _ = random_linear_problem(n=6, seed=1)
    exact = exact_posterior(problem)
    ref = exact.sample(50_000, seed=1)
    jt = whitened_jacobian(problem.prior.mean, problem)
    h = [dg.posterior_hellinger(ref, lis_posterior(problem, build_lis(jt, problem.prior, rank=r))
                                .sample(50_000, seed=2)) for r in (1, 3, 6)]
    floor = dg.split_half_hellinger(exact.sample(100_000, seed=3))
    assert h[0] > h[1] > h[2] and h[2] < max(floor, 0.05)


def test_envelope(rng):
    x = rng.normal(size=(200_000, 2))
    env = dg.envelope(x)
    assert env.shape == (2, 3)
    np.testing.assert_allclose(env[:, 1:], [[-1.96, 1.96]] * 2, atol=0.03)
