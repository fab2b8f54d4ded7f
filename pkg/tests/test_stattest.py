import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from gibbslines.avoid import AvoidanceSpec
from gibbslines.errors import DomainError
from gibbslines.fixtures import GIBBS_K3, POWER_SPEC, POWER_WINDOW, SYM, THREE_POINT
from gibbslines.stattest import (GibbsTestConfig, TestReport, binomial_ci, chi_square_gof, convergence_test,
                                 flat_hamiltonian, gibbs_resampling_test, ks_distance, ks_one_sample,
                                 ks_two_sample, resample_interior, scaled_endpoints)

# Wilson interval for 75 of 100 at 95%, evaluated at 30 digits
WILSON_75_100 = (0.656955364519383926, 0.824547886377123231)


def test_ks_examples():
    assert ks_two_sample([1, 2], [1, 2]).statistic == 0.0
    assert ks_two_sample([1, 2], [3, 4]).statistic == 1.0
    assert ks_two_sample([1, 2], [1.5, 2.5]).statistic == 0.5
    with pytest.raises(DomainError):
        ks_two_sample([], [1.0])


# integer values keep exp and arctan strictly increasing in floating point
samples = st.lists(st.integers(-100, 100).map(float), min_size=1, max_size=40)


@given(samples, samples)
def test_ks_symmetric_and_transform_invariant(a, b):
    d = ks_distance(a, b)
    assert d == ks_distance(b, a)
    assert d == pytest.approx(ks_distance(np.exp(np.asarray(a) / 50), np.exp(np.asarray(b) / 50)))
    assert d == pytest.approx(ks_distance(np.arctan(a), np.arctan(b)))


@given(samples, samples)
def test_ks_matches_scipy(a, b):
    assert ks_distance(a, b) == pytest.approx(sps.ks_2samp(a, b).statistic)


def test_ks_one_sample_matches_scipy(rng):
    x = rng.normal(size=500)
    rep = ks_one_sample(x, sps.norm.cdf)
    ref = sps.kstest(x, "norm")
    assert rep.statistic == pytest.approx(ref.statistic)
    assert rep.p_value == pytest.approx(ref.pvalue, abs=0.02)


def test_report_verdict():
    rep = TestReport("x", 0.1, 0.02, (10,), level=0.01)
    assert rep.passed and rep.verdict == "pass"
    assert not TestReport("x", 0.1, 0.005, (10,), level=0.01).passed
    assert TestReport("x", 0.1, 1.7, (10,)).p_value == 1.0


def test_wilson_fixture():
    lo, hi = binomial_ci(75, 100, 0.95)
    assert lo == pytest.approx(WILSON_75_100[0], abs=1e-12)
    assert hi == pytest.approx(WILSON_75_100[1], abs=1e-12)


def test_wilson_agrees_with_statsmodels():
    from statsmodels.stats.proportion import proportion_confint
    for hits, n, level in ((0, 100, 0.95), (3, 17, 0.9), (999, 1000, 0.99), (50, 50, 0.8)):
        ours = binomial_ci(hits, n, level)
        ref = proportion_confint(hits, n, 1 - level, method="wilson")
        assert ours == pytest.approx(ref, abs=1e-12)


def test_wilson_errors():
    assert binomial_ci(0, 100)[0] == 0.0
    with pytest.raises(DomainError):
        binomial_ci(101, 100)
    with pytest.raises(DomainError):
        binomial_ci(5, 10, 1.0)


@given(st.integers(1, 10_000), st.floats(0, 1), st.floats(0.5, 0.999))
def test_wilson_contains_phat(n, frac, level):
    hits = round(frac * n)
    lo, hi = binomial_ci(hits, n, level)
    assert 0 <= lo <= hits / n <= hi <= 1


def test_chi_square_matches_scipy():
    counts = np.array([18, 22, 30, 30])
    probs = np.array([0.2, 0.2, 0.3, 0.3])
    rep = chi_square_gof(counts, probs)
    ref = sps.chisquare(counts, probs * counts.sum())
    assert rep.statistic == pytest.approx(ref.statistic)
    assert rep.p_value == pytest.approx(ref.pvalue)
    assert chi_square_gof([5, 5, 1], [0.5, 0.5]).p_value == 0.0


def test_gibbs_config_validation():
    with pytest.raises(DomainError):
        GibbsTestConfig(GIBBS_K3, (-2, 2), (0, 2))
    with pytest.raises(DomainError):
        GibbsTestConfig(GIBBS_K3, (-9, 2), (0, 1))


def test_resample_interior_respects_boundaries(rng):
    S = 200
    x = np.tile([3, 1], (S, 1))
    y = np.tile([5, 3], (S, 1))
    upper = np.full((S, 5), 5.0)
    lower = np.tile(np.array([0, 0, 1, 1, 2], float), (S, 1))
    out = resample_interior(SYM, x, y, upper, lower, np.ones(5, bool), rng)
    assert np.all(out[:, 0] >= out[:, 1])
    assert np.all(out[:, 0] <= upper) and np.all(out[:, 1] >= lower)
    assert np.all(out[:, :, 0] == x) and np.all(out[:, :, -1] == y)


def test_gibbs_passes_on_k3(rng):
    cfg = GibbsTestConfig(GIBBS_K3, (-2, 2), (0, 1), n_samples=6000)
    assert gibbs_resampling_test(SYM, cfg, rng).passed


def test_gibbs_self_pvalues_uniform():
    pv = []
    for seed in range(25):
        cfg = GibbsTestConfig(GIBBS_K3, (-4, 4), (0, 0), n_samples=2000, statistic="area")
        pv.append(gibbs_resampling_test(SYM, cfg, np.random.default_rng(seed)).p_value)
    assert sps.kstest(pv, "uniform").pvalue > 0.01


def test_gibbs_detects_flat_interior(rng):
    cfg = GibbsTestConfig(POWER_SPEC, POWER_WINDOW, (0, 1), n_samples=6000, interior_sampler="flat")
    assert not gibbs_resampling_test(THREE_POINT, cfg, rng).passed


def test_flat_hamiltonian():
    flat = flat_hamiltonian(THREE_POINT)
    assert flat.weights == pytest.approx((1 / 3,) * 3)
    assert flat.support == THREE_POINT.support


def test_scaled_endpoints():
    xs, ys = scaled_endpoints(SYM, 0.5, (1, -1), (1, -1), 64)
    assert xs == (4, -4) and ys == (36, 28)


def test_convergence_k1_gaussian(rng):
    res = convergence_test(SYM, 0.5, 1, [0.0], [0.0], [128, 512], 0.5, 4000, rng, reference="gaussian")
    assert res.final_p > 0.01
    assert len(res.successive) == 1


def test_convergence_wrong_sigma_rejected(rng):
    res = convergence_test(SYM, 0.5, 1, [0.0], [0.0], [512], 0.5, 4000, rng, reference="gaussian",
                           sigma=1.0)
    assert res.final_p < 0.01 and not res.passed


def test_convergence_k2_small(rng):
    res = convergence_test(SYM, 0.5, 2, [1.0, -1.0], [1.0, -1.0], [64, 256], 0.5, 3000, rng,
                           n_reference=3000, reference_m=128)
    assert res.reports[-1].p_value > 0.001
    assert all(0 <= d <= 1 for d in res.distances)
    assert res.to_dict()["metadata"]["matched"]


def test_convergence_argument_checks(rng):
    with pytest.raises(DomainError):
        convergence_test(SYM, 0.5, 2, [0.0, 1.0], [1, -1], [64], 0.5, 10, rng, reference="gaussian")
    with pytest.raises(DomainError):
        convergence_test(SYM, 0.5, 1, [0.0], [0.0], [64, 32], 0.5, 10, rng)
    with pytest.raises(DomainError):
        convergence_test(SYM, 0.5, 1, [0.0], [0.0], [64], 0.3, 10, rng, reference_m=8)
