import numpy as np
import pytest

from randtime import oracles
from randtime.core import MonteCarloConfig
from randtime.stats import (
    EmpiricalDistribution,
    ks_one_sample,
    ks_two_sample,
    l1_density_error,
    mc_driver,
)


def test_ecdf_right_continuous():
    emp = EmpiricalDistribution.from_samples([3.0, 1.0, 2.0])
    assert np.allclose(emp.ecdf([0.5, 1.0, 1.5, 3.0, 4.0]),
                       [0.0, 1 / 3, 1 / 3, 1.0, 1.0])


def test_ecdf_with_weights():
    emp = EmpiricalDistribution.from_samples([1.0, 2.0], weights=[0.5, 1.5])
    assert np.allclose(emp.ecdf([1.0, 2.0]), [0.25, 1.0])
    with pytest.raises(ValueError):
        EmpiricalDistribution.from_samples([1.0, 2.0], weights=[-1.0, 3.0])


def test_ks_one_sample_near_perfect_fit():
    n = 1000
    samples = (np.arange(n) + 0.5) / n  # ideal uniform quantiles
    rep = ks_one_sample(EmpiricalDistribution.from_samples(samples), lambda u: u)
    assert rep.statistic == pytest.approx(0.5 / n)
    assert rep.p_value > 0.999
    assert rep.passed


def test_ks_one_sample_rejects_wrong_law():
    x = np.random.default_rng(0).normal(size=500)
    rep = ks_one_sample(EmpiricalDistribution.from_samples(x),
                        lambda u: np.clip(u, 0.0, 1.0))
    assert rep.p_value < 1e-10 and not rep.passed


def test_ks_requires_minimum_sample():
    with pytest.raises(ValueError):
        ks_one_sample(EmpiricalDistribution.from_samples(np.arange(10.0)), lambda u: u)


def test_ks_p_value_monotone_in_statistic():
    n = 400
    rng = np.random.default_rng(3)
    base = rng.random(n)
    reports = []
    for shift in (0.0, 0.05, 0.1):
        samples = np.clip(base + shift, 0.0, 1.0)
        reports.append(ks_one_sample(EmpiricalDistribution.from_samples(samples),
                                     lambda u: np.clip(u, 0.0, 1.0)))
    ds = [r.statistic for r in reports]
    ps = [r.p_value for r in reports]
    assert ds == sorted(ds)
    assert ps == sorted(ps, reverse=True)


def test_ks_two_sample():
    rng = np.random.default_rng(1)
    a = EmpiricalDistribution.from_samples(rng.normal(size=2000))
    b = EmpiricalDistribution.from_samples(rng.normal(size=3000))
    c = EmpiricalDistribution.from_samples(rng.normal(size=2000) + 0.3)
    same = ks_two_sample(a, b)
    diff = ks_two_sample(a, c)
    assert same.passed and same.meta["n_eff"] == pytest.approx(1200.0)
    assert not diff.passed


def test_l1_density_self_consistency():
    # inverse-CDF sample from the oracle itself must sit near the noise floor
    q = 2.0
    orc = oracles.exp_sup_law(q)
    u = (np.arange(100000) + 0.5) / 100000
    samples = -np.log1p(-u) / q
    rep = l1_density_error(samples, orc, bins=50, range_=(0.0, 5.0))
    assert rep.statistic < 0.03
    assert rep.meta["coverage"] > 0.99


def test_l1_density_empty_sample_errors():
    with pytest.raises(ValueError):
        l1_density_error(np.array([]), oracles.exp_sup_law(1.0), 10, (0.0, 1.0))


def test_l1_density_coverage_widening_then_error():
    orc = oracles.exp_sup_law(0.1)  # mean 10; a tiny window cannot cover it
    samples = np.full(1000, 0.05)
    with pytest.raises(ValueError, match="coverage"):
        l1_density_error(samples, orc, bins=10, range_=(0.0, 0.1))


def test_mc_driver_worker_count_invariance():
    def task(rng, n):
        return rng.normal(n)

    merged1 = mc_driver(task, MonteCarloConfig(n_paths=12000, seed=9, workers=1),
                        chunk_size=5000)
    merged4 = mc_driver(task, MonteCarloConfig(n_paths=12000, seed=9, workers=4),
                        chunk_size=5000)
    assert merged1.shape == (12000,)
    assert np.array_equal(merged1, merged4)
