import math

import numpy as np
import pytest

from randtime import levy
from randtime.core import MonteCarloConfig, RngStream
from randtime.stats import EmpiricalDistribution, ks_one_sample


def bm_model(mu=1.0):
    return levy.LevyModel(alpha=-mu, sigma2=1.0)


def test_model_validation():
    with pytest.raises(ValueError):
        levy.LevyModel(alpha=1.0, sigma2=1.0)  # drifts upward
    with pytest.raises(ValueError):
        levy.LevyModel(alpha=-1.0, sigma2=-1.0)
    with pytest.raises(ValueError):
        levy.LevyModel(alpha=-1.0)  # no noise at all


def test_gamma_jump_exponent_pinned_value():
    jumps = levy.GammaJumps(c=0.5, lam=2.0)
    model = levy.LevyModel(alpha=-1.0, sigma2=0.5, jumps=jumps)
    val = levy.laplace_exponent(model, 1.0)
    base = -1.0 + 0.25
    assert val == pytest.approx(base + 0.013433625136764632, rel=1e-13)


def test_closed_exponent_matches_quadrature():
    z = np.array([0.3, 1.0, 2.5])
    for jumps in (levy.GammaJumps(c=0.5, lam=2.0),
                  levy.TemperedStableJumps(c=0.2, lam=1.5, p=0.5)):
        model = levy.LevyModel(alpha=-1.0, sigma2=1.0, jumps=jumps)
        closed = levy.laplace_exponent(model, z, method="closed")
        quad = levy.laplace_exponent(model, z, method="quadrature")
        assert np.allclose(closed, quad, rtol=1e-8)


def test_find_q_brownian_closed_form():
    tilted = levy.find_q(bm_model(1.0))
    assert tilted.q == pytest.approx(2.0, abs=1e-9)
    assert tilted.alpha_q == pytest.approx(1.0, abs=1e-9)
    assert tilted.mean_rate() == pytest.approx(1.0, abs=1e-9)
    # tilted exponent z -> z + z^2/2 and its inverse sqrt(1+2a) - 1
    for a in (0.0, 0.5, 2.0):
        assert levy.theta_q_inverse(tilted, a) == pytest.approx(
            math.sqrt(1.0 + 2.0 * a) - 1.0, abs=1e-8)


def test_find_q_with_jumps_is_a_root():
    model = levy.LevyModel(alpha=-1.0, sigma2=1.0,
                           jumps=levy.GammaJumps(c=0.5, lam=2.0))
    tilted = levy.find_q(model)
    assert tilted.q > 0
    assert float(levy.laplace_exponent(model, tilted.q)) == pytest.approx(0.0, abs=1e-8)
    assert tilted.mean_rate() > 0


def test_joint_laplace_pinned_grid():
    expected = {
        (0.0, 0.0): 1.0,
        (0.0, 0.5): 0.8,
        (0.0, 1.0): 2.0 / 3.0,
        (0.5, 0.0): 0.8284271247461902,
        (0.5, 0.5): 0.6862915010152396,
        (0.5, 1.0): 0.585786437626905,
        (1.0, 0.0): 0.7320508075688773,
        (1.0, 0.5): 0.6188021535170062,
        (1.0, 1.0): 0.5358983848622454,
    }
    model = bm_model(1.0)
    for (a, b), v in expected.items():
        assert levy.laplace_rho_xrho(model, a, b) == pytest.approx(v, rel=1e-8)
    with pytest.raises(ValueError):
        levy.laplace_rho_xrho(model, -1.0, 0.0)


def test_hit_level_times_mean_matches_wald():
    tilted = levy.find_q(bm_model(1.0))  # drift +1, variance 1 upward
    cfg = MonteCarloConfig(n_paths=3000, seed=2, dt=1e-3, horizon_cap=30.0)
    rho, flagged = levy.hit_level_times(tilted, np.full(3000, 1.0), cfg, RngStream(2))
    assert not flagged.any()
    # E[T_1] = 1, Var[T_1] = 1
    assert rho.mean() == pytest.approx(1.0, abs=4.0 / math.sqrt(3000))
    # nonpositive levels are hit immediately
    rho0, _ = levy.hit_level_times(tilted, np.array([0.0, -1.0]), cfg, RngStream(3))
    assert np.array_equal(rho0, [0.0, 0.0])


def test_two_step_maximum_exact_first_stage():
    cfg = MonteCarloConfig(n_paths=5000, seed=11, dt=1e-3, horizon_cap=40.0)
    rec = levy.two_step_maximum(bm_model(1.0), cfg)
    assert rec.q == pytest.approx(2.0, abs=1e-9)
    assert np.allclose(rec.k_rho, -np.expm1(-rec.q * rec.x_rho))
    rep = ks_one_sample(EmpiricalDistribution.from_samples(rec.x_rho),
                        lambda x: -np.expm1(-2.0 * np.asarray(x)))
    assert rep.p_value > 0.01
    uni = ks_one_sample(EmpiricalDistribution.from_samples(rec.k_rho),
                        lambda u: np.clip(u, 0.0, 1.0))
    assert uni.p_value > 0.01
    assert rec.flag_rate < 1e-3
    rec2 = levy.two_step_maximum(bm_model(1.0), cfg)
    assert np.array_equal(rec.rho, rec2.rho)  # same seed, same paths


def test_simulate_Q_to_level_hits_level():
    tilted = levy.find_q(bm_model(1.0))
    cfg = MonteCarloConfig(n_paths=1, seed=4, dt=1e-3, horizon_cap=50.0)
    path = levy.simulate_Q_to_level(tilted, 0.7, cfg)
    assert path.stop_reason == "hit level"
    assert path.values[path.stopped_at] == pytest.approx(0.7)
    assert path.values[0] == 0.0


def test_direct_argmax_reference_sampler():
    cfg = MonteCarloConfig(n_paths=4000, seed=5, dt=1e-3)
    rho, m, discard = levy.bm_direct_argmax(1.0, 15.0, cfg)
    assert discard < 1e-2
    assert np.all(m >= 0) and np.all(rho >= 0) and np.all(rho <= 15.0)
    rep = ks_one_sample(EmpiricalDistribution.from_samples(m),
                        lambda x: -np.expm1(-2.0 * np.asarray(x)))
    assert rep.p_value > 0.01
    with pytest.raises(ValueError):
        levy.bm_direct_argmax(-1.0, 15.0, cfg)


def test_bm_last_exit_construct_basics():
    cfg = MonteCarloConfig(n_paths=2000, seed=6, dt=1e-3, horizon_cap=60.0)
    rec = levy.bm_last_exit_construct(1.0, -0.5, cfg)
    assert rec.flag_rate < 5e-3
    ok = ~rec.flagged
    assert np.all(rec.rho[ok] > 0)
    # terminal local time is exponential with rate mu by construction
    rep = ks_one_sample(EmpiricalDistribution.from_samples(rec.lam),
                        lambda x: -np.expm1(-np.asarray(x)))
    assert rep.p_value > 0.01
    with pytest.raises(ValueError):
        levy.bm_last_exit_construct(1.0, 0.5, cfg)
    with pytest.raises(ValueError):
        levy.bm_last_exit_construct(-1.0, -0.5, cfg)
