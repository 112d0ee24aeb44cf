import numpy as np
import pytest
from scipy import integrate, stats

from randtime import finite_horizon as fh
from randtime.core import MonteCarloConfig, RngStream


def test_F_pinned_and_properties():
    assert fh.F(1.0, 1.0, 0.5) == pytest.approx(0.8730632624930682, rel=1e-13)
    assert fh.F(1.0, 1.0, 0.0) == pytest.approx(1.0, abs=1e-14)
    tau = np.array([0.2, 1.0, 5.0])
    z = np.array([0.1, 1.0, 3.0])
    vals = fh.F(1.0, tau, z)
    assert np.all((vals >= 0.0) & (vals <= 1.0))
    # monotone: decreasing in z, increasing in tau
    assert fh.F(1.0, 1.0, 0.3) > fh.F(1.0, 1.0, 0.6)
    assert fh.F(1.0, 2.0, 0.6) > fh.F(1.0, 1.0, 0.6)
    with pytest.raises(ValueError):
        fh.F(1.0, -1.0, 0.5)
    with pytest.raises(ValueError):
        fh.F(1.0, 1.0, -0.5)


def test_F_matches_probability_of_hitting():
    # F(mu, tau, z) = P[min-drift BM reaches z by tau]; cross-check against the
    # reflection formula evaluated with plain normal cdfs at benign arguments
    mu, tau, z = 0.7, 1.3, 0.9
    direct = (np.exp(2.0 * mu * z) * stats.norm.sf((z + mu * tau) / np.sqrt(tau))
              + stats.norm.sf((z - mu * tau) / np.sqrt(tau)))
    assert fh.F(mu, tau, z) == pytest.approx(direct, rel=1e-12)
    # stable where the naive formula overflows
    assert 0.0 <= fh.F(1.0, 1e-4, 60.0) <= 1e-10


def test_dFdz_is_the_z_derivative_of_F():
    mu, tau = 1.0, 0.8
    for z in (0.1, 0.7, 2.0):
        eps = 1e-6
        num = (fh.F(mu, tau, z + eps) - fh.F(mu, tau, z - eps)) / (2.0 * eps)
        assert fh.dFdz(mu, tau, z) == pytest.approx(num, rel=1e-6)


def test_f_and_h_pinned_values_and_identity():
    assert fh.f(1.0, 0.5) == pytest.approx(0.3992824567484914, rel=1e-13)
    assert fh.h(1.0, 0.5) == pytest.approx(1.3992824567484914, rel=1e-13)
    tau = np.array([0.1, 0.5, 2.0, 10.0])
    for mu in (0.3, 1.0, 2.5):
        # h_mu = f_mu + mu, and both are positive and decreasing
        assert np.allclose(fh.h(mu, tau), fh.f(mu, tau) + mu, rtol=1e-12)
        assert np.all(np.diff(fh.f(mu, tau)) < 0)
        assert np.all(fh.f(mu, tau) > 0)
    # f(mu, tau) = -dF/dz at z = 0
    assert fh.f(1.0, 0.5) == pytest.approx(-fh.dFdz(1.0, 0.5, 0.0), rel=1e-12)


def test_G_nonnegative_and_singular_limit():
    mu = 1.0
    tau = np.logspace(-6, 1, 40)
    for z in (0.0, 0.5, 2.0):
        g = fh.G(mu, tau, np.full_like(tau, z))
        assert np.all(g >= -1e-12)
    # tau G(tau, z) -> z as tau -> 0: the pull toward the running maximum
    for w in (0.5, 1.0, 2.0):
        tau0 = 1e-6
        zs = np.linspace(w, w + 3.0, 200)
        assert (tau0 * fh.G(mu, tau0, zs)).min() >= w - 0.01
    # consistency of the two evaluation branches at the switch z = |mu| tau
    t0 = 0.7
    lo = fh.G(mu, t0, mu * t0 - 1e-9)
    hi = fh.G(mu, t0, mu * t0 + 1e-9)
    assert lo == pytest.approx(hi, rel=1e-6)


def test_policy_grid():
    policy = fh.SingularDriftPolicy(dt=1e-2, kappa=0.1, eps_T=1e-4)
    g = policy.grid(1.0)
    assert g[0] == 0.0 and g[-1] == pytest.approx(1.0 - 1e-4)
    steps = np.diff(g)
    assert np.all(steps <= np.minimum(1e-2, 0.1 * (1.0 - g[:-1])) + 1e-15)
    with pytest.raises(ValueError):
        fh.SingularDriftPolicy(dt=1e-2, kappa=1.5)


def test_canonical_pair_max_structure():
    spec = fh.FiniteHorizonSpec(mu=1.0, T=1.0)
    cfg = MonteCarloConfig(n_paths=4, seed=8, dt=1e-3)
    times, values = fh.simulate_P_paths(spec, cfg)
    assert times[-1] < spec.T
    for j in range(4):
        z, k, l = fh.canonical_pair_max(spec, times, values[j])
        assert z[0] == pytest.approx(1.0, abs=1e-12)
        assert k[0] == 0.0 and l[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(k) >= -1e-15)
        assert np.all((k >= 0) & (k <= 1)) and np.all(l >= 0)
        assert np.allclose(z, l * (1.0 - k), atol=1e-12)
    with pytest.raises(ValueError):
        fh.canonical_pair_max(spec, np.array([0.0, spec.T]), np.zeros(2))


def test_canonical_pair_last_structure():
    spec = fh.FiniteHorizonSpec(mu=1.0, T=1.0, x_star=0.2)
    cfg = MonteCarloConfig(n_paths=3, seed=9, dt=1e-3)
    times, values = fh.simulate_P_paths(spec, cfg)
    eps = np.sqrt(cfg.dt)
    for j in range(3):
        x = values[j]
        occ = (np.abs(x - spec.x_star) <= eps) * (cfg.dt / (2.0 * eps))
        lam = np.cumsum(occ)
        z, k, l = fh.canonical_pair_last(spec, times, x, lam)
        # Z_0 = 1 - K_0 so that L_0 = 1
        assert z[0] == pytest.approx(1.0 - k[0], abs=1e-12)
        assert l[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(k) >= -1e-15)
        assert np.allclose(z, l * (1.0 - k), atol=1e-12)
    no_level = fh.FiniteHorizonSpec(mu=1.0, T=1.0)
    with pytest.raises(ValueError):
        fh.canonical_pair_last(no_level, times, values[0], np.zeros_like(times))


def test_martingale_property_monte_carlo():
    # E[L_t] = 1 along P-paths for the time-of-maximum pair
    spec = fh.FiniteHorizonSpec(mu=1.0, T=1.0)
    cfg = MonteCarloConfig(n_paths=3000, seed=12, dt=1e-3)
    times, values = fh.simulate_P_paths(spec, cfg)
    idx = np.searchsorted(times, 0.5)
    lvals = np.empty(cfg.n_paths)
    for j in range(cfg.n_paths):
        _, _, l = fh.canonical_pair_max(spec, times, values[j])
        lvals[j] = l[idx]
    se = lvals.std(ddof=1) / np.sqrt(cfg.n_paths)
    assert abs(lvals.mean() - 1.0) <= 3.0 * se


def test_simulate_Q_max_concentrates_late_argmax():
    spec = fh.FiniteHorizonSpec(mu=1.0, T=1.0)
    policy = fh.SingularDriftPolicy(dt=1e-3)
    cfg = MonteCarloConfig(n_paths=200, seed=14, dt=1e-3)
    paths = fh.simulate_Q_max(spec, policy, cfg)
    # under the changed measure the maximum is achieved at the end: the final
    # gap to the running maximum collapses
    gaps = np.array([p.running_max[-1] - p.values[-1] for p in paths])
    assert np.median(gaps) < 0.05
    argmax_t = np.array([p.times[np.argmax(p.running_max >= p.running_max[-1])]
                         for p in paths])
    assert np.mean(argmax_t > 0.9 * spec.T) > 0.9


def test_simulate_Q_last_ends_near_level():
    spec = fh.FiniteHorizonSpec(mu=1.0, T=1.0, x_star=0.3)
    policy = fh.SingularDriftPolicy(dt=1e-3)
    cfg = MonteCarloConfig(n_paths=200, seed=15, dt=1e-3)
    paths = fh.simulate_Q_last(spec, policy, cfg)
    finals = np.array([p.values[-1] for p in paths])
    assert np.median(np.abs(finals - spec.x_star)) < 0.05
    with pytest.raises(ValueError):
        fh.simulate_Q_last(fh.FiniteHorizonSpec(mu=1.0, T=1.0), policy, cfg)
