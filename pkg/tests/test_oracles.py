import math

import numpy as np
import pytest
from scipy import integrate

from randtime import oracles


def test_registration_checks_total_mass():
    for orc in (oracles.exp_sup_law(2.0), oracles.pareto_sup_law(0.5, 1.0),
                oracles.bm_max_rho(1.0), oracles.ig_hitting(1.0, 1.0),
                oracles.bm_lastexit_rho(1.0, -0.5)):
        assert orc.meta["registered_mass"] == pytest.approx(1.0, abs=1e-6)
    assert oracles.bm_max_joint(1.0).meta["registered_mass"] == pytest.approx(1.0, abs=5e-3)
    assert oracles.bm_lastexit_joint(1.0, -0.5).meta["registered_mass"] == pytest.approx(1.0, abs=5e-3)


def test_exp_sup_pinned_values():
    orc = oracles.exp_sup_law(2.0)
    assert float(orc.pdf(1.0)) == pytest.approx(0.2706705664732254, rel=1e-14)
    assert float(orc.cdf(0.0)) == 0.0
    # pdf integrates to the cdf
    v, _ = integrate.quad(orc.pdf, 0.0, 1.5)
    assert v == pytest.approx(float(orc.cdf(1.5)), rel=1e-10)


def test_pareto_sup_pinned_values():
    orc = oracles.pareto_sup_law(0.5, 1.0)
    assert float(orc.pdf(2.0)) == pytest.approx(0.25, rel=1e-14)
    assert float(orc.cdf(2.0)) == pytest.approx(0.5, rel=1e-14)
    assert float(orc.cdf(1.0)) == 0.0


def test_bm_max_joint_pinned_and_marginal_consistency():
    joint = oracles.bm_max_joint(1.0)
    marg = oracles.bm_max_rho(1.0)
    assert float(joint.pdf(1.0, 1.0)) == pytest.approx(0.10798193302637613, rel=1e-13)
    assert float(marg.pdf(1.0)) == pytest.approx(0.1666309411753726, rel=1e-13)
    # integrating the joint over x reproduces the time-marginal pointwise
    for t in (0.2, 1.0, 3.0):
        v, _ = integrate.quad(lambda x: joint.pdf(t, x), 0.0, np.inf)
        assert v == pytest.approx(float(marg.pdf(t)), rel=1e-9)


def test_bm_max_rho_density_is_positive_near_zero():
    marg = oracles.bm_max_rho(1.0)
    t = np.array([1e-6, 1e-3, 0.1, 1.0, 10.0])
    assert np.all(marg.pdf(t) > 0)


def test_bm_lastexit_joint_marginals():
    mu, x = 1.0, -0.5
    joint = oracles.bm_lastexit_joint(mu, x)
    assert float(joint.pdf(1.0, 1.0)) == pytest.approx(0.19427639349883763, rel=1e-13)
    # local-time marginal is exponential with rate mu
    for lam in (0.1, 1.0, 3.0):
        v, _ = integrate.quad(lambda t: joint.pdf(t, lam), 0.0, np.inf)
        assert v == pytest.approx(mu * math.exp(-mu * lam), rel=1e-8)
    # time marginal matches the dedicated oracle
    rho = oracles.bm_lastexit_rho(mu, x)
    assert float(rho.pdf(2.0)) == pytest.approx(0.16073276729880184, rel=1e-13)
    for t in (0.5, 2.0, 5.0):
        v, _ = integrate.quad(lambda lm: joint.pdf(t, lm), 0.0, np.inf)
        assert v == pytest.approx(float(rho.pdf(t)), rel=1e-9)


def test_ig_hitting_pinned_value_and_mode():
    orc = oracles.ig_hitting(1.0, 1.0)
    assert float(orc.pdf(0.5)) == pytest.approx(0.8787825789354448, rel=1e-13)
    mode = orc.meta["mode"]
    assert float(orc.pdf(mode)) >= float(orc.pdf(mode * 1.05))
    assert float(orc.pdf(mode)) >= float(orc.pdf(mode * 0.95))


def test_bessel_zeros_half_integer_order_are_k_pi():
    z = oracles.bessel_zeros(0.5, 12)
    assert np.allclose(z, np.pi * np.arange(1, 13), rtol=0, atol=1e-10)
    # generic order: increasing, roughly pi-spaced in the tail
    z2 = oracles.bessel_zeros(1.3, 30)
    assert np.all(np.diff(z2) > 0)
    assert np.diff(z2)[-1] == pytest.approx(np.pi, abs=1e-2)


def test_bessel_joint_time_marginal_matches_power_law():
    a, x0 = 0.5, 1.0
    joint = oracles.bessel_max_joint(a, x0)
    pareto = oracles.pareto_sup_law(a, x0)
    # integrate over t from a small cutoff: the series is unusable at t ~ 0,
    # and for levels well above the start the mass below the cutoff is negligible
    for x in (2.0, 3.1):
        v, _ = integrate.quad(lambda t: joint.pdf(t, x), 0.02, np.inf, limit=300)
        assert v == pytest.approx(float(pareto.pdf(x)), rel=1e-6)


def test_bessel_joint_reports_nonconvergence():
    joint = oracles.bessel_max_joint(0.5, 1.0, n_terms=50, max_terms=100)
    with pytest.raises(ArithmeticError):
        joint.pdf(1e-7, 3.0)


def test_numeric_cdf_matches_closed_form():
    orc = oracles.exp_sup_law(1.0)
    cdf = oracles.numeric_cdf(orc, 0.0, 40.0, n=16001)
    x = np.array([0.1, 0.7, 2.5])
    assert np.allclose(cdf(x), orc.cdf(x), atol=1e-7)


def test_parameter_validation():
    with pytest.raises(ValueError):
        oracles.exp_sup_law(0.0)
    with pytest.raises(ValueError):
        oracles.bm_lastexit_joint(1.0, 0.5)
    with pytest.raises(ValueError):
        oracles.bessel_zeros(-1.0, 5)
