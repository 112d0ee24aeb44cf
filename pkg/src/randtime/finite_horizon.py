"""Brownian motion with drift mu on a finite horizon [0, T): the F/f/h/G
function family, canonical pairs for the time of maximum and for last-passage
times, and simulation of the measure-changed dynamics whose drift blows up
like 1/(T - t) near the horizon.

F_mu(tau, z) = e^{2 mu z} Phibar((z + mu tau)/sqrt(tau)) + Phibar((z - mu tau)/sqrt(tau))
is the probability that a drift-mu Brownian motion reaches level z within
time tau; equivalently the integral of the inverse-Gaussian first-hitting
density. All evaluators are vectorized and numerically stable for large
mu z via the scaled complementary error function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

from .core import MonteCarloConfig, RngStream, SamplePath, TimeGrid

__all__ = [
    "FiniteHorizonSpec",
    "SingularDriftPolicy",
    "F",
    "dFdz",
    "f",
    "h",
    "G",
    "canonical_pair_max",
    "canonical_pair_last",
    "simulate_Q_max",
    "simulate_Q_last",
    "simulate_P_paths",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FiniteHorizonSpec:
    """Drift mu on [0, T); x_star is the optional last-passage level."""

    mu: float
    T: float
    x_star: float | None = None

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class SingularDriftPolicy:
    """Step-size policy taming the 1/(T - t) drift: dt_n = min(dt, kappa (T - t_n)),
    halted at T - eps_T."""

    dt: float
    kappa: float = 0.1
    eps_T: float = 1e-4

    def __post_init__(self):
        if self.dt <= 0 or not (0 < self.kappa < 1) or self.eps_T <= 0:
            raise ValueError("need dt > 0, kappa in (0,1), eps_T > 0")

    def grid(self, T: float) -> np.ndarray:
        return TimeGrid(dt=self.dt, horizon=T, rule="shrink_to_horizon",
                        rule_params={"kappa": self.kappa, "eps_T": self.eps_T}).times()


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    return tau


def _phibar(a):
    return ndtr(-np.asarray(a, dtype=float))


def _exp_phibar(mu, tau, z):
    """e^{2 mu z} Phibar((z + mu tau)/sqrt(tau)), overflow-free.

    For a_plus = (z + mu tau)/sqrt(2 tau) >= 0 the product is fused as
    0.5 erfcx(a_plus) exp(-(z - mu tau)^2 / (2 tau)); for a_plus < 0 (only
    possible when mu < 0, hence mu z <= 0) the direct product is safe.
    """
    tau_b, z_b = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(z, dtype=float))
    rt = np.sqrt(tau_b)
    a_plus = (z_b + mu * tau_b) / (_SQRT2 * rt)
    pos = a_plus >= 0.0
    out = np.empty(a_plus.shape, dtype=float)
    if np.any(pos):
        out[pos] = 0.5 * erfcx(a_plus[pos]) * np.exp(
            -((z_b[pos] - mu * tau_b[pos]) ** 2) / (2.0 * tau_b[pos])
        )
    neg = ~pos
    if np.any(neg):
        out[neg] = np.exp(2.0 * mu * z_b[neg]) * ndtr(-_SQRT2 * a_plus[neg])
    return out


def F(mu, tau, z):
    """P[drift-mu BM reaches level z >= 0 by time tau]; in [0, 1]."""
    tau = _check_tau(tau)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    out = _exp_phibar(mu, tau, z) + _phibar((z - mu * tau) / np.sqrt(tau))
    return out if out.shape else float(out)


def dFdz(mu, tau, z):
    """Partial derivative of F in z: 2 mu e^{2 mu z} Phibar((z+mu tau)/sqrt(tau))
    - 2 phi((z - mu tau)/sqrt(tau)) / sqrt(tau)."""
    tau = _check_tau(tau)
    z = np.asarray(z, dtype=float)
    rt = np.sqrt(tau)
    phi = _INV_SQRT_2PI * np.exp(-((z - mu * tau) ** 2) / (2.0 * tau))
    out = 2.0 * mu * _exp_phibar(mu, tau, z) - 2.0 * phi / rt
    return out if out.shape else float(out)


def f(mu, tau):
    """f_mu(tau) = -dF/dz(tau, 0) = sqrt(2/(pi tau)) e^{-mu^2 tau / 2}
    - 2 mu Phibar(mu sqrt(tau)); nonnegative, decreasing in tau."""
    tau = _check_tau(tau)
    rt = np.sqrt(tau)
    out = np.sqrt(2.0 / (np.pi * tau)) * np.exp(-0.5 * mu * mu * tau) - 2.0 * mu * _phibar(mu * rt)
    return out if out.shape else float(out)


def h(mu, tau):
    """h_mu(tau) = (f_mu + f_{-mu})(tau) / 2 = sqrt(2/(pi tau)) e^{-mu^2 tau/2}
    + mu (2 Phi(mu sqrt(tau)) - 1); drives K for finite-horizon last passage."""
    tau = _check_tau(tau)
    rt = np.sqrt(tau)
    out = np.sqrt(2.0 / (np.pi * tau)) * np.exp(-0.5 * mu * mu * tau) + mu * (
        2.0 * ndtr(mu * rt) - 1.0
    )
    return out if out.shape else float(out)


def G(mu, tau, z):
    """Q-drift G_mu(tau, z) = mu - dFdz(tau, z) / F(tau, z); nonnegative, and
    tau G(tau, z) -> z as tau -> 0 (the singular pull toward the running max).

    Two evaluation branches: for z >= mu tau the shared Gaussian factor is
    cancelled analytically (erfcx form), avoiding 0/0 underflow; otherwise the
    direct formula is already stable.
    """
    tau = _check_tau(tau)
    z = np.asarray(z, dtype=float)
    tau_b, z_b = np.broadcast_arrays(tau, z)
    out = np.empty(tau_b.shape, dtype=float)
    # the cancelled branch needs both erfcx arguments nonnegative
    hi = (z_b >= abs(mu) * tau_b)
    # cancelled branch
    if np.any(hi):
        t_, z_ = tau_b[hi], z_b[hi]
        rt = np.sqrt(t_)
        a_plus = (z_ + mu * t_) / (_SQRT2 * rt)
        a_minus = (z_ - mu * t_) / (_SQRT2 * rt)
        num = mu * erfcx(a_plus) - np.sqrt(2.0 / (np.pi * t_))
        den = 0.5 * (erfcx(a_plus) + erfcx(a_minus))
        out[hi] = mu - num / den
    lo = ~hi
    if np.any(lo):
        t_, z_ = tau_b[lo], z_b[lo]
        out[lo] = mu - dFdz(mu, t_, z_) / F(mu, t_, z_)
    return out if out.shape else float(out)


# ---------------------------------------------------------------------------
# Canonical pairs along P-paths.
# ---------------------------------------------------------------------------

def canonical_pair_max(spec: FiniteHorizonSpec, times, values):
    """(Z, K, L) along a P-path for the time of the overall maximum on [0, T).

    Z_t = F(mu, T - t, m_t - x_t); K_t = 1 - exp(-int_0^t f(T - s) dX^up_s)
    with a left-point Stieltjes sum over running-max increments; L = Z/(1-K).
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    if times[-1] >= spec.T:
        raise ValueError("path must live strictly inside [0, T)")
    m = np.maximum.accumulate(x)
    tau = spec.T - times
    z_path = F(spec.mu, tau, m - x)
    dm = np.diff(m)
    acc = np.concatenate([[0.0], np.cumsum(f(spec.mu, tau[:-1]) * dm)])
    k_path = -np.expm1(-acc)
    with np.errstate(divide="ignore", invalid="ignore"):
        l_path = np.where(k_path < 1.0, z_path / (1.0 - k_path), 0.0)
    return z_path, k_path, l_path


def canonical_pair_last(spec: FiniteHorizonSpec, times, values, local_time):
    """(Z, K, L) along a P-path for the last passage of level x_star on [0, T).

    Z_t = F(mu, T-t, x*-x_t) on {x <= x*} and F(-mu, T-t, x_t-x*) on {x > x*};
    K_t = 1 - F(sign(x*) mu, T, |x*|) exp(-sum h(T - s_i) dLambda_i), which
    makes Z_0 = 1 - K_0 (consistent with L_0 = 1). ``local_time`` is the
    accumulated occupation-band local time at x_star along the path.
    """
    if spec.x_star is None:
        raise ValueError("spec.x_star must be set for last-passage pairs")
    xs = spec.x_star
    times = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    lam = np.asarray(local_time, dtype=float)
    if times[-1] >= spec.T:
        raise ValueError("path must live strictly inside [0, T)")
    tau = spec.T - times
    below = x <= xs
    z_path = np.where(below, F(spec.mu, tau, np.maximum(xs - x, 0.0)),
                      F(-spec.mu, tau, np.maximum(x - xs, 0.0)))
    sgn_mu = spec.mu if xs > 0 else -spec.mu
    z0_factor = float(F(sgn_mu, spec.T, abs(xs)))
    dlam = np.diff(lam)
    acc = np.concatenate([[0.0], np.cumsum(h(spec.mu, tau[:-1]) * dlam)])
    k_path = 1.0 - z0_factor * np.exp(-acc)
    with np.errstate(divide="ignore", invalid="ignore"):
        l_path = np.where(k_path < 1.0, z_path / (1.0 - k_path), 0.0)
    return z_path, k_path, l_path


# ---------------------------------------------------------------------------
# Simulation.
# ---------------------------------------------------------------------------

def simulate_P_paths(spec: FiniteHorizonSpec, cfg: MonteCarloConfig,
                     n_steps: int | None = None, rng: RngStream | None = None):
    """Drift-mu Brownian paths on a uniform grid of [0, T - dt]; returns
    (times, values) with values of shape (n_paths, len(times))."""
    rng = rng or RngStream(cfg.seed)
    dt = cfg.dt
    n_steps = n_steps or int(round(spec.T / dt)) - 1
    times = dt * np.arange(n_steps + 1)
    incs = spec.mu * dt + math.sqrt(dt) * rng.normal((cfg.n_paths, n_steps))
    values = np.concatenate(
        [np.zeros((cfg.n_paths, 1)), np.cumsum(incs, axis=1)], axis=1
    )
    return times, values


def simulate_Q_max(spec: FiniteHorizonSpec, policy: SingularDriftPolicy,
                   cfg: MonteCarloConfig) -> list[SamplePath]:
    """Paths of the measure-changed time-of-maximum dynamics
    dX_t = G_mu(T - t, X^up_t - X_t) dt + dW_t on [0, T - eps_T]."""
    grid = policy.grid(spec.T)
    rng = RngStream(cfg.seed)
    n = cfg.n_paths
    x = np.zeros(n)
    m = np.zeros(n)
    xs = np.empty((n, grid.size))
    ms = np.empty((n, grid.size))
    xs[:, 0] = 0.0
    ms[:, 0] = 0.0
    for i in range(1, grid.size):
        t_prev = grid[i - 1]
        dt_i = grid[i] - t_prev
        gap = np.maximum(m - x, 0.0)
        drift = G(spec.mu, spec.T - t_prev, gap)
        x = x + drift * dt_i + math.sqrt(dt_i) * rng.normal(n)
        m = np.maximum(m, x)
        xs[:, i] = x
        ms[:, i] = m
    return [SamplePath(times=grid, values=xs[j], running_max=ms[j]) for j in range(n)]


def simulate_Q_last(spec: FiniteHorizonSpec, policy: SingularDriftPolicy,
                    cfg: MonteCarloConfig) -> list[SamplePath]:
    """Paths of the last-passage Q-dynamics: drift +G_mu(T-t, x*-x) below the
    level and -G_{-mu}(T-t, x-x*) above it."""
    if spec.x_star is None:
        raise ValueError("spec.x_star must be set")
    xs_level = spec.x_star
    grid = policy.grid(spec.T)
    rng = RngStream(cfg.seed)
    n = cfg.n_paths
    x = np.zeros(n)
    out = np.empty((n, grid.size))
    out[:, 0] = 0.0
    for i in range(1, grid.size):
        t_prev = grid[i - 1]
        dt_i = grid[i] - t_prev
        tau = spec.T - t_prev
        below = x <= xs_level
        drift = np.where(
            below,
            G(spec.mu, tau, np.maximum(xs_level - x, 0.0)),
            -G(-spec.mu, tau, np.maximum(x - xs_level, 0.0)),
        )
        x = x + drift * dt_i + math.sqrt(dt_i) * rng.normal(n)
        out[:, i] = x
    return [SamplePath(times=grid, values=out[j]) for j in range(n)]
