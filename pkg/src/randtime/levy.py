"""Spectrally negative Levy machinery: Laplace exponent, q-root, exponential
tilt, Q-path simulation, two-step time-of-maximum and BM last-exit builders.

Conventions. Jumps are negative; we parametrize jump families by the density
of the jump *magnitude* nu_mag(y) on y > 0, so the Levy measure is
nu(dx) = nu_mag(-x) dx on x < 0. The Laplace exponent is

    theta(z) = alpha z + sigma^2 z^2 / 2
               + int (e^{zx} - 1 - z x 1{-1 <= x < 0}) nu(dx),

so E[e^{z X_t}] = e^{t theta(z)} for z >= 0. Downward drift means
theta'(0+) < 0; the unique positive root q of theta gives the Esscher tilt
under which the process drifts upward and the overall maximum becomes
reachable by first-passage simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .core import MonteCarloConfig, RngStream, SamplePath

__all__ = [
    "GammaJumps",
    "TemperedStableJumps",
    "CustomExponent",
    "LevyModel",
    "TiltedModel",
    "laplace_exponent",
    "theta_prime",
    "find_q",
    "theta_q_inverse",
    "laplace_rho_xrho",
    "simulate_Q_to_level",
    "hit_level_times",
    "two_step_maximum",
    "bm_last_exit_construct",
    "MaxRecord",
    "LastExitRecord",
]


@dataclass(frozen=True)
class GammaJumps:
    """nu_mag(y) = c e^{-lam y} / y on y > 0 (infinite activity, finite variation)."""

    c: float
    lam: float

    def __post_init__(self):
        if self.c <= 0 or self.lam <= 0:
            raise ValueError("gamma jump family needs c > 0, lam > 0")

    def mag_density(self, y):
        return self.c * np.exp(-self.lam * y) / y

    def tilted(self, q: float) -> "GammaJumps":
        return GammaJumps(self.c, self.lam + q)


@dataclass(frozen=True)
class TemperedStableJumps:
    """nu_mag(y) = c e^{-lam y} y^{-1-p} on y > 0, 0 < p < 2."""

    c: float
    lam: float
    p: float

    def __post_init__(self):
        if self.c <= 0 or self.lam < 0 or not (0 < self.p < 2):
            raise ValueError("tempered stable family needs c > 0, lam >= 0, 0 < p < 2")

    def mag_density(self, y):
        return self.c * np.exp(-self.lam * y) * y ** (-1.0 - self.p)

    def tilted(self, q: float) -> "TemperedStableJumps":
        return TemperedStableJumps(self.c, self.lam + q, self.p)


@dataclass(frozen=True)
class CustomExponent:
    """User-supplied Laplace exponent (jump part only is opaque): callables
    theta(z) and theta'(z). Supports root finding and transforms, not path
    simulation."""

    theta: object
    theta_prime: object


JumpFamily = GammaJumps | TemperedStableJumps | CustomExponent


def _jump_exponent_closed(jumps, z):
    """Closed-form jump part of theta for the two parametric families."""
    if isinstance(jumps, GammaJumps):
        c, lam = jumps.c, jumps.lam
        # int (e^{zx}-1-zx 1{-1<=x<0}) nu(dx)
        #   = -c log(1 + z/lam) + c z (1 - e^{-lam}) / lam
        return -c * np.log1p(z / lam) + c * z * (1.0 - math.exp(-lam)) / lam
    if isinstance(jumps, TemperedStableJumps):
        c, lam, p = jumps.c, jumps.lam, jumps.p
        if abs(p - 1.0) < 1e-9 or lam == 0.0:
            return _jump_exponent_quad(jumps, z)
        # fully compensated cumulant plus the drift correction restoring the
        # 1{-1<=x<0} truncation of the compensator
        full = c * gamma_fn(-p) * ((lam + z) ** p - lam**p - p * lam ** (p - 1.0) * z)
        tail1, _ = integrate.quad(lambda y: y * jumps.mag_density(y), 1.0, np.inf)
        return full - z * tail1

    raise TypeError("no closed form for this jump family")


def _jump_exponent_quad(jumps, z):
    """Adaptive quadrature of the jump integral (cross-validation oracle)."""

    def integrand(y):
        # x = -y
        comp = z * y if y <= 1.0 else 0.0
        return (np.expm1(-z * y) + comp) * jumps.mag_density(y)

    lo, e1 = integrate.quad(integrand, 0.0, 1.0, limit=200)
    hi, e2 = integrate.quad(integrand, 1.0, np.inf, limit=200)
    val, err = lo + hi, e1 + e2
    if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
        raise ArithmeticError(f"jump-term quadrature did not converge (err={err:g})")
    return val


def _jump_exponent_prime(jumps, z):
    if isinstance(jumps, GammaJumps):
        c, lam = jumps.c, jumps.lam
        return -c / (lam + z) + c * (1.0 - math.exp(-lam)) / lam
    if isinstance(jumps, TemperedStableJumps):
        c, lam, p = jumps.c, jumps.lam, jumps.p
        if abs(p - 1.0) >= 1e-9 and lam > 0.0:
            tail1, _ = integrate.quad(lambda y: y * jumps.mag_density(y), 1.0, np.inf)
            return c * gamma_fn(-p) * p * ((lam + z) ** (p - 1.0) - lam ** (p - 1.0)) - tail1

    # generic fallback: quadrature of d theta_jump / dz
    def integrand(y):
        comp = y if y <= 1.0 else 0.0
        return (-y * math.exp(-z * y) + comp) * jumps.mag_density(y)

    lo, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
    hi, _ = integrate.quad(integrand, 1.0, np.inf, limit=200)
    return lo + hi


@dataclass(frozen=True)
class LevyModel:
    """Spectrally negative Levy model (alpha, sigma2, jump family)."""

    alpha: float
    sigma2: float = 0.0
    jumps: JumpFamily | None = None

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.sigma2 == 0.0 and self.jumps is None:
            raise ValueError("need a Gaussian part or jumps (degenerate drift model)")
        if isinstance(self.jumps, CustomExponent):
            if theta_prime(self, 0.0) >= 0:
                raise ValueError("model must drift downward: theta'(0+) < 0")
            return
        if self.sigma2 == 0.0 and self.jumps is not None:
            if isinstance(self.jumps, TemperedStableJumps) and self.jumps.p >= 1.0:
                raise ValueError(
                    "sigma2 = 0 with infinite-variation jumps is unsupported"
                )
            small1, _ = integrate.quad(lambda y: y * self.jumps.mag_density(y), 0.0, 1.0)
            if self.alpha + small1 <= 0:
                raise ValueError("sigma2 = 0 requires beta = alpha - int_{-1}^0 x nu > 0")
        if theta_prime(self, 0.0) >= 0:
            raise ValueError("model must drift downward: theta'(0+) < 0")


def laplace_exponent(model: LevyModel, z, method: str = "closed"):
    """theta(z) for z >= 0; ``method='quadrature'`` integrates the Levy measure
    directly (slower; used to cross-validate the closed forms)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    base = model.alpha * z + 0.5 * model.sigma2 * z * z
    if model.jumps is None:
        return base if base.shape else float(base)
    if isinstance(model.jumps, CustomExponent):
        if method != "closed":
            raise ValueError("custom exponent has no Levy-measure quadrature")
        return model.jumps.theta(z)
    if method == "closed":
        jump = _jump_exponent_closed(model.jumps, z)
    elif method == "quadrature":
        jump = np.vectorize(lambda zz: _jump_exponent_quad(model.jumps, zz))(z)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = base + jump
    return out if np.ndim(out) else float(out)


def theta_prime(model: LevyModel, z: float) -> float:
    if isinstance(model.jumps, CustomExponent):
        return float(model.jumps.theta_prime(z))
    out = model.alpha + model.sigma2 * z
    if model.jumps is not None:
        out += _jump_exponent_prime(model.jumps, z)
    return float(out)


@dataclass(frozen=True)
class TiltedModel:
    """Esscher tilt of ``base`` at the root q of theta.

    Under the tilted measure the triplet is (alpha_q, sigma^2, nu_q) with
    nu_q(dx) = e^{qx} nu(dx) and alpha_q = alpha + sigma^2 q
    + int_{-1}^0 (e^{qx} - 1) x nu(dx); the process drifts upward
    (theta_q'(0+) = theta'(q) > 0).
    """

    base: LevyModel
    q: float
    alpha_q: float

    def theta_q(self, z):
        return laplace_exponent(self.base, np.asarray(z) + self.q) - laplace_exponent(
            self.base, self.q
        )

    @property
    def tilted_jumps(self):
        if self.base.jumps is None or isinstance(self.base.jumps, CustomExponent):
            return None
        return self.base.jumps.tilted(self.q)

    def mean_rate(self) -> float:
        """E_Q[X_1] = theta'(q)."""
        return theta_prime(self.base, self.q)


def find_q(model: LevyModel, tol: float = 1e-10, z_cap: float = 1e6) -> TiltedModel:
    """Unique positive root of theta, by doubling bracket plus brentq."""
    theta = lambda z: float(laplace_exponent(model, z))
    z_hi = 1.0
    while theta(z_hi) <= 0:
        z_hi *= 2.0
        if z_hi > z_cap:
            raise ValueError("could not bracket the root of theta (theta never positive)")
    from scipy.optimize import brentq

    q = float(brentq(theta, z_hi / 2.0 if theta(z_hi / 2.0) < 0 else tol, z_hi, xtol=tol))
    if abs(theta(q)) > 1e-8:
        raise ArithmeticError("q root residual too large")
    alpha_q = model.alpha + model.sigma2 * q
    if model.jumps is not None and not isinstance(model.jumps, CustomExponent):
        corr, _ = integrate.quad(
            lambda y: y * (1.0 - math.exp(-q * y)) * model.jumps.mag_density(y), 0.0, 1.0
        )
        alpha_q += corr
    return TiltedModel(base=model, q=q, alpha_q=alpha_q)


def theta_q_inverse(tilted: TiltedModel, a: float, tol: float = 1e-10) -> float:
    """Inverse of the (strictly increasing on R+) tilted exponent at a >= 0."""
    if a < 0:
        raise ValueError("a must be nonnegative")
    if a == 0.0:
        return 0.0
    hi = 1.0
    while float(tilted.theta_q(hi)) < a:
        hi *= 2.0
        if hi > 1e9:
            raise ArithmeticError("could not bracket theta_q inverse")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(tilted.theta_q(mid)) < a:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def laplace_rho_xrho(model: LevyModel, a: float, b: float) -> float:
    """Joint Laplace transform E[e^{-a rho - b X_rho}] = q / (q + theta_q^{-1}(a) + b)."""
    if a < 0 or b < 0:
        raise ValueError("a and b must be nonnegative")
    tilted = find_q(model)
    return tilted.q / (tilted.q + theta_q_inverse(tilted, a) + b)


# ---------------------------------------------------------------------------
# Path simulation under the tilted (upward-drifting) measure.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _SimParams:
    """Per-step ingredients of the jump-adapted Euler scheme."""

    drift: float       # deterministic rate; set so the step mean is exact
    gauss_var: float   # sigma^2 plus the small-jump Gaussian proxy variance
    big_rate: float    # Poisson intensity of jumps with magnitude > delta
    delta: float
    jumps: JumpFamily | None


def _sim_params(tilted: TiltedModel, delta: float = 1e-3) -> _SimParams:
    jumps = tilted.tilted_jumps
    mean = tilted.mean_rate()
    if jumps is None:
        if isinstance(tilted.base.jumps, CustomExponent):
            raise ValueError("custom Laplace exponents cannot be path-simulated")
        return _SimParams(drift=mean, gauss_var=tilted.base.sigma2, big_rate=0.0,
                          delta=delta, jumps=None)
    v_small, _ = integrate.quad(lambda y: y * y * jumps.mag_density(y), 0.0, delta)
    big_rate, _ = integrate.quad(jumps.mag_density, delta, np.inf)
    m_big, _ = integrate.quad(lambda y: -y * jumps.mag_density(y), delta, np.inf)
    return _SimParams(
        drift=mean - m_big,
        gauss_var=tilted.base.sigma2 + v_small,
        big_rate=big_rate,
        delta=delta,
        jumps=jumps,
    )


def _sample_big_jumps(params: _SimParams, n: int, gen: np.random.Generator) -> np.ndarray:
    """Magnitudes from the normalized tilted tail nu_q restricted to (delta, inf),
    by rejection from delta + Exp(lam_q)."""
    jumps, delta = params.jumps, params.delta
    lam = jumps.lam
    if lam <= 0:  # untampered stable tail: fall back to power-law inversion
        p = jumps.p
        u = gen.random(n)
        return delta * (1.0 - u) ** (-1.0 / p)
    out = np.empty(n)
    need = np.arange(n)
    while need.size:
        y = delta + gen.exponential(1.0 / lam, size=need.size)
        if isinstance(jumps, GammaJumps):
            acc = delta / y
        else:
            acc = (delta / y) ** (1.0 + jumps.p)
        keep = gen.random(need.size) < acc
        out[need[keep]] = y[keep]
        need = need[~keep]
    return out


def hit_level_times(
    tilted: TiltedModel,
    levels: np.ndarray,
    cfg: MonteCarloConfig,
    rng: RngStream,
    delta: float = 1e-3,
):
    """First-passage times of per-path upward levels under the tilted measure.

    Vectorized Euler scheme: Gaussian part + small-jump Gaussian proxy +
    compound-Poisson big jumps, with a Brownian-bridge crossing correction on
    the continuous part. Spectral negativity means the level is hit without
    overshoot. Returns (rho, flagged) where flagged marks paths that reached
    ``cfg.horizon_cap`` without hitting (Q-probability ~0; reported, kept as inf).
    """
    params = _sim_params(tilted, delta)
    if params.drift <= 0 and params.gauss_var <= 0:
        raise ValueError("tilted model does not move upward")
    gen = rng.gen
    levels = np.asarray(levels, dtype=float)
    n = levels.size
    rho = np.full(n, np.inf)
    rho[levels <= 0.0] = 0.0
    active = np.nonzero(levels > 0.0)[0]
    x = np.zeros(active.size)
    gap = levels[active].copy()  # distance to target
    t = 0.0
    dt = cfg.dt
    sd = math.sqrt(params.gauss_var * dt)
    n_steps = int(math.ceil(cfg.horizon_cap / dt))
    for _ in range(n_steps):
        if active.size == 0:
            break
        m = active.size
        xj = x
        if params.big_rate > 0:
            counts = gen.poisson(params.big_rate * dt, size=m)
            tot = int(counts.sum())
            if tot:
                mags = _sample_big_jumps(params, tot, gen)
                drops = np.zeros(m)
                np.add.at(drops, np.repeat(np.arange(m), counts), mags)
                xj = x - drops
        x_new = xj + params.drift * dt + sd * gen.standard_normal(m)
        t += dt
        hit = x_new >= gap
        # bridge correction for within-step crossings of the continuous part
        not_hit = ~hit
        if sd > 0 and np.any(not_hit):
            a = gap[not_hit] - xj[not_hit]
            b = gap[not_hit] - x_new[not_hit]
            pc = np.exp(-2.0 * a * b / (params.gauss_var * dt))
            bridge_hit = gen.random(a.size) < pc
            hit[np.nonzero(not_hit)[0][bridge_hit]] = True
        if np.any(hit):
            rho[active[hit]] = t
            keep = ~hit
            active, x, gap = active[keep], x_new[keep], gap[keep]
        else:
            x = x_new
    flagged = np.isinf(rho)
    return rho, flagged


def simulate_Q_to_level(
    tilted: TiltedModel, x: float, cfg: MonteCarloConfig, rng: RngStream | None = None,
    delta: float = 1e-3,
) -> SamplePath:
    """One full path under the tilted measure, stopped at the first hit of x."""
    if x < 0:
        raise ValueError("level must be nonnegative")
    rng = rng or RngStream(cfg.seed)
    if x == 0.0:
        return SamplePath(times=np.zeros(1), values=np.zeros(1), stopped_at=0,
                          stop_reason="hit level")
    params = _sim_params(tilted, delta)
    gen = rng.gen
    dt = cfg.dt
    sd = math.sqrt(params.gauss_var * dt)
    ts, xs = [0.0], [0.0]
    pos, t = 0.0, 0.0
    n_steps = int(math.ceil(cfg.horizon_cap / dt))
    reason = "horizon cap"
    stopped = None
    for _ in range(n_steps):
        if params.big_rate > 0:
            k = gen.poisson(params.big_rate * dt)
            if k:
                pos -= _sample_big_jumps(params, k, gen).sum()
        new = pos + params.drift * dt + sd * gen.standard_normal()
        t += dt
        hit = new >= x
        if not hit and sd > 0:
            pc = math.exp(-2.0 * (x - pos) * (x - new) / (params.gauss_var * dt))
            hit = gen.random() < pc
        pos = min(new, x) if hit else new
        ts.append(t)
        xs.append(x if hit else pos)
        if hit:
            reason, stopped = "hit level", len(ts) - 1
            break
    return SamplePath(times=np.array(ts), values=np.array(xs),
                      stopped_at=stopped, stop_reason=reason)


@dataclass
class MaxRecord:
    """Per-path output of the two-step time-of-maximum construction."""

    x_rho: np.ndarray   # overall maximum X^up_infinity
    rho: np.ndarray     # time of maximum (inf on flagged paths)
    k_rho: np.ndarray   # K evaluated at rho: 1 - e^{-q X_rho}
    flagged: np.ndarray
    q: float

    @property
    def flag_rate(self) -> float:
        return float(np.mean(self.flagged))


def two_step_maximum(model: LevyModel, cfg: MonteCarloConfig, delta: float = 1e-3) -> MaxRecord:
    """Sample (rho, X_rho) by first drawing the overall maximum, then running
    the tilted dynamics to first passage of that level.

    Step 1: X_rho = -(1/q) ln U is exponential with rate q.
    Step 2: rho is the hitting time of X_rho under the tilted measure.
    """
    tilted = find_q(model)
    rng = RngStream(cfg.seed)
    u = rng.uniform(cfg.n_paths)
    x_rho = -np.log1p(-u) / tilted.q
    rho, flagged = hit_level_times(tilted, x_rho, cfg, rng.spawn(1), delta=delta)
    k_rho = -np.expm1(-tilted.q * x_rho)
    return MaxRecord(x_rho=x_rho, rho=rho, k_rho=k_rho, flagged=flagged, q=tilted.q)


def bm_direct_argmax(mu: float, horizon: float, cfg: MonteCarloConfig,
                     residual_tol: float = 1e-2):
    """Reference sampler of (rho, X^up) for drift -mu BM directly under P.

    Paths are advanced by Euler steps to ``horizon``; the within-step maximum
    is drawn exactly from the Brownian bridge between the step endpoints, so
    the running maximum has the exact law. The step achieving the maximum
    gives rho, recorded at the step's right endpoint (the convention of the
    first-passage samplers, so the two laws share the same atom grid).
    Paths whose residual probability of a new
    post-horizon maximum, exp(-2 mu (M - X_H)), exceeds ``residual_tol`` are
    discarded; the discard rate is returned for reporting.

    Returns (rho, x_max, discard_rate) over the kept paths.
    """
    if mu <= 0 or horizon <= 0:
        raise ValueError("need mu > 0 and a positive horizon")
    rng = RngStream(cfg.seed)
    gen = rng.gen
    n = cfg.n_paths
    dt = cfg.dt
    sd = math.sqrt(dt)
    x = np.zeros(n)
    m = np.zeros(n)
    rho = np.zeros(n)
    n_steps = int(math.ceil(horizon / dt))
    for i in range(n_steps):
        y = x - mu * dt + sd * gen.standard_normal(n)
        u = gen.random(n)
        step_max = 0.5 * (x + y + np.sqrt((y - x) ** 2 - 2.0 * dt * np.log(u)))
        better = step_max > m
        m[better] = step_max[better]
        rho[better] = (i + 1) * dt
        x = y
    keep = np.exp(-2.0 * mu * (m - x)) <= residual_tol
    discard_rate = 1.0 - float(np.mean(keep))
    return rho[keep], m[keep], discard_rate


@dataclass
class LastExitRecord:
    """Per-path output of the BM last-exit construction at level x <= 0."""

    rho: np.ndarray
    lam: np.ndarray      # terminal local time at the level, drawn Exp(mu)
    flagged: np.ndarray

    @property
    def flag_rate(self) -> float:
        return float(np.mean(self.flagged))


def bm_last_exit_construct(
    mu: float,
    x: float,
    cfg: MonteCarloConfig,
    band_scale: float = 1.0,
) -> LastExitRecord:
    """Last exit of drifted BM (drift -mu under P) from level x <= 0.

    The terminal local time Lambda_inf(x) is exponential with rate mu (so
    K = 1 - exp(-mu Lambda) is uniform at rho); under the changed measure the
    path follows dX = -mu sign(X - x) dt + dW and rho is the time at which
    the occupation-band local-time accumulator reaches the drawn target.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if x > 0:
        raise ValueError("level x must be nonpositive (start is 0)")
    rng = RngStream(cfg.seed)
    gen = rng.gen
    n = cfg.n_paths
    lam = gen.exponential(1.0 / mu, size=n)
    dt = cfg.dt
    eps = band_scale * math.sqrt(dt)  # sigma = 1
    from .diffusion import band_occupation_factor

    inc = dt / (2.0 * eps) / band_occupation_factor(-mu, mu, 1.0, eps)
    sd = math.sqrt(dt)
    rho = np.full(n, np.inf)
    active = np.arange(n)
    pos = np.zeros(n)
    acc = np.zeros(n)
    t = 0.0
    n_steps = int(math.ceil(cfg.horizon_cap / dt))
    for _ in range(n_steps):
        if active.size == 0:
            break
        m = active.size
        drift = -mu * np.sign(pos - x)
        pos = pos + drift * dt + sd * gen.standard_normal(m)
        t += dt
        in_band = np.abs(pos - x) <= eps
        acc[in_band] += inc
        done = acc >= lam[active]
        if np.any(done):
            rho[active[done]] = t
            keep = ~done
            active, pos, acc = active[keep], pos[keep], acc[keep]
    flagged = np.isinf(rho)
    return LastExitRecord(rho=rho, lam=lam, flagged=flagged)
