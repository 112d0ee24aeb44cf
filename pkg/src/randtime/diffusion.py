"""One-dimensional downwards-transient diffusions: scale functions, tilted
(Q-)dynamics, two-step time-of-maximum and last-exit constructions, and the
occupation-band local-time estimator.

A model lives on an interval (l, r) with drift alpha(x) and dispersion
sigma(x) > 0; the scale function

    s(x) = int_l^x exp( -2 int_{x0}^v alpha/sigma^2 du ) dv,   normalized
    s(l+) = 0, s(x0) = 1,

turns s(X) into a local martingale. Downward transience means s(l+) finite
and s(r-) = infinity. The tilt q(x) = s'(x)/s(x) produces the upward drift
alpha_q = alpha + sigma^2 q under which the overall maximum is reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import MonteCarloConfig, RngStream

__all__ = [
    "DiffusionModel",
    "ScaleFunction",
    "build_scale",
    "TiltedDiffusion",
    "q_drift",
    "recurrence_check",
    "two_step_maximum",
    "two_step_last_exit",
    "local_time_accumulate",
    "DiffusionMaxRecord",
    "DiffusionLastExitRecord",
    "bessel_model",
    "bessel_scale_closed_form",
    "bm_model",
    "bm_scale_closed_form",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _gl_nested(g, a, b):
    """Vectorized int_a^b g, 10-point Gauss-Legendre; a, b arrays of equal shape."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    pts = mid[..., None] + half[..., None] * _GL_X  # (..., 10)
    return (g(pts) * _GL_W).sum(axis=-1) * half


@dataclass
class DiffusionModel:
    """Diffusion on (l, r) with vectorized coefficient callables."""

    l: float
    r: float
    x0: float
    alpha: object  # callable, array-capable
    sigma: object  # callable, array-capable, > 0
    name: str = "diffusion"

    def __post_init__(self):
        if not (self.l < self.x0 < self.r):
            raise ValueError("need l < x0 < r")
        probe = np.linspace(
            self.x0 if math.isinf(self.l) else self.l + 1e-6 * (self.x0 - self.l),
            self.x0 if math.isinf(self.r) else self.r - 1e-6 * (self.r - self.x0),
            17,
        )
        sig = np.asarray(self.sigma(probe), dtype=float)
        if np.any(sig <= 0) or not np.all(np.isfinite(sig)):
            raise ValueError("sigma must be positive on (l, r)")
        if not np.all(np.isfinite(np.asarray(self.alpha(probe), dtype=float))):
            raise ValueError("alpha must be finite on (l, r)")

    def drift_ratio(self, x):
        """-2 alpha / sigma^2, the scale-density exponent integrand."""
        x = np.asarray(x, dtype=float)
        sig = np.asarray(self.sigma(x), dtype=float)
        return -2.0 * np.asarray(self.alpha(x), dtype=float) / (sig * sig)


class ScaleFunction:
    """Normalized scale function with derivative and inverse.

    Backends: a supplied closed form (with optional derivative/inverse), or
    the quadrature grid built by :func:`build_scale`. All evaluators are
    vectorized; the quadrature backend extends its upper grid on demand.
    """

    def __init__(self, model, value, prime, inverse, backend="closed"):
        self.model = model
        self._value, self._prime, self._inverse = value, prime, inverse
        self.backend = backend
        v0 = float(np.asarray(value(np.array([model.x0])))[0])
        if abs(v0 - 1.0) > 1e-10:
            raise ValueError(f"scale normalization s(x0) = {v0}, expected 1")

    def __call__(self, x):
        return self._value(np.asarray(x, dtype=float))

    def prime(self, x):
        return self._prime(np.asarray(x, dtype=float))

    def inverse(self, y):
        return self._inverse(np.asarray(y, dtype=float))

    def q(self, x):
        return self.prime(x) / self(x)


class _QuadScale:
    """Grid-based quadrature backend: cumulative exponent E and raw scale S
    at dense nodes, exact Gauss-Legendre partial integrals between nodes."""

    def __init__(self, model: DiffusionModel):
        self.model = model
        x0 = model.x0
        # --- lower grid toward l ------------------------------------------
        if math.isinf(model.l):
            # provisional window below x0; _trim_lower_tail extends it until
            # the dropped w-mass is negligible (requires s(l+) finite)
            step = max(1.0, abs(x0) * 0.1)
            low_nodes = x0 - step * np.arange(20, -1, -1)
        else:
            # geometric refinement toward the (possibly singular) endpoint l
            span = x0 - model.l
            ds = span * 0.5 ** np.arange(49, -1, -1)
            low_nodes = model.l + ds
        # densify each lower segment by 4
        dense = [low_nodes[0]]
        for a, b in zip(low_nodes[:-1], low_nodes[1:]):
            dense.extend(np.linspace(a, b, 5)[1:])
        self.nodes = np.array(dense)
        self._build_tables()
        if math.isinf(model.l):
            self._trim_lower_tail()

    # -- table construction -------------------------------------------------
    def _build_tables(self):
        g = self.model.drift_ratio
        nodes = self.nodes
        segs = _gl_nested(g, nodes[:-1], nodes[1:])
        E = np.concatenate([[0.0], np.cumsum(segs)])
        # exponent normalized at x0
        i0 = int(np.argmin(np.abs(nodes - self.model.x0)))
        E -= E[i0]
        self.E = E
        # raw scale: integrate w = exp(E) segmentwise with composite GL,
        # evaluating E inside each segment by nested GL from the left node
        w_segs = self._w_integral(nodes[:-1], nodes[1:], E[:-1])
        S = np.concatenate([[0.0], np.cumsum(w_segs)])
        # lower tail below the first node (finite-l integrable singularity):
        # power-law extrapolation from the two lowest nodes
        if not math.isinf(self.model.l):
            d1 = nodes[0] - self.model.l
            w1 = math.exp(E[0])
            gamma = 0.0
            if len(nodes) > 1:
                d2 = nodes[1] - self.model.l
                w2 = math.exp(E[1])
                if d2 > d1 > 0 and w1 > 0 and w2 > 0:
                    gamma = math.log(w2 / w1) / math.log(d2 / d1)
            if gamma <= -1.0:
                raise ValueError("scale integral diverges at l (s(l+) not finite)")
            S = S + w1 * d1 / (gamma + 1.0)
        self.S_raw = S
        self.i0 = int(np.argmin(np.abs(nodes - self.model.x0)))
        self.D = S[self.i0]
        if not (np.isfinite(self.D) and self.D > 0):
            raise ValueError("scale normalization failed: int_l^{x0} s' not finite")

    def _w_integral(self, a, b, E_a):
        """int_a^b exp(E(v)) dv with E(v) = E_a + int_a^v g, all vectorized."""
        g = self.model.drift_ratio
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        pts = mid[..., None] + half[..., None] * _GL_X  # (n, 10)
        E_pts = E_a[..., None] + _gl_nested(g, np.broadcast_to(a[..., None], pts.shape), pts)
        return (np.exp(E_pts) * _GL_W).sum(axis=-1) * half

    def _trim_lower_tail(self):
        """For l = -infty keep extending down until the dropped mass is tiny."""
        for _ in range(200):
            tail = self.S_raw[1] - self.S_raw[0]
            if tail < 1e-14 * self.D:
                return
            step = self.nodes[1] - self.nodes[0] if len(self.nodes) > 1 else 1.0
            new_nodes = self.nodes[0] - step * np.arange(8, 0, -1)
            self.nodes = np.concatenate([new_nodes, self.nodes])
            self._build_tables()
        raise ValueError("scale integral toward l = -inf does not converge")

    def ensure_upper(self, x_target: float | None = None, y_target: float | None = None):
        """Extend the node grid upward to cover x_target or raw value y_target."""
        def done():
            if x_target is not None and self.nodes[-1] < x_target:
                return False
            if y_target is not None and self.S_raw[-1] < y_target:
                return False
            return True

        guard = 0
        while not done():
            guard += 1
            if guard > 4000:
                raise ValueError("scale grid extension exhausted (s(r-) may be finite)")
            top = self.nodes[-1]
            if math.isinf(self.model.r):
                width = max(abs(top), 1.0) * (2 ** (1.0 / 16.0) - 1.0)
                new = top + width * np.arange(1, 9)
            else:
                gap = self.model.r - top
                new = top + gap * (1.0 - 0.5 ** np.arange(1, 9)) * 0.9
            g = self.model.drift_ratio
            seg_nodes = np.concatenate([[top], new])
            E_new = self.E[-1] + np.cumsum(_gl_nested(g, seg_nodes[:-1], seg_nodes[1:]))
            w_new = self.S_raw[-1] + np.cumsum(
                self._w_integral(seg_nodes[:-1], seg_nodes[1:],
                                 np.concatenate([[self.E[-1]], E_new[:-1]]))
            )
            self.nodes = np.concatenate([self.nodes, new])
            self.E = np.concatenate([self.E, E_new])
            self.S_raw = np.concatenate([self.S_raw, w_new])

    # -- vectorized evaluators ----------------------------------------------
    def _exponent(self, x):
        idx = np.clip(np.searchsorted(self.nodes, x) - 1, 0, len(self.nodes) - 1)
        a = self.nodes[idx]
        return self.E[idx] + _gl_nested(self.model.drift_ratio, a, x)

    def value(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self.ensure_upper(x_target=float(x.max()))
        idx = np.clip(np.searchsorted(self.nodes, x) - 1, 0, len(self.nodes) - 1)
        a = self.nodes[idx]
        partial = self._w_integral(a, x, self.E[idx])
        return (self.S_raw[idx] + partial) / self.D

    def prime(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self.ensure_upper(x_target=float(x.max()))
        return np.exp(self._exponent(x)) / self.D

    def inverse(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(y <= 0):
            raise ValueError("scale inverse defined for positive values")
        self.ensure_upper(y_target=float(y.max()) * self.D * 1.05)
        x = np.interp(y * self.D, self.S_raw, self.nodes)
        for _ in range(4):  # Newton refinement on the exact evaluators
            x = x + (y - self.value(x)) / self.prime(x)
            x = np.clip(x, self.nodes[0], self.nodes[-1])
        return x


def build_scale(model: DiffusionModel, closed_form=None, closed_form_prime=None,
                closed_form_inverse=None) -> ScaleFunction:
    """Scale function for the model: supplied closed form, or quadrature.

    The quadrature backend integrates exp(-2 int alpha/sigma^2) on a grid
    geometrically refined toward l (integrable singularities) and extended
    upward on demand; the inverse uses interpolation plus Newton polishing.
    Raises if the lower integral diverges (downward-transience assumption).
    """
    if closed_form is not None:
        value = lambda x: np.asarray(closed_form(x), dtype=float)
        if closed_form_prime is not None:
            prime = lambda x: np.asarray(closed_form_prime(x), dtype=float)
        else:
            def prime(x, _h=1e-6):
                x = np.asarray(x, dtype=float)
                h = _h * np.maximum(1.0, np.abs(x))
                return (value(x + h) - value(x - h)) / (2.0 * h)
        if closed_form_inverse is not None:
            inverse = lambda y: np.asarray(closed_form_inverse(y), dtype=float)
        else:
            def inverse(y):
                from scipy.optimize import brentq
                y = np.atleast_1d(np.asarray(y, dtype=float))
                out = np.empty_like(y)
                for i, yy in enumerate(y):
                    hi = model.x0 + 1.0
                    while float(value(np.array([hi]))[0]) < yy:
                        hi = model.x0 + 2.0 * (hi - model.x0)
                    lo = model.l + 1e-12 if math.isfinite(model.l) else hi - 1e6
                    out[i] = brentq(lambda xx: float(value(np.array([xx]))[0]) - yy, lo, hi)
                return out
        return ScaleFunction(model, value, prime, inverse, backend="closed")
    quad = _QuadScale(model)
    return ScaleFunction(model, quad.value, quad.prime, quad.inverse, backend="quadrature")


@dataclass
class TiltedDiffusion:
    """Diffusion with the time-of-maximum tilt q(x) = s'(x)/s(x)."""

    model: DiffusionModel
    scale: ScaleFunction

    def q(self, x):
        return self.scale.q(x)

    def alpha_q(self, x):
        x = np.asarray(x, dtype=float)
        sig = np.asarray(self.model.sigma(x), dtype=float)
        return np.asarray(self.model.alpha(x), dtype=float) + sig * sig * self.q(x)


def q_drift(tilted: TiltedDiffusion, x):
    """Drift of the diffusion under the time-of-maximum measure change."""
    return tilted.alpha_q(x)


def recurrence_check(tilted: TiltedDiffusion, x_star: float) -> dict:
    """Numeric sanity check that the last-exit piecewise dynamics are recurrent
    at x_star: the P-scale diverges toward r (forces returns from above) and
    the tilted scale -1/s diverges toward l (forces returns from below)."""
    model, s = tilted.model, tilted.scale
    if math.isinf(model.r):
        probes_up = model.x0 + 2.0 ** np.arange(1, 11)
    else:
        probes_up = model.r - (model.r - model.x0) * 0.5 ** np.arange(1, 11)
    s_up = np.asarray(s(probes_up), dtype=float)
    upper_diverges = bool(s_up[-1] > 100.0 * s_up[0] or s_up[-1] > 1e6)
    if math.isinf(model.l):
        probes_dn = model.x0 - 2.0 ** np.arange(1, 11)
    else:
        probes_dn = model.l + (model.x0 - model.l) * 0.5 ** np.arange(1, 11)
    s_dn = np.asarray(s(probes_dn), dtype=float)
    lower_unbounded = bool(np.all(s_dn > 0) and (1.0 / s_dn[-1]) > 100.0 / s_dn[0])
    return {
        "upper_scale_diverges": upper_diverges,
        "tilted_scale_unbounded_below": lower_unbounded,
        "recurrent": upper_diverges and lower_unbounded,
        "x_star": x_star,
    }


def band_occupation_factor(a_up: float, a_dn: float, sigma2: float, eps: float) -> float:
    """Ratio of the mean band-occupation density to the density at the level.

    Near the level the piecewise dynamics (drift ``a_up`` above, ``a_dn``
    below) have quasi-stationary profile exp(2 a y / sigma^2), so the flat
    band average (1/2eps) int_{-eps}^{eps} profile(y) dy understates the local
    time by this factor; dividing the accumulator increment by it removes the
    leading O(eps) bias.
    """
    if eps <= 0 or sigma2 <= 0:
        raise ValueError("need eps > 0 and sigma2 > 0")

    def half(a):
        # (1/eps) int_0^eps e^{-2|a| y / sigma^2} dy, stable as a -> 0
        c = 2.0 * abs(a) * eps / sigma2
        return -math.expm1(-c) / c if c > 1e-12 else 1.0 - 0.5 * c

    return 0.5 * (half(a_up) + half(a_dn))


def local_time_accumulate(positions, level: float, band: float, dt: float, sigma2_level: float):
    """Occupation-band local-time increments: sigma^2(x*) (dt / 2 eps) 1{|X - x*| <= eps}.

    The semimartingale local time equals sigma^2 times the Markovian
    (speed-measure) one; this estimator targets the former directly.
    """
    if band <= 0:
        raise ValueError("band must be positive")
    positions = np.asarray(positions, dtype=float)
    return sigma2_level * (dt / (2.0 * band)) * (np.abs(positions - level) <= band)


@dataclass
class DiffusionMaxRecord:
    x_rho: np.ndarray
    rho: np.ndarray
    k_rho: np.ndarray
    flagged: np.ndarray
    boundary_truncations: int = 0

    @property
    def flag_rate(self) -> float:
        return float(np.mean(self.flagged))


def two_step_maximum(model: DiffusionModel, cfg: MonteCarloConfig,
                     scale: ScaleFunction | None = None) -> DiffusionMaxRecord:
    """Sample (rho, X^up_infinity): draw the maximum X_rho = s^{-1}(1/U) (so
    s(X_rho) is Pareto(1)), then run Euler under the tilted drift alpha_q to
    the first hit of that level, with bridge-corrected crossing detection.

    Paths not hitting by ``cfg.horizon_cap`` are flagged with rho = inf.
    """
    s = scale or build_scale(model)
    tilted = TiltedDiffusion(model, s)
    rng = RngStream(cfg.seed)
    gen = rng.gen
    n = cfg.n_paths
    u = rng.uniform(n)
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    x_rho = np.asarray(s.inverse(1.0 / (1.0 - u)), dtype=float)  # 1/(1-u) ~ Pareto(1)
    k_rho = u  # K_rho = 1 - 1/s(X_rho) = 1 - (1 - u)
    dt = cfg.dt
    sq_dt = math.sqrt(dt)
    rho = np.full(n, np.inf)
    hit_now = x_rho <= model.x0 + 1e-14
    rho[hit_now] = 0.0
    active = np.nonzero(~hit_now)[0]
    pos = np.full(active.size, float(model.x0))
    target = x_rho[active].copy()
    truncations = 0
    t = 0.0
    n_steps = int(math.ceil(cfg.horizon_cap / dt))
    for _ in range(n_steps):
        if active.size == 0:
            break
        sig = np.asarray(model.sigma(pos), dtype=float)
        drift = tilted.alpha_q(pos)
        new = pos + drift * dt + sig * sq_dt * gen.standard_normal(active.size)
        # truncate steps that would exit the state space
        low_bad = new <= model.l
        if np.any(low_bad):
            new[low_bad] = 0.5 * (pos[low_bad] + model.l)
            truncations += int(low_bad.sum())
        t += dt
        hit = new >= target
        not_hit = ~hit
        if np.any(not_hit):
            a = target[not_hit] - pos[not_hit]
            b = target[not_hit] - new[not_hit]
            var = (sig[not_hit] ** 2) * dt
            pc = np.exp(-2.0 * a * b / var)
            bridge = gen.random(a.size) < pc
            hit[np.nonzero(not_hit)[0][bridge]] = True
        if np.any(hit):
            rho[active[hit]] = t
            keep = ~hit
            active, pos, target = active[keep], new[keep], target[keep]
        else:
            pos = new
    return DiffusionMaxRecord(x_rho=x_rho, rho=rho, k_rho=k_rho,
                              flagged=np.isinf(rho), boundary_truncations=truncations)


@dataclass
class DiffusionLastExitRecord:
    rho: np.ndarray
    lam: np.ndarray
    flagged: np.ndarray
    q_star: float

    @property
    def flag_rate(self) -> float:
        return float(np.mean(self.flagged))


def two_step_last_exit(model: DiffusionModel, x_star: float, cfg: MonteCarloConfig,
                       scale: ScaleFunction | None = None,
                       band_scale: float = 1.0) -> DiffusionLastExitRecord:
    """Last exit from level x_star <= x0: draw the terminal local time
    Lambda = -(2/q(x*)) ln U (exponential, rate q(x*)/2), then run the
    piecewise dynamics (P-drift above x*, tilted drift below) accumulating
    occupation-band local time until the target is reached; rho is that time.
    """
    if not (model.l < x_star <= model.x0):
        raise ValueError("x_star must lie in (l, x0]")
    s = scale or build_scale(model)
    tilted = TiltedDiffusion(model, s)
    q_star = float(np.asarray(tilted.q(np.array([x_star])))[0])
    if q_star <= 0:
        raise ValueError("q(x_star) must be positive")
    rng = RngStream(cfg.seed)
    gen = rng.gen
    n = cfg.n_paths
    lam = gen.exponential(2.0 / q_star, size=n)
    dt = cfg.dt
    sq_dt = math.sqrt(dt)
    sig_star = float(np.asarray(model.sigma(np.array([x_star])))[0])
    eps = band_scale * sig_star * sq_dt
    a_up = float(np.asarray(model.alpha(np.array([x_star])))[0])
    a_dn = float(np.asarray(tilted.alpha_q(np.array([x_star])))[0])
    correction = band_occupation_factor(a_up, a_dn, sig_star * sig_star, eps)
    inc = sig_star * sig_star * dt / (2.0 * eps) / correction
    rho = np.full(n, np.inf)
    active = np.arange(n)
    pos = np.full(n, float(model.x0))
    acc = np.zeros(n)
    t = 0.0
    n_steps = int(math.ceil(cfg.horizon_cap / dt))
    for _ in range(n_steps):
        if active.size == 0:
            break
        below = pos <= x_star
        drift = np.where(below, tilted.alpha_q(pos), np.asarray(model.alpha(pos), dtype=float))
        sig = np.asarray(model.sigma(pos), dtype=float)
        new = pos + drift * dt + sig * sq_dt * gen.standard_normal(active.size)
        low_bad = new <= model.l
        if np.any(low_bad):
            new[low_bad] = 0.5 * (pos[low_bad] + model.l)
        t += dt
        acc[np.abs(new - x_star) <= eps] += inc
        pos = new
        done = acc >= lam[active]
        if np.any(done):
            rho[active[done]] = t
            keep = ~done
            active, pos, acc = active[keep], pos[keep], acc[keep]
    return DiffusionLastExitRecord(rho=rho, lam=lam, flagged=np.isinf(rho), q_star=q_star)


# ---------------------------------------------------------------------------
# Builtin model families.
# ---------------------------------------------------------------------------

def bessel_model(a: float, x0: float = 1.0) -> DiffusionModel:
    """Bessel-type diffusion of index -a on (0, inf): alpha = (1-2a)/(2x), sigma = 1."""
    if a <= 0 or x0 <= 0:
        raise ValueError("need a > 0, x0 > 0")
    return DiffusionModel(
        l=0.0, r=math.inf, x0=x0,
        alpha=lambda x, _a=a: (1.0 - 2.0 * _a) / (2.0 * np.asarray(x, dtype=float)),
        sigma=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        name=f"bessel(a={a})",
    )


def bessel_scale_closed_form(a: float, x0: float = 1.0) -> tuple:
    """(s, s', s^{-1}) for the Bessel model: s(x) = (x/x0)^{2a}."""
    s = lambda x: (np.asarray(x, dtype=float) / x0) ** (2.0 * a)
    sp = lambda x: (2.0 * a / x0) * (np.asarray(x, dtype=float) / x0) ** (2.0 * a - 1.0)
    sinv = lambda y: x0 * np.asarray(y, dtype=float) ** (1.0 / (2.0 * a))
    return s, sp, sinv


def bm_model(mu: float, x0: float = 0.0) -> DiffusionModel:
    """Brownian motion with drift -mu < 0 on the whole line."""
    if mu <= 0:
        raise ValueError("mu must be positive (downward drift -mu)")
    return DiffusionModel(
        l=-math.inf, r=math.inf, x0=x0,
        alpha=lambda x, _m=mu: np.full_like(np.asarray(x, dtype=float), -_m),
        sigma=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        name=f"bm(mu={mu})",
    )


def bm_scale_closed_form(mu: float, x0: float = 0.0) -> tuple:
    """(s, s', s^{-1}) for drifted BM: s(x) = e^{2 mu (x - x0)}."""
    s = lambda x: np.exp(2.0 * mu * (np.asarray(x, dtype=float) - x0))
    sp = lambda x: 2.0 * mu * np.exp(2.0 * mu * (np.asarray(x, dtype=float) - x0))
    sinv = lambda y: x0 + np.log(np.asarray(y, dtype=float)) / (2.0 * mu)
    return s, sp, sinv
