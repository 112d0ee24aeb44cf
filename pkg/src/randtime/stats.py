"""Monte-Carlo driver and goodness-of-fit machinery.

Statistical gates are two-tier by design: analytic identities are asserted at
1e-8..1e-12, while KS/L1 gates use p > 0.01 (or a pinned distance bound) on
shipped seeds and are documented as seed-dependent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogorov

from .core import MonteCarloConfig, RngStream

__all__ = [
    "EmpiricalDistribution",
    "GofReport",
    "ks_one_sample",
    "ks_two_sample",
    "l1_density_error",
    "mc_driver",
]


@dataclass
class EmpiricalDistribution:
    """Sorted sample with ECDF evaluation; optional nonnegative weights."""

    samples: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if np.any(np.diff(self.samples) < 0):
            raise ValueError("samples must be sorted ascending")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if np.any(self.weights < 0):
                raise ValueError("weights must be nonnegative")
            if abs(self.weights.sum() - self.n) > 1e-8 * self.n:
                raise ValueError("weights must sum to n")

    @classmethod
    def from_samples(cls, raw, weights=None) -> "EmpiricalDistribution":
        raw = np.asarray(raw, dtype=float)
        order = np.argsort(raw, kind="stable")
        w = None if weights is None else np.asarray(weights, dtype=float)[order]
        return cls(samples=raw[order], weights=w)

    @property
    def n(self) -> int:
        return self.samples.size

    def ecdf(self, x) -> np.ndarray:
        """Right-continuous empirical CDF at the query points."""
        x = np.asarray(x, dtype=float)
        if self.weights is None:
            return np.searchsorted(self.samples, x, side="right") / self.n
        cum = np.cumsum(self.weights) / self.weights.sum()
        idx = np.searchsorted(self.samples, x, side="right")
        return np.where(idx == 0, 0.0, cum[np.maximum(idx - 1, 0)])


@dataclass
class GofReport:
    """Outcome of one goodness-of-fit evaluation."""

    test: str
    statistic: float
    p_value: float | None
    n: int
    tolerance: float
    passed: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "meta": {k: v for k, v in self.meta.items()},
        }


def ks_one_sample(emp: EmpiricalDistribution, cdf, alpha: float = 0.01,
                  name: str = "ks_one_sample") -> GofReport:
    """One-sample Kolmogorov-Smirnov test against a callable CDF."""
    if emp.n < 100:
        raise ValueError("need at least 100 samples for the asymptotic KS p-value")
    n = emp.n
    theo = np.asarray(cdf(emp.samples), dtype=float)
    up = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    d = float(max(np.max(up - theo), np.max(theo - lo)))
    p = float(kolmogorov(math.sqrt(n) * d))
    return GofReport(test=name, statistic=d, p_value=p, n=n,
                     tolerance=alpha, passed=p > alpha)


def ks_two_sample(emp1: EmpiricalDistribution, emp2: EmpiricalDistribution,
                  alpha: float = 0.01, name: str = "ks_two_sample") -> GofReport:
    """Two-sample KS with effective n = n1 n2 / (n1 + n2)."""
    if emp1.n < 100 or emp2.n < 100:
        raise ValueError("need at least 100 samples per side")
    grid = np.concatenate([emp1.samples, emp2.samples])
    d = float(np.max(np.abs(emp1.ecdf(grid) - emp2.ecdf(grid))))
    n_eff = emp1.n * emp2.n / (emp1.n + emp2.n)
    p = float(kolmogorov(math.sqrt(n_eff) * d))
    return GofReport(test=name, statistic=d, p_value=p, n=emp1.n + emp2.n,
                     tolerance=alpha, passed=p > alpha,
                     meta={"n1": emp1.n, "n2": emp2.n, "n_eff": n_eff})


def _axis_nodes(edges, subdiv: int, sqrt_singular_at: float | None = None):
    """Per-bin subsampling nodes and weights (composite midpoint rule).

    When ``sqrt_singular_at`` is given, the rule is applied in the variable
    s = sqrt(t - lo), which removes an integrable inverse-square-root
    singularity of the density at the lower support edge.
    """
    mids = (np.arange(subdiv) + 0.5) / subdiv
    if sqrt_singular_at is None:
        nodes = edges[:-1, None] + np.diff(edges)[:, None] * mids
        weights = np.repeat(np.diff(edges)[:, None] / subdiv, subdiv, axis=1)
    else:
        s_edges = np.sqrt(np.maximum(edges - sqrt_singular_at, 0.0))
        ds = np.diff(s_edges)[:, None]
        s = np.sqrt(np.maximum(edges[:-1, None] - sqrt_singular_at, 0.0)) + ds * mids
        nodes = sqrt_singular_at + s * s
        weights = 2.0 * s * ds / subdiv
    return nodes, weights


def _bin_probability(oracle, edges_t, edges_x=None, subdiv: int = 8):
    """Oracle mass per bin by subsampled quadrature (singularity-aware)."""
    singular = getattr(oracle, "sqrt_edge_axes", ())

    def axis(e, i):
        lo = oracle.support[i][0] if i in singular else None
        return _axis_nodes(np.asarray(e, dtype=float), subdiv, lo)

    if edges_x is None:
        nodes, w = axis(edges_t, 0)
        vals = np.asarray(oracle.pdf(nodes.ravel()), dtype=float).reshape(nodes.shape)
        return (vals * w).sum(axis=1)
    nt, wt = axis(edges_t, 0)
    nx, wx = axis(edges_x, 1)
    tt, xx = np.meshgrid(nt.ravel(), nx.ravel(), indexing="ij")
    vals = np.asarray(oracle.pdf(tt, xx), dtype=float)
    vals = vals.reshape(nt.shape[0], subdiv, nx.shape[0], subdiv)
    return np.einsum("tixj,ti,xj->tx", vals, wt, wx)


def l1_density_error(samples, oracle, bins, range_, alpha: float = 0.05,
                     min_coverage: float = 0.99, name: str = "l1_density") -> GofReport:
    """L1 distance between a histogram and an oracle's binned masses.

    ``samples`` is (n,) for 1-D oracles or (n, 2) for joint ones; bins/range_
    follow numpy histogram conventions. The oracle must put at least
    ``min_coverage`` of its mass inside the histogram window; otherwise the
    window is widened once by 50% per axis before failing.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample")
    two_d = samples.ndim == 2

    def attempt(rng):
        if two_d:
            hist, et, ex = np.histogram2d(samples[:, 0], samples[:, 1], bins=bins, range=rng)
            p_hat = hist / samples.shape[0]
            p_bin = _bin_probability(oracle, et, ex)
        else:
            hist, et = np.histogram(samples, bins=bins, range=rng)
            p_hat = hist / samples.shape[0]
            p_bin = _bin_probability(oracle, et)
        return p_hat, p_bin

    rng_ = [tuple(r) for r in (range_ if two_d else [range_])]
    for widen in range(2):
        p_hat, p_bin = attempt(rng_ if two_d else rng_[0])
        coverage = float(p_bin.sum())
        if coverage >= min_coverage:
            break
        rng_ = [(lo, lo + 1.5 * (hi - lo)) for lo, hi in rng_]
    else:
        raise ValueError(f"oracle coverage {coverage:.4f} below {min_coverage} after widening")
    l1 = float(np.abs(p_hat - p_bin).sum())
    n = samples.shape[0]
    return GofReport(test=name, statistic=l1, p_value=None, n=n,
                     tolerance=alpha, passed=l1 < alpha,
                     meta={"coverage": coverage, "bins": bins})


def mc_driver(task, cfg: MonteCarloConfig, chunk_size: int = 5000):
    """Fan a sampling task across workers with derived RNG streams.

    ``task(rng: RngStream, n: int) -> np.ndarray`` draws n samples (rows).
    Chunks get stream ids equal to their index, so the merged output is a
    deterministic function of (seed, n_paths, task) regardless of the worker
    count. Chunk results are concatenated in chunk order.
    """
    n_total = cfg.n_paths
    n_chunks = (n_total + chunk_size - 1) // chunk_size
    sizes = [min(chunk_size, n_total - i * chunk_size) for i in range(n_chunks)]

    def run(i):
        return np.asarray(task(RngStream(cfg.seed, stream_id=i + 1), sizes[i]))

    if cfg.workers == 1 or n_chunks == 1:
        parts = [run(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(run, range(n_chunks)))
    return np.concatenate(parts, axis=0)
