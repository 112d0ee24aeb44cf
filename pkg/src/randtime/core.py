"""Shared path/grid/RNG/config types and small utilities used by every simulator."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid",
    "SamplePath",
    "RngStream",
    "MonteCarloConfig",
    "eta_u",
    "draw_uniform",
    "draw_exponential",
    "write_paths_csv",
]


@dataclass(frozen=True)
class TimeGrid:
    """Discretization of the half-line (or of [0, T)).

    Uniform grids carry a fixed ``dt``; adaptive grids carry a rule id plus
    parameters and are materialized lazily per path via :meth:`times`.
    """

    t0: float = 0.0
    dt: float | None = None
    horizon: float | None = None
    rule: str = "uniform"
    rule_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t0 < 0:
            raise ValueError("t0 must be nonnegative")
        if self.rule == "uniform":
            if self.dt is None or self.dt <= 0:
                raise ValueError("uniform grid needs dt > 0")
        elif self.rule == "shrink_to_horizon":
            # dt_n = min(dt, kappa * (T - t_n)), stop at T - eps_T
            if self.dt is None or self.dt <= 0:
                raise ValueError("adaptive grid needs base dt > 0")
            if self.horizon is None:
                raise ValueError("shrink_to_horizon needs a horizon")
            kappa = self.rule_params.get("kappa", 0.1)
            eps = self.rule_params.get("eps_T")
            if not (0 < kappa < 1):
                raise ValueError("kappa must lie in (0, 1)")
            if eps is None or eps <= 0:
                raise ValueError("shrink_to_horizon needs eps_T > 0")
        else:
            raise ValueError(f"unknown grid rule {self.rule!r}")

    def times(self, n_max: int | None = None) -> np.ndarray:
        """Materialize node times. Adaptive grids never step past the horizon."""
        if self.rule == "uniform":
            if self.horizon is not None:
                n = int(np.floor((self.horizon - self.t0) / self.dt + 1e-12))
                return self.t0 + self.dt * np.arange(n + 1)
            if n_max is None:
                raise ValueError("unbounded uniform grid needs n_max")
            return self.t0 + self.dt * np.arange(n_max + 1)
        # shrink_to_horizon
        kappa = self.rule_params.get("kappa", 0.1)
        eps = self.rule_params["eps_T"]
        T = self.horizon
        out = [self.t0]
        t = self.t0
        while t < T - eps:
            step = min(self.dt, kappa * (T - t))
            t = min(t + step, T - eps)
            out.append(t)
        return np.asarray(out)


@dataclass
class SamplePath:
    """A simulated path with its running maximum and local-time accumulator.

    ``values``, ``running_max`` and ``local_time`` are aligned with ``times``;
    ``running_max`` is the pathwise cumulative maximum and ``local_time`` the
    nondecreasing occupation-band accumulator at the declared ``level``.
    """

    times: np.ndarray
    values: np.ndarray
    running_max: np.ndarray | None = None
    local_time: np.ndarray | None = None
    level: float | None = None
    stopped_at: int | None = None
    stop_reason: str | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")
        if self.running_max is None:
            self.running_max = np.maximum.accumulate(self.values)
        if self.local_time is None:
            self.local_time = np.zeros_like(self.values)
        if self.stopped_at is not None and not (0 <= self.stopped_at < len(self.times)):
            raise ValueError("stopped_at index outside grid")


class RngStream:
    """Counter-based random stream: (seed, stream_id) -> reproducible, and
    distinct stream ids are independent by construction (Philox jumps)."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        bitgen = np.random.Philox(key=self.seed)
        if self.stream_id:
            bitgen = bitgen.jumped(self.stream_id)
        self.gen = np.random.Generator(bitgen)

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def uniform(self, size=None) -> np.ndarray | float:
        return self.gen.random(size)

    def normal(self, size=None) -> np.ndarray | float:
        return self.gen.standard_normal(size)


@dataclass(frozen=True)
class MonteCarloConfig:
    n_paths: int
    seed: int = 0
    workers: int = 1
    dt: float = 1e-3
    horizon_cap: float = 100.0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.horizon_cap <= 0:
            raise ValueError("horizon_cap must be positive")


def eta_u(k_path, u: float):
    """First grid index where the nondecreasing [0,1]-valued path reaches u.

    Returns the smallest index i with k[i] >= u, or ``math.inf`` if the path
    never gets there.
    """
    if not (0 <= u < 1):
        raise ValueError("u must lie in [0, 1)")
    k = np.asarray(k_path, dtype=float)
    if k.size and (np.any(k < -1e-15) or np.any(k > 1 + 1e-15)):
        raise ValueError("k_path values must lie in [0, 1]")
    if np.any(np.diff(k) < -1e-12):
        raise ValueError("k_path must be nondecreasing")
    hits = np.nonzero(k >= u)[0]
    if hits.size == 0:
        return float("inf")
    return int(hits[0])


def draw_uniform(rng: RngStream, size=None):
    """Uniform draw(s) on the half-open interval [0, 1)."""
    return rng.uniform(size)


def draw_exponential(rng: RngStream, rate: float, size=None):
    """Exponential draw(s) with the given rate, via inverse CDF -ln(1-u)/rate."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    u = rng.uniform(size)
    return -np.log1p(-u) / rate


def write_paths_csv(fileobj_or_path, paths: list[SamplePath]) -> None:
    """Dump paths as CSV with columns t,x,running_max,local_time.

    Floats are written with repr-style round-trip formatting. Multiple paths
    are concatenated with a ``path`` index column prepended.
    """
    own = isinstance(fileobj_or_path, (str, bytes))
    f = open(fileobj_or_path, "w") if own else fileobj_or_path
    try:
        f.write("path,t,x,running_max,local_time\n")
        fmt = lambda v: format(float(v), ".17g")
        for i, p in enumerate(paths):
            for t, x, m, lt in zip(p.times, p.values, p.running_max, p.local_time):
                f.write(f"{i},{fmt(t)},{fmt(x)},{fmt(m)},{fmt(lt)}\n")
    finally:
        if own:
            f.close()


def paths_csv_string(paths: list[SamplePath]) -> str:
    buf = io.StringIO()
    write_paths_csv(buf, paths)
    return buf.getvalue()
