import io
import math

import numpy as np
import pytest

from randtime.core import (
    MonteCarloConfig,
    RngStream,
    SamplePath,
    TimeGrid,
    draw_exponential,
    eta_u,
    paths_csv_string,
)


def test_uniform_grid_with_horizon():
    g = TimeGrid(dt=0.25, horizon=1.0)
    assert np.allclose(g.times(), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_uniform_grid_unbounded_needs_n_max():
    g = TimeGrid(dt=0.5)
    with pytest.raises(ValueError):
        g.times()
    assert g.times(n_max=3).size == 4


def test_shrinking_grid_respects_horizon_and_step_rule():
    T, eps = 1.0, 1e-4
    g = TimeGrid(dt=0.1, horizon=T, rule="shrink_to_horizon",
                 rule_params={"kappa": 0.2, "eps_T": eps})
    t = g.times()
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(T - eps)
    steps = np.diff(t)
    assert np.all(steps > 0)
    # every step obeys dt_n <= min(dt, kappa (T - t_n))
    bound = np.minimum(0.1, 0.2 * (T - t[:-1]))
    assert np.all(steps <= bound + 1e-15)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(dt=-1.0)
    with pytest.raises(ValueError):
        TimeGrid(dt=0.1, rule="shrink_to_horizon", horizon=1.0,
                 rule_params={"eps_T": 0.0})
    with pytest.raises(ValueError):
        TimeGrid(dt=0.1, rule="nope")


def test_rng_stream_reproducible_and_disjoint():
    a = RngStream(123).uniform(8)
    b = RngStream(123).uniform(8)
    c = RngStream(123, stream_id=1).uniform(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(RngStream(123).spawn(1).uniform(8), c)


def test_draw_exponential_is_inverse_cdf_of_the_uniform_stream():
    u = RngStream(5).uniform(100)
    x = draw_exponential(RngStream(5), rate=2.0, size=100)
    assert np.allclose(x, -np.log1p(-u) / 2.0)
    with pytest.raises(ValueError):
        draw_exponential(RngStream(5), rate=0.0)


def test_eta_u():
    k = [0.0, 0.1, 0.4, 0.4, 0.9]
    assert eta_u(k, 0.0) == 0
    assert eta_u(k, 0.4) == 2
    assert eta_u(k, 0.95) == math.inf
    with pytest.raises(ValueError):
        eta_u(k, 1.0)
    with pytest.raises(ValueError):
        eta_u([0.5, 0.2], 0.1)  # decreasing


def test_sample_path_fills_running_max():
    p = SamplePath(times=[0.0, 1.0, 2.0], values=[0.0, 2.0, 1.0])
    assert np.allclose(p.running_max, [0.0, 2.0, 2.0])
    assert np.allclose(p.local_time, 0.0)
    with pytest.raises(ValueError):
        SamplePath(times=[0.0, 1.0], values=[0.0])


def test_paths_csv_round_trip():
    p = SamplePath(times=[0.0, 0.5], values=[0.0, -0.25])
    text = paths_csv_string([p, p])
    lines = text.strip().split("\n")
    assert lines[0] == "path,t,x,running_max,local_time"
    assert len(lines) == 5
    arr = np.genfromtxt(io.StringIO(text), delimiter=",", skip_header=1)
    assert np.allclose(arr[:, 1], [0.0, 0.5, 0.0, 0.5])
    assert np.allclose(arr[:, 2], [0.0, -0.25, 0.0, -0.25])


def test_mc_config_validation():
    with pytest.raises(ValueError):
        MonteCarloConfig(n_paths=0)
    with pytest.raises(ValueError):
        MonteCarloConfig(n_paths=1, dt=0.0)
    with pytest.raises(ValueError):
        MonteCarloConfig(n_paths=1, workers=0)
