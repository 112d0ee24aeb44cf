import numpy as np
import pytest

from randtime import discrete as ds


def coin_tree():
    """One-period binary tree: X moves to +1 or -1 with equal probability."""
    return ds.FiniteTree(
        horizon=1,
        cells=[[(0, 1)], [(0,), (1,)]],
        refinement=[[0, 0]],
        p=np.array([0.5, 0.5]),
        x=[np.array([0.0]), np.array([1.0, -1.0])],
    )


def test_tree_validation():
    with pytest.raises(ValueError):
        ds.FiniteTree(horizon=1, cells=[[(0, 1)], [(0,), (0, 1)]],
                      refinement=[[0, 0]], p=[0.5, 0.5],
                      x=[[0.0], [0.0, 0.0]])  # overlapping cells
    with pytest.raises(ValueError):
        ds.FiniteTree(horizon=1, cells=[[(0, 1)], [(0,), (1,)]],
                      refinement=[[0, 0]], p=[0.5, 0.6],
                      x=[[0.0], [0.0, 0.0]])  # probabilities exceed 1


def test_canonical_pair_hand_computed():
    tree = coin_tree()
    rho = ds.last_time_of_max(tree)
    assert np.array_equal(rho.rho, [1, 0])
    pair = ds.canonical_pair(tree, rho)
    assert pair.k[0][0] == pytest.approx(0.5)
    assert pair.l[0][0] == pytest.approx(1.0)
    assert pair.k[1][0] == pytest.approx(1.0)   # up branch: rho = 1 for sure
    assert pair.l[1][0] == pytest.approx(2.0)
    assert pair.l[1][1] == pytest.approx(0.0)   # down branch: rho already past
    assert pair.k[1][1] == pytest.approx(0.5)   # frozen once Z hits zero
    res = ds.pair_consistency(tree, pair)
    assert max(res.values()) <= 1e-14
    assert np.array_equal(pair.zeta0, [1, 1])


def test_identity_hand_computed():
    tree = coin_tree()
    rho = ds.last_time_of_max(tree)
    pair = ds.canonical_pair(tree, rho)
    v = [np.array([1.0]), np.array([2.0, 3.0])]
    assert ds.verify_pair_identity(tree, rho, pair, v) <= 1e-15
    total, direct = ds.expectation_via_Qu(tree, rho, pair, v)
    assert direct == pytest.approx(1.5)
    assert total == pytest.approx(direct, abs=1e-14)


def test_avoidance_report_on_coin_tree():
    tree = coin_tree()
    rho = ds.last_time_of_max(tree)
    pair = ds.canonical_pair(tree, rho)
    rep = ds.avoidance_equivalences(tree, rho, pair)
    # a one-period last-max time is hit by constant stopping times
    assert not rep["avoids"] and not rep["dk_evanescent"] and not rep["dk_rho_zero"]
    assert rep["uniform_gap"] == pytest.approx(0.5)


def test_dominance_sandwich_hand_computed():
    tree = coin_tree()
    rho = ds.last_time_of_max(tree)
    pair = ds.canonical_pair(tree, rho)
    lower, mid, upper = ds.dominance_sandwich(tree, rho, pair, [0.6], [1.0])
    assert lower == pytest.approx(0.0)
    assert mid == pytest.approx(0.4)
    assert upper == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ds.dominance_sandwich(tree, rho, pair, [0.6], [-1.0])


def test_numeraire_check_constant_supermartingale():
    tree = coin_tree()
    rho = ds.last_time_of_max(tree)
    pair = ds.canonical_pair(tree, rho)
    s = [np.array([1.0]), np.array([1.0, 1.0])]
    value, atoms = ds.numeraire_check(tree, rho, pair, s)
    # E[S_rho / L_rho] = 0.5 * (1/2) + 0.5 * (1/1) = 0.75 <= 1
    assert value == pytest.approx(0.75)
    assert set(atoms) == {0.5, 1.0}
    with pytest.raises(ValueError):
        bad = [np.array([1.0]), np.array([2.0, 2.0])]
        ds.numeraire_check(tree, rho, pair, bad)


def test_zeta0_and_upmove_hypotheses():
    tree = coin_tree()
    rho = ds.last_time_of_max(tree)
    pair = ds.canonical_pair(tree, rho)
    assert ds.positive_upmove_hypothesis(tree)
    assert ds.zeta0_conditional_binary(tree, rho, pair)
    assert ds.q_mass_on_zeta0(tree, rho, pair) == pytest.approx(1.0)


def test_enumerate_stopping_times_counts():
    tree = coin_tree()
    taus = ds.enumerate_stopping_times(tree)
    # either stop at 0, or continue and stop each branch at 1
    assert len(taus) == 2
    for tau in taus:
        assert tau.shape == (2,)


def test_random_generators_reproducible_and_valid():
    rng = np.random.default_rng(7)
    tree = ds.random_tree(rng, horizon=4)
    assert tree.horizon == 4
    v = ds.random_adapted_process(tree, rng)
    assert all(np.all(vt >= 0) for vt in v)
    s = ds.random_supermartingale(tree, rng)
    rho = ds.random_time(tree, rng)
    value, _ = ds.numeraire_check(tree, rho, ds.canonical_pair(tree, rho), s)
    assert value <= 1.0 + 1e-12
    tree2 = ds.random_tree(np.random.default_rng(7), horizon=4)
    assert ds.tree_to_dict(tree) == ds.tree_to_dict(tree2)


def test_tree_round_trip():
    tree = ds.random_tree(np.random.default_rng(11), horizon=3)
    d = ds.tree_to_dict(tree)
    back = ds.tree_from_dict(d)
    assert ds.tree_to_dict(back) == d


def test_corpus_loads_and_spot_checks():
    corpus = ds.load_corpus()
    assert len(corpus) == 200
    rng = np.random.default_rng(0)
    for tree in corpus[:10]:
        rho = ds.last_time_of_max(tree)
        pair = ds.canonical_pair(tree, rho)
        assert max(ds.pair_consistency(tree, pair).values()) <= 1e-12
        assert ds.q_measure(tree, pair).sum() == pytest.approx(1.0, abs=1e-12)
        v = ds.random_adapted_process(tree, rng)
        assert ds.verify_pair_identity(tree, rho, pair, v) <= 1e-12
