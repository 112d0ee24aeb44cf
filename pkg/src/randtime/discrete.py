"""Exact finite-probability-space engine for canonical pairs of random times.

Everything here is computed by exhaustive enumeration over a finite sample
space carried by a finite filtration (a tree of partition cells), so all the
structural identities of the canonical pair (K, L) can be checked to machine
precision.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FiniteTree",
    "RandomTimeSpec",
    "CanonicalPairTable",
    "conditional_laws",
    "canonical_pair",
    "verify_pair_identity",
    "q_measure",
    "expectation_via_Qu",
    "numeraire_check",
    "pair_consistency",
    "avoidance_equivalences",
    "enumerate_stopping_times",
    "random_tree",
    "random_adapted_process",
    "random_supermartingale",
    "last_time_of_max",
    "generate_corpus",
    "load_corpus",
    "tree_to_dict",
    "tree_from_dict",
]


@dataclass
class FiniteTree:
    """A finite filtered probability space.

    ``cells[t]`` is the partition of outcome indices at time t (each cell a
    sorted tuple); ``refinement[t][j]`` is the index of the parent of cell j
    of time t within ``cells[t-1]`` (t >= 1). ``x[t][j]`` is the value of the
    adapted process on cell j at time t.
    """

    horizon: int
    cells: list[list[tuple[int, ...]]]
    refinement: list[list[int]]
    p: np.ndarray
    x: list[np.ndarray]
    cell_of: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        T = self.horizon
        if not (0 <= T <= 8):
            raise ValueError("horizon must be a small integer (<= 8)")
        self.p = np.asarray(self.p, dtype=float)
        m = self.p.size
        if np.any(self.p <= 0) or abs(self.p.sum() - 1.0) > 1e-12:
            raise ValueError("outcome probabilities must be positive and sum to 1")
        if len(self.cells) != T + 1 or len(self.refinement) != T:
            raise ValueError("cells/refinement length mismatch with horizon")
        self.x = [np.asarray(v, dtype=float) for v in self.x]
        self.cell_of = []
        for t, part in enumerate(self.cells):
            seen = np.full(m, -1, dtype=int)
            for j, cell in enumerate(part):
                for w in cell:
                    if seen[w] != -1:
                        raise ValueError("partition cells overlap")
                    seen[w] = j
            if np.any(seen < 0):
                raise ValueError("partition does not cover the sample space")
            self.cell_of.append(seen)
        # filtration property: each cell refines its declared parent
        for t in range(1, T + 1):
            for j, cell in enumerate(self.cells[t]):
                parent = self.refinement[t - 1][j]
                if not set(cell) <= set(self.cells[t - 1][parent]):
                    raise ValueError("refinement map inconsistent with cells")

    @property
    def n_outcomes(self) -> int:
        return self.p.size

    def cell_prob(self, t: int, j: int) -> float:
        return float(self.p[list(self.cells[t][j])].sum())

    def children(self, t: int, j: int) -> list[int]:
        """Indices of the time-(t+1) cells refining cell j of time t."""
        return [k for k, par in enumerate(self.refinement[t]) if par == j]

    def x_path(self, omega: int) -> np.ndarray:
        return np.array([self.x[t][self.cell_of[t][omega]] for t in range(self.horizon + 1)])


@dataclass
class RandomTimeSpec:
    """A random time: one value in {0..T} per outcome (no stopping-time requirement)."""

    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=int)


@dataclass
class CanonicalPairTable:
    """Per-node tables of the conditional laws and the canonical pair."""

    z: list[np.ndarray]  # Z(t, cell) = P[rho > t | cell]
    a: list[np.ndarray]  # A(t, cell) = sum_{s<=t} P[rho = s | cell_s]
    k: list[np.ndarray]
    l: list[np.ndarray]
    zeta0: np.ndarray  # per outcome, first t with Z_t = 0 along its path

    def k_path(self, tree: FiniteTree, omega: int) -> np.ndarray:
        return np.array([self.k[t][tree.cell_of[t][omega]] for t in range(tree.horizon + 1)])

    def l_path(self, tree: FiniteTree, omega: int) -> np.ndarray:
        return np.array([self.l[t][tree.cell_of[t][omega]] for t in range(tree.horizon + 1)])


def _check_rho(tree: FiniteTree, rho: RandomTimeSpec) -> np.ndarray:
    r = rho.rho
    if r.shape != (tree.n_outcomes,):
        raise ValueError("rho must assign one time per outcome")
    if np.any(r < 0) or np.any(r > tree.horizon):
        raise ValueError("rho values outside {0..T}")
    return r


def conditional_laws(tree: FiniteTree, rho: RandomTimeSpec):
    """Tables Z(t,c) = P[rho > t | c] and A(t,c) = sum_{s<=t} P[rho = s | cell_s(c)].

    Computed by direct enumeration over outcomes in each cell.
    """
    r = _check_rho(tree, rho)
    T = tree.horizon
    z, inc = [], []
    for t in range(T + 1):
        zt = np.empty(len(tree.cells[t]))
        it = np.empty(len(tree.cells[t]))
        for j, cell in enumerate(tree.cells[t]):
            idx = list(cell)
            pc = tree.p[idx].sum()
            zt[j] = tree.p[idx][r[idx] > t].sum() / pc
            it[j] = tree.p[idx][r[idx] == t].sum() / pc
        z.append(zt)
        inc.append(it)
    # accumulate A along the refinement map
    a = [inc[0].copy()]
    for t in range(1, T + 1):
        at = np.empty(len(tree.cells[t]))
        for j in range(len(tree.cells[t])):
            at[j] = a[t - 1][tree.refinement[t - 1][j]] + inc[t][j]
        a.append(at)
    return z, a


def canonical_pair(tree: FiniteTree, rho: RandomTimeSpec) -> CanonicalPairTable:
    """Canonical pair (K, L) from the discrete-time recursions.

    On {t <= zeta0}:
        K_t = K_{t-1} + (1 - K_{t-1}) P[rho = t | F_t] / P[rho >= t | F_t]
        L_t = L_{t-1} P[rho >= t | F_t] / P[rho >= t | F_{t-1}]
    with K_{-1} = 0, L_{-1} = 1, both frozen after zeta0.
    """
    r = _check_rho(tree, rho)
    z, a = conditional_laws(tree, rho)
    T = tree.horizon
    k: list[np.ndarray] = []
    l: list[np.ndarray] = []
    frozen: list[np.ndarray] = []
    for t in range(T + 1):
        n = len(tree.cells[t])
        kt, lt = np.empty(n), np.empty(n)
        fr = np.zeros(n, dtype=bool)
        for j, cell in enumerate(tree.cells[t]):
            if t == 0:
                k_prev, l_prev, z_prev, f_prev = 0.0, 1.0, 1.0, False
            else:
                par = tree.refinement[t - 1][j]
                k_prev, l_prev = k[t - 1][par], l[t - 1][par]
                z_prev, f_prev = z[t - 1][par], frozen[t - 1][par]
            if f_prev:
                kt[j], lt[j], fr[j] = k_prev, l_prev, True
                continue
            idx = list(cell)
            pc = tree.p[idx].sum()
            p_eq = tree.p[idx][r[idx] == t].sum() / pc
            p_ge = z[t][j] + p_eq
            if p_ge > 0:
                kt[j] = k_prev + (1.0 - k_prev) * p_eq / p_ge
            else:
                # no remaining mass on this branch: dA = 0, K unchanged
                kt[j] = k_prev
            if z_prev > 0:
                lt[j] = l_prev * p_ge / z_prev
            else:  # unreachable before zeta0 by construction
                raise ArithmeticError("internal error: Z vanished before freeze")
            fr[j] = z[t][j] == 0.0  # zeta0 reached here; freeze from t+1 on
        k.append(kt)
        l.append(lt)
        frozen.append(fr)
    zeta0 = np.empty(tree.n_outcomes, dtype=int)
    for w in range(tree.n_outcomes):
        zpath = [z[t][tree.cell_of[t][w]] for t in range(T + 1)]
        zeta0[w] = next(t for t, v in enumerate(zpath) if v == 0.0)
    return CanonicalPairTable(z=z, a=a, k=k, l=l, zeta0=zeta0)


def _rho_value(tree: FiniteTree, proc: list[np.ndarray], r: np.ndarray) -> np.ndarray:
    """Sample an adapted per-(t,cell) table at the random time, per outcome."""
    return np.array(
        [proc[r[w]][tree.cell_of[r[w]][w]] for w in range(tree.n_outcomes)]
    )


def verify_pair_identity(tree, rho, pair: CanonicalPairTable, v: list[np.ndarray]) -> float:
    """|E[V_rho] - E[sum_t V_t L_t dK_t]| for an adapted nonnegative table V."""
    r = _check_rho(tree, rho)
    lhs = float(tree.p @ _rho_value(tree, v, r))
    rhs = 0.0
    for w in range(tree.n_outcomes):
        k_prev = 0.0
        acc = 0.0
        for t in range(tree.horizon + 1):
            j = tree.cell_of[t][w]
            acc += v[t][j] * pair.l[t][j] * (pair.k[t][j] - k_prev)
            k_prev = pair.k[t][j]
        rhs += tree.p[w] * acc
    return abs(lhs - rhs)


def q_measure(tree: FiniteTree, pair: CanonicalPairTable) -> np.ndarray:
    """Outcome weights of the measure with density L_T: q(w) = L_T(w) p(w)."""
    T = tree.horizon
    lT = np.array([pair.l[T][tree.cell_of[T][w]] for w in range(tree.n_outcomes)])
    return lT * tree.p


def expectation_via_Qu(tree, rho, pair: CanonicalPairTable, v: list[np.ndarray]):
    """Evaluate integral_0^1 E_{Q_u}[V_{eta_u}] du as an exact finite sum.

    K takes finitely many values, so u -> eta_u is piecewise constant between
    the K-breakpoints; Q_u has density L_{eta_u} with respect to P. Returns
    (value, E[V_rho]) so callers can compare the two evaluation routes.
    """
    r = _check_rho(tree, rho)
    T = tree.horizon
    kvals = sorted({0.0, 1.0} | {float(pair.k[t][j]) for t in range(T + 1) for j in range(len(tree.cells[t]))})
    total = 0.0
    for lo, hi in zip(kvals[:-1], kvals[1:]):
        if hi <= lo:
            continue
        u = 0.5 * (lo + hi)
        e_qu = 0.0
        for w in range(tree.n_outcomes):
            eta = next(
                (t for t in range(T + 1) if pair.k[t][tree.cell_of[t][w]] >= u), None
            )
            if eta is None:
                continue  # eta_u = infinity; L there is 0 whenever K_T < 1
            j = tree.cell_of[eta][w]
            e_qu += tree.p[w] * pair.l[eta][j] * v[eta][j]
        total += (hi - lo) * e_qu
    direct = float(tree.p @ _rho_value(tree, v, r))
    return total, direct


def numeraire_check(tree, rho, pair: CanonicalPairTable, s: list[np.ndarray]):
    """E[S_rho / L_rho] for a unit-initial nonnegative supermartingale table S.

    Validates the supermartingale property and that P[L_rho > 0] = 1; the
    returned expectation is <= 1 by the numeraire property of L. Also returns
    the per-K_rho-atom conditional expectations.
    """
    r = _check_rho(tree, rho)
    if abs(s[0][0] - 1.0) > 1e-12 or any(np.any(st < -1e-15) for st in s):
        raise ValueError("S must be nonnegative with S_0 = 1")
    for t in range(tree.horizon):
        for j in range(len(tree.cells[t])):
            kids = tree.children(t, j)
            pc = tree.cell_prob(t, j)
            cond = sum(tree.cell_prob(t + 1, c) * s[t + 1][c] for c in kids) / pc
            if cond > s[t][j] + 1e-10:
                raise ValueError("S is not a supermartingale")
    l_rho = _rho_value(tree, pair.l, r)
    if np.any(l_rho <= 0):
        raise AssertionError("P[L_rho > 0] = 1 violated")
    s_rho = _rho_value(tree, s, r)
    k_rho = _rho_value(tree, pair.k, r)
    ratio = s_rho / l_rho
    value = float(tree.p @ ratio)
    atoms = {}
    for kv in np.unique(k_rho):
        mask = k_rho == kv
        atoms[float(kv)] = float(tree.p[mask] @ ratio[mask] / tree.p[mask].sum())
    return value, atoms


def pair_consistency(tree: FiniteTree, pair: CanonicalPairTable) -> dict:
    """Structural residuals of a canonical pair, all of which must vanish:

    - ``zlk``: max |Z - L (1 - K)| over nodes;
    - ``martingale``: max |E[L_{t+1} | F_t] - L_t| over nodes;
    - ``k_monotone``: worst decrease of K along any path (0 when monotone);
    - ``range``: worst excursion of K outside [0, 1] or of L below 0.
    """
    T = tree.horizon
    zlk = 0.0
    mart = 0.0
    k_mono = 0.0
    rng_err = 0.0
    for t in range(T + 1):
        for j in range(len(tree.cells[t])):
            zlk = max(zlk, abs(pair.z[t][j] - pair.l[t][j] * (1.0 - pair.k[t][j])))
            rng_err = max(rng_err, -pair.k[t][j], pair.k[t][j] - 1.0, -pair.l[t][j])
            if t < T:
                kids = tree.children(t, j)
                pc = tree.cell_prob(t, j)
                cond = sum(tree.cell_prob(t + 1, c) * pair.l[t + 1][c] for c in kids) / pc
                mart = max(mart, abs(cond - pair.l[t][j]))
            if t > 0:
                par = tree.refinement[t - 1][j]
                k_mono = max(k_mono, pair.k[t - 1][par] - pair.k[t][j])
    return {"zlk": zlk, "martingale": mart, "k_monotone": k_mono, "range": max(rng_err, 0.0)}


def enumerate_stopping_times(tree: FiniteTree) -> list[np.ndarray]:
    """All stopping times of the tree (adapted {0..T}-valued maps), by recursion.

    Grows doubly exponentially; intended for small trees (T <= 3, branching <= 2-3).
    """

    def node_taus(t: int, j: int) -> list[dict[int, int]]:
        stop_here = {w: t for w in tree.cells[t][j]}
        out = [stop_here]
        if t < tree.horizon:
            kid_choices = [node_taus(t + 1, c) for c in tree.children(t, j)]
            for combo in itertools.product(*kid_choices):
                merged: dict[int, int] = {}
                for d in combo:
                    merged.update(d)
                out.append(merged)
        return out

    taus = []
    for d in node_taus(0, 0):
        arr = np.empty(tree.n_outcomes, dtype=int)
        for w, t in d.items():
            arr[w] = t
        taus.append(arr)
    return taus


def avoidance_equivalences(tree, rho, pair: CanonicalPairTable, max_enum: int = 100000):
    """Report on the avoidance-of-stopping-times equivalences.

    Returns a dict with booleans: ``avoids`` (P[rho = tau] = 0 for every
    stopping time), ``dk_evanescent`` (K never jumps), ``dk_rho_zero``
    (P[dK_rho = 0] = 1), and the Kolmogorov gap between the law of K_rho and
    the standard uniform (the continuous-time uniformity surrogate).
    Asserts the three-way equivalence.
    """
    r = _check_rho(tree, rho)
    T = tree.horizon
    taus = enumerate_stopping_times(tree)
    if len(taus) > max_enum:
        raise ValueError("stopping-time enumeration too large for this tree")
    avoids = all(float(tree.p[r == tau].sum()) == 0.0 for tau in taus)

    dk_evanescent = True
    for w in range(tree.n_outcomes):
        kp = pair.k_path(tree, w)
        if kp[0] > 0 or np.any(np.diff(kp) > 0):
            dk_evanescent = False
            break

    dk_rho = np.empty(tree.n_outcomes)
    for w in range(tree.n_outcomes):
        t = r[w]
        k_now = pair.k[t][tree.cell_of[t][w]]
        k_prev = 0.0 if t == 0 else pair.k[t - 1][tree.cell_of[t - 1][w]]
        dk_rho[w] = k_now - k_prev
    dk_rho_zero = float(tree.p[dk_rho > 0].sum()) == 0.0

    k_rho = _rho_value(tree, pair.k, r)
    order = np.argsort(k_rho, kind="stable")
    kv, pv = k_rho[order], tree.p[order]
    cdf = np.cumsum(pv)
    # sup_x |P[K_rho <= x] - x| over the atoms (checking both one-sided gaps)
    gap = 0.0
    prev_cdf = 0.0
    for x, c in zip(kv, cdf):
        gap = max(gap, abs(prev_cdf - x), abs(c - x))
        prev_cdf = c
    gap = max(gap, abs(1.0 - prev_cdf))

    if not (avoids == dk_evanescent == dk_rho_zero):
        raise AssertionError("avoidance equivalences (1)<=>(2)<=>(3) violated")
    return {
        "avoids": avoids,
        "dk_evanescent": dk_evanescent,
        "dk_rho_zero": dk_rho_zero,
        "uniform_gap": gap,
    }


def zeta0_conditional_binary(tree, rho, pair: CanonicalPairTable) -> bool:
    """True when P[rho = zeta0 | F_{zeta0}] takes only the values 0 and 1.

    Under that hypothesis the L-changed measure concentrates on {rho = zeta0};
    see :func:`q_mass_on_zeta0`. The conditional is cell-measurable because all
    outcomes sharing the time-zeta0 cell share the whole Z-path up to zeta0.
    """
    r = _check_rho(tree, rho)
    for w in range(tree.n_outcomes):
        t = int(pair.zeta0[w])
        cell = tree.cells[t][tree.cell_of[t][w]]
        n_eq = sum(1 for v in cell if r[v] == t)
        if n_eq not in (0, len(cell)):
            return False
    return True


def q_mass_on_zeta0(tree, rho, pair: CanonicalPairTable) -> float:
    """Mass of {rho = zeta0} under the measure with density L_T."""
    r = _check_rho(tree, rho)
    q = q_measure(tree, pair)
    return float(q[r == pair.zeta0].sum())


def positive_upmove_hypothesis(tree: FiniteTree) -> bool:
    """True when every node gives positive conditional probability to a
    non-decreasing step of the adapted walk (X_t >= X_{t-1})."""
    for t in range(1, tree.horizon + 1):
        for j in range(len(tree.cells[t - 1])):
            kids = tree.children(t - 1, j)
            if not any(tree.x[t][c] >= tree.x[t - 1][j] for c in kids):
                return False
    return True


def dominance_sandwich(tree, rho, pair: CanonicalPairTable,
                       thresholds, weights):
    """The two-sided dominance of the uniform law by K at the random time.

    For the nondecreasing step function f(u) = sum_i w_i 1{u >= b_i} (w_i >= 0)
    returns (E[f(K_{rho-})], int_0^1 f(u) du, E[f(K_rho)]); the first value
    never exceeds the second, which never exceeds the third.
    """
    r = _check_rho(tree, rho)
    b = np.asarray(thresholds, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or np.any(b < 0) or np.any(b > 1):
        raise ValueError("need weights >= 0 and thresholds in [0, 1]")
    k_rho = _rho_value(tree, pair.k, r)
    k_prev = np.array([
        0.0 if r[v] == 0 else pair.k[r[v] - 1][tree.cell_of[r[v] - 1][v]]
        for v in range(tree.n_outcomes)
    ])
    fval = lambda u: (w[None, :] * (u[:, None] >= b[None, :])).sum(axis=1)
    lower = float(tree.p @ fval(k_prev))
    upper = float(tree.p @ fval(k_rho))
    mid = float((w * (1.0 - b)).sum())
    return lower, mid, upper


# ---------------------------------------------------------------------------
# Generators: random trees, adapted processes, supermartingales, random times.
# ---------------------------------------------------------------------------

def random_tree(rng: np.random.Generator, horizon: int = 3, max_children: int = 3) -> FiniteTree:
    """A random finite tree with conditional branch probabilities from a small
    rational set (all outcome probabilities stay well above 1e-3 for T <= 5)."""
    cells: list[list[list[int]]] = [[[0]]]  # provisional: leaves counted later
    refinement: list[list[int]] = []
    # build the branching structure: node ids per time level
    counts = [1]
    parents: list[list[int]] = []
    for t in range(horizon):
        par, n_next = [], 0
        for j in range(counts[t]):
            k = int(rng.choice([1, 2, 3][: max_children], p=[0.15, 0.55, 0.30][: max_children] if max_children == 3 else [0.25, 0.75]))
            for _ in range(k):
                par.append(j)
                n_next += 1
        parents.append(par)
        counts.append(n_next)
    # conditional probabilities per split from {1/2,1/2}, {1/3,2/3}, {1/3,1/3,1/3}
    cond: list[np.ndarray] = []
    for t in range(horizon):
        ct = np.empty(counts[t + 1])
        for j in range(counts[t]):
            kids = [i for i, p in enumerate(parents[t]) if p == j]
            if len(kids) == 1:
                w = np.array([1.0])
            elif len(kids) == 2:
                w = np.array([1.0, 1.0]) if rng.random() < 0.5 else rng.permutation([1.0, 2.0])
                w = w / w.sum()
            else:
                w = np.full(3, 1.0 / 3.0)
            for i, c in enumerate(kids):
                ct[c] = w[i]
        cond.append(ct)
    # outcomes = leaves at the horizon; trace cell memberships
    m = counts[horizon]
    leaf_anc = [np.arange(m)]
    for t in range(horizon, 0, -1):
        leaf_anc.insert(0, np.array([parents[t - 1][j] for j in leaf_anc[0]]))
    cells = []
    for t in range(horizon + 1):
        part = [tuple(np.nonzero(leaf_anc[t] == j)[0]) for j in range(counts[t])]
        cells.append(part)
    refinement = parents
    p = np.ones(m)
    for t in range(horizon):
        for w_idx in range(m):
            p[w_idx] *= cond[t][leaf_anc[t + 1][w_idx]]
    # adapted walk with increments from {-1, 0, +1}
    x = [np.zeros(1)]
    for t in range(1, horizon + 1):
        xt = np.empty(counts[t])
        for j in range(counts[t]):
            xt[j] = x[t - 1][parents[t - 1][j]] + rng.choice([-1.0, 0.0, 1.0])
        x.append(xt)
    return FiniteTree(horizon=horizon, cells=cells, refinement=refinement, p=p, x=x)


def random_adapted_process(tree: FiniteTree, rng: np.random.Generator) -> list[np.ndarray]:
    """A nonnegative adapted table V(t, cell) with i.i.d. uniform values."""
    return [rng.random(len(tree.cells[t])) for t in range(tree.horizon + 1)]


def random_supermartingale(tree: FiniteTree, rng: np.random.Generator) -> list[np.ndarray]:
    """A nonnegative supermartingale with S_0 = 1, built backward with slack."""
    T = tree.horizon
    s = [None] * (T + 1)
    s[T] = rng.random(len(tree.cells[T])) + 0.05
    for t in range(T - 1, -1, -1):
        st = np.empty(len(tree.cells[t]))
        for j in range(len(tree.cells[t])):
            kids = tree.children(t, j)
            pc = tree.cell_prob(t, j)
            cond = sum(tree.cell_prob(t + 1, c) * s[t + 1][c] for c in kids) / pc
            st[j] = cond + 0.2 * rng.random()
        s[t] = st
    scale = s[0][0]
    return [st / scale for st in s]


def last_time_of_max(tree: FiniteTree) -> RandomTimeSpec:
    """rho = last t at which the adapted walk equals its running maximum."""
    rho = np.empty(tree.n_outcomes, dtype=int)
    for w in range(tree.n_outcomes):
        path = tree.x_path(w)
        rho[w] = int(np.nonzero(path == path.max())[0][-1])
    return RandomTimeSpec(rho=rho)


def random_time(tree: FiniteTree, rng: np.random.Generator) -> RandomTimeSpec:
    return RandomTimeSpec(rho=rng.integers(0, tree.horizon + 1, size=tree.n_outcomes))


# ---------------------------------------------------------------------------
# JSON (de)serialization and the shipped deterministic corpus.
# ---------------------------------------------------------------------------

def tree_to_dict(tree: FiniteTree) -> dict:
    return {
        "horizon": int(tree.horizon),
        "cells": [[[int(w) for w in c] for c in part] for part in tree.cells],
        "refinement": [[int(j) for j in r] for r in tree.refinement],
        "p": [float(v) for v in tree.p],
        "X": [[float(v) for v in xt] for xt in tree.x],
    }


def tree_from_dict(d: dict) -> FiniteTree:
    return FiniteTree(
        horizon=d["horizon"],
        cells=[[tuple(c) for c in part] for part in d["cells"]],
        refinement=[list(r) for r in d["refinement"]],
        p=np.asarray(d["p"], dtype=float),
        x=[np.asarray(xt, dtype=float) for xt in d["X"]],
    )


def generate_corpus(seed: int = 20240101, n_trees: int = 200, max_horizon: int = 5) -> list[FiniteTree]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_trees:
        T = int(rng.integers(1, max_horizon + 1))
        out.append(random_tree(rng, horizon=T, max_children=3 if T <= 4 else 2))
    return out


def load_corpus(path: str | None = None) -> list[FiniteTree]:
    """Load the deterministic tree corpus shipped with the package."""
    if path is None:
        from importlib.resources import files

        path = files("randtime").joinpath("data/tree_corpus.json")
        data = json.loads(path.read_text())
    else:
        with open(path) as f:
            data = json.load(f)
    return [tree_from_dict(d) for d in data["trees"]]
