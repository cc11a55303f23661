import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from egp.graph import Graph, second_neighborhood_ego_graph
from egp.partition import (
    DesignError,
    Partition,
    assign_alters_convex,
    assign_alters_linear,
    assign_alters_snc,
    build_partition,
    compute_delta,
    compute_delta_tilde,
    cross_arm_edges,
    delta_scores,
    exposure_summary,
    oracle_max_R,
    randomize_egos,
    select_egos,
)
from graphs import er_graph, planted_partition


@pytest.fixture
def toy_p():
    return Partition.from_egos(5, [0, 1], [True, False])


def test_select_egos_count():
    g = er_graph(1000, 0.02, np.random.default_rng(1))
    assert g.degrees.min() > 0
    assert select_egos(g, 0.025, 3).sum() == 25


def test_select_egos_t5(toy):
    flags = select_egos(toy, 0.4, 0)
    assert flags.sum() == 2


def test_select_egos_skips_isolated():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)], n=10)
    for seed in range(200):
        flags = select_egos(g, 0.5, seed)
        assert flags.sum() == 5
        assert not flags[7:].any()


def test_select_egos_errors():
    g = Graph.from_edges([(0, 1)], n=5)
    with pytest.raises(DesignError):
        select_egos(g, 0.99, 0)
    with pytest.raises(DesignError):
        select_egos(g, 1.0, 0)
    with pytest.raises(DesignError):
        select_egos(Graph.from_edges([], n=3), 0.5, 0)


def test_select_egos_uniform():
    g = er_graph(6, 1.0, np.random.default_rng(0))
    hits = np.zeros(6)
    for seed in range(3000):
        hits += select_egos(g, 0.34, seed)
    # each node chosen with probability 2/6; 3000 draws -> sd ~ 26
    assert np.all(np.abs(hits - 1000) < 130)


@pytest.mark.parametrize("ne,n1", [(25, 13), (2, 1), (3, 2), (10, 5)])
def test_randomize_split(ne, n1):
    flags = np.zeros(40, dtype=bool)
    flags[:ne] = True
    p = randomize_egos(flags, 7)
    assert (p.n1, p.n0) == (n1, ne - n1)
    assert not p.treatment[ne:].any()
    assert not p.complete


def test_randomize_deterministic():
    flags = np.zeros(50, dtype=bool)
    flags[::3] = True
    assert randomize_egos(flags, 11) == randomize_egos(flags, 11)
    assert any(randomize_egos(flags, 11) != randomize_egos(flags, s) for s in range(12, 20))


def test_delta_t5(toy, toy_p):
    d = compute_delta(toy, toy_p)
    assert d[2] == 0.0 and d[3] == 0.5 and d[4] == -0.5
    assert np.isnan(d[:2]).all()


def test_delta_tilde_t5(toy, toy_p):
    d = compute_delta_tilde(toy, toy_p)
    assert d[2] == 0.0 and d[3] == np.inf and d[4] == -1.0


def test_delta_degenerate(toy):
    p = Partition.from_egos(5, [0, 1], [True, True])
    with pytest.raises(DesignError):
        compute_delta(toy, p)


def brute_delta(g, p):
    A = np.zeros((g.n, g.n))
    e = g.edges()
    A[e[:, 0], e[:, 1]] = A[e[:, 1], e[:, 0]] = 1
    d = A.sum(1)
    out = np.full(g.n, np.nan)
    for j in range(g.n):
        if p.ego_flags[j]:
            continue
        t = sum(A[i, j] / (p.n1 * d[i]) for i in range(g.n) if p.ego_flags[i] and p.treatment[i])
        c = sum(A[i, j] / (p.n0 * d[i]) for i in range(g.n) if p.ego_flags[i] and not p.treatment[i])
        out[j] = t - c
    return out


def random_instance(rng, n_max=14, egos=(2, 4)):
    n = int(rng.integers(5, n_max + 1))
    g = er_graph(n, float(rng.uniform(0.15, 0.6)), rng)
    eligible = np.flatnonzero(g.degrees > 0)
    k = int(rng.integers(egos[0], egos[1] + 1))
    if eligible.size < k:
        return None
    flags = np.zeros(n, dtype=bool)
    flags[rng.choice(eligible, k, replace=False)] = True
    return g, randomize_egos(flags, int(rng.integers(2**32)))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_delta_matches_definition(seed):
    inst = random_instance(np.random.default_rng(seed))
    if inst is None:
        return
    g, p = inst
    np.testing.assert_allclose(compute_delta(g, p), brute_delta(g, p), rtol=0, atol=1e-15)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_delta_tilde_sign_consistent(seed):
    inst = random_instance(np.random.default_rng(seed), n_max=30, egos=(2, 8))
    if inst is None:
        return
    g, p = inst
    s = delta_scores(g, p)
    pos = s.control_affinity > 0
    assert np.array_equal(np.sign(s.delta[pos]), np.sign(s.delta_tilde[pos]))


def test_linear_t5(toy, toy_p):
    q = assign_alters_linear(toy, toy_p)
    assert q.complete and q.meta.algorithm == "linear"
    assert q.treatment.tolist() == [True, False, False, True, False]
    s = exposure_summary(toy, q)
    assert s.sigma.tolist() == [0.5, 0.0]
    assert s.r_statistic == 0.5
    assert oracle_max_R(toy, toy_p).max_value == 0.5


@pytest.mark.parametrize("theta", [0.0, 0.5])
def test_convex_t5(toy, toy_p, theta):
    q = assign_alters_convex(toy, toy_p, theta)
    assert np.flatnonzero(q.treatment & ~q.ego_flags).tolist() == [3]
    assert q.meta.tag == f"convex({theta:g})"


def test_convex_rejects_negative_theta(toy, toy_p):
    with pytest.raises(DesignError):
        assign_alters_convex(toy, toy_p, -0.1)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_convex_theta0_equals_linear(seed):
    inst = random_instance(np.random.default_rng(seed), n_max=40, egos=(2, 10))
    if inst is None:
        return
    g, p = inst
    assert np.array_equal(assign_alters_convex(g, p, 0.0).treatment, assign_alters_linear(g, p).treatment)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_oracle_linear_optimal_and_decomposition(seed):
    inst = random_instance(np.random.default_rng(seed))
    if inst is None:
        return
    g, p = inst
    orc = oracle_max_R(g, p)
    r = exposure_summary(g, assign_alters_linear(g, p)).r_statistic
    assert abs(r - orc.max_value) < 1e-12
    assert abs(orc.lambda1 + orc.lambda2 - orc.max_value) < 1e-12
    assert -1 <= r <= 1


def test_oracle_no_ego_alter_edges():
    g = Graph.from_edges([(0, 1), (2, 3)])
    p = Partition.from_egos(4, [0, 1], [True, False])
    orc = oracle_max_R(g, p)
    assert orc.lambda2 == 0.0
    assert orc.max_value == orc.lambda1 == -1.0


def test_oracle_limit():
    g = Graph.from_edges([(0, j) for j in range(2, 30)] + [(1, 2)])
    p = Partition.from_egos(30, [0, 1], [True, False])
    with pytest.raises(DesignError):
        oracle_max_R(g, p, limit=20)


def test_unreached_alters_do_not_move_exposure():
    rng = np.random.default_rng(5)
    g = er_graph(80, 0.03, rng)
    p = build_partition(g, "linear", 0.1, 3)
    s = exposure_summary(g, p)
    egos = p.egos
    touched = np.zeros(g.n, dtype=bool)
    for i in egos:
        touched[g.neighbors(i)] = True
    free = np.flatnonzero(~touched & ~p.ego_flags)
    assert free.size > 0
    w = p.treatment.copy()
    w[free] = ~w[free]
    s2 = exposure_summary(g, Partition(p.ego_flags.copy(), w, True, p.meta))
    assert s.sigma.tobytes() == s2.sigma.tobytes()
    assert s.r_statistic == s2.r_statistic


def test_exposure_requires_ego_degree():
    g = Graph.from_edges([(0, 1)], n=3)
    p = Partition.from_egos(3, [0, 2], [True, False])
    with pytest.raises(DesignError):
        exposure_summary(g, p)


def test_snc_t5_degenerate(toy):
    flags = np.array([True, True, False, False, False])
    with pytest.raises(DesignError, match="degenerate"):
        assign_alters_snc(toy, flags, 0)


def test_snc_singletons_balanced():
    # a perfect matching has no second-neighborhood ties
    g = Graph.from_edges([(2 * i, 2 * i + 1) for i in range(10)])
    flags = np.zeros(20, dtype=bool)
    flags[::2] = True
    counts = np.zeros(20)
    for seed in range(400):
        p = assign_alters_snc(g, flags, seed)
        assert (p.n1, p.n0) == (5, 5)
        counts += p.treatment
    # every ego treated about half the time
    assert np.all(np.abs(counts[::2] - 200) < 60)
    assert p.meta.algorithm == "snc"


def test_snc_fewer_cross_edges_than_plain():
    rng = np.random.default_rng(2024)
    g = planted_partition(10, 20, 0.25, 0.004, rng)
    flags = select_egos(g, 0.15, 1)
    sg = second_neighborhood_ego_graph(g, flags)
    plain = [cross_arm_edges(sg, randomize_egos(flags, s)) for s in range(100)]
    snc = [cross_arm_edges(sg, assign_alters_snc(g, flags, s)) for s in range(100)]
    assert np.median(snc) <= np.median(plain)


@pytest.mark.parametrize("algo", ["linear", "convex", "snc"])
def test_build_partition_deterministic(algo):
    g = planted_partition(6, 20, 0.3, 0.01, np.random.default_rng(3))
    a = build_partition(g, algo, 0.1, 42, theta=0.2)
    b = build_partition(g, algo, 0.1, 42, theta=0.2)
    assert a == b
    assert a.complete and abs(a.n1 - a.n0) <= (0 if algo != "snc" else g.n)
    if algo != "snc":
        assert abs(a.n1 - a.n0) <= 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), algo=st.sampled_from(["linear", "convex", "snc"]),
       theta=st.sampled_from([0.0, 0.2, 0.5, 1.0, 3.0]))
def test_r_bounds(seed, algo, theta):
    rng = np.random.default_rng(seed)
    g = planted_partition(4, 15, 0.35, 0.02, rng)
    try:
        p = build_partition(g, algo, 0.2, seed, theta)
        s = exposure_summary(g, p)
    except DesignError:
        return
    assert -1.0 <= s.r_statistic <= 1.0
    assert np.all((s.sigma >= 0) & (s.sigma <= 1))
