import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orgnet.errors import DegenerateDesign, DegenerateSample, EmptyGraph, UnknownStatistic
from orgnet.measures import (binned_curve, bootstrap_reciprocity, centralities, degree_arrays,
                             degree_strength, ei_index, fit_power_law, group_comm_rates,
                             network_reciprocity, node_reciprocity, ols, pearson, positions,
                             team_mixing_matrix, team_stat_correlation, weighted_modularity)
from orgnet.measures.centrality import (authority_scores, betweenness_closeness,
                                        eigenvector_scores)
from orgnet.model import CommGraph, Dataset, build_org_tree, extract_teams
from orgnet.synth import CommModel, planted_suite


def random_comm(rng, n, p=0.3, wmax=9):
    ids = [f"v{i:02d}" for i in range(n)]
    w = {}
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                w[(ids[i], ids[j])] = int(rng.integers(1, wmax + 1))
    return CommGraph(w, ids)


def modularity_oracle(comm, part):
    ids = comm.ids
    W = np.zeros((len(ids), len(ids)))
    for (u, v), x in comm.weights.items():
        W[comm.pos[u], comm.pos[v]] += x
        W[comm.pos[v], comm.pos[u]] += x
    two_m = W.sum()
    if two_m == 0:
        return 0.0
    s = W.sum(axis=1)
    q = 0.0
    for i, u in enumerate(ids):
        for j, v in enumerate(ids):
            if part[u] == part[v]:
                q += W[i, j] - s[i] * s[j] / two_m
    return q / two_m


def clique(names, w=1):
    return {(a, b): w for a in names for b in names if a != b}


# degree and power law ---------------------------------------------------------


def test_degree_fixture(c1):
    r = degree_strength(c1)["a1"]
    assert (r.in_degree, r.out_degree, r.total_degree) == (2, 2, 3)
    assert (r.in_strength, r.out_strength) == (10, 7)
    assert degree_strength(c1)["R"] == (0, 0, 0, 0, 0, 0)
    tri = degree_strength(CommGraph(clique("xyz")))
    assert all(r.total_degree == 2 and r.total_strength == 4 for r in tri.values())


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 25), seed=st.integers(0, 2**31 - 1))
def test_strength_conservation(n, seed):
    c = random_comm(np.random.default_rng(seed), n)
    a = degree_arrays(c)
    assert a["in_strength"].sum() == a["out_strength"].sum() == c.total


def test_power_law():
    rng = np.random.default_rng(11)
    x = rng.zipf(2.5, 50_000)
    fit = fit_power_law(x)
    assert 2.4 <= fit.alpha <= 2.6
    a = fit_power_law(x[:25_000]).alpha
    b = fit_power_law(x[25_000:]).alpha
    assert abs(a - b) < 0.1
    with pytest.raises(DegenerateSample):
        fit_power_law([4] * 500)
    with pytest.raises(DegenerateSample):
        fit_power_law([1, 2, 3])


# modularity, mixing, EI, groups -----------------------------------------------


def test_modularity_examples():
    c = CommGraph({**clique("abc"), **clique("xyz")})
    part = {u: (0 if u in "abc" else 1) for u in c.ids}
    assert weighted_modularity(c, part) == pytest.approx(0.5, abs=1e-15)
    assert weighted_modularity(CommGraph({}, ["a", "b"]), {"a": 0, "b": 1}) == 0.0


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), k=st.integers(1, 4), seed=st.integers(0, 2**31 - 1))
def test_modularity_oracle(n, k, seed):
    rng = np.random.default_rng(seed)
    c = random_comm(rng, n)
    part = {u: int(rng.integers(0, k)) for u in c.ids}
    assert weighted_modularity(c, part) == pytest.approx(modularity_oracle(c, part),
                                                         rel=1e-12, abs=1e-12)
    one = {u: 0 for u in c.ids}
    assert weighted_modularity(c, one) == pytest.approx(0.0, abs=1e-12)
    scaled = CommGraph({e: 3 * w for e, w in c.weights.items()}, c.ids)
    assert weighted_modularity(scaled, part) == pytest.approx(weighted_modularity(c, part),
                                                              abs=1e-12)


def test_mixing_fixture(ds1):
    m = team_mixing_matrix(ds1)
    i, j = m.teams.index("A"), m.teams.index("B")
    assert m.values[i, i] == 0.5
    assert m.values[i, j] == m.values[j, i] == 0.125
    assert m.values[j, j] == 0.0
    assert np.array_equal(m.values, m.values.T)


def test_ei_fixture(ds1):
    e = ei_index(ds1)
    assert e.per_team["A"] == -0.5 and e.per_team["B"] == 1.0
    assert e.organization == pytest.approx(-0.2, abs=1e-15)
    w = ei_index(ds1, weighted=True)
    assert w.per_team["A"] == pytest.approx((2 - 16) / 18, abs=1e-15)
    assert round(w.per_team["A"], 3) == -0.778


def test_ei_internal_only():
    t = build_org_tree([("T", "R"), ("x", "T")])
    ds = Dataset(t, CommGraph({("x", "T"): 2}, t.nodes), extract_teams(t, 1, 1))
    assert ei_index(ds).per_team["T"] == -1.0


def test_group_rates_fixture(ds1):
    g = group_comm_rates(ds1)
    assert g["same_supervisor"] == 0.5
    assert g["same_team"] == pytest.approx(3 / 7, abs=1e-15)
    empty = Dataset(ds1.tree, CommGraph({}, ds1.tree.nodes), ds1.teams)
    assert all(v == 0 for v in group_comm_rates(empty).values())


# reciprocity and positions ----------------------------------------------------


def test_reciprocity_fixture(c1):
    assert network_reciprocity(c1) == 0.4
    assert network_reciprocity(c1, weighted=True) == pytest.approx(1 / 3, abs=1e-15)
    sym = CommGraph(clique("abcd", 2))
    assert network_reciprocity(sym) == network_reciprocity(sym, weighted=True) == 1.0
    dag = CommGraph({("a", "b"): 1, ("b", "c"): 4, ("a", "c"): 2})
    assert network_reciprocity(dag) == network_reciprocity(dag, weighted=True) == 0.0
    with pytest.raises(EmptyGraph):
        network_reciprocity(CommGraph({}, ["a"]))
    mean, sd = bootstrap_reciprocity(c1, n_boot=300, seed=1)
    assert 0.2 < mean < 0.6 and sd > 0


def test_node_reciprocity_fixture(c1):
    nr = node_reciprocity(c1)
    assert nr["a1"] == (0.5, 0.5)
    assert nr["A"] == (0.0, 0.0)
    assert nr["R"] == (None, None)
    assert all(v == (1.0, 1.0) for v in node_reciprocity(CommGraph(clique("abc"))).values())


def test_positions_fixture(ds1):
    pos = positions(ds1)
    assert pos["A"].hp == 1.0 and pos["c1"].hp == -1.0 and pos["a1"].hp == 0.0
    assert pos["a1"].sp == 0.0
    assert pos["a1"].rp == 0.5
    assert pos["a1"].srd_hp == 0.0
    assert "R" not in pos
    assert pos["b1"].sp is None and pos["b1"].rp is None


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_positions_properties(seed):
    ds = planted_suite(2, 15, CommModel(alpha=3, beta=1.0), seed=seed % 1000)
    pos = positions(ds)
    for t in ds.teams.teams:
        m = ds.teams.size(t)
        if m > 1:
            assert sum(pos[u].hp for u in ds.teams.members(t)) * (m - 1) == pytest.approx(0, abs=1e-9)
    for r in pos.values():
        for v in (r.sp, r.rp):
            assert v is None or -1 <= v <= 1
    # on symmetric traffic the received position mirrors the sent one
    # (RP averages D_vu over senders v, SP averages D_uv over recipients)
    w = dict(ds.comm.weights)
    for (u, v), x in list(w.items()):
        w[(v, u)] = x
    sym = Dataset(ds.tree, CommGraph(w, ds.tree.nodes), ds.teams)
    for r in positions(sym).values():
        assert r.sp == (None if r.rp is None else -r.rp)


# centralities -----------------------------------------------------------------


def _nx(c):
    g = nx.DiGraph()
    g.add_nodes_from(c.ids)
    g.add_weighted_edges_from((u, v, w) for (u, v), w in c.weights.items())
    return g


def test_centrality_small_examples():
    path = CommGraph({("u", "v"): 1, ("v", "w"): 1})
    bc, _ = betweenness_closeness(path)
    assert bc[path.pos["v"]] == 1.0
    sym = CommGraph(clique("abcde", 3))
    e = eigenvector_scores(sym)
    assert np.allclose(e, e[0], rtol=0, atol=1e-12)
    star = CommGraph({(leaf, "h"): 1 for leaf in ("l1", "l2", "l3")})
    a = authority_scores(star)
    assert a[star.pos["h"]] > max(a[star.pos[x]] for x in ("l1", "l2", "l3"))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 25), seed=st.integers(0, 2**31 - 1))
def test_betweenness_closeness_vs_networkx(n, seed):
    c = random_comm(np.random.default_rng(seed), n, p=0.2)
    bc, close = betweenness_closeness(c)
    g = _nx(c)
    nb = nx.betweenness_centrality(g, normalized=False)
    nc = nx.closeness_centrality(g)
    for u in c.ids:
        assert bc[c.pos[u]] == pytest.approx(nb[u], abs=1e-9)
        assert close[c.pos[u]] == pytest.approx(nc[u], abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(3, 25), seed=st.integers(0, 2**31 - 1))
def test_eigen_authority_vs_networkx(n, seed):
    rng = np.random.default_rng(seed)
    c = random_comm(rng, n, p=0.3)
    # a directed cycle through everyone keeps the graph strongly connected
    w = dict(c.weights)
    for i in range(n):
        w.setdefault((c.ids[i], c.ids[(i + 1) % n]), 1)
    c = CommGraph(w, c.ids)
    g = _nx(c)
    ev = nx.eigenvector_centrality_numpy(g, weight="weight")
    e = eigenvector_scores(c)
    for u in c.ids:
        assert e[c.pos[u]] == pytest.approx(abs(ev[u]), abs=1e-7)
    a = authority_scores(c)
    M = c.matrix.toarray().astype(float)
    M = M.T @ M
    lam = np.linalg.eigvalsh(M)
    # the result is always a principal eigenvector of A^T A
    assert np.allclose(M @ a, lam[-1] * a, atol=1e-6 * lam[-1])
    if lam[-1] - lam[-2] > 1e-6 * lam[-1]:
        # unique principal direction: networkx must agree
        _, auth = nx.hits(g, max_iter=10_000, tol=1e-14)
        for u in c.ids:
            assert a[c.pos[u]] == pytest.approx(auth[u], abs=1e-7)
    cent = centralities(c)
    assert set(cent) == set(c.ids)


# small statistics ---------------------------------------------------------------


def test_ols_examples():
    x = np.arange(10.0)
    b0, b1, s0, s1 = ols(x, 2 + 3 * x)
    assert (b0, b1) == pytest.approx((2, 3), abs=1e-12)
    assert s0 == pytest.approx(0, abs=1e-12) and s1 == pytest.approx(0, abs=1e-12)
    with pytest.raises(DegenerateDesign):
        ols([1, 1, 1, 1], [1, 2, 3, 4])
    with pytest.raises(DegenerateDesign):
        ols([1, 2], [1, 2])


def test_pearson_examples():
    assert pearson([1, 2], [2, 1]) == pytest.approx(-1.0, abs=1e-15)
    assert pearson([1, 2, 4], [1, 2, 4]) == pytest.approx(1.0, abs=1e-15)


def test_binned_curve():
    x = np.linspace(0, 1, 101)
    bins = binned_curve(x, x, 10)
    assert len(bins) == 10
    assert all(b.hi - b.lo == pytest.approx(0.1) for b in bins)
    means = [b.mean for b in bins]
    assert all(a < b for a, b in zip(means, means[1:]))
    assert sum(b.count for b in bins) == 101
    one = binned_curve([2, 2, 2], [1, 5, 9])
    assert len(one) == 1 and one[0].count == 3 and one[0].median == 5
    with pytest.raises(ValueError):
        binned_curve([], [])


def test_team_stat_correlation():
    ds = planted_suite(4, 0, seed=5, team_sizes=[20, 35, 50, 65])
    rho = team_stat_correlation(ds, [("size", "size"), ("depth", "mean_degree")])
    assert rho[("size", "size")] == pytest.approx(1.0, abs=1e-12)
    assert -1 <= rho[("depth", "mean_degree")] <= 1
    with pytest.raises(UnknownStatistic):
        team_stat_correlation(ds, [("nope", "size")])
    with pytest.raises(ValueError):
        team_stat_correlation(planted_suite(2, 10, seed=1), [("size", "size")])


def test_bootstrap_matches_edge_resampling():
    c = random_comm(np.random.default_rng(4), 30, p=0.25)
    rev = {e: c.weight(e[1], e[0]) for e in c.weights}
    w = np.array(list(c.weights.values()))
    r = np.array([rev[e] for e in c.weights])
    rng = np.random.default_rng(0)
    naive = []
    for _ in range(4000):
        s = rng.integers(0, len(w), len(w))
        naive.append(np.minimum(w[s], r[s]).sum() / w[s].sum())
    mean, sd = bootstrap_reciprocity(c, weighted=True, n_boot=4000, seed=1)
    assert mean == pytest.approx(np.mean(naive), abs=3 * sd / np.sqrt(2000))
    assert sd == pytest.approx(np.std(naive, ddof=1), rel=0.08)
    m1, _ = bootstrap_reciprocity(c, n_boot=50, seed=2)
    assert (m1, _) == bootstrap_reciprocity(c, n_boot=50, seed=2)


def test_eigenvector_on_acyclic_graph():
    dag = CommGraph({("b1", "B"): 1, ("c", "B"): 4})
    assert np.array_equal(eigenvector_scores(dag), np.zeros(3))
    assert set(centralities(dag)) == {"B", "b1", "c"}
