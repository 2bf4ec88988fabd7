import numpy as np
import pytest

from orgnet.distance import pair_arrays
from orgnet.ingest import clean
from orgnet.measures import team_mixing_matrix, weighted_modularity
from orgnet.model import extract_teams
from orgnet.synth import CommModel, planted_suite, random_org_tree, sample_comm


def mean_children(tree):
    kids = np.bincount([tree.index.pos[p] for p in tree.parent.values()],
                       minlength=len(tree.nodes))
    return kids[kids > 0].mean()


def test_random_tree_basics():
    t = random_org_tree(1, seed=3)
    assert len(t.nodes) == 1 and t.depth == 0
    assert random_org_tree(300, 4.0, seed=8) == random_org_tree(300, 4.0, seed=8)
    assert random_org_tree(300, 4.0, seed=8) != random_org_tree(300, 4.0, seed=9)
    with pytest.raises(ValueError):
        random_org_tree(0)
    with pytest.raises(ValueError):
        random_org_tree(5, 0.5)


def test_random_tree_branching():
    means = [mean_children(random_org_tree(10_000, 5.0, seed=s)) for s in range(20)]
    assert 4 <= np.mean(means) <= 6
    assert all(4 <= m <= 6 for m in means)


def test_model_rates():
    m = CommModel("SRD", alpha=2.0, beta=0.5)
    assert np.allclose(m.rate([0, 1, -1, 2]), 2 * np.exp(-0.5 * np.array([0, 1, 1, 2])))
    p = CommModel(form="power", alpha=3.0, beta=1.0)
    assert p.rate(1) == pytest.approx(1.5)
    a = CommModel("DRD", beta=1.0, beta_up=0.1, beta_down=2.0)
    assert a.rate(2) > a.rate(-2)
    with pytest.raises(ValueError):
        CommModel("XD")
    with pytest.raises(ValueError):
        CommModel(alpha=-1)


def test_sample_comm_basics():
    t = random_org_tree(120, 4.0, seed=2)
    assert sample_comm(t, CommModel(alpha=0.0)).n_edges == 0
    a = sample_comm(t, CommModel(alpha=3.0), seed=5)
    assert a == sample_comm(t, CommModel(alpha=3.0), seed=5)
    assert a != sample_comm(t, CommModel(alpha=3.0), seed=6)
    assert a.nodes == t.nodes


def test_sample_comm_profile_decreases():
    means = np.zeros(4)
    for s in range(10):
        t = random_org_tree(200, 4.0, seed=100 + s)
        c = sample_comm(t, CommModel("RD", alpha=20, beta=1.5), seed=s)
        _, _, d, w = pair_arrays(t.index, c, "RD")
        means += [w[d == k].mean() for k in range(1, 5)]
    means /= 10
    assert means[0] > means[1] > means[2] > means[3]


def test_sample_comm_flat_mean():
    t = random_org_tree(200, 4.0, seed=1)
    c = sample_comm(t, CommModel(alpha=2.0, beta=0.0), seed=1)
    grand = c.total / (200 * 199)
    assert abs(grand - 2.0) / 2.0 < 0.05


def test_planted_suite_structure():
    ds = planted_suite(2, 50, seed=3)
    assert len(ds.teams.teams) == 2
    labels = ds.teams.labels(ds.comm.ids)
    t_of = np.array([labels[u] for u in ds.comm.ids], dtype=object)
    between = t_of[ds.comm.src] != t_of[ds.comm.dst]
    assert between.any()
    assert ds == planted_suite(2, 50, seed=3)
    # cleaning generated data changes nothing
    again = clean(ds.tree, ds.comm, team_level=2, min_size=1)
    assert again.tree == ds.tree and again.comm == ds.comm


def test_planted_suite_no_between_traffic():
    ds = planted_suite(3, 40, CommModel(alpha=5, beta=1.0), seed=1, between_rate=0.0)
    m = team_mixing_matrix(ds)
    off = m.values[~np.eye(len(m.teams), dtype=bool)]
    assert np.all(off == 0)


def test_planted_suite_between_pairs_are_single_emails():
    ds = planted_suite(3, 30, CommModel(alpha=5, beta=1.0), seed=2, between_rate=0.05)
    labels = ds.teams.labels(ds.comm.ids)
    t_of = np.array([labels[u] for u in ds.comm.ids], dtype=object)
    cross = t_of[ds.comm.src] != t_of[ds.comm.dst]
    assert cross.sum() > 50 and np.all(ds.comm.w[cross] == 1)


def test_planted_suite_modularity():
    ds = planted_suite(4, 60, CommModel(alpha=10, beta=2.0), seed=6)
    part = ds.teams.labels(ds.comm.ids)
    assert weighted_modularity(ds.comm, part) > 0.3
    assert extract_teams(ds.tree, 2, 1) == ds.teams
