import pytest

from conftest import C1_WEIGHTS, DATA, F1_EDGES
from orgnet.errors import (EmptyIntersection, InputFormatError, MalformedRow, MissingHeader,
                           NegativeCount, SelfLoop)
from orgnet.ingest import (assemble_dataset, attach_silent_internal, clean, harmonize,
                           parse_comm_csv, parse_org_csv, prune_silent_leaves, read_dataset,
                           write_dataset)
from orgnet.model import CommGraph, build_org_tree, extract_teams
from orgnet.synth import CommModel, planted_suite


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_org(tmp_path):
    assert parse_org_csv(_write(tmp_path, "o.csv", "child_id,parent_id\n a1 , A\n")) == [("a1", "A")]
    assert parse_org_csv(_write(tmp_path, "e.csv", "child_id,parent_id\n")) == []
    with pytest.raises(MalformedRow) as e:
        parse_org_csv(_write(tmp_path, "m.csv", "child_id,parent_id\na1\n"))
    assert e.value.line == 2
    with pytest.raises(MissingHeader):
        parse_org_csv(_write(tmp_path, "h.csv", "kid,boss\na1,A\n"))


def test_parse_comm(tmp_path):
    c = parse_comm_csv(_write(tmp_path, "c.csv", "src_id,dst_id,count\nu,v,3\nu,v,2\n"))
    assert c.weight("u", "v") == 5
    with pytest.raises(SelfLoop):
        parse_comm_csv(_write(tmp_path, "s.csv", "src_id,dst_id,count\nu,u,1\n"))
    with pytest.raises(NegativeCount):
        parse_comm_csv(_write(tmp_path, "z.csv", "src_id,dst_id,count\nu,v,0\n"))
    with pytest.raises(MalformedRow):
        parse_comm_csv(_write(tmp_path, "x.csv", "src_id,dst_id,count\nu,v,many\n"))
    iso = parse_comm_csv(_write(tmp_path, "i.csv", "src_id,dst_id,count\nu,v,1\nw,,\n"))
    assert iso.nodes == frozenset({"u", "v", "w"}) and iso.n_edges == 1


def test_harmonize(f1, c1):
    extra = CommGraph({**C1_WEIGHTS, ("a1", "x"): 4}, f1.nodes)
    t, c, rep = harmonize(f1, extra)
    assert "x" not in c.nodes and rep.n_comm_only == 1 and rep.n_tree_only == 0
    t, c, rep = harmonize(f1, c1)
    assert t == f1 and c == c1 and (rep.n_comm_only, rep.n_tree_only) == (0, 0)
    no_a = CommGraph({k: v for k, v in C1_WEIGHTS.items() if "A" not in k},
                     f1.nodes - {"A"})
    t, c, rep = harmonize(f1, no_a)
    assert rep.n_tree_only == 1
    assert t.parent["a1"] == "R" and t.parent["a2"] == "R" and t.parent["c1"] == "a1"
    with pytest.raises(EmptyIntersection):
        harmonize(f1, CommGraph({("p", "q"): 1}))


def test_prune(f1, c1):
    t = build_org_tree(F1_EDGES + [("z", "B")])
    c = CommGraph(C1_WEIGHTS, t.nodes)
    t2, c2, n = prune_silent_leaves(t, c)
    assert n == 1 and "z" not in t2.nodes
    t = build_org_tree(F1_EDGES + [("y", "B"), ("z", "y")])
    t2, _, n = prune_silent_leaves(t, CommGraph(C1_WEIGHTS, t.nodes))
    assert n == 2 and not {"y", "z"} & t2.nodes
    t2, c2, n = prune_silent_leaves(f1, c1)
    assert n == 0 and t2 == f1
    # idempotent, and every remaining leaf has traffic
    t3, c3, n3 = prune_silent_leaves(t2, c2)
    assert n3 == 0
    s = c3.strength()
    assert all(s[c3.pos[u]] > 0 for u in t3.leaves() if u != t3.root)


def test_attach(f1, c1):
    teams = extract_teams(f1, 1, 1)
    c2, hubs = attach_silent_internal(c1, f1, teams)
    # B's only communicating team member is b1; R is leadership -> global hub a1
    assert sorted(hubs) == [("a1", "R"), ("b1", "B")]
    assert c2.weight("b1", "B") == 1 and c2.weight("a1", "R") == 1
    s = c2.strength()
    assert all(s[c2.pos[u]] > 0 for u in c2.ids)
    # B receives from its child: not silent, no edge added for it
    c3 = CommGraph({**C1_WEIGHTS, ("b1", "B"): 1}, f1.nodes)
    _, hubs = attach_silent_internal(c3, f1, teams)
    assert hubs == [("a1", "R")]
    full = CommGraph({("a", "b"): 1, ("b", "a"): 1})
    same, hubs = attach_silent_internal(full, build_org_tree([("b", "a")]),
                                        extract_teams(build_org_tree([("b", "a")]), 1, 1))
    assert hubs == [] and same == full


def test_attach_team_hub_by_out_degree():
    t = build_org_tree([("T", "R"), ("x", "T"), ("y", "T"), ("s", "x")])
    c = CommGraph({("x", "y"): 1, ("x", "T"): 1, ("y", "x"): 1, ("R", "T"): 1}, t.nodes)
    _, hubs = attach_silent_internal(c, t, extract_teams(t, 1, 1))
    assert hubs == [("x", "s")]


def test_assemble_fixture():
    ds = assemble_dataset(DATA / "f1_org.csv", DATA / "c1_comm.csv", team_level=1, min_size=1)
    assert len(ds.tree.nodes) == 7 and len(ds.teams.teams) == 2
    # the five C1 edges plus hub edges for the silent R and B
    assert ds.comm.n_edges == 7
    assert ds.provenance["cleaning"]["n_hub_edges_added"] == 2
    assert ds.provenance["pipeline_order"] == ["parse", "build", "harmonize", "extract_teams",
                                               "prune", "attach"]


def test_assemble_empty_intersection(tmp_path):
    o = _write(tmp_path, "o.csv", "child_id,parent_id\na,b\n")
    c = _write(tmp_path, "c.csv", "src_id,dst_id,count\nx,y,1\n")
    with pytest.raises(EmptyIntersection):
        assemble_dataset(o, c)


def test_round_trip_synthetic(tmp_path):
    ds = planted_suite(3, 40, CommModel(alpha=10, beta=1.5), seed=17)
    write_dataset(ds, tmp_path / "w")
    back = read_dataset(tmp_path / "w")
    assert back.tree == ds.tree and back.comm == ds.comm and back.teams == ds.teams
    again = assemble_dataset(tmp_path / "w" / "org.csv", tmp_path / "w" / "comm.csv",
                             team_level=2, min_size=1)
    assert again.tree == ds.tree and again.comm == ds.comm and again.teams == ds.teams
    # cleaning clean data changes nothing, and serialization is byte-stable
    write_dataset(back, tmp_path / "w2")
    for f in ("org.csv", "comm.csv", "teams.csv"):
        assert (tmp_path / "w" / f).read_bytes() == (tmp_path / "w2" / f).read_bytes()


def test_read_dataset_rejects_inconsistent_teams(tmp_path):
    ds = planted_suite(2, 20, seed=1)
    write_dataset(ds, tmp_path)
    p = tmp_path / "teams.csv"
    p.write_text(p.read_text().replace(",team\n", ",excluded\n", 1))
    with pytest.raises(InputFormatError):
        read_dataset(tmp_path)


def test_clean_is_idempotent():
    ds = planted_suite(2, 50, seed=3)
    again = clean(ds.tree, ds.comm, team_level=2, min_size=1)
    assert again.tree == ds.tree and again.comm == ds.comm
    assert again.provenance["cleaning"]["n_hub_edges_added"] == 0
