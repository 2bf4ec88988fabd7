"""Parsing raw edge files and the cleaning pipeline that harmonizes them.

File formats (UTF-8, comma separated):

* ``org.csv``  -- header ``child_id,parent_id``; one reporting edge per row.
* ``comm.csv`` -- header ``src_id,dst_id,count``; monthly email counts.
  A row ``u,,`` (empty destination and count) declares an employee present
  in the email data with no recorded traffic.

A serialized :class:`~orgnet.model.Dataset` is a directory holding
``org.csv``, ``comm.csv``, ``teams.csv`` and ``provenance.json``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .errors import (
    EmptyIntersection,
    InputFormatError,
    MalformedRow,
    MissingHeader,
    MultipleRoots,
    NegativeCount,
    SelfLoop,
)
from .io import atomic_write_text, csv_text, json_text
from .model import (
    EXCLUDED,
    LEADERSHIP,
    CommGraph,
    Dataset,
    OrgTree,
    TeamPartition,
    build_org_tree,
    extract_teams,
)

log = logging.getLogger(__name__)

ORG_HEADER = ["child_id", "parent_id"]
COMM_HEADER = ["src_id", "dst_id", "count"]
TEAMS_HEADER = ["node_id", "team_id", "division_id", "role"]

PIPELINE_ORDER = ["parse", "build", "harmonize", "extract_teams", "prune", "attach"]


@dataclass
class CleaningReport:
    n_comm_only: int = 0
    n_tree_only: int = 0
    n_pruned_leaves: int = 0
    n_hub_edges_added: int = 0
    hub_edges: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise MissingHeader(f"{path}: expected header {','.join(header)!r}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            yield reader.line_num, [c.strip() for c in row]


def parse_org_csv(path) -> list[tuple[str, str]]:
    """Read ``(child, parent)`` pairs from an org CSV."""
    out = []
    for line, row in _rows(path, ORG_HEADER):
        if len(row) != 2 or not row[0] or not row[1]:
            raise MalformedRow(line, f"expected 2 fields, got {row!r}")
        out.append((row[0], row[1]))
    return out


def _fast_comm(path):
    """Bulk parse of a well-formed comm CSV, or None if anything looks off.

    The caller falls back to the row-by-row parser, which reports the exact
    line of the problem.
    """
    data = Path(path).read_bytes()
    if b'"' in data:
        return None
    b = np.frombuffer(data, dtype=np.uint8)
    ends = np.append(np.flatnonzero(b == 10), len(b))
    starts = np.concatenate([[0], ends[:-1] + 1])
    nonempty = (ends - starts) > (b[np.maximum(ends - 1, 0)] == 13)
    commas = np.flatnonzero(b == 44)
    per_line = np.searchsorted(commas, ends) - np.searchsorted(commas, starts)
    if np.any(per_line[nonempty] != 2):
        return None
    df = pd.read_csv(io.BytesIO(data), dtype=str, keep_default_na=False, na_filter=False)
    if [c.strip() for c in df.columns] != COMM_HEADER:
        return None
    padded = b" " in data or b"\t" in data
    us, vs, cs = ((df.iloc[:, k].str.strip() if padded else df.iloc[:, k]).to_numpy(dtype=object)
                  for k in range(3))
    if np.any(us == ""):
        return None
    iso = vs == ""
    if np.any(cs[iso] != ""):
        return None
    us, vs, cs, lone = us[~iso], vs[~iso], cs[~iso], us[iso]
    try:
        w = np.array(cs.tolist(), dtype=np.int64)
    except (ValueError, OverflowError):
        return None
    if np.any(w <= 0):
        return None
    m = len(us)
    codes, ids = pd.factorize(np.concatenate([us, vs, lone]), sort=True)
    src, dst = codes[:m].astype(np.int64), codes[m:2 * m].astype(np.int64)
    if np.any(src == dst):
        return None
    return CommGraph.from_arrays(list(ids), src, dst, w, sort_ids=False)


def parse_comm_csv(path) -> CommGraph:
    """Read an email-count CSV; duplicate (src, dst) rows are summed."""
    fast = _fast_comm(path)
    if fast is not None:
        return fast
    lines, us, vs, cs = [], [], [], []
    nodes: set[str] = set()
    for line, row in _rows(path, COMM_HEADER):
        if len(row) != 3 or not row[0]:
            raise MalformedRow(line, f"expected 3 fields, got {row!r}")
        u, v, c = row
        if not v:
            if c:
                raise MalformedRow(line, "missing dst_id")
            nodes.add(u)
            continue
        lines.append(line)
        us.append(u)
        vs.append(v)
        cs.append(c)
    try:
        w = np.array(cs, dtype=np.int64) if cs else np.zeros(0, dtype=np.int64)
    except (ValueError, OverflowError):
        for line, c in zip(lines, cs):
            try:
                int(c)
            except ValueError:
                raise MalformedRow(line, f"count is not an integer: {c!r}") from None
        raise
    bad = np.flatnonzero(w <= 0)
    if len(bad):
        k = int(bad[0])
        raise NegativeCount(f"line {lines[k]}: count must be positive, got {w[k]}")
    nodes.update(us)
    nodes.update(vs)
    ids = sorted(nodes)
    pos = {u: i for i, u in enumerate(ids)}
    src = np.fromiter(map(pos.__getitem__, us), dtype=np.int64, count=len(us))
    dst = np.fromiter(map(pos.__getitem__, vs), dtype=np.int64, count=len(vs))
    loop = np.flatnonzero(src == dst)
    if len(loop):
        k = int(loop[0])
        raise SelfLoop(f"line {lines[k]}: self-loop on {us[k]!r}")
    return CommGraph.from_arrays(ids, src, dst, w, sort_ids=False)


# ---------------------------------------------------------------------------
# cleaning
# ---------------------------------------------------------------------------


def _reparent(tree: OrgTree, keep: set) -> OrgTree:
    """Restrict ``tree`` to ``keep``, hanging orphans on their nearest kept ancestor."""
    nearest: dict[str, str | None] = {}
    queue = deque([tree.root])
    nearest[tree.root] = tree.root if tree.root in keep else None
    children = tree.children
    parent: dict[str, str] = {}
    roots = [tree.root] if tree.root in keep else []
    while queue:
        u = queue.popleft()
        for c in children[u]:
            anc = nearest[u]
            if c in keep:
                if anc is None:
                    roots.append(c)
                else:
                    parent[c] = anc
                nearest[c] = c
            else:
                nearest[c] = anc
            queue.append(c)
    if len(roots) > 1:
        raise MultipleRoots("root missing from communication data leaves several roots",
                            sorted(roots))
    return build_org_tree(parent.items(), root=roots[0])


def harmonize(tree: OrgTree, comm: CommGraph):
    """Restrict both structures to their common node set.

    Returns ``(tree, comm, report)``.
    """
    common = tree.nodes & comm.nodes
    if not common:
        raise EmptyIntersection("org tree and communication data share no employee ids")
    report = CleaningReport(
        n_comm_only=len(comm.nodes - common),
        n_tree_only=len(tree.nodes - common),
    )
    new_tree = tree if report.n_tree_only == 0 else _reparent(tree, common)
    new_comm = comm if report.n_comm_only == 0 else comm.subgraph(common)
    return new_tree, new_comm, report


def prune_silent_leaves(tree: OrgTree, comm: CommGraph):
    """Repeatedly drop leaves with no email traffic.

    Returns ``(tree, comm, n_pruned)``. The root is never removed.
    """
    strength = comm.strength()
    pos = comm.pos
    silent = {u for u in tree.nodes if strength[pos[u]] == 0}
    n_children = {u: len(c) for u, c in tree.children.items()}
    queue = deque(sorted(u for u in silent if n_children[u] == 0 and u != tree.root))
    removed: set[str] = set()
    while queue:
        u = queue.popleft()
        removed.add(u)
        p = tree.parent[u]
        n_children[p] -= 1
        if n_children[p] == 0 and p in silent and p != tree.root:
            queue.append(p)
    if not removed:
        return tree, comm, 0
    parent = {c: p for c, p in tree.parent.items() if c not in removed}
    new_tree = build_org_tree(parent.items(), root=tree.root)
    return new_tree, comm.subgraph(new_tree.nodes), len(removed)


def _hub(cands, out_deg, pos):
    best = None
    for u in cands:
        key = (-out_deg[pos[u]], u)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def attach_silent_internal(comm: CommGraph, tree: OrgTree, teams: TeamPartition):
    """Give every node without traffic one incoming email from a hub.

    The hub is the highest out-degree member of the node's team (ties broken
    by id); leadership and excluded nodes use the whole-graph hub. Returns
    ``(comm, hub_edges)``.
    """
    strength = comm.strength()
    pos = comm.pos
    silent = sorted(u for u in comm.ids if strength[pos[u]] == 0)
    if not silent:
        return comm, []
    out_deg = np.bincount(comm.src, minlength=comm.n_nodes)
    global_order = sorted(comm.ids, key=lambda u: (-out_deg[pos[u]], u))
    team_hub: dict[str, str | None] = {}
    hub_edges = []
    for u in silent:
        t = teams.team_of.get(u)
        hub = None
        if t is not None:
            if t not in team_hub:
                team_hub[t] = _hub((m for m in teams.members(t) if strength[pos[m]] > 0),
                                   out_deg, pos)
            hub = team_hub[t]
        if hub is None:
            hub = next((h for h in global_order if h != u), None)
        if hub is None:
            continue
        hub_edges.append((hub, u))
    new_comm = comm.with_edges({e: 1 for e in hub_edges})
    return new_comm, hub_edges


def clean(tree: OrgTree, comm: CommGraph, team_level: int = 2, min_size: int = 100) -> Dataset:
    """Run harmonize -> extract_teams -> prune -> attach on parsed inputs."""
    tree, comm, rep = harmonize(tree, comm)
    teams = extract_teams(tree, team_level, min_size)
    tree, comm, rep.n_pruned_leaves = prune_silent_leaves(tree, comm)
    if rep.n_pruned_leaves:
        # pruning changes team sizes; keep the partition consistent with the tree
        teams = extract_teams(tree, team_level, min_size)
    comm, hub_edges = attach_silent_internal(comm, tree, teams)
    rep.hub_edges = [list(e) for e in hub_edges]
    rep.n_hub_edges_added = len(hub_edges)
    provenance = {
        "cleaning": asdict(rep),
        "pipeline_order": PIPELINE_ORDER,
        "team_level": team_level,
        "min_size": min_size,
    }
    return Dataset(tree=tree, comm=comm, teams=teams, provenance=provenance)


def assemble_dataset(org_path, comm_path, team_level: int = 2, min_size: int = 100) -> Dataset:
    """Parse both files and run the full cleaning pipeline."""
    edges = parse_org_csv(org_path)
    comm = parse_comm_csv(comm_path)
    tree = build_org_tree(edges)
    ds = clean(tree, comm, team_level, min_size)
    log.info("assembled %d nodes, %d edges, %d teams", len(ds.tree), ds.comm.n_edges,
             len(ds.teams.teams))
    ds.provenance["inputs"] = {"org": str(org_path), "comm": str(comm_path)}
    return ds


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def org_csv_text(tree: OrgTree) -> str:
    return csv_text(ORG_HEADER, tree.edges())


def comm_csv_text(comm: CommGraph) -> str:
    ids = comm.ids
    rows = [(ids[a], ids[b], int(c)) for a, b, c in zip(comm.src.tolist(), comm.dst.tolist(),
                                                        comm.w.tolist())]
    touched = np.zeros(comm.n_nodes, dtype=bool)
    touched[comm.src] = True
    touched[comm.dst] = True
    rows.extend((ids[i], "", "") for i in np.flatnonzero(~touched))
    return csv_text(COMM_HEADER, rows)


def teams_csv_text(tree: OrgTree, teams: TeamPartition) -> str:
    rows = []
    for u in sorted(tree.nodes):
        label = teams.label(u)
        if label == LEADERSHIP:
            rows.append((u, "", "", "leadership"))
        elif label == EXCLUDED:
            rows.append((u, "", "", "excluded"))
        else:
            rows.append((u, label, teams.division_of[u], "team"))
    return csv_text(TEAMS_HEADER, rows)


def write_dataset(ds: Dataset, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    prov = dict(ds.provenance)
    prov.setdefault("team_level", ds.teams.team_level)
    prov.setdefault("min_size", ds.teams.min_size)
    prov["software_version"] = __version__
    return [
        atomic_write_text(d / "org.csv", org_csv_text(ds.tree)),
        atomic_write_text(d / "comm.csv", comm_csv_text(ds.comm)),
        atomic_write_text(d / "teams.csv", teams_csv_text(ds.tree, ds.teams)),
        atomic_write_text(d / "provenance.json", json_text(prov)),
    ]


def read_dataset(directory) -> Dataset:
    """Load a serialized Dataset without re-running the cleaning steps."""
    d = Path(directory)
    prov = json.loads((d / "provenance.json").read_text(encoding="utf-8"))
    tree = build_org_tree(parse_org_csv(d / "org.csv"))
    comm = parse_comm_csv(d / "comm.csv")
    teams = extract_teams(tree, prov.get("team_level", 2), prov.get("min_size", 100))
    if (d / "teams.csv").exists():
        on_disk = (d / "teams.csv").read_text(encoding="utf-8")
        if on_disk != teams_csv_text(tree, teams):
            raise InputFormatError(f"{d / 'teams.csv'} disagrees with org.csv and provenance")
    return Dataset(tree=tree, comm=comm, teams=teams, provenance=prov)
