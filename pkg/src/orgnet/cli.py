"""Command-line entry point: ``orgnet <subcommand> ...``.

Every subcommand writes its tables atomically into an output directory
together with a ``manifest.json`` listing the configuration, software
version and content hashes of inputs and outputs.

Exit codes: 0 success, 2 usage error, 3 input error, 4 computation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .distance import (KINDS, PROFILE_HEADER, decomposition_histogram, pair_counts_by_kind,
                       from_decomposition, iter_pair_blocks, profile_from_edges)
from .errors import ComputationError, InputFormatError, OrgNetError, UnknownTeam
from .ingest import assemble_dataset, read_dataset, write_dataset
from .io import sha256_file, write_csv, write_json
from .measures import (binned_curve, bootstrap_reciprocity, centralities, degree_arrays,
                       ei_index, fit_power_law, group_comm_rates, network_reciprocity,
                       node_reciprocity, ols, positions, team_mixing_matrix,
                       team_stat_correlation, weighted_modularity)
from .measures.stats import COMM_STATS, TREE_STATS
from .model import EXCLUDED, LEADERSHIP
from .parallel import default_workers, pmap
from .permtest import team_symmetry_test
from .reconstruct import (LEVEL_HEADER, METHODS, RECORD_HEADER, evaluate_all, level_rows,
                          orient_from_root, ranking_to_edges, record_rows, run_method)
from .synth import CommModel, planted_suite

log = logging.getLogger("orgnet")

MEASURES = ("degree", "powerlaw", "modularity", "mixing", "ei", "groups", "reciprocity",
            "positions", "centrality", "binned", "teamstats")


@dataclass
class RunConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    out: str | None = None
    team_level: int = 2
    min_team_size: int = 100
    permutations: int = 500
    size_cap: int = 3000
    bins: int = 10
    seed: int = 0
    workers: int = 1
    selection: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


class Run:
    """Collects written files for the manifest."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.files: list[Path] = []

    def csv(self, name, header, rows):
        self.files.append(write_csv(self.out / name, header, rows))

    def json(self, name, obj):
        self.files.append(write_json(self.out / name, obj))

    def add(self, paths):
        self.files.extend(paths)

    def manifest(self):
        inputs = {}
        for p in self.cfg.inputs:
            p = Path(p)
            if p.is_dir():
                for f in sorted(p.iterdir()):
                    if f.is_file() and f.name != "manifest.json":
                        inputs[str(f)] = sha256_file(f)
            elif p.is_file():
                inputs[str(p)] = sha256_file(p)
        doc = {
            "config": asdict(self.cfg),
            "seed": self.cfg.seed,
            "version": __version__,
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "inputs": inputs,
            "outputs": {str(f.relative_to(self.out)): sha256_file(f)
                        for f in sorted(set(self.files))},
        }
        write_json(self.out / "manifest.json", doc)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load(cfg: RunConfig):
    d = Path(cfg.inputs[0])
    if not d.is_dir():
        raise InputFormatError(f"{d}: not a dataset directory")
    return read_dataset(d)


def cmd_ingest(cfg: RunConfig, run: Run):
    org, comm = cfg.inputs
    ds = assemble_dataset(org, comm, cfg.team_level, cfg.min_team_size)
    ds.provenance.pop("inputs", None)
    run.add(write_dataset(ds, run.out))
    run.json("cleaning.json", ds.provenance["cleaning"])


def cmd_synth(cfg: RunConfig, run: Run):
    x = cfg.extra
    model = CommModel(x["kind"], x["alpha"], x["beta"], x["form"], x.get("beta_up"),
                      x.get("beta_down"))
    ds = planted_suite(x["teams"], x["team_size"], model, cfg.seed,
                       n_divisions=x.get("divisions"), mean_branching=x["branching"],
                       between_rate=x["between_rate"], min_size=cfg.min_team_size)
    run.add(write_dataset(ds, run.out))


def _team_rows(ds):
    teams = ds.teams
    for t in sorted(teams.teams):
        yield (t, teams.division_of[t], teams.team_root[t], teams.size(t), teams.team_depth[t])


def cmd_teams(cfg: RunConfig, run: Run):
    ds = _load(cfg)
    run.csv("teams_summary.csv", ["team", "division", "root", "size", "depth"], _team_rows(ds))
    labels = ds.teams.labels(ds.tree.nodes)
    run.json("teams_summary.json", {
        "n_teams": len(ds.teams.teams),
        "n_leadership": sum(1 for v in labels.values() if v == LEADERSHIP),
        "n_excluded": sum(1 for v in labels.values() if v == EXCLUDED),
        "team_level": ds.teams.team_level,
        "min_size": ds.teams.min_size,
    })


def _fit_or_reason(values):
    try:
        f = fit_power_law(values)
        return f._asdict()
    except ComputationError as exc:
        return {"error": type(exc).__name__, "detail": str(exc)}


def cmd_measure(cfg: RunConfig, run: Run):
    ds = _load(cfg)
    sel = list(MEASURES) if cfg.extra.get("all") or not cfg.selection else cfg.selection
    comm = ds.comm
    summary = {}
    need_pos = {"positions", "binned"} & set(sel)
    pos = positions(ds) if need_pos else None

    if "degree" in sel:
        arr = degree_arrays(comm)
        keys = list(arr)
        run.csv("degree.csv", ["node"] + keys,
                ([u] + [arr[k][i] for k in keys] for i, u in enumerate(comm.ids)))
        summary["degree"] = {f"mean_{k}": float(arr[k].mean()) if comm.n_nodes else 0.0
                             for k in keys}
    if "powerlaw" in sel:
        arr = degree_arrays(comm)
        doc = {k: _fit_or_reason(arr[k][arr[k] > 0]) for k in ("in_degree", "out_degree",
                                                                "total_degree")}
        run.json("powerlaw.json", doc)
        summary["powerlaw"] = doc
    if "modularity" in sel:
        inside = {u: t for u, t in ds.teams.team_of.items()}
        part = {u: inside.get(u, f"__self__{u}") for u in comm.ids}
        div = {u: ds.teams.division_of.get(u, f"__self__{u}") for u in comm.ids}
        summary["modularity"] = {"team": weighted_modularity(comm, part),
                                 "division": weighted_modularity(comm, div)}
    if "mixing" in sel:
        mm = team_mixing_matrix(ds)
        run.csv("mixing.csv", ["team_a", "team_b", "value"], mm.rows())
    if "ei" in sel:
        out = {}
        for weighted in (False, True):
            rec = ei_index(ds, weighted)
            tag = "weighted" if weighted else "unweighted"
            run.csv(f"ei_{tag}.csv", ["team", "external", "internal", "ei"], rec.rows())
            out[tag] = rec.organization
        summary["ei_organization"] = out
    if "groups" in sel:
        rates = group_comm_rates(ds)
        run.csv("groups.csv", ["group", "rate"], sorted(rates.items()))
    if "reciprocity" in sel:
        doc = {}
        for weighted in (False, True):
            tag = "weighted" if weighted else "unweighted"
            if comm.n_edges:
                mean, sd = bootstrap_reciprocity(comm, weighted, 200, cfg.seed)
                doc[tag] = {"value": network_reciprocity(comm, weighted),
                            "bootstrap_mean": mean, "bootstrap_sd": sd}
            else:
                doc[tag] = None
        summary["reciprocity"] = doc
        nr = node_reciprocity(comm)
        run.csv("node_reciprocity.csv", ["node", "sr", "rr"],
                ((u,) + nr[u] for u in comm.ids))
    if "positions" in sel:
        run.csv("positions.csv", ["node", "team", "hp", "sp", "rp", "srd_hp", "srd_sp",
                                  "srd_rp", "relative_level"],
                ((u, ds.teams.team_of[u]) + tuple(pos[u]) for u in sorted(pos)))
    cent = None
    if "centrality" in sel or "binned" in sel:
        cent = {}
        small = [t for t in sorted(ds.teams.teams) if ds.teams.size(t) <= cfg.size_cap]
        for part in pmap(lambda t: centralities(ds.team_comm(t)), small, cfg.workers):
            cent.update(part)
    if "centrality" in sel:
        run.csv("centrality.csv", ["node", "team", "betweenness", "closeness", "eigenvector",
                                   "authority"],
                ((u, ds.teams.team_of[u]) + tuple(cent[u]) for u in sorted(cent)))
    if "binned" in sel:
        _binned(ds, pos, cent, cfg, run, summary)
    if "teamstats" in sel:
        pairs = [(s, s) for s in TREE_STATS if s in COMM_STATS]
        if len(ds.teams.teams) >= 3:
            rho = team_stat_correlation(ds, pairs)
            run.csv("teamstats.csv", ["tree_stat", "comm_stat", "pearson"],
                    ((a, b, rho[(a, b)]) for a, b in pairs))
        else:
            log.warning("fewer than 3 teams; skipping team statistic correlations")
    run.json("summary.json", summary)


def _binned(ds, pos, cent, cfg, run, summary):
    """Measures against relative level: binned curves and OLS fits."""
    nr = node_reciprocity(ds.comm)
    nodes = sorted(pos)
    x = np.array([pos[u].relative_level for u in nodes])
    series = {
        "hp": [pos[u].hp for u in nodes], "sp": [pos[u].sp for u in nodes],
        "rp": [pos[u].rp for u in nodes], "sr": [nr[u][0] for u in nodes],
        "rr": [nr[u][1] for u in nodes],
    }
    for name in ("betweenness", "closeness", "eigenvector", "authority"):
        series[name] = [getattr(cent[u], name) if u in cent else None for u in nodes]
    rows, fits = [], []
    for name, vals in series.items():
        ok = np.array([v is not None for v in vals])
        if not ok.any():
            continue
        xv = x[ok]
        yv = np.array([v for v in vals if v is not None], dtype=np.float64)
        for b in binned_curve(xv, yv, cfg.bins):
            rows.append((name,) + tuple(b))
        try:
            fits.append((name,) + tuple(ols(xv, yv)) + (int(ok.sum()),))
        except ComputationError as exc:
            log.warning("OLS for %s skipped: %s", name, exc)
    run.csv("binned.csv", ["measure", "lo", "hi", "count", "min", "q1", "median", "q3", "max",
                           "mean"], rows)
    run.csv("ols.csv", ["measure", "beta0", "beta1", "se0", "se1", "n"], fits)


def cmd_distance(cfg: RunConfig, run: Run):
    ds = _load(cfg)
    kinds = cfg.selection or list(KINDS)
    for k in kinds:
        if k not in KINDS:
            raise ValueError(f"unknown distance kind {k!r}")

    def team_rows(t):
        tree = ds.team_tree(t)
        comm = ds.team_comm(t)
        H = decomposition_histogram(tree.index)
        out = []
        for k in kinds:
            prof = profile_from_edges(tree.index, comm.src, comm.dst, comm.w, k, H)
            out.extend((t,) + r for r in prof.rows())
        return out

    parts = pmap(team_rows, sorted(ds.teams.teams), cfg.workers)
    run.csv("profiles.csv", ["team"] + PROFILE_HEADER, [r for p in parts for r in p])
    if cfg.extra.get("enumerate"):
        parts = pmap(lambda t: _enumerated_counts(ds, t, kinds), sorted(ds.teams.teams),
                     cfg.workers)
        rows = [r for p in parts for r in p]
        expect = {(r[0], r[1], r[2]): r[3] for r in rows}
        run.csv("pair_counts.csv", ["team", "kind", "distance", "ordered_pairs"], rows)
        _check_enumeration(ds, kinds, expect)


def _enumerated_counts(ds, team, kinds):
    """Ordered-pair counts per distance, by visiting every in-team pair."""
    idx = ds.team_tree(team).index
    acc = {k: {} for k in kinds}
    for _, _, up, down in iter_pair_blocks(idx, include_self=False):
        rd, srd, drd = from_decomposition(up, down)
        for k, d in zip(("RD", "SRD", "DRD"), (rd, srd, drd)):
            if k not in acc:
                continue
            vals, cnt = np.unique(d, return_counts=True)
            for v, c in zip(vals.tolist(), cnt.tolist()):
                acc[k][v] = acc[k].get(v, 0) + c
    return [(team, k, d, c) for k in kinds for d, c in sorted(acc[k].items())]


def _check_enumeration(ds, kinds, counts):
    for t in sorted(ds.teams.teams):
        H = decomposition_histogram(ds.team_tree(t).index)
        for k in kinds:
            for d, c in pair_counts_by_kind(H, k).items():
                ordered = 2 * c if k == "RD" else c
                if counts.get((t, k, d), 0) != ordered:
                    raise ComputationError(f"pair enumeration disagrees for team {t}, {k}={d}")


def cmd_permtest(cfg: RunConfig, run: Run):
    ds = _load(cfg)
    kind = cfg.extra["kind"]
    results, null_rows, rows = {}, [], []
    for t in sorted(ds.teams.teams):
        r = team_symmetry_test(ds, t, kind, cfg.permutations, cfg.seed,
                               cfg.extra["max_team_size"], cfg.workers)
        if r is None:
            log.warning("team %s skipped: larger than %d", t, cfg.extra["max_team_size"])
            continue
        results[t] = r.to_dict()
        rows.append((t, ds.teams.size(t), r.observed_t, r.p_value))
        null_rows.extend((t, i, v) for i, v in enumerate(r.null_samples.tolist()))
    run.json("permtest.json", results)
    run.csv("permtest.csv", ["team", "size", "observed_t", "p_value"], rows)
    run.csv("null_samples.csv", ["team", "replicate", "t"], null_rows)


def cmd_reconstruct(cfg: RunConfig, run: Run):
    ds = _load(cfg)
    teams = cfg.extra.get("teams") or sorted(ds.teams.teams)
    methods = cfg.selection or list(METHODS)
    for t in teams:
        if t not in ds.teams.team_root:
            raise UnknownTeam(t)
    for t in teams:
        comm = ds.team_comm(t)
        root = ds.teams.team_root[t]
        for m in methods:
            est = run_method(comm, m, cfg.extra["decay"])
            if est.kind == "tree":
                tree = orient_from_root(est, root)
                edges = sorted(tree.parent.items())
            elif est.kind == "graph":
                edges = list(est.edges)
            else:
                edges = sorted(ranking_to_edges(est))
                run.csv(f"{t}_{m}_ranks.csv", ["node", "rank"], sorted(est.ranks.items()))
            run.csv(f"{t}_{m}_edges.csv", ["child_id", "parent_id"], edges)


def cmd_evaluate(cfg: RunConfig, run: Run):
    ds = _load(cfg)
    methods = tuple(cfg.selection or METHODS)
    recs = evaluate_all(ds, methods, cfg.size_cap, cfg.extra["decay"], cfg.workers)
    run.csv("evaluation.csv", RECORD_HEADER, record_rows(recs))
    run.csv("level_mse.csv", LEVEL_HEADER, level_rows(recs))
    run.json("evaluation.json", [asdict(r) for r in recs])


COMMANDS = {
    "ingest": cmd_ingest, "teams": cmd_teams, "measure": cmd_measure,
    "distance": cmd_distance, "permtest": cmd_permtest, "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate, "synth": cmd_synth,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _csv_list(s: str) -> list[str]:
    return [x for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orgnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"orgnet {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, data=True, default_out=None):
        if data:
            sp.add_argument("data", help="dataset directory written by ingest or synth")
        sp.add_argument("-o", "--out", default=default_out,
                        help=f"output directory (default: <data>/{default_out or sp.prog})")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: $ORGNET_THREADS or 1)")

    sp = sub.add_parser("ingest", help="parse and clean raw org/comm CSVs")
    sp.add_argument("--org", required=True)
    sp.add_argument("--comm", required=True)
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--team-level", type=int, default=2)
    sp.add_argument("--min-team-size", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("synth", help="generate a planted organization")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--teams", type=int, default=4)
    sp.add_argument("--team-size", type=int, default=100)
    sp.add_argument("--divisions", type=int, default=None)
    sp.add_argument("--branching", type=float, default=5.0)
    sp.add_argument("--kind", choices=KINDS, default="RD")
    sp.add_argument("--form", choices=("exponential", "power"), default="exponential")
    sp.add_argument("--alpha", type=float, default=20.0)
    sp.add_argument("--beta", type=float, default=1.5)
    sp.add_argument("--beta-up", type=float, default=None)
    sp.add_argument("--beta-down", type=float, default=None)
    sp.add_argument("--between-rate", type=float, default=1e-3)
    sp.add_argument("--min-team-size", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("teams", help="team summary table")
    common(sp)

    sp = sub.add_parser("measure", help="communication measures")
    common(sp)
    sp.add_argument("--all", action="store_true", help="compute every measure (default)")
    sp.add_argument("--measures", type=_csv_list, default=[],
                    help="comma-separated subset of: " + ",".join(MEASURES))
    sp.add_argument("--bins", type=int, default=10)
    sp.add_argument("--size-cap", type=int, default=3000,
                    help="largest team for per-team centralities")

    sp = sub.add_parser("distance", help="reporting-distance profiles per team")
    common(sp)
    sp.add_argument("--kinds", type=_csv_list, default=[], help="subset of RD,SRD,DRD")
    sp.add_argument("--enumerate", action="store_true",
                    help="also visit every ordered in-team pair and write exact pair counts")

    sp = sub.add_parser("permtest", help="permutation test of symmetry per team")
    common(sp)
    sp.add_argument("--kind", choices=("SRD", "DRD"), default="SRD")
    sp.add_argument("--permutations", type=int, default=500)
    sp.add_argument("--max-team-size", type=int, default=10_000)

    sp = sub.add_parser("reconstruct", help="reconstructed trees per team")
    common(sp)
    sp.add_argument("--methods", type=_csv_list, default=[])
    sp.add_argument("--teams", type=_csv_list, default=[])
    sp.add_argument("--decay", type=float, default=1.0)

    sp = sub.add_parser("evaluate", help="score reconstructions against the true teams")
    common(sp)
    sp.add_argument("--methods", type=_csv_list, default=[])
    sp.add_argument("--size-cap", type=int, default=3000)
    sp.add_argument("--decay", type=float, default=1.0)
    return p


def config_from_args(a: argparse.Namespace) -> RunConfig:
    cmd = a.subcommand
    workers = a.workers or default_workers()
    cfg = RunConfig(subcommand=cmd, seed=a.seed, workers=workers)
    if cmd == "ingest":
        cfg.inputs = [a.org, a.comm]
        cfg.team_level, cfg.min_team_size = a.team_level, a.min_team_size
    elif cmd == "synth":
        cfg.team_level, cfg.min_team_size = 2, a.min_team_size
        cfg.extra = {"teams": a.teams, "team_size": a.team_size, "divisions": a.divisions,
                     "branching": a.branching, "kind": a.kind, "form": a.form,
                     "alpha": a.alpha, "beta": a.beta, "beta_up": a.beta_up,
                     "beta_down": a.beta_down, "between_rate": a.between_rate}
    else:
        cfg.inputs = [a.data]
    if cmd == "measure":
        cfg.selection, cfg.bins, cfg.size_cap = a.measures, a.bins, a.size_cap
        cfg.extra = {"all": a.all}
        bad = [m for m in a.measures if m not in MEASURES]
        if bad:
            raise _Usage(f"unknown measure(s): {','.join(bad)}")
    elif cmd == "distance":
        cfg.selection = a.kinds
        cfg.extra = {"enumerate": a.enumerate}
        bad = [k for k in a.kinds if k not in KINDS]
        if bad:
            raise _Usage(f"unknown distance kind(s): {','.join(bad)}")
    elif cmd == "permtest":
        cfg.permutations = a.permutations
        cfg.extra = {"kind": a.kind, "max_team_size": a.max_team_size}
    elif cmd in ("reconstruct", "evaluate"):
        cfg.selection = a.methods
        bad = [m for m in a.methods if m not in METHODS]
        if bad:
            raise _Usage(f"unknown method(s): {','.join(bad)}")
        cfg.extra = {"decay": a.decay}
        if cmd == "reconstruct":
            cfg.extra["teams"] = a.teams
        else:
            cfg.size_cap = a.size_cap
    out = a.out if a.out else str(Path(a.data) / cmd)
    cfg.out = out
    return cfg


class _Usage(Exception):
    pass


def run(cfg: RunConfig) -> None:
    out = Path(cfg.out)
    r = Run(cfg, out)
    COMMANDS[cfg.subcommand](cfg, r)
    r.manifest()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="orgnet: %(levelname)s: %(message)s")
    try:
        cfg = config_from_args(a)
        run(cfg)
    except _Usage as exc:
        print(f"orgnet: usage error: {exc}", file=sys.stderr)
        return 2
    except InputFormatError as exc:
        print(f"orgnet: input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (OSError, UnicodeDecodeError) as exc:
        print(f"orgnet: input error: {exc}", file=sys.stderr)
        return 3
    except ComputationError as exc:
        print(f"orgnet: computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except (OrgNetError, KeyError, ValueError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"orgnet: usage error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
