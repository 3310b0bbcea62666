"""Experiment orchestration: grid sweeps over instance parameters, solver
runs, and self-describing CSV results.

Every run of every grid cell is seeded by hashing the full parameter tuple,
so re-running a config reproduces identical rows, and the instance seen by
different solvers in one cell is identical.  Results carry the complete
parameter tuple per row; the materialized config (defaults filled in) is
written next to them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baseline_ga import GaConfig, ga_average_accuracy, ga_solve
from .cbda import CbdaConfig, cbda_solve
from .errors import ConfigError, ParseError
from .graph_core import (GraphTriple, OsbmEdgeModel, Permutation,
                         draw_edges, draw_memberships, make_triple,
                         read_communities, read_edge_list,
                         write_communities, write_edge_list)
from .model import assemble_instance
from .objective import accuracy, nme
from .oracle import WEMP_N_MAX, brute_wemp

#: Node-membership probability used when the config leaves it unset; the
#: materialized config flags it as a default, not a measured value.
DEFAULT_MEMBERSHIP_PROB = 0.2

#: Full-scale grid (hours of compute); enabled by --paper-grid.
FULL_SCALE_GRID = {
    "n_values": (500, 1000, 1500, 2000),
    "s_values": (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    "a_values": (3.0, 5.0, 7.0, 9.0),
    "eta_values": (0.05, 0.1),
}

#: Solver profile used by sweeps unless the config overrides it: a fixed,
#: deliberately small optimization budget (five continuation steps, three
#: conditional-gradient iterations each) applied uniformly to every cell, so
#: a full grid finishes at desk scale and the accuracy differences between
#: settings reflect how exploitable their side information is at equal
#: effort.  Library callers of cbda_solve get the finer per-instance
#: defaults instead; override with the "cbda" config block for high-effort
#: sweeps.
DEFAULT_SWEEP_CBDA = {"xi_steps": 5, "max_inner_iters": 3}

CSV_COLUMNS = ["dataset", "N", "Q", "eta", "a", "s1", "s2", "overlap_mode",
               "weighted", "solver", "repetition", "seed", "accuracy", "nme",
               "relative_nme", "f0_final", "wall_ms", "status"]

BUNDLE_META = "instance.json"


def derive_seed(root_seed: int, *parts) -> int:
    """Stable 63-bit seed from the root seed and a parameter tuple."""
    key = json.dumps([root_seed, *parts], sort_keys=True,
                     separators=(",", ":"))
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def reduce_to_single_community(M: np.ndarray,
                               rng: np.random.Generator) -> np.ndarray:
    """Non-overlapping reduction: keep one uniformly chosen membership per
    node (or assign a fresh uniform community to a node that has none),
    approximately preserving community sizes."""
    out = np.zeros_like(M)
    q = M.shape[1]
    for i in range(M.shape[0]):
        ids = np.flatnonzero(M[i])
        if ids.size == 0:
            out[i, rng.integers(q)] = 1.0
        else:
            out[i, ids[rng.integers(ids.size)]] = 1.0
    return out


def build_synthetic_triple(n: int, q: int, membership_prob: float, a: float,
                           s1: float, s2: float, overlap_mode: str,
                           rng_seed: int) -> GraphTriple:
    """One synthetic world: draw memberships (reduced to one community per
    node in NOL mode), draw the underlying graph from them, then sample the
    two observations and a community-preserving ground truth."""
    rng = np.random.default_rng(rng_seed)
    M = draw_memberships(n, q, membership_prob, rng)
    if overlap_mode == "nol":
        M = reduce_to_single_community(M, rng)
    U = draw_edges(M, OsbmEdgeModel(a), rng)
    return make_triple(U, M, s1, s2, rng_seed=int(rng.integers(2 ** 63)))


# ---------------------------------------------------------------------------
# Instance bundles (generate/solve file interface)
# ---------------------------------------------------------------------------

def save_instance_bundle(out_dir: str, triple: GraphTriple,
                         meta: dict) -> None:
    """Write published/auxiliary edge lists, the community file, and a JSON
    metadata file (sampling rates, model parameters, seed, true mapping)."""
    os.makedirs(out_dir, exist_ok=True)
    write_edge_list(os.path.join(out_dir, "published.edges"), triple.published)
    write_edge_list(os.path.join(out_dir, "auxiliary.edges"), triple.auxiliary)
    write_communities(os.path.join(out_dir, "communities.txt"),
                      triple.communities)
    record = dict(meta)
    record.update({
        "format": "commatch-instance",
        "version": 1,
        "n": int(triple.communities.shape[0]),
        "q": int(triple.communities.shape[1]),
        "s1": triple.s1,
        "s2": triple.s2,
        "true_mapping": [int(x) for x in triple.true_perm.mapping],
    })
    with open(os.path.join(out_dir, BUNDLE_META), "w", encoding="utf-8") as fh:
        json.dump(record, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass
class LoadedInstance:
    published: np.ndarray
    auxiliary: np.ndarray
    communities: np.ndarray
    s1: float
    s2: float
    true_perm: Permutation | None
    meta: dict


def load_instance_bundle(bundle_dir: str) -> LoadedInstance:
    meta_path = os.path.join(bundle_dir, BUNDLE_META)
    if not os.path.exists(meta_path):
        raise ConfigError(f"no {BUNDLE_META} in {bundle_dir}")
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    n, q = int(meta["n"]), int(meta["q"])
    published = read_edge_list(os.path.join(bundle_dir, "published.edges"), n)
    auxiliary = read_edge_list(os.path.join(bundle_dir, "auxiliary.edges"), n)
    communities = read_communities(
        os.path.join(bundle_dir, "communities.txt"), n, q)
    true_perm = None
    if meta.get("true_mapping") is not None:
        true_perm = Permutation(np.asarray(meta["true_mapping"], dtype=np.int64))
    return LoadedInstance(published=published, auxiliary=auxiliary,
                          communities=communities, s1=float(meta["s1"]),
                          s2=float(meta["s2"]), true_perm=true_perm, meta=meta)


def instance_from_bundle(loaded: LoadedInstance, *,
                         a: float | None = None,
                         weighted: bool | None = None,
                         mu: float | None = None,
                         allow_empty_rows: bool = False):
    """ProblemInstance from a loaded bundle, honoring its metadata unless
    overridden."""
    meta = loaded.meta
    if weighted is None:
        weighted = bool(meta.get("weighted", True))
    if a is None:
        a = meta.get("a")
    if mu is None:
        mu = meta.get("mu")
    return assemble_instance(loaded.published, loaded.auxiliary,
                             loaded.communities, loaded.s1, loaded.s2, a,
                             weighted=weighted, mu=mu,
                             allow_empty_rows=allow_empty_rows)


# ---------------------------------------------------------------------------
# Real-data ingestion (arbitrary integer ids, remapped)
# ---------------------------------------------------------------------------

def load_real_graph(edges_path: str, communities_path: str | None):
    """Stream a real edge list (and optional community file) into adjacency
    and membership dicts keyed by original node ids."""
    adj: dict[int, set[int]] = {}
    with open(edges_path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'u v', got {line!r}",
                                 path=edges_path, line_no=line_no)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {line!r}",
                                 path=edges_path, line_no=line_no) from None
            if u == v:
                continue
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
    memberships: dict[int, set[int]] = {}
    if communities_path is not None:
        with open(communities_path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    ids = [int(p) for p in line.split()]
                except ValueError:
                    raise ParseError("non-integer id", path=communities_path,
                                     line_no=line_no) from None
                memberships.setdefault(ids[0], set()).update(ids[1:])
    return adj, memberships


def bfs_ball(adj: dict[int, set[int]], n_target: int,
             rng: np.random.Generator) -> list[int]:
    """Deterministic BFS ball of n_target nodes from a seeded random root;
    jumps to a fresh random unvisited root if a component is exhausted."""
    all_nodes = sorted(adj.keys())
    if len(all_nodes) < n_target:
        raise ConfigError(f"real graph has {len(all_nodes)} nodes, "
                          f"need {n_target}")
    picked: list[int] = []
    visited: set[int] = set()
    remaining = list(all_nodes)
    queue: list[int] = []
    while len(picked) < n_target:
        if not queue:
            remaining = [x for x in remaining if x not in visited]
            root = remaining[int(rng.integers(len(remaining)))]
            queue.append(root)
            visited.add(root)
        node = queue.pop(0)
        picked.append(node)
        if len(picked) == n_target:
            break
        for nb in sorted(adj[node]):
            if nb not in visited:
                visited.add(nb)
                queue.append(nb)
    return picked


def build_sampled_real_triple(adj, memberships, n: int, q: int, s: float,
                              rng_seed: int) -> GraphTriple:
    """Extract an n-node BFS ball of the real underlying graph, keep its q
    largest communities as the community matrix, then sample the two
    observations the same way as for synthetic worlds."""
    rng = np.random.default_rng(rng_seed)
    nodes = bfs_ball(adj, n, rng)
    index = {node: i for i, node in enumerate(nodes)}
    U = np.zeros((n, n), dtype=np.float64)
    for node, i in index.items():
        for nb in adj[node]:
            j = index.get(nb)
            if j is not None:
                U[i, j] = 1.0
                U[j, i] = 1.0
    counts: dict[int, int] = {}
    for node in nodes:
        for c in memberships.get(node, ()):
            counts[c] = counts.get(c, 0) + 1
    ranked = sorted(counts, key=lambda c: (-counts[c], c))[:q]
    col = {c: k for k, c in enumerate(ranked)}
    M = np.zeros((n, q), dtype=np.float64)
    for node, i in index.items():
        for c in memberships.get(node, ()):
            k = col.get(c)
            if k is not None:
                M[i, k] = 1.0
    return make_triple(U, M, s, s, rng_seed=int(rng.integers(2 ** 63)))


# ---------------------------------------------------------------------------
# Experiment configuration and sweep
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    dataset: str = "synthetic"              # synthetic | sampled-real | cross-domain
    n_values: tuple = (50, 100, 200)        # desk-scale default grid
    s_values: tuple = (0.6,)
    a_values: tuple = (5.0,)
    eta_values: tuple = (0.1,)
    overlap_modes: tuple = ("ol",)
    solvers: tuple = ("cbda",)
    weighted: bool = True
    repetitions: int = 1
    output_dir: str = "results"
    rng_seed: int = 0
    jobs: int = 1
    membership_prob: float | None = None    # None -> flagged default
    mu: float | None = None
    cbda: dict = field(default_factory=dict)
    ga: dict = field(default_factory=dict)
    allow_empty_communities: bool = False
    underlying_edges: str | None = None
    underlying_communities: str | None = None
    instance_dirs: tuple = ()

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("n_values", "s_values", "a_values", "eta_values",
                    "overlap_modes", "solvers", "instance_dirs"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        cfg._provided_keys = frozenset(data)
        return cfg

    def materialized(self) -> dict:
        """Config with every default filled in, for the output directory."""
        data = asdict(self)
        data["membership_prob"] = self.resolved_membership_prob()
        data["membership_prob_is_default"] = self.membership_prob is None
        data["cbda"] = self.resolved_cbda_overrides()
        return data

    def resolved_membership_prob(self) -> float:
        return (DEFAULT_MEMBERSHIP_PROB if self.membership_prob is None
                else self.membership_prob)

    def resolved_cbda_overrides(self) -> dict:
        merged = dict(DEFAULT_SWEEP_CBDA)
        merged.update(self.cbda)
        return merged

    def validate(self):
        if self.dataset not in ("synthetic", "sampled-real", "cross-domain"):
            raise ConfigError(f"unknown dataset kind {self.dataset!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for mode in self.overlap_modes:
            if mode not in ("ol", "nol"):
                raise ConfigError(f"overlap mode must be ol or nol, got {mode!r}")
        for solver in self.solvers:
            if solver not in ("cbda", "ga", "oracle"):
                raise ConfigError(f"unknown solver {solver!r}")
        if "oracle" in self.solvers:
            too_big = [n for n in self.n_values if n > WEMP_N_MAX]
            if too_big:
                raise ConfigError(f"oracle solver is capped at n <= "
                                  f"{WEMP_N_MAX}; drop N values {too_big}")
        if self.dataset == "synthetic":
            for n, eta in ((n, e) for n in self.n_values
                           for e in self.eta_values):
                if round(eta * n) < 1:
                    raise ConfigError(f"eta={eta} gives zero communities "
                                      f"at N={n}")
        if self.dataset == "sampled-real":
            if not self.underlying_edges:
                raise ConfigError("sampled-real needs underlying_edges")
            for path in (self.underlying_edges, self.underlying_communities):
                if path and not os.path.exists(path):
                    raise ConfigError(f"input file not found: {path}")
            provided = getattr(self, "_provided_keys", None)
            if (self.weighted and not self.a_values) or (
                    self.weighted and provided is not None
                    and "a_values" not in provided):
                raise ConfigError("weighted real-data runs need explicit "
                                  "a_values (the edge-model parameter is "
                                  "prior knowledge, not estimated)")
        if self.dataset == "cross-domain":
            if not self.instance_dirs:
                raise ConfigError("cross-domain needs instance_dirs")
            for d in self.instance_dirs:
                if not os.path.exists(os.path.join(d, BUNDLE_META)):
                    raise ConfigError(f"no instance bundle in {d}")
        GaConfig(**self.ga).validate()
        CbdaConfig(**self.resolved_cbda_overrides()).validate()


def _run_solvers(inst, truth, cfg: ExperimentConfig, seed: int,
                 base_row: dict) -> list[dict]:
    rows = []
    for solver in cfg.solvers:
        t0 = time.perf_counter()
        if solver == "cbda":
            solver_cfg = CbdaConfig(**cfg.resolved_cbda_overrides())
            perm, trace = cbda_solve(inst, solver_cfg, rng_seed=seed)
            status = trace.status
            f0_final = trace.f0_final
            acc = accuracy(perm, truth) if truth is not None else float("nan")
            err = nme(perm, truth) if truth is not None else float("nan")
        elif solver == "ga":
            ga_cfg = replace(GaConfig(**cfg.ga), rng_seed=seed)
            if truth is not None:
                summary = ga_average_accuracy(inst, ga_cfg, truth)
                acc = summary.mean_accuracy
                err = (1.0 - acc) * inst.n
                status = (f"mean_of_{ga_cfg.runs}_runs "
                          f"min={summary.min_accuracy:.4f} "
                          f"max={summary.max_accuracy:.4f}")
                f0_final = float("nan")
            else:
                perm, history = ga_solve(inst, ga_cfg)
                acc = err = float("nan")
                status = "no_truth"
                f0_final = history[-1]
        else:  # oracle
            perm, f0_final = brute_wemp(inst)
            status = "exact"
            acc = accuracy(perm, truth) if truth is not None else float("nan")
            err = nme(perm, truth) if truth is not None else float("nan")
        wall_ms = (time.perf_counter() - t0) * 1e3
        row = dict(base_row)
        row.update({
            "solver": solver,
            "seed": seed,
            "accuracy": acc,
            "nme": err,
            "relative_nme": (err / inst.n if truth is not None
                             else float("nan")),
            "f0_final": f0_final,
            "wall_ms": wall_ms,
            "status": status,
        })
        rows.append(row)
    return rows


def _cells(cfg: ExperimentConfig):
    if cfg.dataset == "cross-domain":
        for k, d in enumerate(cfg.instance_dirs):
            yield {"kind": "bundle", "dir": d, "index": k}
        return
    for n in cfg.n_values:
        for s in cfg.s_values:
            for a in cfg.a_values:
                for eta in cfg.eta_values:
                    for mode in cfg.overlap_modes:
                        yield {"kind": cfg.dataset, "N": n, "s": s, "a": a,
                               "eta": eta, "mode": mode}


def _run_cell(cfg: ExperimentConfig, cell: dict, rep: int,
              real_data=None) -> list[dict]:
    if cell["kind"] == "bundle":
        seed = derive_seed(cfg.rng_seed, "bundle", cell["index"], rep)
        loaded = load_instance_bundle(cell["dir"])
        inst = instance_from_bundle(
            loaded, weighted=cfg.weighted,
            allow_empty_rows=cfg.allow_empty_communities)
        truth = loaded.true_perm
        base = {"dataset": f"cross-domain:{os.path.basename(cell['dir'])}",
                "N": inst.n, "Q": loaded.communities.shape[1],
                "eta": loaded.communities.shape[1] / inst.n,
                "a": loaded.meta.get("a"), "s1": loaded.s1, "s2": loaded.s2,
                "overlap_mode": loaded.meta.get("overlap_mode", ""),
                "weighted": cfg.weighted, "repetition": rep}
        return _run_solvers(inst, truth, cfg, seed, base)

    n, s, a, eta, mode = (cell["N"], cell["s"], cell["a"], cell["eta"],
                          cell["mode"])
    q = round(eta * n)
    seed = derive_seed(cfg.rng_seed, cfg.dataset, n, s, a, eta, mode, rep)
    if cfg.dataset == "synthetic":
        triple = build_synthetic_triple(
            n, q, cfg.resolved_membership_prob(), a, s, s, mode, seed)
    else:
        adj, memberships = real_data
        triple = build_sampled_real_triple(adj, memberships, n, q, s, seed)
        if mode == "nol":
            rng = np.random.default_rng(derive_seed(seed, "nol"))
            M = reduce_to_single_community(triple.communities, rng)
            triple = make_triple(triple.underlying, M, s, s,
                                 rng_seed=derive_seed(seed, "resample"))
    inst = assemble_instance(
        triple.published, triple.auxiliary, triple.communities,
        triple.s1, triple.s2, a, weighted=cfg.weighted, mu=cfg.mu,
        allow_empty_rows=(cfg.allow_empty_communities
                          or cfg.dataset == "sampled-real"))
    base = {"dataset": cfg.dataset, "N": n, "Q": q, "eta": eta, "a": a,
            "s1": s, "s2": s, "overlap_mode": mode, "weighted": cfg.weighted,
            "repetition": rep}
    return _run_solvers(inst, triple.true_perm, cfg, seed, base)


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run the full grid; returns result rows and writes results.csv plus
    the materialized config into the output directory."""
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, "config.json"), "w",
              encoding="utf-8") as fh:
        json.dump(cfg.materialized(), fh, sort_keys=True, indent=2)
        fh.write("\n")

    real_data = None
    if cfg.dataset == "sampled-real":
        real_data = load_real_graph(cfg.underlying_edges,
                                    cfg.underlying_communities)

    tasks = [(cell, rep) for cell in _cells(cfg)
             for rep in range(cfg.repetitions)]
    if cfg.jobs == 1:
        results = [_run_cell(cfg, cell, rep, real_data)
                   for cell, rep in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_cell, cfg, cell, rep, real_data)
                       for cell, rep in tasks]
            results = [f.result() for f in futures]

    rows = [row for group in results for row in group]
    out_path = os.path.join(cfg.output_dir, "results.csv")
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return rows
