"""Graph and matrix primitives: permutations, OSBM generation, edge
sampling, and text-file I/O.

Conventions used throughout the package:

* All node and community indices are 0-based and contiguous in memory.
  The text file formats are 1-based and remapped on ingestion.
* Adjacency matrices are dense float64 arrays of 0/1 values, symmetric
  with a zero diagonal.
* A community matrix is a dense n x Q float64 array of 0/1 values whose
  row i lists the communities node i belongs to.
* Randomness always flows through ``numpy.random.default_rng`` seeded
  with an explicit integer, so every artifact is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, ParseError

#: Tolerance on row/column sums of a doubly stochastic matrix.
TOL_DS = 1e-9

#: Max redraws for a node whose community row came out all-zero.
MAX_MEMBERSHIP_RESAMPLES = 100


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------

class Permutation:
    """A bijection pi on {0..n-1}, stored as the array mapping[i] = pi(i).

    The equivalent matrix form P has P[i, pi(i)] = 1, so that
    ``P @ X`` is X with row i replaced by row pi(i), and ``P @ X @ P.T``
    relabels both axes of a square matrix.
    """

    __slots__ = ("mapping",)

    def __init__(self, mapping):
        m = np.asarray(mapping, dtype=np.int64)
        if m.ndim != 1:
            raise DimensionError("permutation mapping must be 1-dimensional")
        n = m.shape[0]
        seen = np.zeros(n, dtype=bool)
        if n and (m.min() < 0 or m.max() >= n):
            raise ParameterError("mapping values must lie in [0, n)")
        seen[m] = True
        if not seen.all():
            raise ParameterError("mapping is not a bijection")
        m = m.copy()
        m.flags.writeable = False
        self.mapping = m

    @property
    def n(self) -> int:
        return self.mapping.shape[0]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))

    @classmethod
    def from_matrix(cls, X, tol: float = 1e-6) -> "Permutation":
        """Recover the mapping from a 0/1 permutation matrix."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise DimensionError("permutation matrix must be square")
        mapping = np.argmax(X, axis=1)
        P = np.zeros_like(X)
        P[np.arange(X.shape[0]), mapping] = 1.0
        if np.abs(X - P).max() > tol:
            raise ParameterError("matrix is not a permutation matrix")
        return cls(mapping)

    def matrix(self, dtype=np.float64) -> np.ndarray:
        P = np.zeros((self.n, self.n), dtype=dtype)
        P[np.arange(self.n), self.mapping] = 1
        return P

    def inverse(self) -> "Permutation":
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.mapping] = np.arange(self.n, dtype=np.int64)
        return Permutation(inv)

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(
            self.mapping, other.mapping)

    def __repr__(self):
        return f"Permutation({self.mapping.tolist()})"


def apply_permutation(P: Permutation, X) -> np.ndarray:
    """Row-permute X, i.e. the matrix product of P with X."""
    X = np.asarray(X)
    if X.shape[0] != P.n:
        raise DimensionError(
            f"cannot permute {X.shape[0]} rows with a size-{P.n} permutation")
    return X[P.mapping].copy()


def conjugate(P: Permutation, X) -> np.ndarray:
    """Relabel both axes of a square matrix: P X P^T."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError("conjugation needs a square matrix")
    if X.shape[0] != P.n:
        raise DimensionError(
            f"size-{X.shape[0]} matrix vs size-{P.n} permutation")
    return X[np.ix_(P.mapping, P.mapping)].copy()


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def check_adjacency(A) -> np.ndarray:
    """Validate a dense undirected adjacency matrix and return it as float64."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("adjacency matrix must be square")
    if not np.isin(A, (0.0, 1.0)).all():
        raise ParameterError("adjacency entries must be 0 or 1")
    if not np.array_equal(A, A.T):
        raise ParameterError("adjacency matrix must be symmetric")
    if np.diagonal(A).any():
        raise ParameterError("adjacency matrix must have a zero diagonal")
    return A


def check_communities(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] < 1:
        raise DimensionError("community matrix must be n x Q with Q >= 1")
    if not np.isin(M, (0.0, 1.0)).all():
        raise ParameterError("community entries must be 0 or 1")
    return M


def is_doubly_stochastic(P, tol: float = TOL_DS) -> bool:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        return False
    if P.min() < -tol or P.max() > 1 + tol:
        return False
    ones = np.ones(P.shape[0])
    return (np.abs(P.sum(axis=0) - ones).max() <= tol
            and np.abs(P.sum(axis=1) - ones).max() <= tol)


def check_doubly_stochastic(P, tol: float = TOL_DS) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if not is_doubly_stochastic(P, tol):
        raise ParameterError("matrix is not doubly stochastic within tolerance")
    return P


# ---------------------------------------------------------------------------
# OSBM generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OsbmEdgeModel:
    """Edge-probability model: two nodes sharing x communities are joined
    with probability 1 / (1 + a * exp(-x)).  Larger a gives sparser graphs."""

    a: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ParameterError(f"edge model parameter a must be > 0, got {self.a}")

    def prob(self, x) -> np.ndarray:
        """Edge probability for shared-community count x (scalar or array)."""
        return 1.0 / (1.0 + self.a * np.exp(-np.asarray(x, dtype=np.float64)))


def edge_probability(ci, cj, a: float) -> float:
    """Probability of an edge between nodes with community rows ci and cj."""
    ci = np.asarray(ci, dtype=np.float64)
    cj = np.asarray(cj, dtype=np.float64)
    if ci.shape != cj.shape:
        raise DimensionError("community vectors must have the same length")
    x = float(ci @ cj)
    return float(OsbmEdgeModel(a).prob(x))


def draw_memberships(n: int, q: int, membership_prob: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. Bernoulli community memberships, redrawing any node that
    lands in no community at all (orphan rows make the community side
    information vacuous)."""
    if not 0.0 < membership_prob < 1.0:
        raise ParameterError(
            f"membership_prob must be in (0, 1), got {membership_prob}")
    M = (rng.random((n, q)) < membership_prob).astype(np.float64)
    for _ in range(MAX_MEMBERSHIP_RESAMPLES):
        empty = np.flatnonzero(M.sum(axis=1) == 0)
        if empty.size == 0:
            return M
        M[empty] = (rng.random((empty.size, q)) < membership_prob).astype(np.float64)
    raise ParameterError(
        "could not draw a nonempty community row within "
        f"{MAX_MEMBERSHIP_RESAMPLES} attempts (membership_prob too small?)")


def draw_edges(M: np.ndarray, edge_model: OsbmEdgeModel,
               rng: np.random.Generator) -> np.ndarray:
    """Draw the underlying graph: each pair i<j independently, with
    probability given by the pair's shared-community count."""
    n = M.shape[0]
    x = M @ M.T
    p = edge_model.prob(x)
    iu = np.triu_indices(n, k=1)
    hit = rng.random(iu[0].size) < p[iu]
    U = np.zeros((n, n), dtype=np.float64)
    U[iu] = hit
    U += U.T
    return U


def osbm_generate(n: int, q: int, membership_prob: float,
                  edge_model: OsbmEdgeModel, rng_seed: int):
    """Generate one OSBM instance: a community matrix with i.i.d.
    Bernoulli(membership_prob) entries (orphan rows redrawn) and the
    underlying adjacency matrix drawn from the edge model.

    Returns (adjacency, communities).  Identical seeds give identical
    output, bit for bit.
    """
    if n < 2:
        raise ParameterError(f"need at least 2 nodes, got {n}")
    if q < 1:
        raise ParameterError(f"need at least 1 community, got {q}")
    rng = np.random.default_rng(rng_seed)
    M = draw_memberships(n, q, membership_prob, rng)
    U = draw_edges(M, edge_model, rng)
    return U, M


def _sample_edges(U: np.ndarray, s: float, rng: np.random.Generator) -> np.ndarray:
    """Keep each edge of U independently with probability s (labels unchanged)."""
    n = U.shape[0]
    iu = np.triu_indices(n, k=1)
    present = U[iu] > 0
    keep = present & (rng.random(iu[0].size) < s)
    G = np.zeros_like(U)
    G[iu] = keep
    G += G.T
    return G


def sample_network(underlying, s: float, relabel: Permutation | None = None,
                   rng_seed: int = 0) -> np.ndarray:
    """Independently sample edges of the underlying graph with probability s,
    then relabel the nodes.  Non-edges never become edges."""
    U = np.asarray(underlying, dtype=np.float64)
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"sampling probability must be in [0, 1], got {s}")
    if relabel is not None and relabel.n != U.shape[0]:
        raise DimensionError(
            f"relabel permutation size {relabel.n} != graph size {U.shape[0]}")
    G = _sample_edges(U, s, np.random.default_rng(rng_seed))
    if relabel is not None:
        G = conjugate(relabel, G)
    return G


def community_preserving_permutation(M: np.ndarray,
                                     rng: np.random.Generator) -> Permutation:
    """Random permutation that only moves nodes between identical community
    rows, so the community matrix is exactly invariant under it.  Used as
    the ground-truth relabeling (the model assumes the true mapping keeps
    every node's community representation)."""
    M = np.ascontiguousarray(M)
    groups: dict[bytes, list[int]] = {}
    for i in range(M.shape[0]):
        groups.setdefault(M[i].tobytes(), []).append(i)
    mapping = np.arange(M.shape[0], dtype=np.int64)
    for members in groups.values():
        if len(members) > 1:
            idx = np.asarray(members)
            mapping[idx] = idx[rng.permutation(len(members))]
    return Permutation(mapping)


@dataclass(frozen=True)
class GraphTriple:
    """An underlying graph with its two partial observations.

    ``published`` keeps the underlying labels; ``auxiliary`` is relabeled by
    ``true_perm`` (auxiliary node i is underlying node true_perm(i)), so the
    matching task is to recover ``true_perm`` from the two observations.
    The community matrix is shared by all three graphs.
    """

    underlying: np.ndarray
    published: np.ndarray
    auxiliary: np.ndarray
    communities: np.ndarray
    true_perm: Permutation
    s1: float
    s2: float


def make_triple(underlying, communities, s1: float, s2: float,
                rng_seed: int) -> GraphTriple:
    """Sample published/auxiliary observations of an underlying graph and a
    ground-truth relabeling that preserves community rows."""
    U = check_adjacency(underlying)
    M = check_communities(communities)
    if M.shape[0] != U.shape[0]:
        raise DimensionError("community matrix and graph sizes differ")
    for name, s in (("s1", s1), ("s2", s2)):
        if not 0.0 <= s <= 1.0:
            raise ParameterError(f"{name} must be in [0, 1], got {s}")
    rng = np.random.default_rng(rng_seed)
    true_perm = community_preserving_permutation(M, rng)
    published = _sample_edges(U, s1, rng)
    auxiliary = conjugate(true_perm, _sample_edges(U, s2, rng))
    return GraphTriple(underlying=U, published=published, auxiliary=auxiliary,
                       communities=M, true_perm=true_perm, s1=s1, s2=s2)


# ---------------------------------------------------------------------------
# File I/O (1-based text formats)
# ---------------------------------------------------------------------------

def read_edge_list(path, n: int) -> np.ndarray:
    """Read an undirected edge list: one "u v" pair per line, 1-based ids,
    '#' comment lines, duplicates ignored."""
    A = np.zeros((n, n), dtype=np.float64)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'u v', got {line!r}",
                                 path=path, line_no=line_no)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {line!r}",
                                 path=path, line_no=line_no) from None
            if not (1 <= u <= n and 1 <= v <= n):
                raise ParseError(f"node id out of range 1..{n} in {line!r}",
                                 path=path, line_no=line_no)
            if u == v:
                raise ParseError(f"self-loop {u} not allowed",
                                 path=path, line_no=line_no)
            A[u - 1, v - 1] = 1.0
            A[v - 1, u - 1] = 1.0
    return A


def write_edge_list(path, A) -> None:
    """Write each edge once as "u v" with u < v, 1-based, row-major order."""
    A = check_adjacency(A)
    iu, ju = np.nonzero(np.triu(A, k=1))
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in zip(iu, ju):
            fh.write(f"{u + 1} {v + 1}\n")


def read_communities(path, n: int, q: int) -> np.ndarray:
    """Read community memberships: one "node q1 q2 ... qk" line per node,
    1-based ids.  Nodes absent from the file get an all-zero row."""
    M = np.zeros((n, q), dtype=np.float64)
    seen = np.zeros(n, dtype=bool)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                ids = [int(p) for p in parts]
            except ValueError:
                raise ParseError(f"non-integer id in {line!r}",
                                 path=path, line_no=line_no) from None
            node = ids[0]
            if not 1 <= node <= n:
                raise ParseError(f"node id out of range 1..{n}",
                                 path=path, line_no=line_no)
            if seen[node - 1]:
                raise ParseError(f"duplicate line for node {node}",
                                 path=path, line_no=line_no)
            seen[node - 1] = True
            for c in ids[1:]:
                if not 1 <= c <= q:
                    raise ParseError(f"community id out of range 1..{q}",
                                     path=path, line_no=line_no)
                M[node - 1, c - 1] = 1.0
    return M


def write_communities(path, M) -> None:
    M = check_communities(M)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(M.shape[0]):
            ids = " ".join(str(c + 1) for c in np.flatnonzero(M[i]))
            fh.write(f"{i + 1} {ids}\n".rstrip() + "\n")
