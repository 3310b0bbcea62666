"""Pair weights and problem-instance assembly.

The weight of a node pair measures how informative an edge discrepancy on
that pair is, given the pair's edge probability p and the two observation
sampling rates:

    w(p, s1, s2) = log( (1 - p*(s1 + s2 - s1*s2)) / (p*(1 - s1)*(1 - s2)) )

It is nonnegative for p in (0, 1], zero exactly at p = 1, and depends on the
pair only through its community rows, so nodes with identical rows get
bit-identical weights.  The weight matrix stores sqrt(w) per pair; the
objective squares it back.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, ParameterError
from .graph_core import (OsbmEdgeModel, check_adjacency, check_communities,
                         GraphTriple)

#: Smallest pair probability the weight formula accepts; below this the log
#: diverges and the instance is rejected unless clamping is enabled.
P_MIN = 1e-9


def _check_sampling(s1: float, s2: float) -> None:
    for name, s in (("s1", s1), ("s2", s2)):
        if not 0.0 < s < 1.0:
            raise ParameterError(
                f"{name} must be strictly inside (0, 1) for weights, got {s}")


def weight_of(p: float, s1: float, s2: float) -> float:
    """Weight of a pair with edge probability p under sampling rates s1, s2.

    Strictly decreasing in p, zero exactly at p = 1.
    """
    _check_sampling(s1, s2)
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"edge probability must be in (0, 1], got {p}")
    if p == 1.0:
        return 0.0
    s_union = s1 + s2 - s1 * s2
    num = 1.0 - p * s_union
    den = p * ((1.0 - s1) * (1.0 - s2))
    return float(np.log(num / den))


def build_weight_matrix(M, a: float, s1: float, s2: float,
                        p_min: float = P_MIN,
                        allow_clamp: bool = False) -> np.ndarray:
    """Weight matrix of an instance: entry (i, j) is sqrt(w) for the pair's
    edge probability under the community rows of i and j.  The diagonal is
    zero (self-pairs never enter the objective)."""
    M = check_communities(M)
    _check_sampling(s1, s2)
    p = OsbmEdgeModel(a).prob(M @ M.T)
    off = ~np.eye(M.shape[0], dtype=bool)
    if p[off].size and p[off].min() < p_min:
        if not allow_clamp:
            raise ParameterError(
                f"pair probability below {p_min}; the weight diverges "
                "(pass allow_clamp=True to clamp instead)")
        p = np.maximum(p, p_min)
    s_union = s1 + s2 - s1 * s2
    num = 1.0 - p * s_union
    den = p * ((1.0 - s1) * (1.0 - s2))
    w = np.log(num / den)
    # p == 1 makes num and den algebraically equal; keep the zero exact.
    w[p >= 1.0] = 0.0
    w = np.maximum(w, 0.0)
    np.fill_diagonal(w, 0.0)
    return np.sqrt(w)


def unweighted_weight_matrix(n: int) -> np.ndarray:
    """All-ones off-diagonal weights: the plain edge-mismatch cost used by
    community-free matching, kept for the weighted-vs-unweighted study."""
    W = np.ones((n, n), dtype=np.float64)
    np.fill_diagonal(W, 0.0)
    return W


def default_mu(W: np.ndarray) -> float:
    """Penalty coefficient matched to the scale of the graph term."""
    n = W.shape[0]
    return 2.0 * float((W * W).sum()) / n


@dataclass(frozen=True)
class ProblemInstance:
    """One matching task: published adjacency A, auxiliary adjacency B,
    shared community matrix M, pair weights W, sampling rates, and the
    community-penalty coefficient mu."""

    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    W: np.ndarray
    s1: float
    s2: float
    mu: float

    def __post_init__(self):
        A = check_adjacency(self.A)
        B = check_adjacency(self.B)
        M = check_communities(self.M)
        W = np.asarray(self.W, dtype=np.float64)
        n = A.shape[0]
        if B.shape[0] != n or M.shape[0] != n or W.shape != (n, n):
            raise DimensionError("A, B, M, W must share the node dimension")
        if not np.array_equal(W, W.T):
            raise ParameterError("weight matrix must be symmetric")
        if W.min() < 0:
            raise ParameterError("weights must be nonnegative")
        if not self.mu >= 0:
            raise ParameterError(f"mu must be >= 0, got {self.mu}")
        for arr, name in ((A, "A"), (B, "B"), (M, "M"), (W, "W")):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @cached_property
    def w_squared(self) -> np.ndarray:
        """Elementwise squared weights, the form the objective consumes."""
        w2 = self.W * self.W
        w2.flags.writeable = False
        return w2


def assemble_instance(published, auxiliary, communities, s1: float, s2: float,
                      a: float | None = None, *, weighted: bool = True,
                      mu: float | None = None, p_min: float = P_MIN,
                      allow_clamp: bool = False,
                      allow_empty_rows: bool = False) -> ProblemInstance:
    """Assemble a ProblemInstance from two observed adjacency matrices and
    their shared community matrix.

    ``a`` is the edge-model parameter the weights are computed from and is
    required in weighted mode (for real networks it must be supplied as
    prior knowledge; only M is read off the data).  Unweighted mode uses
    all-ones weights and defaults mu to 0, reproducing the community-free
    cost function.
    """
    M = check_communities(communities)
    if not allow_empty_rows and (M.sum(axis=1) == 0).any():
        raise ParameterError(
            "some nodes belong to no community; pass allow_empty_rows=True "
            "to accept them")
    if weighted:
        if a is None:
            raise ParameterError("weighted instances need the edge-model "
                                 "parameter a")
        W = build_weight_matrix(M, a, s1, s2,
                                p_min=p_min, allow_clamp=allow_clamp)
        if mu is None:
            mu = default_mu(W)
    else:
        W = unweighted_weight_matrix(M.shape[0])
        if mu is None:
            mu = 0.0
    return ProblemInstance(A=published, B=auxiliary, M=M, W=W,
                           s1=s1, s2=s2, mu=mu)


def build_instance(triple: GraphTriple, a: float | None = None, *,
                   weighted: bool = True, mu: float | None = None,
                   p_min: float = P_MIN, allow_clamp: bool = False,
                   allow_empty_rows: bool = False) -> ProblemInstance:
    """assemble_instance on the observed half of a GraphTriple."""
    return assemble_instance(triple.published, triple.auxiliary,
                             triple.communities, triple.s1, triple.s2, a,
                             weighted=weighted, mu=mu, p_min=p_min,
                             allow_clamp=allow_clamp,
                             allow_empty_rows=allow_empty_rows)
