"""Objectives, gradients, and evaluation metrics.

The matching cost of a candidate P (doubly stochastic, or a permutation) is

    f0(P) = || W o (P A P^T - B) ||_F^2  +  mu * || P M - M ||_F^2

the weighted squared edge residual plus the community penalty, and the
regularized form used by the continuation solver is

    f_xi(P) = f0(P) + xi * (n - ||P||_F^2)

whose added term vanishes exactly on permutation matrices.  The weighted
residual is always computed literally as W o (P A P^T - B); rewriting it
through weighted adjacency products is only valid for community-preserving
permutations, not for the interior points visited mid-optimization.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DimensionError, ParameterError
from .graph_core import Permutation
from .model import ProblemInstance

#: Largest n for which the exact factorial-sum objective may be evaluated.
MMSE_N_MAX = 8


def _as_candidate(P, n: int):
    """Normalize a candidate to (mapping or None, dense array or None)."""
    if isinstance(P, Permutation):
        if P.n != n:
            raise DimensionError(f"permutation size {P.n} != instance size {n}")
        return P.mapping, None
    P = np.asarray(P, dtype=np.float64)
    if P.shape != (n, n):
        raise DimensionError(f"candidate shape {P.shape} != ({n}, {n})")
    return None, P


def residual(P, inst: ProblemInstance) -> np.ndarray:
    """Weighted alignment residual W o (P A P^T - B)."""
    mapping, dense = _as_candidate(P, inst.n)
    if mapping is not None:
        PAPt = inst.A[np.ix_(mapping, mapping)]
    else:
        PAPt = dense @ inst.A @ dense.T
    return inst.W * (PAPt - inst.B)


def f0(P, inst: ProblemInstance) -> float:
    """Weighted edge-mismatch cost plus community penalty; zero iff P aligns
    the weighted graphs perfectly and preserves every community row."""
    mapping, dense = _as_candidate(P, inst.n)
    R = residual(P, inst)
    value = float((R * R).sum())
    if inst.mu > 0:
        if mapping is not None:
            D = inst.M[mapping] - inst.M
        else:
            D = dense @ inst.M - inst.M
        value += inst.mu * float((D * D).sum())
    return value


def f_xi(P, inst: ProblemInstance, xi: float) -> float:
    """Continuation objective f0 + xi*(n - ||P||^2).  The added term is 0 on
    permutation matrices and positive on interior points."""
    if xi < 0:
        raise ParameterError(f"xi must be >= 0, got {xi}")
    mapping, dense = _as_candidate(P, inst.n)
    base = f0(P, inst)
    if mapping is not None:
        return base
    return base + xi * (inst.n - float((dense * dense).sum()))


def grad_f_xi(P, inst: ProblemInstance, xi: float) -> np.ndarray:
    """Exact gradient of f_xi at a dense candidate P.

    With D = W o W and S = P A P^T - B (both symmetric), the graph term
    contributes 4 (D o S) P A, the penalty 2 mu (P M - M) M^T, and the
    regularizer -2 xi P.
    """
    if xi < 0:
        raise ParameterError(f"xi must be >= 0, got {xi}")
    _, dense = _as_candidate(P, inst.n)
    if dense is None:
        raise ParameterError("gradient is defined on dense candidates; "
                             "convert the permutation with .matrix()")
    PA = dense @ inst.A
    S = PA @ dense.T - inst.B
    G = 4.0 * ((inst.w_squared * S) @ PA)
    if inst.mu > 0:
        G += (2.0 * inst.mu) * ((dense @ inst.M - inst.M) @ inst.M.T)
    if xi != 0.0:
        G -= (2.0 * xi) * dense
    return G


# ---------------------------------------------------------------------------
# Exact factorial-sum objective (oracle use only)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _perm_tables(n: int):
    """All n! mappings in lexicographic order, with their inverses."""
    maps = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    invs = np.argsort(maps, axis=1)
    maps.flags.writeable = False
    invs.flags.writeable = False
    return maps, invs


def _all_residual_norms(inst: ProblemInstance) -> np.ndarray:
    """|| W o (P0 A - B P0) ||^2 for every permutation P0, in lexicographic
    order.  (P0 A) gathers rows of A; (B P0) gathers columns of B."""
    maps, invs = _perm_tables(inst.n)
    rows = inst.A[maps]                            # (n!, n, n)
    cols = inst.B[:, invs].transpose(1, 0, 2)      # (n!, n, n)
    R = inst.W * (rows - cols)
    return (R * R).sum(axis=(1, 2))


def _mmse_value(mapping: np.ndarray, maps: np.ndarray,
                rnorms: np.ndarray) -> float:
    """Sum over all true mappings of (squared distance) * (residual norm).
    The squared distance between permutation matrices is twice the number of
    rows where the mappings disagree."""
    mismatches = (maps != mapping).sum(axis=1).astype(np.float64)
    return 2.0 * float(np.dot(mismatches, rnorms))


def mmse_objective(P: Permutation, inst: ProblemInstance) -> float:
    """Exact expected-error objective of a candidate permutation: the sum,
    over all n! possible true mappings, of the squared Frobenius distance to
    the candidate times the true mapping's weighted residual norm.  Factorial
    cost; refused above n = 8."""
    if inst.n > MMSE_N_MAX:
        raise CapacityError(
            f"exact objective is capped at n <= {MMSE_N_MAX}, got {inst.n}")
    if P.n != inst.n:
        raise DimensionError(f"permutation size {P.n} != instance size {inst.n}")
    maps, _ = _perm_tables(inst.n)
    rnorms = _all_residual_norms(inst)
    return _mmse_value(P.mapping, maps, rnorms)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def nme(P: Permutation, P0: Permutation) -> int:
    """Node mapping error: half the squared Frobenius distance between the
    permutation matrices, i.e. the number of nodes mapped differently."""
    if P.n != P0.n:
        raise DimensionError("permutations must have the same size")
    return int((P.mapping != P0.mapping).sum())


def accuracy(P: Permutation, P0: Permutation) -> float:
    """Fraction of correctly mapped nodes."""
    return 1.0 - nme(P, P0) / P.n


def relative_nme(P: Permutation, P0: Permutation) -> float:
    """Mapping error as a fraction of network size: mismatched nodes over n.

    Conventions that normalize the squared Frobenius distance by a matrix
    norm instead differ only by a constant factor; the mismatch fraction is
    the operational quantity (0 when exact, 1 when nothing matches) and is
    what the size-trend experiments track."""
    return nme(P, P0) / P.n
