"""Exhaustive ground truth at small sizes: the exact matching-cost minimizer,
the exact expected-error maximizer, and the ratio between the two.

Everything here enumerates all n! permutations in lexicographic order of the
mapping array (which also fixes tie-breaking: the first optimum wins), so
results are deterministic and usable as oracles against the solvers."""

from __future__ import annotations

import numpy as np

from .errors import CapacityError
from .graph_core import Permutation
from .model import ProblemInstance
from .objective import _all_residual_norms, _mmse_value, _perm_tables, f0

#: Enumeration caps: the cost minimizer touches n! costs, the expected-error
#: maximizer n! * n! distance terms, hence the smaller cap.
WEMP_N_MAX = 8
MMSE_N_MAX = 7


def _require(n: int, cap: int, what: str):
    if n > cap:
        raise CapacityError(f"{what} enumerates {cap}! permutations at most; "
                            f"got n = {n}")


def brute_wemp(inst: ProblemInstance) -> tuple[Permutation, float]:
    """Exact minimizer of the matching cost f0 over all permutations."""
    _require(inst.n, WEMP_N_MAX, "brute_wemp")
    maps, _ = _perm_tables(inst.n)
    conj = inst.A[maps[:, :, None], maps[:, None, :]]      # (n!, n, n)
    R = inst.W * (conj - inst.B)
    values = (R * R).sum(axis=(1, 2))
    if inst.mu > 0:
        D = inst.M[maps] - inst.M
        values = values + inst.mu * (D * D).sum(axis=(1, 2))
    best = int(np.argmin(values))
    perm = Permutation(maps[best])
    # report the value through the scalar path so callers comparing against
    # f0(perm) see consistent floating point
    return perm, f0(perm, inst)


def brute_mmse(inst: ProblemInstance) -> tuple[Permutation, float]:
    """Exact maximizer of the expected-error objective over all permutations.

    The n! weighted residual norms are computed once and reused across all
    n! candidates; each candidate then needs only mapping-array mismatch
    counts against every possible true permutation."""
    _require(inst.n, MMSE_N_MAX, "brute_mmse")
    maps, _ = _perm_tables(inst.n)
    rnorms = _all_residual_norms(inst)
    best_idx = 0
    best_val = -np.inf
    for k in range(maps.shape[0]):
        val = _mmse_value(maps[k], maps, rnorms)
        if val > best_val:
            best_val = val
            best_idx = k
    return Permutation(maps[best_idx]), best_val


def approx_ratio(inst: ProblemInstance) -> float:
    """Quality of the cost minimizer measured in expected-error terms:
    the ratio of its objective value to the exact maximum.  Returns 1 when
    the maximum is zero (both objectives vanish identically)."""
    _require(inst.n, MMSE_N_MAX, "approx_ratio")
    wemp_perm, _ = brute_wemp(inst)
    mmse_perm, g_max = brute_mmse(inst)
    if g_max == 0.0:
        return 1.0
    maps, _ = _perm_tables(inst.n)
    rnorms = _all_residual_norms(inst)
    g_wemp = _mmse_value(wemp_perm.mapping, maps, rnorms)
    return g_wemp / g_max
