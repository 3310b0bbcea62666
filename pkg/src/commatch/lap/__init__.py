"""Exact linear assignment over permutation matrices.

``solve_lap`` minimizes sum_i C[i, P(i)] exactly in O(n^3) worst case; the
linear program over doubly stochastic matrices attains its optimum at a
permutation, so this also serves as the descent-direction step of the
continuation solver.  ``nearest_permutation`` rounds a doubly stochastic
matrix to the closest vertex.

Two interchangeable kernels implement the same shortest-augmenting-path
algorithm: a compiled Cython extension (built by ``setup.py build_ext``)
and a pure-numpy fallback.  The compiled one is picked at import time when
available; set COMMATCH_LAP_BACKEND=python or =compiled to force a choice.
``benchmarks/bench_lap.py`` compares the two.
"""

import os

import numpy as np

from ..errors import ParameterError
from ..graph_core import Permutation, check_doubly_stochastic

_choice = os.environ.get("COMMATCH_LAP_BACKEND", "")
if _choice not in ("", "compiled", "python"):
    raise ImportError(f"COMMATCH_LAP_BACKEND must be 'compiled' or 'python', "
                      f"got {_choice!r}")

if _choice == "python":
    from . import _sap_py as _kernel
    BACKEND = "python"
else:
    try:
        from . import _sap_c as _kernel
        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _sap_py as _kernel
        BACKEND = "python"


def solve_lap(C) -> tuple[Permutation, float]:
    """Exact minimum-cost assignment for a square finite cost matrix.

    Returns the optimal permutation and its total cost.  Ties are broken
    deterministically (rows scanned in order, lowest column preferred), so
    repeated runs and both kernels give the same answer.
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ParameterError("cost matrix must be square")
    if not np.isfinite(C).all():
        raise ParameterError("cost matrix entries must be finite")
    mapping = _kernel.lap_mapping(C)
    perm = Permutation(mapping)
    cost = float(np.sum(C[np.arange(C.shape[0]), mapping]))
    return perm, cost


def nearest_permutation(P) -> Permutation:
    """Closest permutation to a doubly stochastic matrix, i.e. the maximizer
    of <P, X> over permutations.  Exact identity when P is already one."""
    P = check_doubly_stochastic(P)
    perm, _ = solve_lap(-P)
    return perm
