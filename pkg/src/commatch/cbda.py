"""Convex-concave continuation solver for the weighted-edge matching cost.

The integer matching problem is relaxed to the doubly stochastic polytope
and solved by path-following: the objective f_xi = f0 + xi*(n - ||P||^2)
starts convex at xi = 0 (f0 itself is convex here, so no eigenvalue
computation is needed to find the convex end of the path) and is made
progressively more concave by raising xi, which drags the minimizer toward
a vertex, i.e. a permutation matrix.  Each inner loop is a conditional
gradient method: the linearized objective is minimized over the polytope by
an exact linear assignment solve, then an exact line search picks the step.

The objective restricted to a segment P + gamma*(X - P) is a quartic
polynomial in gamma, so the line search interpolates it from five sample
values and minimizes through the closed-form roots of the derivative cubic.

The regularizer enters with coefficient xi itself (not a multiple of it);
formulations that scale the concavity term differently are equivalent up to
a reparameterization of the schedule, which the xi_max / delta_xi defaults
absorb.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericError, ParameterError
from .graph_core import Permutation
from .lap import nearest_permutation, solve_lap
from .model import ProblemInstance
from .objective import f0

#: Entry/row-sum tolerance for deciding that an iterate is already a vertex.
OMEGA0_TOL = 1e-6

_LINE_SEARCH_NODES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class CbdaConfig:
    """Solver knobs.  Fields left as None are resolved per instance at the
    start of a solve (and recorded in the trace):

    * ``delta``: inner-loop stop threshold on the objective decrease;
      default 1e-6 times the objective at the start point.
    * ``delta_xi``: continuation increment; default xi_max / (20 n).
    * ``xi_max``: continuation ceiling; default twice the Frobenius norm of
      the gradient at the start point, so the concave term can dominate.
    * ``max_inner_iters``: hard cap per inner loop; hitting it is flagged in
      the trace and the continuation proceeds.
    * ``mu``: community-penalty override; None keeps the instance value.
    * ``init``: start point, "barycenter" (uniform matrix), "identity", or
      "random_permutation" (drawn from rng_seed).
    * ``max_outer_iters``: safety cap on continuation steps; None derives it
      from xi_max / delta_xi.
    * ``xi_steps``: alternative to delta_xi, spreading the continuation over
      a fixed number of steps of the resolved xi_max (handy for bounded
      sweep budgets); ignored when delta_xi is given.
    """

    delta: float | None = None
    delta_xi: float | None = None
    xi_max: float | None = None
    max_inner_iters: int = 300
    mu: float | None = None
    init: str = "barycenter"
    max_outer_iters: int | None = None
    xi_steps: int | None = None

    def validate(self):
        for name in ("delta", "delta_xi", "xi_max"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ParameterError(f"{name} must be > 0, got {val}")
        if self.max_inner_iters < 1:
            raise ParameterError("max_inner_iters must be >= 1")
        if self.max_outer_iters is not None and self.max_outer_iters < 1:
            raise ParameterError("max_outer_iters must be >= 1")
        if self.xi_steps is not None and self.xi_steps < 1:
            raise ParameterError("xi_steps must be >= 1")
        if self.mu is not None and self.mu < 0:
            raise ParameterError("mu must be >= 0")
        if self.init not in ("barycenter", "identity", "random_permutation"):
            raise ParameterError(f"unknown init strategy {self.init!r}")


@dataclass
class OuterStep:
    """Record of one continuation step (one inner loop)."""

    xi: float
    inner_iterations: int
    objective_value: float
    frob_norm_sq: float
    step_sizes: list[float]
    inner_objectives: list[float]
    hit_inner_cap: bool
    wall_ms: float

    def to_json(self) -> str:
        return json.dumps({
            "xi": self.xi,
            "inner_iterations": self.inner_iterations,
            "objective_value": self.objective_value,
            "frob_norm_sq": self.frob_norm_sq,
            "step_sizes": self.step_sizes,
            "inner_objectives": self.inner_objectives,
            "hit_inner_cap": self.hit_inner_cap,
            "wall_ms": self.wall_ms,
        })


@dataclass
class CbdaTrace:
    """Full solve transcript: resolved parameters, one record per outer
    step, the exit status, and the cost of the rounded output."""

    resolved: dict
    steps: list[OuterStep] = field(default_factory=list)
    status: str = "unset"
    f0_final: float = math.nan
    wall_ms_total: float = 0.0

    def to_jsonl(self) -> str:
        return "\n".join(s.to_json() for s in self.steps) + ("\n" if self.steps else "")


def in_vertex_set(P: np.ndarray, tol: float = OMEGA0_TOL) -> bool:
    """Is the iterate already (numerically) a permutation matrix?"""
    if np.abs(P - np.round(P)).max() >= tol:
        return False
    ones = np.ones(P.shape[0])
    return (np.abs(P.sum(axis=0) - ones).max() < tol
            and np.abs(P.sum(axis=1) - ones).max() < tol)


class _SegmentObjective:
    """Evaluator of f_xi along P + gamma*D, factored so each evaluation is
    O(n^2): the relabeled adjacency is quadratic in gamma, everything else
    linear.  PA and PAPt may be passed in when the caller already has them."""

    def __init__(self, P, D, inst: ProblemInstance, xi: float,
                 PA=None, PAPt=None):
        if PA is None:
            PA = P @ inst.A
        if PAPt is None:
            PAPt = PA @ P.T
        DA = D @ inst.A
        T1 = DA @ P.T
        self.S0 = PAPt - inst.B
        self.S1 = T1 + T1.T
        self.S2 = DA @ D.T
        self.w2 = inst.w_squared
        self.mu = inst.mu
        self.pm = P @ inst.M - inst.M
        self.dm = D @ inst.M
        self.xi = xi
        self.n = inst.n
        self.p_sq = float((P * P).sum())
        self.pd = float((P * D).sum())
        self.d_sq = float((D * D).sum())

    def __call__(self, gamma: float) -> float:
        S = self.S0 + gamma * self.S1 + (gamma * gamma) * self.S2
        val = float((self.w2 * S * S).sum())
        if self.mu > 0:
            pen = self.pm + gamma * self.dm
            val += self.mu * float((pen * pen).sum())
        if self.xi != 0.0:
            frob = self.p_sq + 2.0 * gamma * self.pd + gamma * gamma * self.d_sq
            val += self.xi * (self.n - frob)
        return val


def _minimize_quartic(phi) -> float:
    """Global minimizer on [0, 1] of a quartic known through point values.

    Interpolates the degree-4 polynomial from five samples, collects the
    real roots of its derivative inside (0, 1) plus both endpoints, and
    returns the candidate with the smallest true value (smallest gamma on
    ties, so a flat segment yields 0)."""
    nodes = np.array(_LINE_SEARCH_NODES)
    values = np.array([phi(g) for g in nodes])
    V = np.vander(nodes, 5, increasing=True)
    coeffs = np.linalg.solve(V, values)          # c0 + c1 g + ... + c4 g^4
    dcoeffs = coeffs[1:] * np.arange(1, 5)       # derivative, ascending
    scale = np.abs(dcoeffs).max()
    candidates = [0.0, 1.0]
    if scale > 0:
        trimmed = np.trim_zeros(
            np.where(np.abs(dcoeffs) > 1e-14 * scale, dcoeffs, 0.0), "b")
        if trimmed.size > 1:
            roots = np.roots(trimmed[::-1])
            for r in roots:
                if abs(r.imag) < 1e-9 and 0.0 < r.real < 1.0:
                    candidates.append(float(r.real))
    candidates.sort()
    cand_values = [phi(g) for g in candidates]
    return candidates[int(np.argmin(cand_values))]


def line_search(P, D, inst: ProblemInstance, xi: float) -> float:
    """Exact minimizer over [0, 1] of f_xi(P + gamma*D).  D must point to
    another feasible matrix (D = X - P), so every step stays feasible."""
    return _minimize_quartic(_SegmentObjective(P, D, inst, xi))


def _initial_point(inst: ProblemInstance, init: str, rng_seed: int) -> np.ndarray:
    n = inst.n
    if init == "barycenter":
        return np.full((n, n), 1.0 / n)
    if init == "identity":
        return np.eye(n)
    rng = np.random.default_rng(rng_seed)
    return Permutation.random(n, rng).matrix()


def cbda_solve(inst: ProblemInstance, cfg: CbdaConfig | None = None,
               rng_seed: int = 0,
               on_iterate=None) -> tuple[Permutation, CbdaTrace]:
    """Run the continuation solver and return (permutation, trace).

    The outer loop raises xi from 0 until either the iterate reaches a
    vertex (status ``converged_in_omega0``) or xi passes its ceiling, in
    which case the iterate is rounded to the nearest permutation (status
    ``rounded_at_xi_max``).  A configured cap on outer steps exits with
    status ``iteration_cap``.  Deterministic: identical inputs give an
    identical permutation and trace.

    ``on_iterate``, when given, is called with the dense iterate after every
    accepted step (observability hook; treat the argument as read-only).
    """
    cfg = cfg if cfg is not None else CbdaConfig()
    cfg.validate()
    if cfg.mu is not None and cfg.mu != inst.mu:
        inst = replace(inst, mu=cfg.mu)
    n = inst.n
    w2 = inst.w_squared
    A, B, M, mu = inst.A, inst.B, inst.M, inst.mu

    t_start = time.perf_counter()
    P = _initial_point(inst, cfg.init, rng_seed)

    def evaluate(P):
        """f_xi pieces at P; returns (PA, PAPt, S, penalty residual)."""
        PA = P @ A
        PAPt = PA @ P.T
        S = PAPt - B
        pm = P @ M - M
        return PA, PAPt, S, pm

    def objective(S, pm, frob_sq, xi):
        val = float((w2 * S * S).sum())
        if mu > 0:
            val += mu * float((pm * pm).sum())
        return val + xi * (n - frob_sq)

    # resolve instance-dependent defaults; the state is reused by the loop
    PA, PAPt, S, pm = evaluate(P)
    G0 = 4.0 * ((w2 * S) @ PA)
    if mu > 0:
        G0 += (2.0 * mu) * (pm @ M.T)
    grad0_norm = float(np.sqrt((G0 * G0).sum()))
    f_init = objective(S, pm, float((P * P).sum()), 0.0)
    xi_max = cfg.xi_max if cfg.xi_max is not None else 2.0 * grad0_norm
    if cfg.delta_xi is not None:
        delta_xi = cfg.delta_xi
    elif cfg.xi_steps is not None:
        delta_xi = xi_max / cfg.xi_steps
    else:
        delta_xi = xi_max / (20.0 * n)
    delta = cfg.delta if cfg.delta is not None else max(1e-6 * f_init, 1e-12)
    if cfg.max_outer_iters is not None:
        max_outer = cfg.max_outer_iters
    elif delta_xi > 0:
        max_outer = int(math.ceil(xi_max / delta_xi)) + 2
    else:
        max_outer = 1

    trace = CbdaTrace(resolved={
        "n": n, "delta": delta, "delta_xi": delta_xi, "xi_max": xi_max,
        "max_inner_iters": cfg.max_inner_iters, "max_outer_iters": max_outer,
        "mu": mu, "init": cfg.init, "rng_seed": rng_seed,
    })
    if not (math.isfinite(f_init) and math.isfinite(grad0_norm)):
        trace.status = "numeric_error"
        raise NumericError("objective or gradient non-finite at the start "
                           "point", trace=trace)

    xi = 0.0
    status = "rounded_at_xi_max"
    while xi < xi_max:
        if in_vertex_set(P):
            status = "converged_in_omega0"
            break
        if len(trace.steps) >= max_outer:
            status = "iteration_cap"
            break
        t_step = time.perf_counter()
        step_sizes: list[float] = []
        inner_objs: list[float] = []
        hit_cap = True
        f_prev = objective(S, pm, float((P * P).sum()), xi)
        for _ in range(cfg.max_inner_iters):
            if not math.isfinite(f_prev):
                trace.status = "numeric_error"
                raise NumericError("objective became non-finite", trace=trace)
            G = 4.0 * ((w2 * S) @ PA)
            if mu > 0:
                G += (2.0 * mu) * (pm @ M.T)
            if xi != 0.0:
                G -= (2.0 * xi) * P
            X, _ = solve_lap(G)
            Xm = X.matrix()
            D = Xm - P
            gap = float((G * D).sum())
            if gap >= -delta:
                hit_cap = False
                break
            gamma = _minimize_quartic(
                _SegmentObjective(P, D, inst, xi, PA=PA, PAPt=PAPt))
            if gamma == 0.0:
                hit_cap = False
                break
            P_new = P + gamma * D
            state_new = evaluate(P_new)
            f_new = objective(state_new[2], state_new[3],
                              float((P_new * P_new).sum()), xi)
            if f_new > f_prev:
                # exact line search cannot increase the objective; a measured
                # increase is floating-point stall, so keep the old iterate
                hit_cap = False
                break
            P = P_new
            PA, PAPt, S, pm = state_new
            if on_iterate is not None:
                on_iterate(P)
            step_sizes.append(gamma)
            inner_objs.append(f_new)
            improvement = f_prev - f_new
            f_prev = f_new
            if improvement < delta:
                hit_cap = False
                break
        trace.steps.append(OuterStep(
            xi=xi,
            inner_iterations=len(step_sizes),
            objective_value=f_prev,
            frob_norm_sq=float((P * P).sum()),
            step_sizes=step_sizes,
            inner_objectives=inner_objs,
            hit_inner_cap=hit_cap,
            wall_ms=(time.perf_counter() - t_step) * 1e3,
        ))
        xi += delta_xi
    else:
        if in_vertex_set(P):
            status = "converged_in_omega0"

    perm = nearest_permutation(P)
    trace.status = status
    trace.f0_final = f0(perm, inst)
    trace.wall_ms_total = (time.perf_counter() - t_start) * 1e3
    return perm, trace
