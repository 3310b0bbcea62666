"""Objective values, gradients, the factorial-sum objective, and metrics."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commatch.errors import CapacityError, DimensionError
from commatch.graph_core import (OsbmEdgeModel, Permutation, conjugate,
                                 make_triple, osbm_generate)
from commatch.model import (ProblemInstance, build_instance,
                            unweighted_weight_matrix)
from commatch.objective import (accuracy, f0, f_xi, grad_f_xi,
                                mmse_objective, nme, relative_nme, residual)


def _plain_instance(A, B, M=None, W=None, mu=0.0, s=0.5):
    n = A.shape[0]
    if M is None:
        M = np.ones((n, 1))
    if W is None:
        W = unweighted_weight_matrix(n)
    return ProblemInstance(A=A, B=B, M=M, W=W, s1=s, s2=s, mu=mu)


def _random_doubly_stochastic(n, rng, rounds=40):
    """Sinkhorn-style scaling of a random positive matrix (test helper)."""
    X = rng.random((n, n)) + 0.1
    for _ in range(rounds):
        X /= X.sum(axis=1, keepdims=True)
        X /= X.sum(axis=0, keepdims=True)
    return X


def _ring(n):
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1.0
    return A


class TestResidual:
    def test_identity_on_equal_graphs(self):
        A = _ring(5)
        inst = _plain_instance(A, A)
        assert not residual(np.eye(5), inst).any()

    def test_true_permutation_on_lossless_instance(self):
        U, M = osbm_generate(12, 2, 0.4, OsbmEdgeModel(3.0), rng_seed=0)
        tri = make_triple(U, M, 1.0, 1.0, rng_seed=1)
        inst = build_instance(tri, weighted=False)
        assert not residual(tri.true_perm, inst).any()

    def test_swap_localizes_to_swapped_rows_and_columns(self):
        # path graph 0-1-2: swapping nodes 0 and 1 (different neighborhoods)
        # perturbs only entries in the swapped rows/columns
        A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        inst = _plain_instance(A, A)
        R = residual(Permutation(np.array([1, 0, 2])), inst)
        assert R.any()
        touched = np.zeros((3, 3), dtype=bool)
        touched[[0, 1], :] = True
        touched[:, [0, 1]] = True
        assert not R[~touched].any()

    def test_permutation_and_matrix_paths_agree(self):
        U, M = osbm_generate(9, 2, 0.4, OsbmEdgeModel(3.0), rng_seed=2)
        tri = make_triple(U, M, 0.8, 0.8, rng_seed=3)
        inst = build_instance(tri, a=3.0)
        P = Permutation.random(9, np.random.default_rng(4))
        np.testing.assert_allclose(residual(P, inst),
                                   residual(P.matrix(), inst), atol=1e-12)


class TestF0:
    def test_zero_at_identity_on_equal_graphs(self):
        A = _ring(6)
        assert f0(np.eye(6), _plain_instance(A, A, mu=3.0)) == 0.0

    def test_community_penalty_counts_mismatched_rows(self):
        # 4 nodes, 2 communities; swapping across community lines changes
        # exactly 4 membership entries
        A = np.zeros((4, 4))
        M = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float)
        mu = 7.5
        inst = _plain_instance(A, A, M=M, mu=mu)
        P = Permutation(np.array([2, 1, 0, 3]))  # crosses communities
        changed = int((M[P.mapping] != M).sum())
        assert changed == 4
        assert f0(P, inst) == pytest.approx(mu * changed)

    def test_unweighted_equals_edge_mismatch_count(self):
        U, M = osbm_generate(5, 2, 0.5, OsbmEdgeModel(3.0), rng_seed=5)
        tri = make_triple(U, M, 0.6, 0.6, rng_seed=6)
        inst = build_instance(tri, weighted=False, mu=0.0)
        rng = np.random.default_rng(7)
        for _ in range(10):
            P = Permutation.random(5, rng)
            mismatches = 0
            for i in range(5):
                for j in range(5):
                    a_ij = inst.A[P.mapping[i], P.mapping[j]]
                    mismatches += int(a_ij != inst.B[i, j])
            assert f0(P, inst) == pytest.approx(mismatches)

    def test_nonnegative_on_random_candidates(self):
        U, M = osbm_generate(8, 2, 0.4, OsbmEdgeModel(3.0), rng_seed=8)
        tri = make_triple(U, M, 0.7, 0.7, rng_seed=9)
        inst = build_instance(tri, a=3.0)
        rng = np.random.default_rng(10)
        for _ in range(10):
            assert f0(_random_doubly_stochastic(8, rng), inst) >= 0.0


class TestFXi:
    def _inst(self):
        U, M = osbm_generate(7, 2, 0.4, OsbmEdgeModel(3.0), rng_seed=11)
        tri = make_triple(U, M, 0.7, 0.7, rng_seed=12)
        return build_instance(tri, a=3.0)

    def test_equals_f0_on_permutations(self):
        inst = self._inst()
        P = Permutation.random(7, np.random.default_rng(13))
        for xi in (0.0, 0.5, 10.0):
            assert f_xi(P.matrix(), inst, xi) == pytest.approx(f0(P, inst),
                                                               rel=1e-12)

    def test_uniform_matrix_regularizer(self):
        inst = self._inst()
        P = np.full((7, 7), 1 / 7)
        xi = 2.5
        assert f_xi(P, inst, xi) - f0(P, inst) == pytest.approx(xi * (7 - 1))

    def test_xi_zero_reduces_to_f0(self):
        inst = self._inst()
        P = _random_doubly_stochastic(7, np.random.default_rng(14))
        assert f_xi(P, inst, 0.0) == f0(P, inst)


def _fd_gradient(P, inst, xi, h=1e-5):
    n = P.shape[0]
    G = np.zeros_like(P)
    for i in range(n):
        for j in range(n):
            E = np.zeros_like(P)
            E[i, j] = h / 2
            G[i, j] = (f_xi(P + E, inst, xi) - f_xi(P - E, inst, xi)) / h
    return G


def _rel_err(G, G_fd):
    return np.abs(G - G_fd).max() / max(1.0, np.abs(G).max())


class TestGradient:
    def test_zero_at_global_minimum(self):
        A = _ring(5)
        inst = _plain_instance(A, A, mu=0.0)
        assert not grad_f_xi(np.eye(5), inst, 0.0).any()

    def test_matches_finite_differences(self):
        U, M = osbm_generate(4, 2, 0.5, OsbmEdgeModel(3.0), rng_seed=15)
        tri = make_triple(U, M, 0.6, 0.6, rng_seed=16)
        inst = build_instance(tri, a=3.0)
        P = _random_doubly_stochastic(4, np.random.default_rng(17))
        for xi in (0.0, 1.0):
            assert _rel_err(grad_f_xi(P, inst, xi),
                            _fd_gradient(P, inst, xi)) < 1e-5

    def test_regularizer_term_alone(self):
        n = 5
        A = np.zeros((n, n))
        inst = _plain_instance(A, A, mu=0.0)
        P = _random_doubly_stochastic(n, np.random.default_rng(18))
        xi = 1.75
        np.testing.assert_allclose(grad_f_xi(P, inst, xi), -2 * xi * P,
                                   atol=1e-14)

    def test_rejects_permutation_input(self):
        inst = _plain_instance(_ring(4), _ring(4))
        with pytest.raises(Exception):
            grad_f_xi(Permutation.identity(4), inst, 0.0)


def _mmse_by_direct_enumeration(P, inst):
    """Independent reimplementation with explicit matrices and loops."""
    n = inst.n
    Pm = P.matrix()
    total = 0.0
    for p0 in itertools.permutations(range(n)):
        P0 = np.zeros((n, n))
        P0[np.arange(n), list(p0)] = 1.0
        dist = ((Pm - P0) ** 2).sum()
        R = inst.W * (P0 @ inst.A - inst.B @ P0)
        total += dist * (R ** 2).sum()
    return total


class TestMmseObjective:
    def test_zero_for_empty_graphs(self):
        A = np.zeros((2, 2))
        inst = _plain_instance(A, A)
        for mapping in ([0, 1], [1, 0]):
            assert mmse_objective(Permutation(np.array(mapping)), inst) == 0.0

    def test_agrees_with_direct_enumeration(self):
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = 1.0
        B = np.zeros((3, 3))
        B[1, 2] = B[2, 1] = 1.0
        W = unweighted_weight_matrix(3) * 0.8
        inst = _plain_instance(A, B, W=W)
        for p in itertools.permutations(range(3)):
            perm = Permutation(np.array(p))
            assert mmse_objective(perm, inst) == pytest.approx(
                _mmse_by_direct_enumeration(perm, inst), rel=1e-12)

    def test_weight_scaling_is_quadratic(self):
        U, M = osbm_generate(4, 2, 0.5, OsbmEdgeModel(3.0), rng_seed=19)
        tri = make_triple(U, M, 0.6, 0.6, rng_seed=20)
        inst = build_instance(tri, a=3.0)
        scaled = ProblemInstance(A=inst.A, B=inst.B, M=inst.M, W=2.0 * inst.W,
                                 s1=inst.s1, s2=inst.s2, mu=inst.mu)
        P = Permutation.random(4, np.random.default_rng(21))
        assert mmse_objective(P, scaled) == pytest.approx(
            4.0 * mmse_objective(P, inst), rel=1e-12)

    def test_invariant_under_common_relabeling(self):
        U, M = osbm_generate(5, 2, 0.5, OsbmEdgeModel(3.0), rng_seed=22)
        tri = make_triple(U, M, 0.7, 0.7, rng_seed=23)
        inst = build_instance(tri, a=3.0)
        rng = np.random.default_rng(24)
        P = Permutation.random(5, rng)
        Q = Permutation.random(5, rng)
        relabeled = ProblemInstance(
            A=conjugate(Q, inst.A), B=conjugate(Q, inst.B),
            M=inst.M[Q.mapping], W=conjugate(Q, inst.W),
            s1=inst.s1, s2=inst.s2, mu=inst.mu)
        qinv = Q.inverse().mapping
        P_rel = Permutation(qinv[P.mapping[Q.mapping]])
        assert mmse_objective(P_rel, relabeled) == pytest.approx(
            mmse_objective(P, inst), rel=1e-9)

    def test_capacity_cap(self):
        n = 9
        A = np.zeros((n, n))
        inst = _plain_instance(A, A)
        with pytest.raises(CapacityError):
            mmse_objective(Permutation.identity(n), inst)


class TestMetrics:
    def test_identical_permutations(self):
        P = Permutation.random(8, np.random.default_rng(25))
        assert nme(P, P) == 0
        assert accuracy(P, P) == 1.0
        assert relative_nme(P, P) == 0.0

    def test_single_transposition_costs_two(self):
        P0 = Permutation.identity(10)
        mapping = np.arange(10)
        mapping[[3, 7]] = mapping[[7, 3]]
        P = Permutation(mapping)
        assert nme(P, P0) == 2
        assert accuracy(P, P0) == pytest.approx(0.8)

    def test_cyclic_shift_mismatches_everything(self):
        P0 = Permutation.identity(5)
        P = Permutation(np.array([1, 2, 3, 4, 0]))
        assert nme(P, P0) == 5
        assert accuracy(P, P0) == 0.0

    def test_nme_is_half_squared_frobenius_distance(self):
        rng = np.random.default_rng(26)
        for _ in range(20):
            P = Permutation.random(7, rng)
            Q = Permutation.random(7, rng)
            frob_sq = ((P.matrix() - Q.matrix()) ** 2).sum()
            assert nme(P, Q) == frob_sq / 2

    @given(seed=st.integers(0, 100_000), n=st.integers(1, 30))
    @settings(max_examples=60, deadline=None)
    def test_nme_counts_mismatches(self, seed, n):
        rng = np.random.default_rng(seed)
        P = Permutation.random(n, rng)
        Q = Permutation.random(n, rng)
        assert nme(P, Q) == int((P.mapping != Q.mapping).sum())

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            nme(Permutation.identity(3), Permutation.identity(4))
