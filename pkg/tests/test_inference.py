import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecrf.core import (
    ArcScores,
    PartialTree,
    RootPolicy,
    SibScores,
    UNKNOWN,
    enumerate_projective_trees,
    tree_score,
)
from treecrf.inference import (
    constrained_inside,
    inside_first_order,
    inside_first_order_naive,
    inside_second_order,
    marginals,
    marginals_batch,
)

from oracles import (
    fd_gradient,
    oracle_constrained_log_partition,
    oracle_log_partition,
    oracle_marginals,
    random_arc_scores,
    random_sib_scores,
)

POLICIES = [RootPolicy.SINGLE, RootPolicy.MULTI]


def zero_pair(n):
    return ArcScores.zeros(n), SibScores.zeros(n)


class TestInsideFirstOrder:
    def test_single_word(self):
        vals = np.zeros((2, 2))
        vals[0, 1] = 2.0
        res = inside_first_order([ArcScores(vals)])
        assert res.log_partition[0] == pytest.approx(2.0, abs=1e-12)

    def test_counts_trees_at_zero_scores(self):
        res = inside_first_order([ArcScores.zeros(3)], RootPolicy.SINGLE)
        assert res.log_partition[0] == pytest.approx(math.log(7), abs=1e-12)

    def test_multi_root_counts(self):
        res = inside_first_order([ArcScores.zeros(2)], RootPolicy.MULTI)
        assert res.log_partition[0] == pytest.approx(math.log(3), abs=1e-12)

    @pytest.mark.parametrize("policy", POLICIES)
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_matches_enumeration(self, rng, n, policy):
        for _ in range(5):
            arcs = random_arc_scores(rng, n)
            got = inside_first_order([arcs], policy).log_partition[0]
            want = oracle_log_partition(arcs, None, policy)
            assert got == pytest.approx(want, abs=1e-8)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            inside_first_order([])

    def test_chart_diagonal_is_zero(self):
        res = inside_first_order([ArcScores.zeros(4)])
        diag = np.arange(5)
        assert np.all(res.charts.complete[0, diag, diag] == 0.0)

    def test_log_partition_equals_chart_corner_multi(self):
        arcs = ArcScores.zeros(3)
        res = inside_first_order([arcs], RootPolicy.MULTI)
        assert res.log_partition[0] == res.charts.complete[0, 0, 3]

    def test_naive_reference_agrees(self, rng):
        for policy in POLICIES:
            for n in (1, 3, 5):
                arcs = random_arc_scores(rng, n)
                batched = inside_first_order([arcs], policy).log_partition[0]
                assert inside_first_order_naive(arcs, policy) == pytest.approx(
                    batched, abs=1e-10
                )

    def test_single_precision_flag(self, rng):
        arcs = random_arc_scores(rng, 5)
        exact = inside_first_order([arcs]).log_partition[0]
        res = inside_first_order([arcs], dtype=np.float32)
        assert res.log_partition.dtype == np.float32
        assert res.log_partition[0] == pytest.approx(exact, abs=1e-3)


class TestInsideSecondOrder:
    def test_zero_sibs_degenerates_to_first_order(self, rng):
        for policy in POLICIES:
            for n in (1, 2, 4, 6):
                arcs = random_arc_scores(rng, n)
                first = inside_first_order([arcs], policy).log_partition[0]
                second = inside_second_order(
                    [(arcs, SibScores.zeros(n))], policy
                ).log_partition[0]
                assert second == pytest.approx(first, abs=1e-9)

    def test_single_sibling_bonus(self):
        # exactly one of the 7 single-root trees (word 1 heading 2 and 3)
        # contains the triple (1,2,3)
        sib_vals = np.zeros((4, 4, 4))
        sib_vals[1, 2, 3] = 1.0
        res = inside_second_order([(ArcScores.zeros(3), SibScores(sib_vals))])
        assert res.log_partition[0] == pytest.approx(
            math.log(6 + math.e), abs=1e-10
        )

    def test_left_sibling_bonus(self):
        # mirror case: only heads=[3,3,0] has 1 and 2 as left siblings of 3
        sib_vals = np.zeros((4, 4, 4))
        sib_vals[3, 2, 1] = 1.0
        res = inside_second_order([(ArcScores.zeros(3), SibScores(sib_vals))])
        assert res.log_partition[0] == pytest.approx(
            math.log(6 + math.e), abs=1e-10
        )

    @pytest.mark.parametrize("policy", POLICIES)
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_enumeration(self, rng, n, policy):
        for _ in range(5):
            arcs = random_arc_scores(rng, n)
            sibs = random_sib_scores(rng, n)
            got = inside_second_order([(arcs, sibs)], policy).log_partition[0]
            want = oracle_log_partition(arcs, sibs, policy)
            assert got == pytest.approx(want, abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inside_second_order([(ArcScores.zeros(3), SibScores.zeros(4))])


class TestBatching:
    @pytest.mark.parametrize("policy", POLICIES)
    def test_mixed_lengths_match_single_runs(self, rng, policy):
        arcs = [random_arc_scores(rng, n) for n in (3, 1, 6, 2, 5, 4, 6, 1)]
        batched = inside_first_order(arcs, policy).log_partition
        singles = [
            inside_first_order([a], policy).log_partition[0] for a in arcs
        ]
        np.testing.assert_allclose(batched, singles, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("policy", POLICIES)
    def test_second_order_batching(self, rng, policy):
        pairs = [
            (random_arc_scores(rng, n), random_sib_scores(rng, n))
            for n in (2, 5, 1, 4)
        ]
        batched = inside_second_order(pairs, policy).log_partition
        singles = [
            inside_second_order([p], policy).log_partition[0] for p in pairs
        ]
        np.testing.assert_allclose(batched, singles, rtol=0, atol=1e-10)

    def test_marginal_batching(self, rng):
        arcs = [random_arc_scores(rng, n) for n in (4, 2, 6)]
        sibs = [random_sib_scores(rng, a.n) for a in arcs]
        batched = marginals_batch(arcs, sibs)
        for a, s, got in zip(arcs, sibs, batched):
            alone = marginals(a, s)
            np.testing.assert_allclose(got.arc, alone.arc, atol=1e-10)
            np.testing.assert_allclose(got.sib, alone.sib, atol=1e-10)


class TestMarginals:
    def test_forced_arc(self):
        m = marginals(ArcScores.zeros(1))
        assert m.arc[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_two_word_uniform(self):
        m = marginals(ArcScores.zeros(2))
        for h, j in [(0, 1), (0, 2), (1, 2), (2, 1)]:
            assert m.arc[h, j] == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("policy", POLICIES)
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_enumeration(self, rng, n, policy):
        arcs = random_arc_scores(rng, n)
        sibs = random_sib_scores(rng, n)
        m = marginals(arcs, sibs, policy)
        want_arc, want_sib = oracle_marginals(arcs, sibs, policy)
        np.testing.assert_allclose(m.arc, want_arc, atol=1e-8)
        np.testing.assert_allclose(m.sib, want_sib, atol=1e-8)

    @pytest.mark.parametrize("policy", POLICIES)
    def test_matches_finite_differences(self, rng, policy):
        n = 4
        arcs = random_arc_scores(rng, n)
        sibs = random_sib_scores(rng, n)
        m = marginals(arcs, sibs, policy)

        from treecrf.core import valid_arc_mask, valid_sib_mask

        def f_arc(vals):
            a = ArcScores.__new__(ArcScores)
            a.values = vals
            return inside_second_order([(a, sibs)], policy).log_partition[0]

        fd_arc = fd_gradient(f_arc, np.array(arcs.values), valid_arc_mask(n))
        np.testing.assert_allclose(
            m.arc[valid_arc_mask(n)], fd_arc[valid_arc_mask(n)], atol=1e-4
        )

        def f_sib(vals):
            s = SibScores.__new__(SibScores)
            s.values = vals
            return inside_second_order([(arcs, s)], policy).log_partition[0]

        fd_sib = fd_gradient(f_sib, np.array(sibs.values), valid_sib_mask(n))
        np.testing.assert_allclose(
            m.sib[valid_sib_mask(n)], fd_sib[valid_sib_mask(n)], atol=1e-4
        )

    @given(st.integers(1, 6), st.integers(0, 2**31 - 1), st.booleans())
    @settings(max_examples=30, deadline=None)
    def test_per_modifier_normalization(self, n, seed, multi):
        local = np.random.default_rng(seed)
        arcs = random_arc_scores(local, n)
        policy = RootPolicy.MULTI if multi else RootPolicy.SINGLE
        m = marginals(arcs, root_policy=policy)
        np.testing.assert_allclose(m.arc[:, 1:].sum(axis=0), 1.0, atol=1e-9)
        assert np.all(m.arc >= -1e-12) and np.all(m.arc <= 1 + 1e-12)

    @given(st.integers(1, 5), st.integers(0, 2**31 - 1), st.floats(-3, 3))
    @settings(max_examples=30, deadline=None)
    def test_shift_invariance(self, n, seed, shift):
        local = np.random.default_rng(seed)
        base = local.uniform(-2, 2, size=(n + 1, n + 1))
        arcs = ArcScores(base)
        shifted = ArcScores(base + shift)
        z0 = inside_first_order([arcs]).log_partition[0]
        z1 = inside_first_order([shifted]).log_partition[0]
        assert z1 - z0 == pytest.approx(n * shift, abs=1e-9 * max(1, abs(shift) * n))
        m0 = marginals(arcs)
        m1 = marginals(shifted)
        np.testing.assert_allclose(m0.arc, m1.arc, atol=1e-9)

    def test_masked_cells_have_zero_adjoints(self, rng):
        n = 4
        arcs = random_arc_scores(rng, n)
        m = marginals(arcs)
        assert np.all(m.arc[:, 0] == 0.0)
        assert np.all(np.diag(m.arc) == 0.0)

    def test_single_root_leaves_root_sib_marginals_zero(self, rng):
        n = 4
        m = marginals(random_arc_scores(rng, n), random_sib_scores(rng, n))
        assert np.all(m.sib[0] == 0.0)

    def test_multi_root_has_root_sib_mass(self):
        m = marginals(
            ArcScores.zeros(2), SibScores.zeros(2), RootPolicy.MULTI
        )
        # the {0->1, 0->2} tree is one of three equiprobable trees
        assert m.sib[0, 1, 2] == pytest.approx(1.0 / 3.0, abs=1e-12)


class TestConstrainedInside:
    def test_empty_partial_equals_unconstrained(self, rng):
        arcs = random_arc_scores(rng, 4)
        partial = PartialTree((UNKNOWN,) * 4)
        full = inside_first_order([arcs]).log_partition[0]
        assert constrained_inside(arcs, None, partial) == pytest.approx(
            full, abs=1e-12
        )

    def test_fully_annotated_equals_tree_score(self, rng):
        arcs = random_arc_scores(rng, 4)
        sibs = random_sib_scores(rng, 4)
        for tree in enumerate_projective_trees(4, RootPolicy.SINGLE)[::7]:
            partial = PartialTree(tree.heads)
            got = constrained_inside(arcs, sibs, partial)
            assert got == pytest.approx(tree_score(arcs, sibs, tree), abs=1e-10)

    def test_three_of_seven_trees(self):
        got = constrained_inside(
            ArcScores.zeros(3), None, PartialTree((UNKNOWN, 1, UNKNOWN))
        )
        assert got == pytest.approx(math.log(3), abs=1e-12)

    def test_infeasible_returns_neg_inf(self):
        # two root attachments under the single-root policy
        partial = PartialTree((0, 0, UNKNOWN))
        got = constrained_inside(ArcScores.zeros(3), None, partial)
        assert got == float("-inf")

    def test_nonprojective_annotation_returns_neg_inf(self):
        # arcs (1,3) and (2,4) cross; no projective completion exists
        partial = PartialTree((UNKNOWN, UNKNOWN, 1, 2))
        got = constrained_inside(ArcScores.zeros(4), None, partial)
        assert got == float("-inf")

    @pytest.mark.parametrize("policy", POLICIES)
    def test_matches_filtered_enumeration(self, rng, policy):
        n = 5
        for _ in range(5):
            arcs = random_arc_scores(rng, n)
            sibs = random_sib_scores(rng, n)
            heads = [UNKNOWN] * n
            tree = enumerate_projective_trees(n, policy)[
                int(rng.integers(0, 7))
            ]
            for j in rng.choice(n, size=2, replace=False):
                heads[j] = tree.heads[j]
            partial = PartialTree(tuple(heads))
            got = constrained_inside(arcs, sibs, partial, policy)
            want = oracle_constrained_log_partition(arcs, sibs, heads, policy)
            assert got == pytest.approx(want, abs=1e-8)

    @given(st.integers(2, 5), st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_monotone_constraining(self, n, seed):
        local = np.random.default_rng(seed)
        arcs = random_arc_scores(local, n)
        tree = enumerate_projective_trees(n, RootPolicy.SINGLE)[0]
        full = inside_first_order([arcs]).log_partition[0]
        heads = [UNKNOWN] * n
        prev = full
        for j in range(n):
            heads[j] = tree.heads[j]
            cur = constrained_inside(arcs, None, PartialTree(tuple(heads)))
            assert cur <= prev + 1e-10
            prev = cur
