import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecrf.core import (
    ArcScores,
    DepTree,
    RootPolicy,
    SibScores,
    is_legal_tree,
    is_projective,
    tree_score,
)
from treecrf.decode import eisner1, eisner2, greedy_fast_path, mbr_decode
from treecrf.inference import marginals

from oracles import (
    all_projective_trees,
    oracle_best_tree,
    random_arc_scores,
    random_sib_scores,
)

POLICIES = [RootPolicy.SINGLE, RootPolicy.MULTI]


class TestEisner1:
    def test_single_word(self):
        res = eisner1(ArcScores.zeros(1))
        assert res.tree.heads == (0,)

    def test_two_words(self):
        vals = np.full((3, 3), -5.0)
        vals[0, 1] = 1.0
        vals[1, 2] = 1.0
        res = eisner1(ArcScores(vals))
        assert res.tree.heads == (0, 1)
        assert res.score == pytest.approx(2.0, abs=1e-12)

    def test_score_equals_tree_score(self, rng):
        for policy in POLICIES:
            for n in (1, 3, 5, 6):
                arcs = random_arc_scores(rng, n)
                res = eisner1(arcs, policy)
                assert res.score == pytest.approx(
                    tree_score(arcs, None, res.tree), abs=1e-10
                )

    @pytest.mark.parametrize("policy", POLICIES)
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_matches_enumeration_max(self, rng, n, policy):
        for _ in range(5):
            arcs = random_arc_scores(rng, n)
            res = eisner1(arcs, policy)
            _, best = oracle_best_tree(arcs, None, policy)
            assert res.score == pytest.approx(best, abs=1e-10)

    @given(st.integers(1, 5), st.integers(0, 2**31 - 1), st.booleans())
    @settings(max_examples=30, deadline=None)
    def test_output_is_legal_projective(self, n, seed, multi):
        policy = RootPolicy.MULTI if multi else RootPolicy.SINGLE
        arcs = random_arc_scores(np.random.default_rng(seed), n)
        tree = eisner1(arcs, policy).tree
        assert is_legal_tree(tree.heads, policy)
        assert is_projective(tree)

    @given(st.integers(2, 5), st.integers(0, 2**31 - 1), st.floats(-4, 4))
    @settings(max_examples=25, deadline=None)
    def test_shift_leaves_argmax_unchanged(self, n, seed, shift):
        base = np.random.default_rng(seed).uniform(-2, 2, (n + 1, n + 1))
        t0 = eisner1(ArcScores(base)).tree
        t1 = eisner1(ArcScores(base + shift)).tree
        assert t0.heads == t1.heads


class TestEisner2:
    def test_zero_sibs_matches_first_order_value(self, rng):
        for policy in POLICIES:
            for n in (1, 2, 4, 6):
                arcs = random_arc_scores(rng, n)
                r1 = eisner1(arcs, policy)
                r2 = eisner2(arcs, SibScores.zeros(n), policy)
                assert r2.score == pytest.approx(r1.score, abs=1e-10)

    def test_sibling_bonus_selects_fan_out(self):
        sib_vals = np.zeros((4, 4, 4))
        sib_vals[1, 2, 3] = 2.0
        res = eisner2(ArcScores.zeros(3), SibScores(sib_vals))
        assert res.tree.heads == (0, 1, 1)
        assert res.score == pytest.approx(2.0, abs=1e-12)

    def test_score_equals_tree_score(self, rng):
        for policy in POLICIES:
            for n in (2, 4, 5):
                arcs = random_arc_scores(rng, n)
                sibs = random_sib_scores(rng, n)
                res = eisner2(arcs, sibs, policy)
                assert res.score == pytest.approx(
                    tree_score(arcs, sibs, res.tree), abs=1e-10
                )

    @pytest.mark.parametrize("policy", POLICIES)
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_enumeration_max(self, rng, n, policy):
        for _ in range(5):
            arcs = random_arc_scores(rng, n)
            sibs = random_sib_scores(rng, n)
            res = eisner2(arcs, sibs, policy)
            _, best = oracle_best_tree(arcs, sibs, policy)
            assert res.score == pytest.approx(best, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eisner2(ArcScores.zeros(3), SibScores.zeros(2))

    @given(st.integers(1, 5), st.integers(0, 2**31 - 1), st.booleans())
    @settings(max_examples=25, deadline=None)
    def test_output_is_legal_projective(self, n, seed, multi):
        policy = RootPolicy.MULTI if multi else RootPolicy.SINGLE
        local = np.random.default_rng(seed)
        tree = eisner2(
            random_arc_scores(local, n), random_sib_scores(local, n), policy
        ).tree
        assert is_legal_tree(tree.heads, policy)
        assert is_projective(tree)


class TestMbr:
    def test_single_word(self):
        res = mbr_decode(marginals(ArcScores.zeros(1)))
        assert res.tree.heads == (0,)
        assert res.score == pytest.approx(1.0, abs=1e-12)

    def test_uniform_tie_break(self):
        res = mbr_decode(marginals(ArcScores.zeros(2)))
        assert res.score == pytest.approx(1.0, abs=1e-12)
        assert res.tree.heads == (0, 1)

    @pytest.mark.parametrize("policy", POLICIES)
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_maximizes_marginal_sum(self, rng, n, policy):
        arcs = random_arc_scores(rng, n)
        m = marginals(arcs, root_policy=policy)
        res = mbr_decode(m, policy)
        best = max(
            sum(m.arc[h, j] for h, j in t.arcs())
            for t in all_projective_trees(n, policy)
        )
        assert res.score == pytest.approx(best, abs=1e-9)
        got = sum(m.arc[h, j] for h, j in res.tree.arcs())
        assert got == pytest.approx(res.score, abs=1e-12)


class TestGreedyFastPath:
    def test_dominant_scores_return_tree(self):
        vals = np.full((3, 3), -1.0)
        vals[0, 1] = 3.0
        vals[1, 2] = 3.0
        tree = greedy_fast_path(vals)
        assert tree is not None and tree.heads == (0, 1)

    def test_cycle_rejected(self):
        vals = np.full((3, 3), -1.0)
        vals[2, 1] = 3.0
        vals[1, 2] = 3.0
        assert greedy_fast_path(vals) is None

    def test_root_policy_respected(self):
        vals = np.full((3, 3), -1.0)
        vals[0, 1] = 3.0
        vals[0, 2] = 3.0
        assert greedy_fast_path(vals, RootPolicy.SINGLE) is None
        tree = greedy_fast_path(vals, RootPolicy.MULTI)
        assert tree is not None and tree.heads == (0, 0)

    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    @settings(max_examples=50, deadline=None)
    def test_returned_trees_are_argmax_and_legal(self, n, seed):
        vals = np.random.default_rng(seed).uniform(0, 1, (n + 1, n + 1))
        tree = greedy_fast_path(vals)
        if tree is None:
            return
        assert is_legal_tree(tree.heads) and is_projective(tree)
        masked = vals.copy()
        np.fill_diagonal(masked, -np.inf)
        for j, h in enumerate(tree.heads, start=1):
            assert masked[h, j] == masked[:, j].max()

    def test_hits_on_marginals_sometimes(self, rng):
        hits = 0
        for _ in range(30):
            arcs = random_arc_scores(rng, 4, scale=4.0)
            if greedy_fast_path(marginals(arcs).arc) is not None:
                hits += 1
        assert hits > 0
