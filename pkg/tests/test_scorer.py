import numpy as np
import pytest

from treecrf.core import (
    NEG_INF,
    RootPolicy,
    valid_arc_mask,
    valid_sib_mask,
)
from treecrf.decode import eisner1
from treecrf.loss import crf_loss
from treecrf.scorer import (
    BiaffineParams,
    ScorerConfig,
    ScoringModel,
    TokenReps,
    TriaffineParams,
    biaffine_backward,
    biaffine_raw,
    biaffine_score,
    init_params,
    label_backward,
    label_raw,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
    triaffine_backward,
    triaffine_raw,
    triaffine_score,
)

from oracles import fd_gradient


def make_reps(rng, n, d, ds=None):
    reps = TokenReps(
        head=rng.normal(size=(n + 1, d)),
        mod=rng.normal(size=(n + 1, d)),
    )
    if ds is not None:
        reps.sib_head = rng.normal(size=(n + 1, ds))
        reps.sib = rng.normal(size=(n + 1, ds))
        reps.sib_mod = rng.normal(size=(n + 1, ds))
    return reps


class TestBiaffine:
    def test_zero_weight_gives_zero_scores(self, rng):
        reps = make_reps(rng, 3, 4)
        arcs = biaffine_score(reps, BiaffineParams(np.zeros((5, 4))))
        mask = valid_arc_mask(3)
        assert np.all(arcs.values[mask] == 0.0)

    def test_scalar_case_is_product(self, rng):
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        reps = TokenReps(head=a[:, None], mod=b[:, None])
        arcs = biaffine_score(reps, BiaffineParams(np.array([[1.0], [0.0]])))
        mask = valid_arc_mask(3)
        want = np.outer(a, b)
        np.testing.assert_allclose(arcs.values[mask], want[mask], atol=1e-12)

    def test_linearity_in_head(self, rng):
        reps = make_reps(rng, 3, 4)
        w = BiaffineParams(rng.normal(size=(5, 4)))
        doubled = TokenReps(head=2 * reps.head, mod=reps.mod)
        s1 = biaffine_raw(reps.head, reps.mod, w.weight)
        s2 = biaffine_raw(doubled.head, doubled.mod, w.weight)
        np.testing.assert_allclose(s2, 2 * s1, atol=1e-12)

    def test_shape_check(self, rng):
        reps = make_reps(rng, 2, 4)
        with pytest.raises(ValueError):
            biaffine_score(reps, BiaffineParams(np.zeros((4, 4))))

    def test_backward_finite_differences(self, rng):
        n, d = 3, 3
        head = rng.normal(size=(n + 1, d))
        mod = rng.normal(size=(n + 1, d))
        weight = rng.normal(size=(d + 1, d))
        upstream = rng.normal(size=(n + 1, n + 1))
        upstream[~valid_arc_mask(n)] = 0.0
        d_head, d_mod, d_weight = biaffine_backward(head, mod, weight, upstream)

        def through(f):
            return lambda x: float(np.sum(f(x) * upstream))

        fd = fd_gradient(
            through(lambda x: biaffine_raw(x, mod, weight)), head, np.ones_like(head, bool)
        )
        np.testing.assert_allclose(d_head, fd, atol=1e-5)
        fd = fd_gradient(
            through(lambda x: biaffine_raw(head, x, weight)), mod, np.ones_like(mod, bool)
        )
        np.testing.assert_allclose(d_mod, fd, atol=1e-5)
        fd = fd_gradient(
            through(lambda x: biaffine_raw(head, mod, x)),
            weight,
            np.ones_like(weight, bool),
        )
        np.testing.assert_allclose(d_weight, fd, atol=1e-5)

    def test_zero_upstream_gives_zero_grads(self, rng):
        n, d = 3, 3
        head, mod = rng.normal(size=(n + 1, d)), rng.normal(size=(n + 1, d))
        w = rng.normal(size=(d + 1, d))
        d_head, d_mod, d_weight = biaffine_backward(head, mod, w, np.zeros((n + 1, n + 1)))
        assert np.all(d_head == 0) and np.all(d_mod == 0) and np.all(d_weight == 0)


class TestTriaffine:
    def test_zero_weight(self, rng):
        reps = make_reps(rng, 3, 2, ds=2)
        sibs = triaffine_score(reps, TriaffineParams(np.zeros((3, 2, 3))))
        assert np.all(sibs.values[valid_sib_mask(3)] == 0.0)

    def test_scalar_all_ones_expansion(self, rng):
        # with scalar reps and an all-ones weight, s = (a_k+1) * h_i * (b_j+1)
        n = 3
        h = rng.normal(size=n + 1)
        a = rng.normal(size=n + 1)
        b = rng.normal(size=n + 1)
        raw = triaffine_raw(
            h[:, None], a[:, None], b[:, None], np.ones((2, 1, 2))
        )
        mask = valid_sib_mask(n)
        i, k, j = np.nonzero(mask)
        want = (a[k] + 1) * h[i] * (b[j] + 1)
        np.testing.assert_allclose(raw[i, k, j], want, atol=1e-12)

    def test_additive_in_head_rep(self, rng):
        n, ds = 3, 2
        sib = rng.normal(size=(n + 1, ds))
        mod = rng.normal(size=(n + 1, ds))
        h1 = rng.normal(size=(n + 1, ds))
        h2 = rng.normal(size=(n + 1, ds))
        w = rng.normal(size=(ds + 1, ds, ds + 1))
        s12 = triaffine_raw(h1 + h2, sib, mod, w)
        s1 = triaffine_raw(h1, sib, mod, w)
        s2 = triaffine_raw(h2, sib, mod, w)
        np.testing.assert_allclose(s12, s1 + s2, atol=1e-12)

    def test_missing_sibling_reps(self, rng):
        reps = make_reps(rng, 2, 3)
        with pytest.raises(ValueError):
            triaffine_score(reps, TriaffineParams(np.zeros((4, 3, 4))))

    def test_backward_finite_differences(self, rng):
        n, ds = 3, 2
        head = rng.normal(size=(n + 1, ds))
        sib = rng.normal(size=(n + 1, ds))
        mod = rng.normal(size=(n + 1, ds))
        w = rng.normal(size=(ds + 1, ds, ds + 1))
        upstream = rng.normal(size=(n + 1,) * 3)
        upstream[~valid_sib_mask(n)] = 0.0
        d_head, d_sib, d_mod, d_weight = triaffine_backward(head, sib, mod, w, upstream)

        def loss_of(f, x):
            return float(np.sum(f(x) * upstream))

        for got, arg, f in [
            (d_head, head, lambda x: triaffine_raw(x, sib, mod, w)),
            (d_sib, sib, lambda x: triaffine_raw(head, x, mod, w)),
            (d_mod, mod, lambda x: triaffine_raw(head, sib, x, w)),
            (d_weight, w, lambda x: triaffine_raw(head, sib, mod, x)),
        ]:
            fd = fd_gradient(
                lambda x: loss_of(f, x), arg, np.ones_like(arg, dtype=bool)
            )
            np.testing.assert_allclose(got, fd, atol=1e-5)

    def test_default_sibling_dim_is_100(self):
        assert ScorerConfig(vocab_size=4, n_labels=2).sib_dim == 100


class TestLabelHead:
    def test_backward_finite_differences(self, rng):
        n, d, L = 2, 3, 4
        head = rng.normal(size=(n + 1, d))
        mod = rng.normal(size=(n + 1, d))
        w = rng.normal(size=(L, d + 1, d + 1))
        upstream = rng.normal(size=(n + 1, n + 1, L))
        d_head, d_mod, d_weight = label_backward(head, mod, w, upstream)

        def loss_of(f, x):
            return float(np.sum(f(x) * upstream))

        for got, arg, f in [
            (d_head, head, lambda x: label_raw(x, mod, w)),
            (d_mod, mod, lambda x: label_raw(head, x, w)),
            (d_weight, w, lambda x: label_raw(head, mod, x)),
        ]:
            fd = fd_gradient(lambda x: loss_of(f, x), arg, np.ones_like(arg, bool))
            np.testing.assert_allclose(got, fd, atol=1e-5)


class TestModelBackward:
    def test_end_to_end_finite_differences(self, rng):
        config = ScorerConfig(
            vocab_size=6, n_labels=3, embed_dim=3, arc_dim=3, sib_dim=2, seed=5
        )
        model = ScoringModel(config)
        ids = [0, 2, 4, 2]  # repeated token exercises embedding scatter-add
        upstream_arc = rng.normal(size=(4, 4))
        upstream_arc[~valid_arc_mask(3)] = 0.0
        upstream_sib = rng.normal(size=(4, 4, 4))
        upstream_sib[~valid_sib_mask(3)] = 0.0
        upstream_label = rng.normal(size=(4, 4, 3))

        def total_loss(params):
            probe = ScoringModel(config, params)
            out = probe.forward(ids)
            arc = np.where(valid_arc_mask(3), out.arc.values, 0.0)
            sib = np.where(valid_sib_mask(3), out.sib.values, 0.0)
            return float(
                np.sum(arc * upstream_arc)
                + np.sum(sib * upstream_sib)
                + np.sum(out.label * upstream_label)
            )

        out = model.forward(ids)
        grads = model.new_grads()
        model.backward(out.cache, upstream_arc, upstream_sib, upstream_label, grads)

        for name in model.params:
            def f(x, _name=name):
                params = {k: (x if k == _name else v) for k, v in model.params.items()}
                return total_loss(params)

            fd = fd_gradient(f, model.params[name], np.ones_like(model.params[name], bool))
            np.testing.assert_allclose(grads[name], fd, atol=1e-4, err_msg=name)

    def test_zero_upstream(self):
        config = ScorerConfig(vocab_size=4, n_labels=2, embed_dim=2, arc_dim=2, sib_dim=2)
        model = ScoringModel(config)
        out = model.forward([0, 1, 2])
        grads = model.new_grads()
        model.backward(out.cache, np.zeros((3, 3)), np.zeros((3, 3, 3)), None, grads)
        assert all(np.all(g == 0) for g in grads.values())


class TestSgd:
    def test_zero_grad_no_change(self):
        params = {"w": np.ones(3)}
        sgd_step(params, {"w": np.zeros(3)}, lr=0.1)
        np.testing.assert_array_equal(params["w"], np.ones(3))

    def test_scalar_arithmetic(self):
        params = {"w": np.array([1.0])}
        sgd_step(params, {"w": np.array([0.5])}, lr=0.1)
        assert params["w"][0] == pytest.approx(0.95, abs=1e-15)

    def test_two_steps_sum_at_zero_momentum(self):
        p1 = {"w": np.array([2.0])}
        p2 = {"w": np.array([2.0])}
        g1, g2 = {"w": np.array([0.3])}, {"w": np.array([0.7])}
        sgd_step(p1, g1, lr=0.1)
        sgd_step(p1, g2, lr=0.1)
        sgd_step(p2, {"w": g1["w"] + g2["w"]}, lr=0.1)
        assert p1["w"][0] == pytest.approx(p2["w"][0], abs=1e-15)

    def test_momentum_accumulates(self):
        params = {"w": np.array([0.0])}
        vel = None
        for _ in range(2):
            vel = sgd_step(params, {"w": np.array([1.0])}, 0.1, momentum=0.5, velocity=vel)
        # step 1: v=-0.1; step 2: v=-0.15 -> w = -0.25
        assert params["w"][0] == pytest.approx(-0.25, abs=1e-15)

    def test_lr_must_be_positive(self):
        with pytest.raises(ValueError):
            sgd_step({"w": np.zeros(1)}, {"w": np.zeros(1)}, lr=0.0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        config = ScorerConfig(
            vocab_size=5, n_labels=3, embed_dim=4, arc_dim=3, sib_dim=2, seed=9
        )
        params = init_params(config)
        path = tmp_path / "model.ckpt"
        save_checkpoint(
            path,
            config,
            params,
            {"mode": "crf2o", "root_policy": "single"},
            ["<root>", "<unk>", "a", "b", "c"],
            ["X", "Y", "Z"],
        )
        config2, params2, meta, vocab, labels = load_checkpoint(path)
        assert meta == {"mode": "crf2o", "root_policy": "single"}
        assert vocab == ["<root>", "<unk>", "a", "b", "c"]
        assert labels == ["X", "Y", "Z"]
        assert config2.arc_dim == 3 and config2.second_order
        assert set(params2) == set(params)
        for k in params:
            np.testing.assert_array_equal(params2[k], params[k])

    def test_rejects_other_files(self, tmp_path):
        path = tmp_path / "bogus.ckpt"
        path.write_text("not a checkpoint\n")
        with pytest.raises(ValueError):
            load_checkpoint(path)


class TestOverfitSanity:
    def test_crf_overfits_tiny_treebank(self):
        # 12 sentences, disjoint vocab, CRF loss + SGD: 100% UAS well inside
        # 500 epochs demonstrates gradient flow end to end.
        from treecrf.core import enumerate_projective_trees

        rng = np.random.default_rng(7)
        n_sents, length = 12, 4
        trees = enumerate_projective_trees(length, RootPolicy.SINGLE)
        sents = []
        for s in range(n_sents):
            tree = trees[rng.integers(0, len(trees))]
            ids = [0] + [1 + s * length + k for k in range(length)]
            sents.append((ids, tree))
        config = ScorerConfig(
            vocab_size=1 + n_sents * length,
            n_labels=1,
            embed_dim=8,
            arc_dim=8,
            sib_dim=4,
            second_order=False,
            seed=3,
        )
        model = ScoringModel(config)
        velocity = None
        for epoch in range(500):
            grads = model.new_grads()
            correct = 0
            for ids, tree in sents:
                out = model.forward(ids)
                res = crf_loss(out.arc, None, tree)
                model.backward(out.cache, res.arc_grad, None, None, grads)
                if eisner1(out.arc).tree.heads == tree.heads:
                    correct += 1
            if correct == n_sents:
                break
            velocity = sgd_step(model.params, grads, 0.05, 0.9, velocity)
        assert correct == n_sents, f"only {correct}/{n_sents} after 500 epochs"
