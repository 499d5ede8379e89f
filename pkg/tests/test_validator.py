import math

import numpy as np
import pytest

from streamtree.objective import NodeStats, ObjectiveParams, compute_objective
from streamtree.synth import (
    clustered_multilabel,
    dataset_from_examples,
    fixed_label_count_dataset,
    orthogonal_classes,
)
from streamtree.tree import TreeParams, build_tree
from streamtree.validate import (
    LeafSubsetProfile,
    all_to_all_split,
    check_balance_purity_bounds,
    check_error_entropy_bound,
    purity_bound_gap,
    check_objective_range,
    is_non_increasing,
    lambda_pairs,
    range_bound_gap,
    leaf_subset_profile,
    max_leaf_weight,
    monotone_error_trace,
    objective_value,
    perfect_split,
    pi_normalization_divergence,
    run_validation,
    sample_split,
    split_advantage,
    tree_entropy,
)

from test_tree import bias_router, make_tree


class TestSampleSplit:
    @pytest.mark.parametrize("kind", ["hard", "multi", "soft"])
    @pytest.mark.parametrize("m", [2, 4])
    def test_samples_satisfy_stats_invariants(self, kind, m):
        rng = np.random.default_rng(1)
        for _ in range(40):
            s = sample_split(rng, m, kind)
            s.to_node_stats().check()

    def test_closed_form_matches_streaming(self):
        # the vectorized sampler must agree with the streaming recurrences
        rng = np.random.default_rng(2)
        for kind in ("hard", "multi", "soft"):
            s = sample_split(rng, 3, kind)
            # replay the same statistics through NodeStats: reconstruct a
            # per-example stream from a fresh sampler with a fixed seed
            rng2 = np.random.default_rng(99)
            n_ex = 20
            stats = NodeStats(m=2)
            preds = rng2.uniform(0, 1, size=(n_ex, 2))
            labels = [rng2.choice(5, size=rng2.integers(1, 3), replace=False)
                      for _ in range(n_ex)]
            for lab, pr in zip(labels, preds):
                stats.observe(lab, pr)
            # closed forms
            ylen = np.array([len(l) for l in labels], dtype=float)
            c_v = ylen.sum()
            p = (ylen[:, None] * preds).sum(axis=0) / c_v
            assert np.allclose(stats.p, p, atol=1e-12)
            for k in stats.p_cond:
                rows = [i for i, ls in enumerate(labels) if k in ls]
                assert np.allclose(stats.p_cond[k], preds[rows].mean(axis=0), atol=1e-12)

    def test_constructed_extremes(self):
        for m in (2, 3, 4):
            ps = perfect_split(m)
            ata = all_to_all_split(m)
            for l1, l2 in [(1.0, 2.0), (0.5, 1.5)]:
                assert objective_value(ps, l1, l2) == pytest.approx(-l1 * (m - 1), abs=1e-12)
                assert objective_value(ata, l1, l2) == pytest.approx(l2 * (m - 1), abs=1e-12)

    def test_objective_matches_node_stats_path(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            s = sample_split(rng, 3, "soft")
            params = ObjectiveParams(m=3, lambda1=1.0, lambda2=2.0)
            assert objective_value(s, 1.0, 2.0) == pytest.approx(
                compute_objective(s.to_node_stats(), params), abs=1e-9)


class TestObjectiveRange:
    @pytest.mark.parametrize("m", [2, 4])
    def test_no_violations_small(self, m):
        res = check_objective_range(500, m, seed=4)
        assert res.passed, res.first_violation

    def test_detects_planted_violation(self):
        # sanity: the checker is not vacuous; feed it an impossible range
        s = all_to_all_split(2)
        assert objective_value(s, 1.0, 1.0) > 0.5

    def test_range_gap_outside_sampled_regime(self):
        # the advertised maximum is exceeded by an all-to-(m-1) split when
        # lambda1 + lambda2/(m-1) < 1, which is why lambda_pairs filters
        gap = range_bound_gap()
        assert gap["precondition_l2_over_l1"] > 1.0  # the stated precondition holds
        assert gap["J"] > gap["claimed_max"] + 1e-9
        assert gap["J"] == pytest.approx(3.5)
        for l1, l2 in lambda_pairs(4):
            assert l1 + l2 / 3.0 >= 1.0 and l2 / l1 > 1.0


class TestBalancePurity:
    @pytest.mark.parametrize("m", [2, 4])
    def test_no_violations_provable_form(self, m):
        res = check_balance_purity_bounds(500, m, seed=5)
        assert res.passed, res.first_violation
        assert 0 < res.n_qualifying <= res.n_samples

    def test_stated_binary_regime_holds(self):
        res = check_balance_purity_bounds(500, 2, seed=5, form="stated_binary")
        assert res.passed, res.first_violation

    def test_stated_form_has_known_counterexample(self):
        # the advertised inequality fails on splits that send every label
        # to exactly half the children; pin that analysis
        gap = purity_bound_gap()
        assert gap["alpha"] > gap["stated_bound"] + 1e-9
        assert gap["alpha"] <= gap["provable_bound"] + 1e-9
        res = check_balance_purity_bounds(2000, 4, seed=6, form="stated")
        assert res.n_violations > 0

    def test_degenerate_denominator_skipped(self):
        # lambda2 == lambda1*(m-1)/2 zeroes the stated denominator; such
        # pairs must never be counted as qualifying
        res = check_balance_purity_bounds(200, 2, seed=6, form="stated")
        assert res.n_qualifying < res.n_samples * 25  # sanity on counting


class TestSplitAdvantage:
    def test_perfect_binary(self):
        g, b = split_advantage(perfect_split(2))
        assert g == pytest.approx(1.0) and b == pytest.approx(0.0)

    def test_all_to_both(self):
        g, b = split_advantage(all_to_all_split(2))
        assert g == pytest.approx(0.0) and b == pytest.approx(1.0)

    def test_plug_in_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            s = sample_split(rng, 2, "soft")
            g, b = split_advantage(s)
            g_ref = float(s.pi @ np.abs(s.p_cond[:, 0] - s.p_cond[:, 1]))
            b_ref = abs(float(s.p.sum()) - 1.0)
            assert g == pytest.approx(g_ref, abs=1e-12)
            assert b == pytest.approx(b_ref, abs=1e-12)
            assert 0.0 <= g <= 1.0 and 0.0 <= b <= 1.0

    def test_mary_uses_pairwise_sum(self):
        s = perfect_split(4)
        g, _ = split_advantage(s)
        # one-hot conditionals: every ordered pair differs on two labels
        assert g > 1.0  # not confined to [0,1] in the wide case

    def test_accepts_node_stats(self):
        s = perfect_split(2)
        g1, b1 = split_advantage(s)
        g2, b2 = split_advantage(s.to_node_stats())
        assert g1 == pytest.approx(g2) and b1 == pytest.approx(b2)


class TestLeafWeight:
    def test_single_leaf_tree(self):
        ds = orthogonal_classes(4, 4)
        with pytest.warns(UserWarning):
            params = TreeParams(m=2, t_max=1, epochs=1)
        tree = build_tree(ds, params)
        assert max_leaf_weight(tree, ds) == pytest.approx(1.0)

    def test_no_multiway_implies_at_least_one(self):
        ds = orthogonal_classes(8, 16)
        tree = build_tree(ds, TreeParams(m=2, t_max=63, epochs=5, seed=0))
        # verify no example multi-routes, then the binary guarantee applies
        from streamtree.validate import reached_leaf_set

        multiway = any(len(reached_leaf_set(tree, i, ds)) > 1 for i in range(ds.n))
        c_hat = max_leaf_weight(tree, ds)
        assert c_hat > 0.0
        if not multiway:
            assert c_hat >= 1.0 - 1e-9


def manual_two_leaf_tree():
    # root {0,1}, two pure leaves; bias router sends feature-0 examples
    # left only, feature-1 examples right only
    w = np.zeros((2, 3))
    w[0, 0] = 4.0
    w[0, 2] = -2.0  # direction 0 fires iff feature 0 present
    w[1, 1] = 4.0
    w[1, 2] = -2.0
    return make_tree(
        [[1, 2], None, None],
        [{0: 4, 1: 4}, {0: 4}, {1: 4}],
        {0: w}, d=2, k=2,
    )


class TestEntropy:
    def test_single_leaf_single_label_zero(self):
        tree = make_tree([None], [{3: 10}], {}, d=2, k=8)
        ds = dataset_from_examples([([3], [(0, 1.0)])] * 10, d=2, k=8)
        profile = leaf_subset_profile(tree, ds)
        assert tree_entropy(profile) == 0.0
        assert profile.weights_sum() == pytest.approx(1.0)

    def test_two_disjoint_groups_zero_but_pooled_ln2(self):
        tree = manual_two_leaf_tree()
        examples = [([0], [(0, 1.0)])] * 4 + [([1], [(1, 1.0)])] * 4
        ds = dataset_from_examples(examples, d=2, k=2)
        profile = leaf_subset_profile(tree, ds)
        assert tree_entropy(profile) == pytest.approx(0.0)
        # pooled at the root: one group, two equally likely labels
        root_only = make_tree([None], [{0: 4, 1: 4}], {}, d=2, k=2)
        pooled = leaf_subset_profile(root_only, ds)
        assert tree_entropy(pooled) == pytest.approx(math.log(2.0))

    def test_uniform_labels_single_leaf_ln_k(self):
        k = 8
        tree = make_tree([None], [{i: 1 for i in range(k)}], {}, d=2, k=k)
        examples = [([i], [(0, 1.0)]) for i in range(k)]
        ds = dataset_from_examples(examples, d=2, k=k)
        assert tree_entropy(leaf_subset_profile(tree, ds)) == pytest.approx(math.log(k))

    def test_weights_sum_to_one(self):
        ds = clustered_multilabel(200, 25, 8, seed=8)
        tree = build_tree(ds, TreeParams(m=2, t_max=31, epochs=3, seed=8))
        profile = leaf_subset_profile(tree, ds)
        assert profile.weights_sum() == pytest.approx(1.0, abs=1e-9)


class TestEntropyErrorBound:
    def test_zero_error_tree_both_sides_zero(self):
        ds = orthogonal_classes(8, 8)
        tree = build_tree(ds, TreeParams(m=2, t_max=63, epochs=5, seed=0))
        rep = check_error_entropy_bound(tree, ds, r=1)
        assert rep.passed
        assert rep.error == pytest.approx(0.0, abs=1e-12)
        assert rep.entropy == pytest.approx(0.0, abs=1e-12)

    def test_random_trees_hold(self):
        for seed in range(3):
            ds = fixed_label_count_dataset(250, 30, 10, r=1, seed=seed)
            tree = build_tree(ds, TreeParams(m=2, t_max=31, epochs=3, seed=seed))
            rep = check_error_entropy_bound(tree, ds, r=1)
            assert rep.passed, (rep.error, rep.bound)

    def test_single_leaf_uniform_trivially_bounded(self):
        k = 6
        tree = make_tree([None], [{i: 1 for i in range(k)}], {}, d=2, k=k)
        ds = dataset_from_examples([([i], [(0, 1.0)]) for i in range(k)], d=2, k=k)
        rep = check_error_entropy_bound(tree, ds, r=1)
        assert rep.passed
        assert rep.bound == pytest.approx(math.log(k) / math.log(2.0))

    def test_exclusion_counter(self):
        examples = [([0, 1], [(0, 1.0)]), ([1], [(1, 1.0)])]
        ds = dataset_from_examples(examples, d=2, k=2)
        tree = make_tree([None], [{0: 1, 1: 2}], {}, d=2, k=2)
        rep = check_error_entropy_bound(tree, ds, r=2)
        assert rep.n_excluded == 1 and rep.n_examples == 1


class TestMonotoneTrace:
    def test_orthogonal_classes_reach_zero(self):
        ds = orthogonal_classes(8, 16)
        params = TreeParams(m=2, t_max=127, epochs=5, lambda1=1.0, lambda2=1.0, seed=0)
        trace = monotone_error_trace(ds, params)
        assert is_non_increasing(trace)
        assert trace[-1] == 0.0
        assert trace[0] > trace[-1]

    def test_zero_splits_gives_baseline_only(self):
        ds = orthogonal_classes(4, 4)
        params = TreeParams(m=2, t_max=31, epochs=2, seed=0)
        trace = monotone_error_trace(ds, params, n_splits=0)
        assert len(trace) == 1
        assert trace[0] == pytest.approx(1.0 - 1.0 / 4.0)


class TestPiDivergence:
    def test_constant_label_count_coincides(self):
        ds = fixed_label_count_dataset(200, 20, 6, r=2, seed=9)
        rep = pi_normalization_divergence(ds)
        assert rep["constant_label_count"]
        assert rep["max_abs_diff"] < 1e-12

    def test_variable_label_count_diverges(self):
        ds = clustered_multilabel(300, 20, 6, seed=10, labels_per_example=(1, 3))
        rep = pi_normalization_divergence(ds)
        assert not rep["constant_label_count"]
        assert rep["max_abs_diff"] > 0.0


class TestSuite:
    def test_quick_run_passes(self):
        suite = run_validation(seed=0, n_samples=400, trained_trees=1)
        assert suite.passed, str(suite)
        csv = suite.to_csv()
        assert csv.startswith("check,passed,detail")
        assert "objective_range_m2" in csv
