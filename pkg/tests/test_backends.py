"""Compiled and pure-Python kernels must agree exactly.

Both backends are written to apply identical float64 operations in the
same order, so on one platform the results match bit for bit (this is
what lets a model trained under either backend hash identically).
"""

import numpy as np
import pytest

from streamtree import _kernels_py as kpy
from streamtree.model_io import tree_to_bytes
from streamtree.regressor import OptimizerConfig
from streamtree.synth import clustered_multilabel
from streamtree.tree import TreeParams, build_tree

kc = pytest.importorskip("streamtree._kernels",
                         reason="compiled kernels unavailable (pure-Python build)")


def random_x(rng, d):
    nnz = int(rng.integers(0, min(d, 8)))
    idx = np.sort(rng.choice(d, size=nnz, replace=False)).astype(np.int32)
    return idx, rng.normal(size=nnz)


class TestScalarKernels:
    def test_dot_and_sigmoid(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            d = int(rng.integers(1, 40))
            idx, val = random_x(rng, d)
            w = rng.normal(size=d + 1)
            a = kc.dot_bias(idx, val, w)
            assert a == kpy.dot_bias(idx, val, w)
            assert kc.sigmoid(a) == kpy.sigmoid(a)

    def test_sigmoid_clamped_open_interval(self):
        for z in (-1000.0, -40.0, 0.0, 40.0, 1000.0):
            for fn in (kc.sigmoid, kpy.sigmoid):
                assert 0.0 < fn(z) < 1.0

    def test_sgd_sequence(self):
        rng = np.random.default_rng(1)
        w1 = rng.normal(size=13)
        w2 = w1.copy()
        for _ in range(200):
            idx, val = random_x(rng, 12)
            t = float(rng.integers(0, 2))
            kc.sgd_step(w1, idx, val, t, 0.3)
            kpy.sgd_step(w2, idx, val, t, 0.3)
        assert (w1 == w2).all()

    def test_nag_sequence(self):
        rng = np.random.default_rng(2)
        w1 = rng.normal(size=13)
        w2 = w1.copy()
        v1, v2 = np.zeros(13), np.zeros(13)
        l1 = np.zeros(13, dtype=np.int64)
        l2 = np.zeros(13, dtype=np.int64)
        s1 = s2 = 0
        for _ in range(200):
            idx, val = random_x(rng, 12)
            t = float(rng.integers(0, 2))
            s1 = kc.nag_step(w1, v1, l1, s1, idx, val, t, 0.25, 0.9)
            s2 = kpy.nag_step(w2, v2, l2, s2, idx, val, t, 0.25, 0.9)
        kc.nag_finalize(w1, v1, l1, s1, 0.9)
        kpy.nag_finalize(w2, v2, l2, s2, 0.9)
        assert (w1 == w2).all() and (v1 == v2).all()


class TestNodeKernels:
    def make_node(self, seed, m=3, opt=1):
        ds = clustered_multilabel(80, 20, 7, seed=seed)
        ids = ds.trainable_ids()
        rng = np.random.default_rng(seed)
        d1 = ds.d + 1
        w = rng.uniform(-0.01, 0.01, (m, d1))
        labs = np.unique(ds.l_labels)
        loc = np.full(ds.k, -1, dtype=np.int32)
        loc[labs] = np.arange(len(labs), dtype=np.int32)
        return ds, ids, loc, labs, w

    @pytest.mark.parametrize("opt", [0, 1])
    def test_train_node(self, opt):
        ds, ids, loc, labs, w0 = self.make_node(seed=3, opt=opt)
        m, d1, E = 3, ds.d + 1, 3
        out = []
        for mod in (kc, kpy):
            w = w0.copy()
            vel = np.zeros((m, d1))
            last = np.zeros((m, d1), dtype=np.int64)
            p = np.zeros(m)
            pc = np.zeros((len(labs), m))
            lv = np.zeros(len(labs))
            ej = np.zeros(E)
            cv = mod.train_node(ds.f_indptr, ds.f_indices, ds.f_values, ds.l_indptr,
                                ds.l_labels, ids, loc, w, vel, last, p, pc, lv,
                                E, 1.0, 1.5, opt, 0.2, 0.9, ej)
            out.append((cv, w, p, pc, lv, ej))
        (cv1, w1, p1, pc1, lv1, ej1), (cv2, w2, p2, pc2, lv2, ej2) = out
        assert cv1 == cv2
        assert (w1 == w2).all()
        assert (p1 == p2).all() and (pc1 == pc2).all()
        assert (lv1 == lv2).all() and (ej1 == ej2).all()

    def test_route_examples(self):
        ds, ids, loc, labs, w = self.make_node(seed=4)
        a = kc.route_examples(ds.f_indptr, ds.f_indices, ds.f_values, ids, w)
        b = kpy.route_examples(ds.f_indptr, ds.f_indices, ds.f_values, ids, w)
        assert (a == b).all()
        assert (a > 0).all()  # routing totality

    def test_full_build_identical_bytes(self):
        # the strongest equivalence statement: identical model files
        import streamtree.tree as tree_mod

        ds = clustered_multilabel(150, 25, 8, seed=5)
        params = TreeParams(m=4, t_max=41, epochs=3, seed=5, lambda2=2.0,
                            optimizer=OptimizerConfig(kind="nag", step_size=0.2))
        orig = tree_mod.kernels
        try:
            tree_mod.kernels = kc
            blob_c = tree_to_bytes(build_tree(ds, params))
            tree_mod.kernels = kpy
            blob_p = tree_to_bytes(build_tree(ds, params))
        finally:
            tree_mod.kernels = orig
        assert blob_c == blob_p


class TestDescend:
    def test_same_accumulation(self):
        import streamtree.tree as tree_mod

        ds = clustered_multilabel(120, 25, 8, seed=6)
        tree = build_tree(ds, TreeParams(m=2, t_max=31, epochs=3, seed=6))
        rng = np.random.default_rng(7)
        for _ in range(30):
            idx, val = random_x(rng, ds.d)
            args_template = (tree.children, tree.is_leaf, tree.wrow, tree.weights,
                             tree.hist_indptr, tree.hist_labels, tree.hist_vals,
                             tree.hist_mass, tree.depth_arr, idx, val)
            results = []
            for mod in (kc, kpy):
                acc = np.zeros(ds.k)
                touched = np.zeros(ds.k, dtype=np.int32)
                stack_a = np.zeros(tree.n_nodes + 1, dtype=np.int32)
                stack_b = np.zeros(tree.n_nodes + 1, dtype=np.int32)
                n, leaves = mod.descend(*args_template, acc, touched, 0, stack_a, stack_b)
                results.append((n, leaves, acc.copy(), touched[:n].copy()))
            (n1, le1, acc1, t1), (n2, le2, acc2, t2) = results
            assert n1 == n2 and le1 == le2
            assert (acc1 == acc2).all()
            assert (t1 == t2).all()
