import numpy as np
import pytest

from streamtree.regressor import LinearRegressor, OptimizerConfig

from conftest import sv


def random_instance(rng, d=12):
    nnz = int(rng.integers(1, d))
    idx = np.sort(rng.choice(d, size=nnz, replace=False))
    x = sv(list(zip(idx.tolist(), rng.normal(size=nnz).tolist())))
    reg = LinearRegressor(d, weights=rng.normal(scale=0.5, size=d + 1))
    return reg, x


class TestMargin:
    def test_zero_weights_give_half(self):
        reg = LinearRegressor(4)
        assert reg.margin(sv([(0, 3.0), (2, -1.0)])) == 0.5

    def test_saturates_high(self):
        reg = LinearRegressor(1, weights=np.array([20.0, 0.0]))
        assert reg.margin(sv([(0, 1.0)])) > 0.9999

    def test_strictly_inside_unit_interval(self):
        reg = LinearRegressor(1, weights=np.array([1000.0, 0.0]))
        assert 0.0 < reg.margin(sv([(0, 1.0)])) < 1.0
        assert 0.0 < reg.margin(sv([(0, -1.0)])) < 1.0

    def test_matches_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            reg, x = random_instance(rng)
            raw = x.to_dense(reg.d) @ reg.weights[:-1] + reg.weights[-1]
            assert reg.margin(x) == pytest.approx(1.0 / (1.0 + np.exp(-raw)), abs=1e-12)

    def test_threshold_equivalence(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            reg, x = random_instance(rng)
            assert (reg.margin(x) > 0.5) == (reg.raw_score(x) > 0.0)


class TestTrainStep:
    def test_sgd_hand_value(self):
        reg = LinearRegressor(1)
        cfg = OptimizerConfig(kind="sgd", step_size=1.0)
        reg.train_step(sv([(0, 1.0)]), 1, cfg)
        # gradient (0.5 - 1) on both the feature and the bias
        assert reg.weights[0] == pytest.approx(0.5)
        assert reg.weights[1] == pytest.approx(0.5)

    def test_symmetric_at_half(self):
        cfg = OptimizerConfig(kind="sgd", step_size=0.3)
        x = sv([(0, 2.0), (1, -1.0)])
        up = LinearRegressor(2)
        down = LinearRegressor(2)
        up.train_step(x, 1, cfg)
        down.train_step(x, 0, cfg)
        assert np.allclose(up.weights, -down.weights, atol=1e-15)

    def test_zero_step_is_identity(self):
        rng = np.random.default_rng(5)
        for kind in ("sgd", "nag"):
            reg, x = random_instance(rng)
            before = reg.weights.copy()
            reg.train_step(x, 1, OptimizerConfig(kind=kind, step_size=0.0))
            reg.finalize(OptimizerConfig(kind=kind, step_size=0.0))
            assert (reg.weights == before).all()

    def test_sgd_touches_only_support_and_bias(self):
        rng = np.random.default_rng(6)
        reg = LinearRegressor(10, weights=rng.normal(size=11))
        before = reg.weights.copy()
        x = sv([(2, 1.0), (7, -2.0)])
        reg.train_step(x, 0, OptimizerConfig(kind="sgd", step_size=0.5))
        changed = np.nonzero(reg.weights != before)[0]
        assert set(changed) <= {2, 7, 10}

    def test_rejects_bad_target(self):
        with pytest.raises(ValueError):
            LinearRegressor(2).train_step(sv([(0, 1.0)]), 2, OptimizerConfig())

    def test_separable_pair_routes_apart(self):
        cfg = OptimizerConfig(kind="sgd", step_size=0.5)
        reg = LinearRegressor(2)
        a, b = sv([(0, 1.0)]), sv([(1, 1.0)])
        for _ in range(50):
            reg.train_step(a, 1, cfg)
            reg.train_step(b, 0, cfg)
        assert reg.margin(a) > 0.5 > reg.margin(b)


class TestGradient:
    def test_matches_central_differences(self):
        """Analytic cross-entropy gradient vs (L(w+h) - L(w-h)) / 2h."""
        rng = np.random.default_rng(7)
        h = 1e-6
        for _ in range(100):
            reg, x = random_instance(rng)
            target = int(rng.integers(0, 2))
            scale = reg.gradient_scale(x, target)
            dense = np.append(x.to_dense(reg.d), 1.0)
            grad = scale * dense
            for c in np.append(x.indices, reg.d):
                wp = reg.weights.copy()
                wm = reg.weights.copy()
                wp[c] += h
                wm[c] -= h
                lp = LinearRegressor(reg.d, weights=wp).loss(x, target)
                lm = LinearRegressor(reg.d, weights=wm).loss(x, target)
                fd = (lp - lm) / (2 * h)
                denom = max(abs(fd), 1e-8)
                assert abs(grad[c] - fd) / denom < 1e-4


def dense_nag_reference(w0, updates, step, mu):
    """Textbook dense implementation: every coordinate decays every step."""
    w = w0.copy()
    v = np.zeros_like(w)
    for x, target in updates:
        look = w + mu * v
        p = 1.0 / (1.0 + np.exp(-(x.to_dense(len(w) - 1) @ look[:-1] + look[-1])))
        g = (p - target) * np.append(x.to_dense(len(w) - 1), 1.0)
        v = mu * v - step * g
        w = w + v
    return w, v


class TestNag:
    def test_lazy_matches_dense_reference(self):
        rng = np.random.default_rng(8)
        d = 15
        cfg = OptimizerConfig(kind="nag", step_size=0.2, momentum=0.9)
        for _ in range(20):
            w0 = rng.normal(scale=0.3, size=d + 1)
            reg = LinearRegressor(d, weights=w0.copy())
            updates = []
            for _ in range(30):
                nnz = int(rng.integers(1, 5))
                idx = np.sort(rng.choice(d, size=nnz, replace=False))
                x = sv(list(zip(idx.tolist(), rng.normal(size=nnz).tolist())))
                t = int(rng.integers(0, 2))
                updates.append((x, t))
                reg.train_step(x, t, cfg)
            reg.finalize(cfg)
            w_ref, v_ref = dense_nag_reference(w0, updates, 0.2, 0.9)
            np.testing.assert_allclose(reg.weights, w_ref, atol=1e-12)
            np.testing.assert_allclose(reg.velocity, v_ref, atol=1e-12)

    def test_zero_momentum_equals_sgd(self):
        rng = np.random.default_rng(9)
        reg_n = LinearRegressor(6)
        reg_s = LinearRegressor(6)
        nag = OptimizerConfig(kind="nag", step_size=0.4, momentum=0.0)
        sgd = OptimizerConfig(kind="sgd", step_size=0.4)
        for _ in range(40):
            nnz = int(rng.integers(1, 4))
            idx = np.sort(rng.choice(6, size=nnz, replace=False))
            x = sv(list(zip(idx.tolist(), rng.normal(size=nnz).tolist())))
            t = int(rng.integers(0, 2))
            reg_n.train_step(x, t, nag)
            reg_s.train_step(x, t, sgd)
        reg_n.finalize(nag)
        np.testing.assert_allclose(reg_n.weights, reg_s.weights, atol=1e-14)


class TestOptimizerConfig:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            OptimizerConfig(kind="adam")

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            OptimizerConfig(step_size=1.5)
        with pytest.raises(ValueError):
            OptimizerConfig(momentum=1.0)

    def test_finite_weights_after_training(self):
        rng = np.random.default_rng(10)
        reg = LinearRegressor(8, init_scale=0.01, rng=rng)
        cfg = OptimizerConfig(kind="nag", step_size=1.0, momentum=0.9)
        for _ in range(500):
            reg, x = reg, sv([(int(rng.integers(0, 8)), float(rng.normal()))])
            reg.train_step(x, int(rng.integers(0, 2)), cfg)
        reg.finalize(cfg)
        assert np.isfinite(reg.weights).all()
