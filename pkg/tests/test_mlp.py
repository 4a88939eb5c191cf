import numpy as np
import pytest

from distillab.errors import ConfigError, InputError
from distillab.lab.mlp import MlpModel
from distillab.lab.train import ce_loss_grad, kd_loss_grad, regt_loss_grad


def _finite_difference_param_grads(model, x, loss_fn, h=1e-5):
    """Central-difference gradients of loss_fn(logits) w.r.t. every
    parameter entry."""
    grads = []
    for p in model.params():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = loss_fn(model.forward(x)[0])
            p[idx] = orig - h
            lm = loss_fn(model.forward(x)[0])
            p[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads


def _check_backward(model, x, loss_grad_fn, rel_tol=1e-4):
    logits, _, acts = model.forward_cached(x)
    _, dlogits = loss_grad_fn(logits)
    grads_w, grads_b = model.backward(acts, dlogits)
    analytic = [*grads_w, *grads_b]
    numeric = _finite_difference_param_grads(
        model, x, lambda lg: loss_grad_fn(lg)[0]
    )
    for a, nmr in zip(analytic, numeric):
        denom = max(np.linalg.norm(a), np.linalg.norm(nmr), 1e-8)
        assert np.linalg.norm(a - nmr) / denom < rel_tol


def _small_model(seed=0, relu_features=False):
    return MlpModel.init_random(
        input_dim=4, hidden_widths=(6, 5), num_classes=3, seed=seed,
        relu_features=relu_features,
    )


@pytest.fixture
def batch():
    rng = np.random.default_rng(42)
    x = rng.normal(size=(8, 4))
    y = rng.integers(3, size=8)
    return x, y


class TestForward:
    def test_zero_weights_give_zero_logits(self):
        m = _small_model()
        for w in m.weights:
            w[...] = 0.0
        logits, feats = m.forward(np.ones((2, 4)))
        np.testing.assert_array_equal(logits, 0.0)
        np.testing.assert_array_equal(feats, 0.0)

    def test_single_layer_identity(self):
        # identity feature layer, identity output -> logits reproduce input
        m = MlpModel.init_random(3, (3,), 3, seed=0)
        m.weights[0][...] = np.eye(3)
        m.biases[0][...] = 0.0
        m.weights[1][...] = np.eye(3)
        x = np.array([[0.5, -1.0, 2.0]])
        logits, feats = m.forward(x)
        np.testing.assert_allclose(logits, x)  # feature layer has no relu
        np.testing.assert_allclose(feats, x)

    def test_feature_relu_flag(self):
        m = MlpModel.init_random(3, (3,), 3, seed=0, relu_features=True)
        m.weights[0][...] = np.eye(3)
        m.biases[0][...] = 0.0
        m.weights[1][...] = np.eye(3)
        x = np.array([[0.5, -1.0, 2.0]])
        logits, feats = m.forward(x)
        np.testing.assert_allclose(feats, [[0.5, 0.0, 2.0]])

    def test_input_dim_mismatch(self):
        with pytest.raises(InputError):
            _small_model().forward(np.ones((2, 5)))

    def test_one_dim_input_promoted(self):
        logits, _ = _small_model().forward(np.ones(4))
        assert logits.shape == (1, 3)

    def test_num_params(self):
        m = _small_model()
        # (4*6 + 6) + (6*5 + 5) + 5*3
        assert m.num_params == 24 + 6 + 30 + 5 + 15
        assert m.feature_dim == 5

    def test_bad_widths_rejected(self):
        with pytest.raises(ConfigError):
            MlpModel.init_random(4, (), 3)
        with pytest.raises(ConfigError):
            MlpModel.init_random(4, (0,), 3)

    def test_init_deterministic(self):
        a, b = _small_model(seed=3), _small_model(seed=3)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_copy_is_deep(self):
        m = _small_model()
        c = m.copy()
        c.weights[0][...] += 1.0
        assert not np.allclose(m.weights[0], c.weights[0])


class TestGradients:
    def test_ce(self, batch):
        x, y = batch
        _check_backward(_small_model(), x, lambda lg: ce_loss_grad(lg, y))

    def test_ce_with_feature_relu(self, batch):
        x, y = batch
        m = _small_model(relu_features=True)
        # zero-init biases can park a preactivation exactly on the relu
        # kink (where finite differences are undefined); nudge them off
        rng = np.random.default_rng(11)
        for b in m.biases:
            b += rng.uniform(0.05, 0.1, size=b.shape)
        _check_backward(m, x, lambda lg: ce_loss_grad(lg, y))

    @pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
    @pytest.mark.parametrize("tau", [1.0, 4.0])
    def test_kd(self, batch, lam, tau):
        x, y = batch
        rng = np.random.default_rng(7)
        targets = rng.dirichlet(np.ones(3), size=8)
        _check_backward(
            _small_model(seed=1),
            x,
            lambda lg: kd_loss_grad(lg, y, targets, lam, tau),
        )

    def test_kd_per_sample_tau(self, batch):
        x, y = batch
        rng = np.random.default_rng(8)
        targets = rng.dirichlet(np.ones(3), size=8)
        taus = rng.uniform(1.0, 8.0, size=8)
        _check_backward(
            _small_model(seed=2),
            x,
            lambda lg: kd_loss_grad(lg, y, targets, 0.7, taus),
        )

    @pytest.mark.parametrize("beta", [0.01, 0.1])
    def test_regt(self, batch, beta):
        x, y = batch
        _check_backward(
            _small_model(seed=3), x, lambda lg: regt_loss_grad(lg, y, beta)
        )

    def test_deeper_model(self, batch):
        x, y = batch
        m = MlpModel.init_random(4, (7, 6, 5), 3, seed=4)
        _check_backward(m, x, lambda lg: ce_loss_grad(lg, y))


class TestLossValues:
    def test_ce_uniform_logits(self):
        logits = np.zeros((4, 5))
        y = np.array([0, 1, 2, 3])
        loss, grad = ce_loss_grad(logits, y)
        assert loss == pytest.approx(np.log(5))

    def test_kd_reduces_to_ce_at_lam_zero(self, batch):
        x, y = batch
        logits = np.random.default_rng(9).normal(size=(8, 3))
        targets = np.full((8, 3), 1 / 3)
        l_ce, g_ce = ce_loss_grad(logits, y)
        l_kd, g_kd = kd_loss_grad(logits, y, targets, lam=0.0, tau=4.0)
        assert l_kd == pytest.approx(l_ce)
        np.testing.assert_allclose(g_kd, g_ce, atol=1e-12)

    def test_kd_tau_squared_weighting(self):
        # at lam=1 with uniform targets the loss is tau^2 * mean CE of the
        # scaled logits; doubling tau at logits scaled 2x doubles^2 the
        # loss of the same underlying distribution
        logits = np.array([[2.0, 0.0, -2.0]])
        y = np.array([0])
        targets = np.full((1, 3), 1 / 3)
        l1, _ = kd_loss_grad(logits, y, targets, lam=1.0, tau=1.0)
        l2, _ = kd_loss_grad(2.0 * logits, y, targets, lam=1.0, tau=2.0)
        assert l2 == pytest.approx(4.0 * l1)

    def test_kd_gradient_zero_at_matching_targets(self):
        # lam=1 and targets equal to the student's own softened probs
        from distillab.probability import softmax_rows

        logits = np.array([[1.0, 0.0, -1.0], [0.5, 0.2, -0.3]])
        y = np.array([0, 1])
        targets = softmax_rows(logits, 4.0)
        _, grad = kd_loss_grad(logits, y, targets, lam=1.0, tau=4.0)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_regt_reduces_to_ce_at_beta_zero(self, batch):
        x, y = batch
        logits = np.random.default_rng(10).normal(size=(8, 3))
        l_ce, g_ce = ce_loss_grad(logits, y)
        l_rt, g_rt = regt_loss_grad(logits, y, beta=0.0)
        assert l_rt == pytest.approx(l_ce)
        np.testing.assert_allclose(g_rt, g_ce, atol=1e-12)
