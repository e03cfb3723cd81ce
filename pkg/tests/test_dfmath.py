"""Depth-fusion numerics: MLP, cross-attention, toy denoiser, masked loss,
and the gradient checker, all verified against step-by-step oracles."""

import math

import numpy as np
import pytest

from animatepainter.dfmath import (
    AttentionWeights,
    DenoiseBatch,
    MlpWeights,
    ToyDenoiserParams,
    batch_loss_and_grad,
    depth_cross_attention,
    gradient_check,
    layer_loss,
    load_tensor,
    mlp_embed,
    rowsoftmax,
    save_tensor,
    toy_denoise,
)


def small_mlp():
    return MlpWeights(
        w1=np.array([[0.5, -0.25, 1.0], [0.0, 2.0, -1.0]]),
        b1=np.array([0.1, -0.2]),
        w2=np.array([[1.5, 0.5], [-1.0, 0.25], [2.0, 0.0]]),
        b2=np.array([0.0, 0.3, -0.1]),
    )


class TestMlpEmbed:
    def test_zero_weights_annihilate(self):
        w = MlpWeights(w1=np.zeros((2, 3)), b1=np.zeros(2),
                       w2=np.zeros((3, 2)), b2=np.zeros(3))
        out = mlp_embed(np.array([[1.0, 2.0, 3.0]]), w)
        assert (out == 0.0).all()

    def test_identity_affines_pass_positives_through(self):
        w = MlpWeights(w1=np.eye(3), b1=np.zeros(3), w2=np.eye(3), b2=np.zeros(3))
        x = np.array([[0.5, 1.0, 2.0], [3.0, 0.1, 0.7]])
        assert (mlp_embed(x, w) == x).all()

    def test_fixed_input_matches_matrix_oracle(self):
        w = small_mlp()
        x = np.array([[1.0, -2.0, 0.5], [0.0, 1.0, -1.0]])
        got = mlp_embed(x, w)
        # independent scalar-loop forward pass
        want = np.zeros((2, 3))
        for r in range(2):
            hidden = []
            for h in range(2):
                acc = w.b1[h]
                for c in range(3):
                    acc += w.w1[h, c] * x[r, c]
                hidden.append(max(acc, 0.0))
            for o in range(3):
                acc = w.b2[o]
                for h in range(2):
                    acc += w.w2[o, h] * hidden[h]
                want[r, o] = acc
        assert np.allclose(got, want, atol=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            mlp_embed(np.ones((2, 4)), small_mlp())


def attn_weights(d=2, out=2, feat=3, rng=None):
    rng = rng or np.random.default_rng(5)
    mlp = MlpWeights(
        w1=rng.normal(size=(4, feat)), b1=rng.normal(size=4),
        w2=rng.normal(size=(out, 4)), b2=rng.normal(size=out),
    )
    return AttentionWeights(
        wq=rng.normal(size=(d, 3)),
        wk=rng.normal(size=(d, out)),
        wv=rng.normal(size=(3, out)),
        mlp=mlp,
    )


class TestDepthCrossAttention:
    def test_single_key_returns_v_exactly(self):
        w = attn_weights()
        z = np.array([[0.2, -0.4, 1.0], [2.0, 0.0, -1.0], [0.5, 0.5, 0.5]])
        f_d = np.array([[0.3, 0.1, -0.2]])
        from animatepainter.dfmath import mlp_embed as embed

        v_row = embed(f_d, w.mlp) @ w.wv.T
        out = depth_cross_attention(z, f_d, w)
        assert (out == np.repeat(v_row, 3, axis=0)).all()

    def test_two_identical_keys_average_values(self):
        mlp = MlpWeights(w1=np.eye(3), b1=np.zeros(3), w2=np.eye(3), b2=np.zeros(3))
        w = AttentionWeights(
            wq=np.eye(3)[:2], wk=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            wv=np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 2.0]]), mlp=mlp,
        )
        f_d = np.array([[0.5, 0.25, 0.75], [0.5, 0.25, 0.75]])
        z = np.array([[1.0, 2.0, 3.0]])
        v = mlp_embed(f_d, mlp) @ w.wv.T
        out = depth_cross_attention(z, f_d, w)
        assert np.allclose(out, v.mean(axis=0, keepdims=True), atol=1e-12)

    def test_fixed_instance_matches_step_by_step_oracle(self):
        w = attn_weights(rng=np.random.default_rng(11))
        z = np.array([[0.1, 0.2, 0.3], [-0.5, 1.0, 0.0]])  # 2 queries
        f_d = np.array([[1.0, 0.0, 0.5], [0.2, -0.3, 0.4], [0.0, 1.0, -1.0]])  # 3 keys
        got = depth_cross_attention(z, f_d, w)

        # oracle: explicit loops, softmax from math.exp
        emb = np.zeros((3, w.mlp.out_dim))
        for r in range(3):
            hidden = np.maximum(w.mlp.w1 @ f_d[r] + w.mlp.b1, 0.0)
            emb[r] = w.mlp.w2 @ hidden + w.mlp.b2
        q = np.array([w.wq @ z[r] for r in range(2)])
        k = np.array([w.wk @ emb[r] for r in range(3)])
        v = np.array([w.wv @ emb[r] for r in range(3)])
        want = np.zeros((2, v.shape[1]))
        for i in range(2):
            logits = [float(q[i] @ k[j]) / math.sqrt(w.d) for j in range(3)]
            peak = max(logits)
            weights = [math.exp(l - peak) for l in logits]
            norm = sum(weights)
            for j in range(3):
                want[i] += (weights[j] / norm) * v[j]
        assert np.allclose(got, want, atol=1e-12)

    def test_attention_rows_sum_to_one(self, rng):
        logits = rng.normal(size=(6, 9)) * 40.0
        rows = rowsoftmax(logits).sum(axis=1)
        assert np.allclose(rows, 1.0, atol=1e-12)

    def test_shift_invariance(self, rng):
        logits = rng.normal(size=(4, 5))
        assert np.allclose(
            rowsoftmax(logits), rowsoftmax(logits + 123.456), atol=1e-12
        )

    def test_zero_key_dimension_rejected(self):
        mlp = MlpWeights(w1=np.eye(2), b1=np.zeros(2), w2=np.eye(2), b2=np.zeros(2))
        w = AttentionWeights(
            wq=np.zeros((0, 3)), wk=np.zeros((0, 2)), wv=np.ones((2, 2)), mlp=mlp
        )
        with pytest.raises(ValueError, match="key dimension"):
            depth_cross_attention(np.ones((1, 3)), np.ones((1, 2)), w)


def tiny_batch(rng, shape=(2, 3), cond=2, mask=None):
    x = rng.normal(size=shape)
    return DenoiseBatch(
        x_t=x,
        eps=rng.normal(size=shape),
        mask=mask if mask is not None else (rng.uniform(size=shape) < 0.5).astype(float),
        cond=rng.normal(size=cond),
        t=int(rng.integers(1, 40)),
    )


class TestToyDenoise:
    def test_zero_parameters_predict_zero(self, rng):
        batch = tiny_batch(rng)
        params = ToyDenoiserParams(
            w1=np.zeros((4, 9)), b1=np.zeros(4), w2=np.zeros((6, 4)), b2=np.zeros(6)
        )
        assert (toy_denoise(batch, params) == 0.0).all()

    def test_all_zero_mask_ignores_sample(self, rng):
        zero = np.zeros((2, 3))
        shared = dict(
            eps=rng.normal(size=(2, 3)), mask=zero, cond=rng.normal(size=2), t=7
        )
        a = DenoiseBatch(x_t=rng.normal(size=(2, 3)), **shared)
        b = DenoiseBatch(x_t=rng.normal(size=(2, 3)), **shared)
        params = ToyDenoiserParams.init(6, 2, 5, rng)
        assert (toy_denoise(a, params) == toy_denoise(b, params)).all()

    def test_fixed_instance_matches_forward_pass_oracle(self):
        rng = np.random.default_rng(3)
        batch = tiny_batch(rng, shape=(2, 2), cond=1)
        params = ToyDenoiserParams.init(4, 1, 3, rng)
        got = toy_denoise(batch, params)
        feats = list((batch.x_t * batch.mask).reshape(-1)) + list(batch.cond) + [
            float(batch.t)
        ]
        hidden = [
            math.tanh(sum(params.w1[h, i] * feats[i] for i in range(len(feats)))
                      + params.b1[h])
            for h in range(3)
        ]
        want = [
            sum(params.w2[o, h] * hidden[h] for h in range(3)) + params.b2[o]
            for o in range(4)
        ]
        assert np.allclose(got.reshape(-1), want, atol=1e-12)

    def test_shape_mismatch_rejected(self, rng):
        batch = tiny_batch(rng)
        params = ToyDenoiserParams.init(99, 2, 4, rng)
        with pytest.raises(ValueError):
            toy_denoise(batch, params)


class TestLayerLoss:
    def test_all_ones_mask_is_plain_mse(self, rng):
        eps = rng.normal(size=(3, 4))
        pred = rng.normal(size=(3, 4))
        ones = np.ones((3, 4))
        assert abs(layer_loss(eps, pred, ones) - np.mean((eps - pred) ** 2)) < 1e-12

    def test_all_zero_mask_is_zero(self, rng):
        eps = rng.normal(size=(3, 4))
        pred = rng.normal(size=(3, 4))
        assert layer_loss(eps, pred, np.zeros((3, 4))) == 0.0

    def test_two_by_two_case(self):
        eps = np.array([[1.0, 0.0], [0.0, 1.0]])
        pred = np.zeros((2, 2))
        mask = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert layer_loss(eps, pred, mask) == 0.5

    def test_growing_mask_never_decreases_loss(self, rng):
        eps = rng.normal(size=(4, 4))
        pred = rng.normal(size=(4, 4))
        mask = (rng.uniform(size=(4, 4)) < 0.4).astype(float)
        grown = mask.copy()
        grown[rng.uniform(size=(4, 4)) < 0.5] = 1.0
        assert layer_loss(eps, pred, grown) >= layer_loss(eps, pred, mask)

    def test_non_binary_mask_rejected(self, rng):
        eps = rng.normal(size=(2, 2))
        with pytest.raises(ValueError, match="0 or 1"):
            layer_loss(eps, eps, np.full((2, 2), 0.5))

    def test_analytic_gradient_formula(self, rng):
        """d loss / d pred == -(2/N) * mask * (eps - pred), checked against
        central differences."""
        eps = rng.normal(size=(2, 3))
        pred = rng.normal(size=(2, 3))
        mask = (rng.uniform(size=(2, 3)) < 0.6).astype(float)
        n = eps.size
        analytic = -(2.0 / n) * mask * mask * (eps - pred)
        step = 1e-7
        for i in range(2):
            for j in range(3):
                up = pred.copy()
                up[i, j] += step
                down = pred.copy()
                down[i, j] -= step
                numeric = (layer_loss(eps, up, mask) - layer_loss(eps, down, mask)) / (
                    2 * step
                )
                assert abs(analytic[i, j] - numeric) < 1e-7


class TestGradientCheck:
    def test_quadratic_loss_is_exact(self):
        def loss(params):
            p = float(params["p"])
            return p * p, {"p": np.array(2.0 * p)}

        err = gradient_check(loss, {"p": np.array(1.0)}, step=1e-6)
        assert err < 1e-8

    def test_empty_parameter_set_is_vacuously_zero(self):
        def loss(params):
            return 1.0, {}

        assert gradient_check(loss, {}, step=1e-6) == 0.0

    def test_toy_denoiser_gradients_below_tolerance(self, rng):
        batches = [tiny_batch(rng) for _ in range(3)]
        params = ToyDenoiserParams.init(6, 2, 5, rng)

        def loss(p):
            return batch_loss_and_grad(batches, ToyDenoiserParams.from_dict(p))

        err = gradient_check(loss, params.as_dict(), step=1e-6)
        assert err < 1e-4

    def test_non_finite_loss_raises(self):
        def loss(params):
            return float("nan"), {"p": np.array(0.0)}

        with pytest.raises(FloatingPointError):
            gradient_check(loss, {"p": np.array(1.0)}, step=1e-6)

    def test_bad_step_rejected(self):
        with pytest.raises(ValueError):
            gradient_check(lambda p: (0.0, {}), {}, step=0.0)


class TestTensorTextFormat:
    def test_round_trip(self, tmp_path, rng):
        arr = rng.normal(size=(3, 5))
        save_tensor(arr, tmp_path / "t.txt")
        assert (load_tensor(tmp_path / "t.txt") == arr).all()
