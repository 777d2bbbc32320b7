import math

import numpy as np
import pytest

from lossadapt.errors import ConfigError, DataError, NumericError, ShapeError
from lossadapt.models import (
    Batch,
    GradientSet,
    ModelSpec,
    check_congruent,
    cross_entropy,
    evaluate,
    forward,
    init_params,
    log_softmax,
    loss_and_backward,
    predict,
)
from lossadapt.rng import make_rng


def finite_difference_grads(params, spec, batch, eps=1e-6):
    """Central differences on every parameter entry."""
    out = []
    for arr in params.arrays:
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            lp = cross_entropy(forward(params, spec, batch.x), batch.y)
            arr[idx] = orig - eps
            lm = cross_entropy(forward(params, spec, batch.x), batch.y)
            arr[idx] = orig
            g[idx] = (lp - lm) / (2 * eps)
        out.append(g)
    return GradientSet(params.names, out)


class TestModelSpec:
    def test_defaults(self):
        spec = ModelSpec()
        assert spec.kind == "mlp"
        assert spec.layer_widths == (784, 256, 128, 10)
        assert spec.activation == "relu"
        assert spec.n_features == 784
        assert spec.n_classes == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "transformer"},
            {"layer_widths": (4,)},
            {"kind": "logistic_regression", "layer_widths": (4, 8, 2)},
            {"layer_widths": (4, 0, 2)},
            {"activation": "gelu"},
        ],
    )
    def test_rejects_bad_spec(self, kwargs):
        with pytest.raises(ConfigError):
            ModelSpec(**kwargs)


class TestInit:
    def test_shapes_and_names(self):
        spec = ModelSpec(layer_widths=(4, 3, 2))
        params = init_params(spec, make_rng(0))
        assert params.names == ("w0", "b0", "w1", "b1")
        assert params.shapes() == [(4, 3), (1, 3), (3, 2), (1, 2)]
        np.testing.assert_array_equal(params.arrays[1], 0.0)
        np.testing.assert_array_equal(params.arrays[3], 0.0)

    def test_weight_range(self):
        spec = ModelSpec(layer_widths=(50, 40))
        params = init_params(spec, make_rng(0))
        bound = math.sqrt(6.0 / 90.0)
        w = params.arrays[0]
        assert np.abs(w).max() <= bound
        assert np.abs(w).max() > 0.5 * bound

    def test_deterministic(self):
        spec = ModelSpec(layer_widths=(6, 4, 2))
        a = init_params(spec, make_rng(123))
        b = init_params(spec, make_rng(123))
        for x, y in zip(a.arrays, b.arrays):
            np.testing.assert_array_equal(x, y)

    def test_copy_is_independent(self):
        spec = ModelSpec(layer_widths=(3, 2))
        params = init_params(spec, make_rng(0))
        dup = params.copy()
        dup.arrays[0][0, 0] = 99.0
        assert params.arrays[0][0, 0] != 99.0


class TestForward:
    def test_hand_computed_logistic_regression(self):
        spec = ModelSpec(kind="logistic_regression", layer_widths=(2, 2))
        params = init_params(spec, make_rng(0))
        params.arrays[0][:] = [[1.0, 0.0], [0.0, 1.0]]
        params.arrays[1][:] = [[0.5, -0.5]]
        x = np.array([[2.0, 3.0]])
        logits = forward(params, spec, x)
        np.testing.assert_allclose(logits, [[2.5, 2.5]])

    def test_relu_kills_negative_path(self):
        spec = ModelSpec(layer_widths=(1, 1, 1), activation="relu")
        params = init_params(spec, make_rng(0))
        params.arrays[0][:] = [[-1.0]]
        params.arrays[2][:] = [[5.0]]
        logits = forward(params, spec, np.array([[3.0]]))
        np.testing.assert_allclose(logits, [[0.0]])

    def test_tanh_path(self):
        spec = ModelSpec(layer_widths=(1, 1, 1), activation="tanh")
        params = init_params(spec, make_rng(0))
        params.arrays[0][:] = [[1.0]]
        params.arrays[2][:] = [[1.0]]
        logits = forward(params, spec, np.array([[0.5]]))
        np.testing.assert_allclose(logits, [[math.tanh(0.5)]])

    def test_feature_mismatch_raises(self):
        spec = ModelSpec(layer_widths=(4, 2))
        params = init_params(spec, make_rng(0))
        with pytest.raises(ShapeError):
            forward(params, spec, np.ones((5, 3)))

    def test_congruence_check(self):
        spec = ModelSpec(layer_widths=(3, 2))
        params = init_params(spec, make_rng(0))
        bad = GradientSet(params.names, [np.ones((3, 2)), np.ones((1, 3))])
        with pytest.raises(ShapeError):
            check_congruent(params, bad)


class TestLoss:
    def test_uniform_logits_give_log_c(self):
        # all-equal logits over C classes: loss = ln(C) exactly
        for c in (2, 3, 10):
            logits = np.zeros((4, c))
            y = np.zeros(4, dtype=np.int64)
            assert cross_entropy(logits, y) == pytest.approx(
                math.log(c), abs=1e-12
            )
        assert cross_entropy(np.zeros((1, 3)), np.array([2])) == pytest.approx(
            1.0986122886681098, abs=1e-12
        )

    def test_log_softmax_shift_invariant(self):
        logits = np.array([[1.0, 2.0, 3.0]])
        a = log_softmax(logits)
        b = log_softmax(logits + 500.0)
        np.testing.assert_allclose(a, b, atol=1e-12)
        np.testing.assert_allclose(np.exp(a).sum(), 1.0)

    def test_extreme_logits_stable(self):
        logits = np.array([[1000.0, -1000.0]])
        val = cross_entropy(logits, np.array([0]))
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_two_class(self):
        logits = np.array([[1.0, -1.0]])
        y = np.array([1])
        expected = math.log(1.0 + math.exp(2.0))
        assert cross_entropy(logits, y) == pytest.approx(expected, rel=1e-12)


class TestBackward:
    @pytest.mark.parametrize("activation", ["relu", "tanh"])
    @pytest.mark.parametrize("widths", [(3, 4, 2), (5, 3), (4, 6, 5, 3)])
    def test_matches_finite_differences(self, activation, widths):
        if len(widths) == 2:
            spec = ModelSpec(kind="logistic_regression", layer_widths=widths)
        else:
            spec = ModelSpec(layer_widths=widths, activation=activation)
        rng = make_rng(5)
        params = init_params(spec, rng)
        x = rng.normal(0, 1, (7, widths[0]))
        y = rng.integers(0, widths[-1], 7)
        batch = Batch(x, y)
        loss, grads = loss_and_backward(params, spec, batch)
        ref = finite_difference_grads(params, spec, batch)
        for g, r in zip(grads.arrays, ref.arrays):
            np.testing.assert_allclose(g, r, atol=1e-7)

    def test_loss_matches_forward(self):
        spec = ModelSpec(layer_widths=(4, 3, 2))
        rng = make_rng(9)
        params = init_params(spec, rng)
        x = rng.normal(0, 1, (5, 4))
        y = rng.integers(0, 2, 5)
        loss, _ = loss_and_backward(params, spec, Batch(x, y))
        direct = cross_entropy(forward(params, spec, x), y)
        assert loss == pytest.approx(direct, rel=1e-12)

    def test_label_out_of_range(self):
        spec = ModelSpec(layer_widths=(4, 2))
        params = init_params(spec, make_rng(0))
        with pytest.raises(DataError):
            loss_and_backward(params, spec, Batch(np.ones((2, 4)), np.array([0, 2])))

    def test_empty_batch(self):
        spec = ModelSpec(layer_widths=(4, 2))
        params = init_params(spec, make_rng(0))
        with pytest.raises(DataError):
            loss_and_backward(
                params, spec, Batch(np.ones((0, 4)), np.zeros(0, dtype=int))
            )

    def test_row_count_mismatch(self):
        spec = ModelSpec(layer_widths=(4, 2))
        params = init_params(spec, make_rng(0))
        with pytest.raises(ShapeError):
            loss_and_backward(
                params, spec, Batch(np.ones((3, 4)), np.zeros(2, dtype=int))
            )

    def test_nonfinite_input_raises(self):
        spec = ModelSpec(layer_widths=(2, 2))
        params = init_params(spec, make_rng(0))
        x = np.array([[np.nan, 1.0]])
        with pytest.raises(NumericError):
            loss_and_backward(params, spec, Batch(x, np.array([0])))


class TestEvaluate:
    def test_accuracy_counts_argmax_hits(self):
        spec = ModelSpec(kind="logistic_regression", layer_widths=(2, 2))
        params = init_params(spec, make_rng(0))
        params.arrays[0][:] = [[1.0, 0.0], [0.0, 1.0]]
        params.arrays[1][:] = 0.0
        x = np.array([[3.0, 0.0], [0.0, 3.0], [3.0, 0.0]])
        y = np.array([0, 1, 1])  # last one wrong
        loss, acc = evaluate(params, spec, x, y)
        assert acc == pytest.approx(2.0 / 3.0)
        assert loss > 0.0

    def test_predict_shapes(self):
        spec = ModelSpec(layer_widths=(4, 3, 2))
        params = init_params(spec, make_rng(0))
        out = predict(params, spec, np.ones((6, 4)))
        assert out.shape == (6,)
        assert out.dtype.kind == "i"
