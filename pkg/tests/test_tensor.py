import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gendistill.errors import ContractError, DimensionError, InputTooShortError
from gendistill.tensor import (
    Tape,
    Tensor,
    backward,
    conv1d,
    conv_output_length,
    finite_diff_check,
    gelu,
    layer_norm,
    matmul,
    no_grad,
    ops,
    softmax,
)

# erf reference computed with mpmath at 50 significant digits
GELU_1 = 0.8413447460685429


def triple_loop_matmul(a, b):
    n, k = a.shape
    m = b.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for p in range(k):
                acc += a[i, p] * b[p, j]
            out[i, j] = acc
    return out


def loop_conv1d(x, w, bias, stride, groups):
    c_in, t = x.shape
    c_out, cpg, k = w.shape
    opg = c_out // groups
    t_out = (t - k) // stride + 1
    out = np.zeros((c_out, t_out))
    for o in range(c_out):
        g = o // opg
        for s in range(t_out):
            acc = 0.0 if bias is None else bias[o]
            for ci in range(cpg):
                for j in range(k):
                    acc += w[o, ci, j] * x[g * cpg + ci, s * stride + j]
            out[o, s] = acc
    return out


class TestMatmul:
    def test_identity(self, rng):
        b = rng.standard_normal((3, 2))
        np.testing.assert_array_equal(matmul(Tensor(np.eye(3)), Tensor(b)).data, b)

    def test_scalar_case(self):
        assert matmul(Tensor([[2.0]]), Tensor([[3.0]])).data.tolist() == [[6.0]]

    def test_triple_loop_oracle(self, rng):
        a, b = rng.standard_normal((5, 4)), rng.standard_normal((4, 3))
        np.testing.assert_allclose(matmul(Tensor(a), Tensor(b)).data, triple_loop_matmul(a, b), rtol=0, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 16), st.integers(1, 16), st.integers(1, 16), st.integers(0, 2**31))
    def test_oracle_all_extents(self, n, k, m, seed):
        r = np.random.default_rng(seed)
        a, b = r.standard_normal((n, k)), r.standard_normal((k, m))
        np.testing.assert_allclose(matmul(Tensor(a), Tensor(b)).data, triple_loop_matmul(a, b), rtol=0, atol=1e-12)

    def test_inner_mismatch(self):
        with pytest.raises(DimensionError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestGelu:
    def test_zero(self):
        assert gelu(Tensor([0.0])).data[0] == 0.0

    def test_saturation(self):
        assert abs(gelu(Tensor([10.0])).data[0] - 10.0) <= 1e-9

    def test_high_precision_value(self):
        assert abs(gelu(Tensor([1.0])).data[0] - GELU_1) <= 1e-15


class TestLayerNorm:
    def test_constant_row(self):
        out = layer_norm(Tensor(np.full((1, 5), 3.0)), Tensor(np.ones(5)), Tensor(np.zeros(5)), 1e-5)
        np.testing.assert_array_equal(out.data, np.zeros((1, 5)))

    def test_normalizes(self, rng):
        out = layer_norm(Tensor(rng.standard_normal((4, 9)) * 5 + 2), Tensor(np.ones(9)), Tensor(np.zeros(9)), 1e-12)
        np.testing.assert_allclose(out.data.mean(axis=1), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.data.var(axis=1), 1.0, atol=1e-9)

    def test_hand_case(self):
        out = layer_norm(Tensor([[1.0, 3.0]]), Tensor(np.ones(2)), Tensor(np.zeros(2)), 0.0)
        assert out.data.tolist() == [[-1.0, 1.0]]


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(softmax(Tensor(np.full(4, 7.0))).data, 0.25, rtol=0, atol=1e-15)

    def test_hand_case(self):
        np.testing.assert_allclose(softmax(Tensor([0.0, math.log(3.0)])).data, [0.25, 0.75], rtol=0, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.floats(-100, 100))
    def test_shift_invariance_and_normalization(self, xs, c):
        x = np.array(xs)
        a, b = softmax(Tensor(x)).data, softmax(Tensor(x + c)).data
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
        assert abs(a.sum() - 1.0) <= 1e-12

    def test_extreme_logits_stay_finite(self):
        assert np.all(np.isfinite(softmax(Tensor([1000.0, -1000.0, 0.0])).data))


class TestConv1d:
    def test_identity_kernel(self, rng):
        x = rng.standard_normal((1, 7))
        np.testing.assert_array_equal(conv1d(Tensor(x), Tensor(np.ones((1, 1, 1)))).data, x)

    def test_hand_case(self):
        out = conv1d(Tensor([[1.0, 2.0, 3.0, 4.0]]), Tensor([[[0.5, 0.5]]]), stride=2)
        assert out.data.tolist() == [[1.5, 3.5]]

    def test_nested_loop_oracle(self, rng):
        x, w, b = rng.standard_normal((4, 13)), rng.standard_normal((6, 2, 3)), rng.standard_normal(6)
        got = conv1d(Tensor(x), Tensor(w), Tensor(b), stride=2, groups=2).data
        np.testing.assert_allclose(got, loop_conv1d(x, w, b, 2, 2), rtol=0, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3), st.integers(1, 5), st.integers(1, 3),
           st.integers(0, 16), st.integers(0, 2**31))
    def test_oracle_all_extents(self, groups, cpg, opg, k, stride, extra, seed):
        r = np.random.default_rng(seed)
        t = k + extra
        x = r.standard_normal((groups * cpg, t))
        w = r.standard_normal((groups * opg, cpg, k))
        got = conv1d(Tensor(x), Tensor(w), stride=stride, groups=groups).data
        np.testing.assert_allclose(got, loop_conv1d(x, w, None, stride, groups), rtol=0, atol=1e-12)

    def test_batched_matches_unbatched(self, rng):
        x, w = rng.standard_normal((3, 2, 11)), rng.standard_normal((4, 2, 3))
        batched = conv1d(Tensor(x), Tensor(w), stride=2).data
        for i in range(3):
            np.testing.assert_array_equal(batched[i], conv1d(Tensor(x[i]), Tensor(w), stride=2).data)

    def test_too_short(self):
        with pytest.raises(InputTooShortError):
            conv1d(Tensor(np.ones((1, 2))), Tensor(np.ones((1, 1, 3))))
        with pytest.raises(InputTooShortError):
            conv_output_length(2, 3, 1)

    def test_bad_groups(self):
        with pytest.raises(DimensionError):
            conv1d(Tensor(np.ones((3, 8))), Tensor(np.ones((2, 1, 2))), groups=2)


class TestBackward:
    def test_product(self):
        x = Tensor(2.0, requires_grad=True)
        y = Tensor(5.0, requires_grad=True)
        with Tape() as tape:
            loss = x * y
        gx, gy = backward(loss, tape, [x, y])
        assert gx == 5.0 and gy == 2.0
        # default: every leaf on the tape, in first-use order
        assert [float(g) for g in backward(loss, tape)] == [5.0, 2.0]

    def test_gradient_by_name(self):
        x = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum(x * x)
        np.testing.assert_array_equal(tape.gradient(loss, {"x": x})["x"], [2.0, -4.0])

    def test_unused_leaf_gets_zeros(self):
        x, unused = Tensor(1.0, requires_grad=True), Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            loss = x * 3.0
        np.testing.assert_array_equal(tape.gradient(loss, [x, unused])[1], np.zeros(3))

    def test_non_scalar_root(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            y = x * 2.0
        with pytest.raises(ContractError):
            tape.gradient(y, [x])

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with Tape() as tape, no_grad():
            ops.sum(x * x)
        assert len(tape) == 0


class TestFiniteDiff:
    def test_linear_is_exact(self, rng):
        c = Tensor(rng.standard_normal((3, 4)))
        x = Tensor(rng.standard_normal((3, 4)))
        assert finite_diff_check(lambda x: ops.sum(x * c), [x]) < 1e-9

    def test_gelu_composite(self, rng):
        x = Tensor(rng.standard_normal((4, 5)))
        w = Tensor(rng.standard_normal((5, 3)))
        assert finite_diff_check(lambda x, w: ops.sum(gelu(matmul(x, w))), [x, w], h=1e-5) <= 1e-6

    def test_inputs_restored(self, rng):
        x0 = rng.standard_normal(5)
        x = Tensor(x0.copy())
        finite_diff_check(lambda x: ops.sum(ops.exp(x)), [x])
        np.testing.assert_array_equal(x.data, x0)

    def test_detects_wrong_gradient(self):
        from gendistill.tensor.core import make_result

        def bad_square(x):
            return make_result(x.data**2, (x,), lambda g: (g * x.data,))  # missing factor 2

        x = Tensor(np.array([0.7, -1.3]))
        assert finite_diff_check(lambda x: ops.sum(bad_square(x)), [x]) > 0.1
