import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gendistill.distill import (
    DistillConfig,
    OptimizerState,
    Reduction,
    adam_step,
    cosine,
    distill,
    layer_loss,
    layer_loss_terms,
    lr_at,
    total_loss,
    validate,
    warmup_steps,
)
from gendistill.errors import ConfigError, ContractError, DegenerateVectorError, DimensionError
from gendistill.io.audio import SyntheticCorpus, SyntheticSpec
from gendistill.models import DESK, TeacherConfig, build_student, build_teacher
from gendistill.models.teacher import LayerStack
from gendistill.tensor import Tape, Tensor, finite_diff_check, ops

NEG_LOG_SIGMOID_1 = 0.3132616875182228  # mpmath, 50 digits
ORTHOGONAL = 1.0 + math.log(2.0)


def scalar_loop_loss(pred, target, lam):
    total = 0.0
    t, d = pred.shape
    for i in range(t):
        l1 = sum(abs(pred[i, j] - target[i, j]) for j in range(d)) / d
        dot = sum(pred[i, j] * target[i, j] for j in range(d))
        nu = math.sqrt(sum(x * x for x in pred[i]))
        nv = math.sqrt(sum(x * x for x in target[i]))
        c = dot / (nu * nv)
        total += l1 + lam * math.log1p(math.exp(-c))
    return total


class TestCosine:
    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]).item() == 0.0

    def test_scale_invariant(self, rng):
        u = rng.standard_normal(5)
        assert abs(cosine(u, 3 * u).item() - 1.0) <= 1e-15

    def test_opposite(self):
        assert cosine([1.0, 0.0], [-1.0, 0.0]).item() == -1.0

    def test_zero_norm(self):
        with pytest.raises(DegenerateVectorError):
            cosine([0.0, 0.0], [1.0, 0.0])


class TestLayerLoss:
    def test_identity(self):
        x = np.array([[0.3, -1.2, 2.0]])
        assert abs(layer_loss(x, x, 1.0).item() - NEG_LOG_SIGMOID_1) <= 1e-9

    def test_orthogonal(self):
        assert abs(layer_loss([[1.0, 0.0]], [[0.0, 1.0]], 1.0).item() - ORTHOGONAL) <= 1e-9

    def test_scalar_loop_oracle(self, rng):
        p, t = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        assert abs(layer_loss(p, t, 1.0).item() - scalar_loop_loss(p, t, 1.0)) <= 1e-12
        assert abs(layer_loss(p, t, 0.4).item() - scalar_loop_loss(p, t, 0.4)) <= 1e-12

    def test_mean_reduction_divides_by_t(self, rng):
        p, t = rng.standard_normal((6, 3)), rng.standard_normal((6, 3))
        a = layer_loss(p, t, 1.0, Reduction.SUM_T).item()
        b = layer_loss(p, t, 1.0, Reduction.MEAN_T_AND_L).item()
        assert abs(a / 6 - b) <= 1e-14

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 5), st.floats(0.01, 10.0), st.integers(0, 2**31))
    def test_identity_constant_per_frame(self, t, d, lam, seed):
        x = np.random.default_rng(seed).standard_normal((t, d)) + 0.1
        got = layer_loss(x, x, lam).item()
        assert abs(got - t * lam * NEG_LOG_SIGMOID_1) <= 1e-12 * t * max(lam, 1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.01, 100.0))
    def test_nonnegative_and_cos_term_scale_free(self, seed, c):
        r = np.random.default_rng(seed)
        p, t = r.standard_normal((3, 4)), r.standard_normal((3, 4))
        assert layer_loss(p, t, 1.0).item() >= 0
        _, cos_a = layer_loss_terms(p, t, 1.0, Reduction.SUM_T)
        _, cos_b = layer_loss_terms(c * p, t, 1.0, Reduction.SUM_T)
        assert abs(cos_a.item() - cos_b.item()) <= 1e-12

    def test_gradient(self, rng):
        p, t = Tensor(rng.standard_normal((4, 3))), Tensor(rng.standard_normal((4, 3)))
        assert finite_diff_check(lambda p, t: layer_loss(p, t, 1.0), [p, t], h=1e-5) <= 1e-6

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            layer_loss(np.ones((2, 3)), np.ones((3, 2)))

    def test_lambda_zero_has_no_cosine(self):
        l1, cos = layer_loss_terms([[1.0, 0.0]], [[0.0, 1.0]], 0.0)
        assert cos.item() == 0.0 and l1.item() == 1.0


class TestTotalLoss:
    def test_single_layer(self, rng):
        p, t = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        for red in Reduction:
            assert total_loss([p], [t], 1.0, red).item() == layer_loss(p, t, 1.0, red).item()

    def test_all_equal(self, rng):
        xs = [rng.standard_normal((5, 4)) for _ in range(3)]
        assert abs(total_loss(xs, xs, 1.0).item() - NEG_LOG_SIGMOID_1) <= 1e-12

    def test_two_layer_composition(self, rng):
        p = [rng.standard_normal((4, 3)) for _ in range(2)]
        t = [rng.standard_normal((4, 3)) for _ in range(2)]
        by_hand = [scalar_loop_loss(a, b, 1.0) for a, b in zip(p, t)]
        assert abs(total_loss(p, t, 1.0, Reduction.SUM_T).item() - sum(by_hand)) <= 1e-12
        assert abs(total_loss(p, t, 1.0).item() - sum(by_hand) / 8) <= 1e-12

    def test_length_mismatch(self, rng):
        with pytest.raises(DimensionError):
            total_loss([np.ones((2, 2))], [np.ones((2, 2))] * 2)


class TestSchedule:
    def test_reference_points(self):
        assert warmup_steps(200_000, 0.07) == 14_000
        assert lr_at(0, 200_000) == 0.0
        assert lr_at(14_000, 200_000) == 2.0e-4
        assert lr_at(107_000, 200_000) == 1.0e-4

    def test_out_of_range(self):
        for s in (-1, 200_000):
            with pytest.raises(ContractError):
                lr_at(s, 200_000)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 5000), st.floats(0.01, 0.9))
    def test_peak_and_continuity(self, total, frac):
        w = warmup_steps(total, frac)
        rates = [lr_at(s, total, 1.0, frac) for s in range(total)]
        assert max(rates) <= 1.0
        if 0 < w < total:
            assert rates[w] == 1.0
            # linear on both sides of the corner
            assert abs(rates[w - 1] - (w - 1) / w) <= 1e-15
        assert all(r >= 0 for r in rates)


class TestAdam:
    def test_zero_gradient(self):
        p = {"w": Tensor(np.array([1.0, -2.0]))}
        adam_step(p, {"w": np.zeros(2)}, OptimizerState(), 0.1)
        np.testing.assert_array_equal(p["w"].data, [1.0, -2.0])

    def test_first_step_closed_form(self, rng):
        w0 = rng.standard_normal(6)
        g = rng.standard_normal(6) * 10.0 ** rng.integers(-4, 2, 6)
        p = {"w": Tensor(w0.copy())}
        adam_step(p, {"w": g}, OptimizerState(), 1e-3)
        # after bias correction m_hat = g and sqrt(v_hat) = |g|
        expected = w0 - 1e-3 * g / (np.abs(g) + 1e-8)
        np.testing.assert_allclose(p["w"].data, expected, rtol=0, atol=1e-9)

    def test_quadratic_bowl(self, rng):
        target = rng.standard_normal(4)
        w = Tensor(np.zeros(4), requires_grad=True)
        state = OptimizerState()
        values = []
        for _ in range(100):
            with Tape() as tape:
                d = w - Tensor(target)
                loss = ops.sum(d * d)
            values.append(loss.item())
            adam_step({"w": w}, tape.gradient(loss, {"w": w}), state, 0.01)
        assert all(b < a for a, b in zip(values[5:], values[6:]))
        assert values[-1] < 0.5 * values[0]

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            adam_step({"w": Tensor(np.zeros(2))}, {"w": np.zeros(3)}, OptimizerState(), 0.1)


class TestConfig:
    def test_defaults(self):
        c = DistillConfig()
        assert (c.target_layers, c.lam, c.total_steps, c.peak_lr, c.batch_size) == ((4, 8, 12), 1.0, 200_000, 2e-4, 24)
        assert c.reduction is Reduction.MEAN_T_AND_L

    @pytest.mark.parametrize("kw", [dict(target_layers=(8, 4)), dict(target_layers=(0, 4)), dict(lam=-1.0),
                                    dict(total_steps=0), dict(warmup_fraction=1.0), dict(warmup_fraction=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            DistillConfig(**kw)

    def test_teacher_depth(self):
        with pytest.raises(ConfigError):
            DistillConfig(target_layers=(4, 13)).check_teacher_depth(12)


SMALL_TEACHER = TeacherConfig(DESK.frontend, DESK.block, 4, seed=1)
SMALL_SPEC = SyntheticSpec(min_samples=256, max_samples=320)


def _small_run(seed=5, lam=1.0, steps=12):
    teacher = build_teacher(SMALL_TEACHER)
    student = build_student("proposed", DESK.frontend, DESK.block, seed=2, teacher=teacher)
    cfg = DistillConfig(target_layers=(2, 4), lam=lam, total_steps=steps, peak_lr=2e-3, batch_size=4,
                        seed=seed, val_every=5)
    corpus = SyntheticCorpus(SMALL_SPEC, 32, 4)
    return distill(teacher, student, cfg, corpus), student, teacher, corpus, cfg


class TestTraining:
    def test_trace_shape(self):
        trace, student, *_ = _small_run()
        assert [r.step for r in trace.rows] == list(range(13))
        assert [s for s, _ in trace.validation()] == [0, 5, 10, 12]
        assert student.trained_target_count == 2
        header, *lines = trace.to_csv().splitlines()
        assert header == "step,lr,total_loss,l1_term,cos_term,val_total"
        assert lines[1].endswith(",") and lines[-1].startswith("12,,,,,")

    def test_decomposition(self):
        trace, *_ = _small_run()
        for r in trace.rows[:-1]:
            assert abs(r.l1_term + r.cos_term - r.total_loss) <= 1e-12

    def test_deterministic(self):
        a, *_ = _small_run()
        b, *_ = _small_run()
        assert a.to_csv() == b.to_csv()
        c, *_ = _small_run(seed=6)
        assert a.to_csv() != c.to_csv()

    def test_lambda_zero(self):
        trace, *_ = _small_run(lam=0.0, steps=6)
        assert all(r.cos_term == 0.0 and r.total_loss == r.l1_term for r in trace.rows[:-1])

    def test_teacher_untouched(self):
        teacher = build_teacher(SMALL_TEACHER)
        before = {k: v.data.copy() for k, v in teacher.named_parameters()}
        student = build_student("proposed", DESK.frontend, DESK.block, seed=2)
        cfg = DistillConfig(target_layers=(2, 4), total_steps=3, batch_size=2, val_every=10)
        distill(teacher, student, cfg, SyntheticCorpus(SMALL_SPEC, 8, 2))
        for k, v in teacher.named_parameters():
            np.testing.assert_array_equal(v.data, before[k])

    def test_teacher_gets_zero_gradient(self):
        teacher = build_teacher(SMALL_TEACHER)
        student = build_student("proposed", DESK.frontend, DESK.block, seed=2)
        wave = np.random.default_rng(0).standard_normal(256)
        with Tape() as tape:
            targets = teacher(wave).select([2, 4])
            _, preds = student(wave, 2)
            loss = total_loss(preds, targets)
        tparams = teacher.parameters()
        grads = tape.gradient(loss, tparams)
        assert all(not np.any(g) for g in grads.values())

    def test_degenerate_step_skipped(self, monkeypatch):
        train_mod = sys.modules["gendistill.distill.train"]

        real = train_mod.total_loss_terms
        calls = []

        def flaky(*args, **kwargs):
            calls.append(1)
            # call order: validation at step 0, step 0, step 1, final validation
            if len(calls) == 3:
                raise DegenerateVectorError("cosine similarity of a zero-norm vector")
            return real(*args, **kwargs)

        monkeypatch.setattr(train_mod, "total_loss_terms", flaky)
        teacher = build_teacher(SMALL_TEACHER)
        student = build_student("proposed", DESK.frontend, DESK.block, seed=2)
        cfg = DistillConfig(target_layers=(2,), total_steps=3, batch_size=2, val_every=100)
        trace = distill(teacher, student, cfg, SyntheticCorpus(SyntheticSpec(min_samples=256, max_samples=256), 4, 1))
        assert trace.skipped_steps == [1]
        assert trace.rows[1].total_loss is None and trace.rows[2].total_loss is not None


class TestValidate:
    def test_self_as_teacher(self):
        student = build_student("proposed", DESK.frontend, DESK.block, seed=3)
        waves = [np.random.default_rng(i).standard_normal(256) for i in range(3)]
        targets = [[h.data for h in student.predict(student.features(w), 2)] for w in waves]
        m = validate(student, None, waves, (1, 2), 0.7, targets=targets)
        assert abs(m.total - 0.7 * NEG_LOG_SIGMOID_1) <= 1e-12
        assert m.l1 == [0.0, 0.0]

    def test_order_invariant(self):
        teacher = build_teacher(SMALL_TEACHER)
        student = build_student("proposed", DESK.frontend, DESK.block, seed=3)
        waves = [np.random.default_rng(i).standard_normal(256) for i in range(5)]
        a = validate(student, teacher, waves, (2, 4))
        b = validate(student, teacher, waves[::-1], (2, 4))
        assert a.total == b.total

    def test_stack_select(self):
        stack = LayerStack(Tensor(np.zeros((2, 2))), [Tensor(np.full((2, 2), i)) for i in range(1, 4)])
        assert [int(t.data[0, 0]) for t in stack.select([1, 3])] == [1, 3]
