import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gendistill.errors import ConfigError, DimensionError
from gendistill.evalkit import (
    REPORT_HEADER,
    AblationRun,
    AblationSuite,
    FeaturizerWeights,
    accuracy_from_predictions,
    builtin_suite,
    eval_probe,
    get_task,
    parse_suite,
    pooled_members,
    run_ablation,
    train_probe,
    weighted_features,
)
from gendistill.evalkit.ablation import ARCHITECTURE_RUNS, TARGET_RUNS
from gendistill.io.runconfig import RunConfig
from gendistill.models import DESK, build_student, count_params
from gendistill.tensor import Tensor


def model_hash(model):
    h = hashlib.sha256()
    for k, v in model.named_parameters():
        h.update(k.encode())
        h.update(v.data.tobytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def student():
    s = build_student("proposed", DESK.frontend, DESK.block, seed=0)
    s.trained_target_count = 3
    return s


class TestWeightedFeatures:
    def test_one_hot(self, rng):
        members = [rng.standard_normal((4, 3)) for _ in range(3)]
        out = weighted_features(members, np.array([0.0, 31.0, 0.5]))
        np.testing.assert_array_equal(out.data, members[1])

    def test_equal_logits_mean(self, rng):
        members = [rng.standard_normal((4, 3)) for _ in range(4)]
        out = weighted_features(members, np.zeros(4))
        np.testing.assert_allclose(out.data, np.mean(members, axis=0), rtol=0, atol=1e-15)

    def test_scalar_loop(self, rng):
        members = [rng.standard_normal((5, 3)) for _ in range(4)]
        logits = rng.standard_normal(4)
        e = [np.exp(x - max(logits)) for x in logits]
        w = [x / sum(e) for x in e]
        expected = np.zeros((5, 3))
        for t in range(5):
            for d in range(3):
                expected[t, d] = sum(w[i] * members[i][t, d] for i in range(4))
        np.testing.assert_allclose(weighted_features(members, logits).data, expected, rtol=0, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            weighted_features([np.ones((2, 2)), np.ones((3, 2))], np.zeros(2))
        with pytest.raises(DimensionError):
            weighted_features([np.ones((2, 2))], np.zeros(2))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=8), st.floats(-100, 100))
    def test_probability_vector(self, logits, c):
        w = FeaturizerWeights(np.array(logits)).weights
        assert np.all(w > 0) and abs(w.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(FeaturizerWeights(np.array(logits) + c).weights, w, rtol=0, atol=1e-12)


class TestTasks:
    def test_disjoint_ranges(self):
        task = get_task("band", n_train=8, n_eval=8)
        train, _ = task.train_set()
        evals, _ = task.eval_set()
        assert not any(np.array_equal(a, b) for a in train for b in evals)

    def test_shuffled_labels_are_balanced_within_classes(self):
        task = get_task("energy-shuffled")
        _, shuffled = task.train_set()
        _, truth = get_task("energy").train_set()
        for c in (0, 1):
            counts = np.bincount(shuffled[truth == c], minlength=2)
            assert abs(counts[0] - counts[1]) <= 1

    def test_unknown(self):
        with pytest.raises(ConfigError):
            get_task("speaker-id")


class TestProbe:
    def test_deterministic_and_frozen(self, student):
        task = get_task("energy", n_train=32, n_eval=16)
        before = model_hash(student)
        a = train_probe(student, task, steps=30)
        b = train_probe(student, task, steps=30)
        np.testing.assert_array_equal(a.featurizer.logits, b.featurizer.logits)
        np.testing.assert_array_equal(a.weight, b.weight)
        assert model_hash(student) == before

    def test_confusion_and_recompute(self, student):
        task = get_task("band", n_train=32, n_eval=40)
        probe = train_probe(student, task, steps=30)
        res = eval_probe(probe, student, task)
        np.testing.assert_array_equal(res.confusion.sum(axis=1), np.bincount(res.labels, minlength=task.n_classes))
        assert accuracy_from_predictions(res.predictions, res.labels) == res.accuracy

    def test_perfect_probe(self, student):
        task = get_task("energy", n_train=16, n_eval=16)
        probe = train_probe(student, task, steps=1)
        # a probe that reads the label off a planted feature scores 1.0
        waves, labels = task.eval_set()
        pooled = pooled_members(student, waves, probe.gen_length)
        probe.weight = np.zeros_like(probe.weight)
        probe.bias = np.zeros_like(probe.bias)
        shifted = pooled.copy()
        shifted[:, :, 0] = np.where(labels == 1, 1.0, -1.0)[:, None]
        probe.weight[0] = [-1.0, 1.0]
        assert (probe.predict(shifted) == labels).all()

    def test_pooled_shape(self, student):
        waves, _ = get_task("band", n_eval=3).eval_set()
        assert pooled_members(student, waves, 2).shape == (3, 3, 32)

    def test_fixed_featurizer(self, student):
        task = get_task("energy", n_train=16, n_eval=16)
        probe = train_probe(student, task, steps=10, learn_featurizer=False)
        np.testing.assert_array_equal(probe.featurizer.weights, np.full(4, 0.25))


class TestAblation:
    def test_builtin_shapes(self):
        assert len(builtin_suite("architecture").runs) == 7 == len(ARCHITECTURE_RUNS)
        lengths = [r.gen_length for r in TARGET_RUNS if r.reuse == "4,8,12"]
        assert lengths == [2, 3, 4]
        with pytest.raises(ConfigError):
            builtin_suite("table9")

    def test_suite_validation(self):
        with pytest.raises(ConfigError):
            AblationSuite("x", (AblationRun("a"), AblationRun("a")))
        with pytest.raises(ConfigError):
            AblationSuite("x", (AblationRun("b", reuse="a"), AblationRun("a")))

    def test_parse_suite(self):
        suite = parse_suite("[suite]\nsteps = 7\nseed = 2\n[run.a]\nvariant = ar-skip\nffn_hidden = 43\n"
                            "[run.b]\nreuse = a\ngen_length = 5\n")
        assert suite.base.distill.total_steps == 7 and suite.seed == 2
        assert suite.runs[0].variant == "ar-skip" and suite.runs[1].gen_length == 5
        with pytest.raises(ConfigError):
            parse_suite("[run.a]\nbogus = 1\n")

    def test_run_small_suite(self):
        base = RunConfig.preset("desk", total_steps=3, val_every=10)
        runs = (
            AblationRun("plain", variant="ar-plain"),
            AblationRun("parallel", variant="feat-2-layers"),
            AblationRun("narrow", ffn_hidden=43, conv_channels=16),
            AblationRun("len2", reuse="plain", gen_length=2),
            AblationRun("broken", target_layers=(4, 20)),
        )
        suite = AblationSuite("t", runs, base=base, probe_steps=5)
        report = run_ablation(suite)
        header, *lines = report.to_csv().splitlines()
        assert tuple(header.split(",")) == REPORT_HEADER and len(lines) == 5
        ok = [r for r in report.rows if r.error is None]
        assert [r.run for r in ok] == ["plain", "parallel", "narrow", "len2"]
        for row, run in zip(ok, runs):
            assert row.params == count_params(suite.run_config(runs[0] if run.reuse else run).student)
        assert report.rows[3].val_loss != report.rows[0].val_loss and report.rows[3].gen_length == 2
        assert "exceeds teacher depth" in report.rows[4].error
        # bit-for-bit reproducible
        assert run_ablation(suite).to_csv() == report.to_csv()
