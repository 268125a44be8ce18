"""Weighted-sum featurization and linear probes on synthetic band tasks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..distill.optim import OptimizerState, adam_step
from ..errors import ConfigError, DimensionError, TrainingDivergedError
from ..io.audio import SyntheticSpec, synth_utterance
from ..models import StudentModel
from ..models.layers import Init
from ..tensor import Tape, Tensor, as_tensor, no_grad, ops

# logit margin above which the softmax is treated as one-hot
ONE_HOT_MARGIN = 30.0

PROBE_TRAIN_OFFSET = 2 << 30
PROBE_EVAL_OFFSET = 3 << 30


@dataclass
class FeaturizerWeights:
    logits: np.ndarray
    learnable: bool = True

    @classmethod
    def uniform(cls, n_members: int) -> FeaturizerWeights:
        return cls(np.zeros(n_members))

    @property
    def weights(self) -> np.ndarray:
        return ops.softmax(Tensor(self.logits)).data


def weighted_features(members, logits) -> Tensor:
    """``sum_i softmax(logits)_i * members[i]`` over same-shaped members."""
    members = [as_tensor(m) for m in members]
    logits = as_tensor(logits)
    if not members or logits.shape != (len(members),):
        raise DimensionError(f"{len(members)} members but logits of shape {logits.shape}")
    shape = members[0].shape
    for m in members[1:]:
        if m.shape != shape:
            raise DimensionError(f"member shape {m.shape} differs from {shape}")
    order = np.argsort(logits.data)
    if len(members) > 1 and logits.data[order[-1]] - logits.data[order[-2]] > ONE_HOT_MARGIN:
        return members[int(order[-1])]
    w = ops.softmax(logits)
    out = members[0] * w[0]
    for i in range(1, len(members)):
        out = out + members[i] * w[i]
    return out


@dataclass(frozen=True)
class ProbeTask:
    """A labelled synthetic classification task.

    ``kind="band"``: label is the dominant frequency band (``n_bands`` classes).
    ``kind="energy"``: two classes, whether the dominant energy sits in the
    upper or lower half of the spectrum.
    """

    name: str
    kind: str = "band"
    spec: SyntheticSpec = field(default_factory=SyntheticSpec)
    n_train: int = 256
    n_eval: int = 256
    shuffle_labels: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("band", "energy"):
            raise ConfigError(f"unknown probe task kind {self.kind!r}")

    @property
    def n_classes(self) -> int:
        return self.spec.n_bands if self.kind == "band" else 2

    def _label(self, index: int) -> int:
        u = synth_utterance(self.spec, index)
        return u.band if self.kind == "band" else u.high_band

    def train_set(self) -> tuple[list[np.ndarray], np.ndarray]:
        idx = [PROBE_TRAIN_OFFSET + i for i in range(self.n_train)]
        waves = [synth_utterance(self.spec, i).wave for i in idx]
        labels = np.array([self._label(i) for i in idx])
        if self.shuffle_labels:
            labels = self._random_labels(labels)
        return waves, labels

    def _random_labels(self, labels: np.ndarray) -> np.ndarray:
        # stratified: inside every true class the random labels are as balanced
        # as possible, so they carry zero in-sample correlation with the truth
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, 0x5F])))
        k = self.n_classes
        out = np.empty_like(labels)
        for c in range(k):
            idx = np.flatnonzero(labels == c)
            fill = np.resize(rng.permutation(k), len(idx))
            out[idx] = rng.permutation(fill)
        return out

    def eval_set(self) -> tuple[list[np.ndarray], np.ndarray]:
        idx = [PROBE_EVAL_OFFSET + i for i in range(self.n_eval)]
        return [synth_utterance(self.spec, i).wave for i in idx], np.array([self._label(i) for i in idx])


TASKS: dict[str, ProbeTask] = {
    "band": ProbeTask("band", kind="band"),
    "energy": ProbeTask("energy", kind="energy", spec=SyntheticSpec(n_bands=2)),
    "band-shuffled": ProbeTask("band-shuffled", kind="band", shuffle_labels=True),
    "energy-shuffled": ProbeTask("energy-shuffled", kind="energy", spec=SyntheticSpec(n_bands=2), shuffle_labels=True),
}


def get_task(name: str, **overrides) -> ProbeTask:
    try:
        task = TASKS[name]
    except KeyError:
        raise ConfigError(f"unknown probe task {name!r}; known: {', '.join(TASKS)}") from None
    return replace(task, **overrides) if overrides else task


def default_gen_length(model: StudentModel) -> int:
    if not model.variant.autoregressive:
        return model.variant.n_targets
    return model.trained_target_count or 3


def pooled_members(model: StudentModel, waves, gen_length: int | None = None) -> np.ndarray:
    """Time-averaged ``[f, h~1, ..., h~n]`` per utterance, shape ``[N, n + 1, D]``.

    Mean pooling commutes with the weighted sum, so probes train on these.
    """
    n = default_gen_length(model) if gen_length is None else gen_length
    out = []
    with no_grad():
        for wave in waves:
            f = model.features(np.asarray(wave))
            preds = model.predict(f, n if model.variant.autoregressive else None)
            out.append(np.stack([m.data.mean(axis=0) for m in [f, *preds]]))
    return np.stack(out)


@dataclass
class Probe:
    weight: np.ndarray
    bias: np.ndarray
    featurizer: FeaturizerWeights
    gen_length: int

    def scores(self, pooled: np.ndarray) -> np.ndarray:
        feats = np.einsum("m,nmd->nd", self.featurizer.weights, pooled)
        return feats @ self.weight + self.bias

    def predict(self, pooled: np.ndarray) -> np.ndarray:
        return np.argmax(self.scores(pooled), axis=1)


def _fit(pooled: np.ndarray, labels: np.ndarray, n_classes: int, steps: int, lr: float, seed: int,
         learn_featurizer: bool) -> tuple[Tensor, Tensor, Tensor]:
    n, m, d = pooled.shape
    init = Init(np.random.SeedSequence([seed, 0x9B]))
    weight = init.uniform((d, n_classes), d)
    bias = init.constant((n_classes,), 0.0)
    logits = Tensor(np.zeros(m), requires_grad=True)
    params = {"weight": weight, "bias": bias}
    if learn_featurizer:
        params["logits"] = logits
    x = Tensor(pooled)
    rows = np.arange(n)
    state = OptimizerState()
    for step in range(steps):
        with Tape() as tape:
            w = ops.softmax(logits).reshape(1, m)
            feats = ops.matmul(w, x).reshape(n, d)
            logp = ops.log_softmax(ops.matmul(feats, weight) + bias, axis=-1)
            loss = -ops.mean(logp[rows, labels])
        if not np.isfinite(loss.item()):
            raise TrainingDivergedError(f"probe loss non-finite at step {step}")
        adam_step(params, tape.gradient(loss, params), state, lr)
    return weight, bias, logits


def train_probe(model: StudentModel, task: ProbeTask, gen_length: int | None = None, steps: int = 1000,
                lr: float = 1e-3, seed: int = 0, learn_featurizer: bool = True) -> Probe:
    """Fit a linear classifier on mean-pooled weighted features; the student stays frozen."""
    n = default_gen_length(model) if gen_length is None else gen_length
    waves, labels = task.train_set()
    pooled = pooled_members(model, waves, n)
    weight, bias, logits = _fit(pooled, labels, task.n_classes, steps, lr, seed, learn_featurizer)
    return Probe(weight.data, bias.data, FeaturizerWeights(logits.data, learn_featurizer), n)


@dataclass
class ProbeResult:
    accuracy: float
    confusion: np.ndarray
    predictions: np.ndarray
    labels: np.ndarray


def accuracy_from_predictions(predictions: np.ndarray, labels: np.ndarray) -> float:
    return float(np.count_nonzero(predictions == labels)) / len(labels)


def eval_probe(probe: Probe, model: StudentModel, task: ProbeTask) -> ProbeResult:
    waves, labels = task.eval_set()
    preds = probe.predict(pooled_members(model, waves, probe.gen_length))
    k = task.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)
    return ProbeResult(accuracy_from_predictions(preds, labels), confusion, preds, labels)
