"""
Probing the generated layers
============================

A frozen student's generated layers and ``f`` are combined with softmax
weights, mean-pooled over time and fed to a linear classifier. The tasks are
synthetic: which of 8 bands holds the dominant tone (``band``), and whether it
sits in the upper or lower half of the spectrum (``energy``). Shuffled-label
twins measure chance.

Run ``03_distill.py`` first to produce ``desk.gdst``.
"""

import sys

from gendistill.evalkit import eval_probe, get_task, train_probe
from gendistill.io import load_checkpoint

path = sys.argv[1] if len(sys.argv) > 1 else "desk.gdst"
student, _ = load_checkpoint(path)

for name in ("energy", "energy-shuffled", "band", "band-shuffled"):
    task = get_task(name)
    probe = train_probe(student, task)
    result = eval_probe(probe, student, task)
    weights = " ".join(f"{w:.2f}" for w in probe.featurizer.weights)
    print(f"{name:16s} accuracy {result.accuracy:.3f} (chance {1 / task.n_classes:.3f})  layer weights [{weights}]")
