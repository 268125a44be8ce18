"""
Checkpoints and inference
=========================

A checkpoint carries the run config and every student tensor. Reloading it
rebuilds the model without the teacher, and inference generates any number of
layers.
"""

import sys
from pathlib import Path

import numpy as np

from gendistill.io import Checkpoint, load_checkpoint, save_checkpoint, synth_utterance
from gendistill.tensor import no_grad

path = sys.argv[1] if len(sys.argv) > 1 else "desk.gdst"
student, config = load_checkpoint(path)
print(config.student.variant.name, "student trained on layers", config.distill.target_layers)

# Saving the reloaded model reproduces the file byte for byte.
save_checkpoint(student, config, "resaved.gdst")
print("byte-identical after reload:", Path(path).read_bytes() == Path("resaved.gdst").read_bytes())

utt = synth_utterance(config.data.synthetic, 12345)
with no_grad():
    f = student.features(utt.wave)
    layers = student.predict(f, 4)
print(f"utterance in band {utt.band}: f {f.shape}, generated {len(layers)} layers")

# The same tensor container stores generated layers (what ``gendistill infer`` writes).
Checkpoint("", {"f": f.data, **{f"layer_{i + 1}": h.data for i, h in enumerate(layers)}}).save("layers.gdst")
print({k: v.shape for k, v in Checkpoint.load("layers.gdst").tensors.items()})
print("max |layer_4 - layer_3| =", float(np.max(np.abs(layers[3].data - layers[2].data))))
