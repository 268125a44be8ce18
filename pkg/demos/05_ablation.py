"""
Architecture, width and target-layer sweeps
===========================================

Each built-in suite trains every run under one step budget against one
shared teacher. It reports parameter count, validation loss and band-probe
accuracy. Orderings are recorded here, not asserted. A random teacher at desk
scale need not reproduce full-scale rankings.

Usage: ``python 05_ablation.py [architecture|width|targets] [steps]``.
"""

import sys

from gendistill.evalkit import builtin_suite, run_ablation

name = sys.argv[1] if len(sys.argv) > 1 else "architecture"
steps = int(sys.argv[2]) if len(sys.argv) > 2 else 300
report = run_ablation(builtin_suite(name, steps=steps))
print(report.to_csv())
report.write(f"{name}.report.csv")
