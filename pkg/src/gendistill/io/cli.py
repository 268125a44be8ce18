"""Command-line entry point.

Exit codes: 0 success, 1 contract error (bad config, bad shapes, failed
check), 2 I/O error (unreadable or corrupt files).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..errors import ContractError, PersistenceError

EXIT_OK, EXIT_CONTRACT, EXIT_IO = 0, 1, 2


def _cmd_distill(args) -> int:
    from ..distill.train import train
    from .runconfig import load

    cfg = load(args.config)
    distill_cfg = cfg.distill
    if args.seed is not None:
        distill_cfg = replace(distill_cfg, seed=args.seed)
    if args.steps is not None:
        distill_cfg = replace(distill_cfg, total_steps=args.steps)
    stem = Path(args.config).with_suffix("")
    output = replace(
        cfg.output,
        checkpoint=args.ckpt or cfg.output.checkpoint or f"{stem}.gdst",
        metrics=args.metrics or cfg.output.metrics or f"{stem}.metrics.csv",
    )
    cfg = replace(cfg, distill=distill_cfg, output=output)
    result = train(cfg, log_every=args.log_every)
    val = result.trace.validation()
    print(f"validation total_loss: step {val[0][0]} {val[0][1]:.6f} -> step {val[-1][0]} {val[-1][1]:.6f}")
    print(f"checkpoint: {output.checkpoint}")
    print(f"metrics: {output.metrics}")
    return EXIT_OK


def _read_input(spec: str, config) -> np.ndarray:
    from .audio import synth_utterance

    if spec.startswith("synth:"):
        try:
            index = int(spec[len("synth:") :])
        except ValueError:
            raise ContractError(f"bad synthetic input {spec!r}; expected synth:<index>") from None
        return synth_utterance(config.data.synthetic, index).wave
    from .audio import load_wav

    return load_wav(spec)


def _cmd_infer(args) -> int:
    from ..tensor import no_grad
    from .checkpoint import Checkpoint, load_checkpoint

    model, config = load_checkpoint(args.ckpt)
    wave = _read_input(args.input, config)
    n = args.gen_length
    with no_grad():
        f = model.features(wave)
        layers = model.predict(f, n if model.variant.autoregressive else None)
    tensors = {"f": f.data}
    tensors.update({f"layer_{i + 1}": t.data for i, t in enumerate(layers)})
    Checkpoint(f"# generated from {Path(args.ckpt).name}, input {args.input}\n", tensors).save(args.out)
    print(f"wrote {len(layers)} generated layers of shape {list(f.shape)} to {args.out}")
    return EXIT_OK


def _cmd_count_params(args) -> int:
    from ..models import breakdown, count_params, format_millions
    from .runconfig import RunConfig, load

    cfg = load(args.config) if args.config else RunConfig.preset(args.preset)
    n = count_params(cfg.student)
    print(n)
    print(format_millions(n))
    if args.verbose:
        for name, k in breakdown(cfg.student).items():
            print(f"  {name:24s} {k}")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    from ..gradsuite import TOLERANCE, run_gradcheck

    results = run_gradcheck(seed=args.seed, n_seeds=args.n_seeds)
    worst = 0.0
    for name, err in results.items():
        flag = "ok" if err <= TOLERANCE else "FAIL"
        print(f"{name:40s} {err:.3e}  {flag}")
        worst = max(worst, err)
    print(f"max relative error {worst:.3e} (tolerance {TOLERANCE:g})")
    return EXIT_OK if worst <= TOLERANCE else EXIT_CONTRACT


def _cmd_probe(args) -> int:
    from ..evalkit.probe import eval_probe, get_task, train_probe
    from .checkpoint import load_checkpoint

    model, _ = load_checkpoint(args.ckpt)
    task = get_task(args.task)
    probe = train_probe(model, task, gen_length=args.gen_length, steps=args.steps)
    result = eval_probe(probe, model, task)
    print(f"task {task.name}: accuracy {result.accuracy:.4f} ({task.n_eval} eval utterances, {task.n_classes} classes)")
    print("featurizer weights: " + " ".join(f"{w:.3f}" for w in probe.featurizer.weights))
    return EXIT_OK


def _cmd_ablate(args) -> int:
    from ..evalkit.ablation import load_suite, run_ablation

    suite = load_suite(args.suite)
    if args.steps is not None:
        suite = replace(suite, base=replace(suite.base, distill=replace(suite.base.distill, total_steps=args.steps)))
    report = run_ablation(suite)
    out = args.out or f"{Path(args.suite).with_suffix('')}.report.csv"
    report.write(out)
    print(report.to_csv(), end="")
    failed = [r.run for r in report.rows if r.error]
    if failed:
        print(f"{len(failed)} run(s) failed: {', '.join(failed)}", file=sys.stderr)
    print(f"report: {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gendistill", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distill", help="train a student, write checkpoint and metrics CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--ckpt", help="checkpoint path (default from config or <config>.gdst)")
    p.add_argument("--metrics", help="metrics CSV path (default from config or <config>.metrics.csv)")
    p.add_argument("--log-every", type=int, default=0)
    p.set_defaults(func=_cmd_distill)

    p = sub.add_parser("infer", help="generate layers for one input")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True, help="a .wav path or synth:<index>")
    p.add_argument("--gen-length", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("count-params", help="exact trainable parameter count of the student")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", choices=("full-size", "desk"))
    p.add_argument("--verbose", action="store_true", help="per-component breakdown")
    p.set_defaults(func=_cmd_count_params)

    p = sub.add_parser("gradcheck", help="finite-difference check of all primitives")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-seeds", type=int, default=10)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("probe", help="train and evaluate a linear probe on a distilled student")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--gen-length", type=int)
    p.add_argument("--steps", type=int, default=1000)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("ablate", help="run an ablation suite and write the report CSV")
    p.add_argument("--suite", required=True, help="suite file or built-in name (architecture, width, targets)")
    p.add_argument("--out")
    p.add_argument("--steps", type=int, help="override the shared step budget")
    p.set_defaults(func=_cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (PersistenceError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
