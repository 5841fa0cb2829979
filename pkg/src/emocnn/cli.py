"""Command-line interface.

Subcommands: preprocess, train, eval, predict, sweep-config, sweep-params.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical fault.
"""
from __future__ import annotations

import argparse
import sys

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .evaluation import (
    config_sweep_to_csv,
    evaluate,
    export_curve,
    param_sweep_to_csv,
    report_to_csv,
    sweep_configs,
    sweep_params,
)
from .network import NetworkConfig, VARIANTS, build_model, predict
from .tensor import Prng
from .text import DataError, encode_dataset, encode_dialogue, load_dataset, load_stop_words
from .training import NumericalFault, TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; this artifact reserves
    # 2 for data errors, so route to 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_grid(text: str):
    """Comma-separated lr:l2 pairs, e.g. '5e-6:1.5e-4,1e-5:1.5e-4'."""
    cells = []
    for token in text.split(","):
        try:
            lr, l2 = token.split(":")
            cells.append((float(lr), float(l2)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid cell {token!r}, expected lr:l2") from None
    return cells


def _add_train_flags(p):
    p.add_argument("--variant", choices=VARIANTS, default="B")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=5e-6)
    p.add_argument("--l2", type=float, default=1.5e-4)
    p.add_argument("--batches", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-fraction", type=float, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emocnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="encode dialogues as hex byte sequences")
    p.add_argument("--data", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a model and save a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--stopwords")
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--curve")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on labeled data")
    p.add_argument("--data", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one dialogue string")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--stopwords")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep-config", help="compare variants under one budget")
    p.add_argument("--data", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--variants", default="A,B,C,D")
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_config)

    p = sub.add_parser("sweep-params", help="grid-search learning rate and L2 strength")
    p.add_argument("--data", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--grid", type=_parse_grid, required=True)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_params)
    return parser


def _load_encoded(args):
    stops = load_stop_words(args.stopwords) if args.stopwords else ()
    dialogues = load_dataset(args.data)
    return encode_dataset(dialogues, stops), stops


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batches_per_epoch=args.batches,
        learning_rate=args.lr,
        l2_strength=args.l2,
        seed=args.seed,
        eval_fraction=args.eval_fraction,
    )


def cmd_preprocess(args) -> int:
    stops = load_stop_words(args.stopwords) if args.stopwords else ()
    dialogues = load_dataset(args.data)
    with open(args.out, "w", encoding="utf-8") as fh:
        for d in dialogues:
            fh.write(bytes(encode_dialogue(d.text, stops)).hex() + "\n")
    print(f"encoded {len(dialogues)} dialogues -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .training import train

    (codes, labels), _ = _load_encoded(args)
    config = NetworkConfig.for_variant(args.variant, l2_strength=args.l2)
    model = build_model(config, Prng(args.seed))
    model, log = train(model, (codes, labels), _train_config(args))
    save_checkpoint(model, args.out)
    if args.curve:
        export_curve(log, args.curve)
    if log.val_top1:
        print(f"final validation top-1: {log.val_top1[-1][1]:.4f}")
    print(f"saved checkpoint -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    (codes, labels), _ = _load_encoded(args)
    model = load_checkpoint(args.ckpt)
    report = evaluate(model, (codes, labels))
    report_to_csv(report, args.report)
    print(f"overall top-1: {report.overall_top1:.4f} over {report.n_examples} examples")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_checkpoint(args.ckpt)
    stops = load_stop_words(args.stopwords) if args.stopwords else ()
    label, probs = predict(model, encode_dialogue(args.text, stops))
    print(label.name.lower() + " " + " ".join(f"{p:.6f}" for p in probs))
    return EXIT_OK


def cmd_sweep_config(args) -> int:
    (codes, labels), _ = _load_encoded(args)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    rows = sweep_configs((codes, labels), variants, _train_config(args))
    config_sweep_to_csv(rows, args.out)
    for r in rows:
        print(f"{r.variant}: val_top1={r.val_top1:.4f} seconds={r.seconds:.2f}")
    return EXIT_OK


def cmd_sweep_params(args) -> int:
    (codes, labels), _ = _load_encoded(args)
    rows = sweep_params((codes, labels), args.grid, _train_config(args), variant=args.variant)
    param_sweep_to_csv(rows, args.out)
    for r in rows:
        print(f"lr={r.learning_rate:g} l2={r.l2_strength:g}: val_top1={r.val_top1:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalFault as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, CheckpointError, OSError, UnicodeDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
