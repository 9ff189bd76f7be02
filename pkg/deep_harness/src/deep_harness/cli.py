"""Command line: run one model over exported train/test tensors.

    deep-harness run --model tcn --train-x exports/accumulated_mw_train_x.lobt \
        --test-x none=exports/accumulated_mw_test_none_x.lobt \
        --test-x both=exports/accumulated_mw_test_both_x.lobt \
        --seeds 0,1 --epochs 10 --results results.csv
"""

from __future__ import annotations

import argparse
import sys

from .harness import HarnessConfig, append_results, harness_train_eval
from .tensorio import CorruptTensor, IncompatibleScheme


def build_parser():
    parser = argparse.ArgumentParser(prog="deep-harness")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="train and evaluate one model")
    p.add_argument("--model", choices=("lstm", "tcn", "deeplob"), required=True)
    p.add_argument("--train-x", required=True)
    p.add_argument("--train-y", default=None)
    p.add_argument("--test-x", action="append", required=True,
                   metavar="PARADIGM=PATH")
    p.add_argument("--seeds", default="0,1")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--results", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    test_x = {}
    for item in args.test_x:
        if "=" not in item:
            print(f"error: --test-x expects PARADIGM=PATH, got {item!r}", file=sys.stderr)
            return 2
        paradigm, path = item.split("=", 1)
        test_x[paradigm] = path
    cfg = HarnessConfig(
        model=args.model,
        train_x=args.train_x,
        train_y=args.train_y,
        test_x=test_x,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        patience=args.patience,
    )
    try:
        rows = harness_train_eval(cfg)
    except CorruptTensor as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IncompatibleScheme as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    append_results(rows, args.results)
    for row in rows:
        print(f"{row['model']} {row['scheme']} {row['paradigm']} seed={row['seed']} "
              f"acc={row['accuracy']:.2f} f={row['fscore']:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
