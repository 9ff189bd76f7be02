"""Command-line surface: ingest, label, perturb, represent, export, train,
evaluate, grid, synth.

Every subcommand is deterministic with respect to (inputs, flags, seeds);
outputs are written atomically. Exit codes: 0 ok, 1 runtime error, 2 parse
error (malformed input files, bad config).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import pickle
import sys

import numpy as np

from .errors import LobError, ParseError
from .evaluate import (
    ExperimentConfig,
    assemble,
    bulk_design_matrices,
    fit_scalers,
    format_table,
    run_grid,
    split_positions,
    summarize,
    window_positions,
    write_confusions,
    write_results_csv,
    write_summary_json,
)
from .book import LevelSnapshot
from .ingest import SnapshotSeries, parse_events, parse_fi2010, write_events
from .label import labels_for_series
from .learn import ModelSpec, TrainConfig, load_model, save_model, train
from .metrics import metrics
from .perturb import PARADIGMS, PerturbationSpec, perturb_series
from .represent import SCHEMES, WindowConfig
from .synth import SynthConfig, generate_events
from .tensorfile import read_tensor, write_tensor



def _hash_inputs(paths, extra: str) -> str:
    h = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    h.update(extra.encode())
    return h.hexdigest()


def _save_series(path, series, input_hash):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        pickle.dump({"hash": input_hash, "series": series}, fh)
    os.replace(tmp, path)


def _load_series(path):
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    return blob["series"], blob.get("hash")


def _series_summary(series):
    days = 1 if series.day_ids is None else len(np.unique(series.day_ids))
    return f"rows={len(series)} days={days} L={series.L} tick={series.tick_size}"


# -- subcommands -------------------------------------------------------------

def cmd_synth(args):
    cfg = SynthConfig(n_events=args.events, days=args.days, seed=args.seed,
                      tick_size=args.tick_size, min_order_size=args.min_size)
    os.makedirs(args.outdir, exist_ok=True)
    for day in range(cfg.days):
        path = os.path.join(args.outdir, f"events_day{day}.csv")
        write_events(generate_events(cfg, day), path)
    print(f"synth: wrote {cfg.days} day files ({cfg.n_events} events each) to {args.outdir}")
    return 0


def cmd_ingest(args):
    params = (f"format={args.format},tick={args.tick_size},min={args.min_size},"
              f"levels={args.levels},normalized={args.normalized}")
    input_hash = _hash_inputs(args.paths, params)
    if os.path.exists(args.out):
        try:
            _, cached = _load_series(args.out)
        except Exception:
            cached = None
        if cached == input_hash:
            print(f"ingest: cache hit, reusing {args.out}")
            return 0
    if args.format == "fi2010":
        series = parse_fi2010(args.paths, tick_size=args.tick_size,
                              min_order_size=args.min_size, normalized=args.normalized)
    else:
        # one file per trading day, each replayed through a fresh book
        snapshots, day_ids = [], []
        for day, p in enumerate(args.paths):
            part = parse_events(p, args.tick_size, args.min_size, levels=args.levels)
            for s in part.snapshots:
                snapshots.append(LevelSnapshot(
                    t=len(snapshots), tick_size=s.tick_size,
                    ask_ticks=s.ask_ticks, ask_volumes=s.ask_volumes,
                    bid_ticks=s.bid_ticks, bid_volumes=s.bid_volumes,
                ))
                day_ids.append(day)
        series = SnapshotSeries(
            snapshots=snapshots, tick_size=args.tick_size,
            min_order_size=args.min_size,
            day_ids=np.array(day_ids, dtype=np.int64),
        )
    _save_series(args.out, series, input_hash)
    print(f"ingest: {_series_summary(series)} -> {args.out}")
    return 0


def cmd_label(args):
    series, _ = _load_series(args.series)
    lab = labels_for_series(series, k=args.k, alpha=args.alpha)
    write_tensor(args.out, lab.cls.astype(np.float32),
                 {"kind": "labels", "k": args.k, "alpha": args.alpha,
                  "classes": {"1": "up", "2": "stationary", "3": "down"}})
    print(f"label: {len(lab)} labels (k={args.k}, alpha={args.alpha}) -> {args.out}")
    return 0


def cmd_perturb(args):
    series, input_hash = _load_series(args.series)
    spec = PerturbationSpec(paradigm=args.paradigm, order_size=args.order_size,
                            levels=args.levels, cap_at_level=not args.uncapped)
    out = perturb_series(series, spec)
    _save_series(args.out, out, f"{input_hash}:perturb:{spec.to_dict()}")
    print(f"perturb: paradigm={args.paradigm} {_series_summary(out)} -> {args.out}")
    return 0


def cmd_represent(args):
    series, _ = _load_series(args.series)
    wcfg = WindowConfig(N=args.N, W=args.W, sigma=args.sigma, truncation=args.truncation)
    cfg = ExperimentConfig(window=wcfg, k=0, stride=args.stride, schemes=(args.scheme,))
    T = len(series.snapshots)
    positions = np.arange(wcfg.N - 1, T, args.stride)
    scalers = fit_scalers(series, train_end_t=series.snapshots[-1].t)
    if args.raw:
        scalers.feature_mean = np.zeros_like(scalers.feature_mean)
        scalers.feature_std = np.ones_like(scalers.feature_std)
        scalers.volume_scale = 1.0
    mats = bulk_design_matrices(series.snapshots, positions, (args.scheme,), cfg,
                                scalers, series.L)
    cols = 4 * series.L if args.scheme == "level_based" else 2 * args.W + 1
    tensor = mats[args.scheme].reshape(len(positions), wcfg.N, cols)
    write_tensor(args.out, tensor.astype(np.float32), {
        "scheme": args.scheme, "N": wcfg.N, "W": args.W, "sigma": args.sigma,
        "truncation": args.truncation, "stride": args.stride,
        "tick_size": series.tick_size, "raw": bool(args.raw),
    })
    print(f"represent: {args.scheme} tensor {list(tensor.shape)} -> {args.out}")
    return 0


def cmd_export(args):
    series, _ = _load_series(args.series)
    cfg = _experiment_config(args)
    labels = labels_for_series(series, k=cfg.k, alpha=cfg.alpha)
    pos = window_positions(series, cfg)
    train_pos, test_pos = split_positions(series, cfg, pos)
    scalers = fit_scalers(series, train_end_t=series.snapshots[train_pos[-1]].t)
    os.makedirs(args.outdir, exist_ok=True)
    splits = {"train": (train_pos, series.snapshots)}
    for paradigm in cfg.paradigms:
        spec = PerturbationSpec(paradigm=paradigm, order_size=cfg.order_size,
                                levels=cfg.perturb_levels)
        snaps = series.snapshots if paradigm == "none" else perturb_series(series, spec).snapshots
        splits[f"test_{paradigm}"] = (test_pos, snaps)
    for split, (positions, snaps) in splits.items():
        y_name = f"{split}_y.lobt"
        write_tensor(os.path.join(args.outdir, y_name),
                     labels.cls[positions].astype(np.float32),
                     {"kind": "labels", "k": cfg.k, "alpha": cfg.alpha, "split": split})
        mats = bulk_design_matrices(snaps, positions, cfg.schemes, cfg, scalers, series.L)
        for scheme, mat in mats.items():
            cols = 4 * series.L if scheme == "level_based" else 2 * cfg.window.W + 1
            tensor = mat.reshape(len(positions), cfg.window.N, cols).astype(np.float32)
            name = f"{scheme}_{split}_x.lobt"
            write_tensor(os.path.join(args.outdir, name), tensor, {
                "scheme": scheme, "split": split, "labels": y_name,
                "N": cfg.window.N, "W": cfg.window.W, "sigma": cfg.window.sigma,
                "truncation": cfg.window.truncation, "k": cfg.k, "alpha": cfg.alpha,
                "tick_size": series.tick_size,
            })
    print(f"export: {len(splits)} splits x {len(cfg.schemes)} schemes -> {args.outdir}")
    return 0


def cmd_train(args):
    x, x_meta = read_tensor(args.x)
    y, _ = read_tensor(args.y)
    x = x.reshape(len(x), -1).astype(np.float64)
    y_idx = y.astype(np.int64) - 1
    n_val = max(1, int(args.val_frac * len(x)))
    spec = ModelSpec(args.model, input_dim=x.shape[1], seed=args.seed)
    cfg = TrainConfig(optimizer=args.optimizer, learning_rate=args.lr,
                      batch_size=args.batch_size, epochs=args.epochs,
                      patience=args.patience)
    result = train(spec, x[:-n_val], y_idx[:-n_val], x[-n_val:], y_idx[-n_val:], cfg)
    save_model(result.model, args.out, extra={"scheme": x_meta.get("scheme")})
    # metrics come from the reloaded checkpoint so `evaluate` reproduces them
    model = load_model(args.out)
    m = metrics(model.predict(x) + 1, y.astype(np.int64))
    payload = {"train": m.as_dict(), "best_epoch": result.best_epoch,
               "best_val_macro_f": result.best_val_f, "epochs_run": len(result.history)}
    with open(f"{args.out}.metrics.json", "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
    print(f"train: {args.model} best_epoch={result.best_epoch} "
          f"train_acc={m.accuracy:.2f} -> {args.out}")
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    x, _ = read_tensor(args.x)
    y, _ = read_tensor(args.y)
    preds = model.predict(x.reshape(len(x), -1).astype(np.float64)) + 1
    m = metrics(preds, y.astype(np.int64))
    out = {"metrics": m.as_dict(), "confusion": m.confusion.tolist(), "n": int(len(y))}
    text = json.dumps(out, sort_keys=True, indent=2) + "\n"
    if args.out:
        tmp = f"{args.out}.tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, args.out)
    print(f"evaluate: acc={m.accuracy:.4f} precision={m.precision:.4f} "
          f"recall={m.recall:.4f} fscore={m.fscore:.4f}")
    return 0


def cmd_grid(args):
    series, _ = _load_series(args.series)
    cfg = _experiment_config(args)
    dataset = assemble(series, cfg)
    rows, confusions, failures = run_grid(dataset)
    os.makedirs(args.outdir, exist_ok=True)
    summary = summarize(rows, cfg, failures)
    write_results_csv(rows, os.path.join(args.outdir, "results.csv"))
    write_summary_json(summary, os.path.join(args.outdir, "summary.json"))
    write_confusions(confusions, args.outdir)
    table = format_table(summary)
    tmp = os.path.join(args.outdir, "table.txt.tmp")
    with open(tmp, "w") as fh:
        fh.write(table)
    os.replace(tmp, os.path.join(args.outdir, "table.txt"))
    print(table)
    if failures:
        for failure in failures:
            print(f"grid: FAILED cell {failure}", file=sys.stderr)
        print(f"grid: {len(rows)} result rows, {len(failures)} failed cells -> {args.outdir}")
        return 1
    print(f"grid: {len(rows)} result rows -> {args.outdir}")
    return 0


# -- config plumbing -----------------------------------------------------------

def _parse_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", row=lineno)
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _experiment_config(args) -> ExperimentConfig:
    raw = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ParseError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    for key in ("models", "schemes", "paradigms", "seeds", "k"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = str(value)

    def get(key, default, cast):
        if key not in raw:
            return default
        value = raw[key]
        if cast is bool:
            return value.lower() in ("1", "true", "yes")
        return cast(value)

    def get_tuple(key, default, cast=str):
        if key not in raw:
            return default
        return tuple(cast(v) for v in raw[key].split(",") if v)

    seeds = raw.get("seeds")
    if seeds is not None and "," not in seeds:
        # a bare integer is a seed count: "5" means seeds 0..4
        raw["seeds"] = ",".join(str(s) for s in range(int(seeds)))
    schemes = get_tuple("schemes", tuple(SCHEMES))
    if schemes == ("all",):
        schemes = tuple(SCHEMES)
    paradigms = get_tuple("paradigms", tuple(PARADIGMS))
    if paradigms == ("all",):
        paradigms = tuple(PARADIGMS)
    for s in schemes:
        if s not in SCHEMES:
            raise ParseError(f"unknown scheme {s!r}")
    for p in paradigms:
        if p not in PARADIGMS:
            raise ParseError(f"unknown paradigm {p!r}")
    return ExperimentConfig(
        models=get_tuple("models", ("linear",)),
        schemes=schemes,
        paradigms=paradigms,
        seeds=get_tuple("seeds", (0, 1, 2, 3, 4), int),
        window=WindowConfig(
            N=get("N", 10, int), W=get("W", 20, int),
            sigma=get("sigma", 1.0, float), truncation=get("truncation", 3.0, float),
        ),
        k=get("k", 50, int),
        alpha=get("alpha", 0.002, float),
        stride=get("stride", 1, int),
        train_frac=get("train_frac", 0.7, float),
        split_by_day=get("split_by_day", True, bool),
        perturb_levels=get("perturb_levels", 10, int),
        order_size=get("order_size", None, float),
        val_frac=get("val_frac", 0.15, float),
        train_cfg=TrainConfig(
            optimizer=get("optimizer", "adam", str),
            learning_rate=get("lr", 1e-3, float),
            batch_size=get("batch_size", 128, int),
            epochs=get("epochs", 50, int),
            patience=get("patience", 10, int),
        ),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lobrep")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic event-stream corpus")
    p.add_argument("--days", type=int, default=10)
    p.add_argument("--events", type=int, default=4000, help="events per day")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tick-size", type=float, default=0.01)
    p.add_argument("--min-size", type=float, default=1.0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse snapshot or event files into a series cache")
    p.add_argument("paths", nargs="+")
    p.add_argument("--format", choices=("fi2010", "events"), default="fi2010")
    p.add_argument("--tick-size", type=float, default=0.01)
    p.add_argument("--min-size", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--normalized", action="store_true",
                   help="ingest a pre-normalized FI-2010 variant (no book reconstruction)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="compute micro-movement labels from a series cache")
    p.add_argument("--series", required=True)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.002)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("perturb", help="apply tick-filling perturbation to a series cache")
    p.add_argument("--series", required=True)
    p.add_argument("--paradigm", choices=PARADIGMS, default="both")
    p.add_argument("--order-size", type=float, default=None)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--uncapped", action="store_true",
                   help="fill to the deepest visible level instead of level L")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("represent", help="export one representation tensor")
    p.add_argument("--series", required=True)
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--W", type=int, default=20)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--truncation", type=float, default=3.0)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--raw", action="store_true", help="skip feature scaling")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_represent)

    p = sub.add_parser("export", help="export train/test tensors for external models")
    p.add_argument("--series", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--schemes", default=None)
    p.add_argument("--paradigms", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("train", help="train a built-in classifier on exported tensors")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--model", choices=("linear", "mlp"), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", choices=("sgd", "momentum", "adam"), default="adam")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--val-frac", type=float, default=0.15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on exported tensors")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="run the full experiment grid from a series cache")
    p.add_argument("--series", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--models", default=None, help="e.g. linear,mlp")
    p.add_argument("--schemes", default=None, help="'all' or a comma list")
    p.add_argument("--paradigms", default=None, help="'all' or a comma list")
    p.add_argument("--seeds", default=None, help="comma list, e.g. 0,1,2,3,4")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
