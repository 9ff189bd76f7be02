"""Experiment pipeline: window assembly, feature scaling, and the
(model x representation x paradigm x seed) grid runner.

Training data is always unperturbed; perturbation applies to the test split
only. A model is trained once per (model, scheme, seed) and evaluated under
every paradigm, so paradigm columns share identical checkpoints.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DegenerateFeature, LobError
from .ingest import SnapshotSeries
from .label import labels_for_series
from .learn import ModelSpec, TrainConfig, train
from .metrics import CLASS_NAMES, MetricBundle, metrics
from .perturb import PARADIGMS, PerturbationSpec, perturb_series
from .represent import SCHEMES, WindowConfig, build, build_level_based

RESULT_FIELDS = ("model", "scheme", "paradigm", "seed", "accuracy", "precision", "recall", "fscore")


@dataclass
class ExperimentConfig:
    models: tuple = ("linear",)
    schemes: tuple = tuple(SCHEMES)
    paradigms: tuple = tuple(PARADIGMS)
    seeds: tuple = (0, 1, 2, 3, 4)
    window: WindowConfig = field(default_factory=WindowConfig)
    k: int = 50
    alpha: float = 0.002
    stride: int = 1
    train_frac: float = 0.7
    split_by_day: bool = False
    perturb_levels: int = 10
    order_size: float | None = None
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    val_frac: float = 0.15  # tail share of the train split used for early stopping

    def describe(self) -> dict:
        out = asdict(self)
        out["window"] = asdict(self.window)
        out["train_cfg"] = asdict(self.train_cfg)
        return out


@dataclass
class Scalers:
    """Fitted on the training region only."""

    feature_mean: np.ndarray  # level-based, per column
    feature_std: np.ndarray
    volume_scale: float       # single scalar for the mw family


def fit_scalers(series: SnapshotSeries, train_end_t: int) -> Scalers:
    snaps = [s for s in series.snapshots if s.t <= train_end_t]
    if not snaps:
        raise LobError("empty training region")
    L = snaps[0].depth
    rows = np.empty((len(snaps), 4 * L))
    for i, s in enumerate(snaps):
        rows[i, 0::4] = s.ask_prices[:L]
        rows[i, 1::4] = s.ask_volumes[:L]
        rows[i, 2::4] = s.bid_prices[:L]
        rows[i, 3::4] = s.bid_volumes[:L]
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    if np.any(std == 0):
        raise DegenerateFeature(f"feature {int(np.argmax(std == 0))} has zero variance")
    vols = np.concatenate([np.concatenate([s.ask_volumes, s.bid_volumes]) for s in snaps])
    vol_scale = float(vols.std())
    if vol_scale == 0:
        raise DegenerateFeature("training volumes have zero variance")
    return Scalers(feature_mean=mean, feature_std=std, volume_scale=vol_scale)


def window_positions(series: SnapshotSeries, cfg: ExperimentConfig) -> np.ndarray:
    """Positions p (indices into series.snapshots) usable as window ends:
    a full window of history behind, a full label horizon ahead, and no day
    boundary inside either."""
    T = len(series.snapshots)
    N, k = cfg.window.N, cfg.k
    pos = np.arange(N - 1, T - k, cfg.stride)
    if series.day_ids is not None and len(np.unique(series.day_ids)) > 1:
        days = series.day_ids
        keep = (days[pos - N + 1] == days[pos]) & (days[pos] == days[pos + k])
        pos = pos[keep]
    return pos


def split_positions(series: SnapshotSeries, cfg: ExperimentConfig, pos: np.ndarray):
    """(train_pos, test_pos) with no information overlap.

    Day mode: the first train_frac share of days trains, the rest tests.
    Index mode: a purge gap of k snapshots separates the splits, so training
    labels never look into the test region and test windows never reach back
    into the training region.
    """
    if cfg.split_by_day and series.day_ids is not None and len(np.unique(series.day_ids)) > 1:
        days = np.unique(series.day_ids)
        n_train = max(1, int(round(cfg.train_frac * len(days))))
        train_days = set(days[:n_train].tolist())
        mask = np.isin(series.day_ids[pos], list(train_days))
        return pos[mask], pos[~mask]
    cut = pos[int(cfg.train_frac * len(pos))]
    train_pos = pos[pos + cfg.k <= cut]
    test_pos = pos[pos - cfg.window.N + 1 > cut]
    return train_pos, test_pos


def design_matrix(
    snapshots: list,
    positions: np.ndarray,
    scheme: str,
    cfg: ExperimentConfig,
    scalers: Scalers,
    levels: int,
) -> np.ndarray:
    """Flattened (row-major, time-major) model inputs for one scheme.

    Reference path: builds every window through the representation module.
    The grid runner uses the vectorized equivalents below instead.
    """
    N = cfg.window.N
    rows = []
    for p in positions:
        window = snapshots[p - N + 1 : p + 1]
        if scheme == "level_based":
            data = build_level_based(window, levels=levels).data
            data = (data - scalers.feature_mean) / scalers.feature_std
        else:
            data = build(scheme, window, cfg.window).data / scalers.volume_scale
        rows.append(data.ravel())
    return np.array(rows)


class _BulkBuilder:
    """Vectorized window assembly over one snapshot list.

    Produces bit-identical matrices to ``design_matrix`` (asserted in tests)
    while touching each snapshot once instead of once per window.
    """

    def __init__(self, snapshots: list, wcfg: WindowConfig, levels: int):
        self.snapshots = snapshots
        self.wcfg = wcfg
        self.levels = levels
        L = levels
        T = len(snapshots)
        self.level_rows = np.empty((T, 4 * L))
        for i, s in enumerate(snapshots):
            self.level_rows[i, 0::4] = s.ask_prices[:L]
            self.level_rows[i, 1::4] = s.ask_volumes[:L]
            self.level_rows[i, 2::4] = s.bid_prices[:L]
            self.level_rows[i, 3::4] = s.bid_volumes[:L]
        # flat COO staging for the mw grids: all levels of all snapshots,
        # stored snapshot-by-snapshot with per-snapshot start offsets
        ticks, vols, counts = [], [], np.empty(T, dtype=np.int64)
        for i, s in enumerate(snapshots):
            ticks.append(s.ask_ticks)
            vols.append(s.ask_volumes)
            ticks.append(s.bid_ticks)
            vols.append(-s.bid_volumes)
            counts[i] = s.ask_depth + s.bid_depth
        self.ticks = np.concatenate(ticks)
        self.vols = np.concatenate(vols)
        self.starts = np.concatenate([[0], np.cumsum(counts)])
        self.refs = np.array([s.mid_tick_snapped for s in snapshots], dtype=np.int64)

    def level_based(self, positions: np.ndarray) -> np.ndarray:
        N = self.wcfg.N
        idx = positions[:, None] + np.arange(-N + 1, 1)[None, :]
        return self.level_rows[idx]  # (n, N, 4L)

    def mw(self, positions: np.ndarray) -> np.ndarray:
        N, W = self.wcfg.N, self.wcfg.W
        width = 2 * W + 1
        out = np.zeros((len(positions), N, width))
        for w, p in enumerate(positions):
            first = p - N + 1
            s, e = self.starts[first], self.starts[p + 1]
            cols = self.ticks[s:e] - (self.refs[p] - W)
            rows = np.repeat(np.arange(N), np.diff(self.starts[first : p + 2]))
            mask = (cols >= 0) & (cols < width)
            out[w, rows[mask], cols[mask]] = self.vols[s:e][mask]
        return out

    def accumulate(self, mw3: np.ndarray) -> np.ndarray:
        W = self.wcfg.W
        out = np.empty_like(mw3)
        out[..., W] = mw3[..., W]
        out[..., W + 1 :] = np.cumsum(mw3[..., W + 1 :], axis=-1)
        out[..., :W] = np.cumsum(mw3[..., :W][..., ::-1], axis=-1)[..., ::-1]
        return out

    def smooth(self, mw3: np.ndarray) -> np.ndarray:
        from .represent import gaussian_kernel

        kernel = gaussian_kernel(self.wcfg.sigma, self.wcfg.truncation)
        width = mw3.shape[-1]
        R = (len(kernel) - 1) // 2
        km = np.zeros((width, width))
        for i in range(width):
            lo = max(0, i - R)
            hi = min(width, i + R + 1)
            km[i, lo:hi] = kernel[lo - i + R : hi - i + R]
        return np.clip(mw3, 0, None) @ km + np.clip(mw3, None, 0) @ km


def bulk_design_matrices(
    snapshots: list,
    positions: np.ndarray,
    schemes,
    cfg: ExperimentConfig,
    scalers: Scalers,
    levels: int,
) -> dict:
    """All schemes at once; mw is built a single time and reused."""
    builder = _BulkBuilder(snapshots, cfg.window, levels)
    n = len(positions)
    out = {}
    if "level_based" in schemes:
        lb = builder.level_based(positions)
        lb = (lb - scalers.feature_mean) / scalers.feature_std
        out["level_based"] = lb.reshape(n, -1)
    mw_needed = [s for s in schemes if s in ("mw", "accumulated_mw", "smoothed_mw")]
    if mw_needed:
        # derive variants from the raw grid, scaling last, so results match
        # the reference path bit for bit
        mw3 = builder.mw(positions)
        if "mw" in schemes:
            out["mw"] = (mw3 / scalers.volume_scale).reshape(n, -1)
        if "accumulated_mw" in schemes:
            out["accumulated_mw"] = (builder.accumulate(mw3) / scalers.volume_scale).reshape(n, -1)
        if "smoothed_mw" in schemes:
            out["smoothed_mw"] = (builder.smooth(mw3) / scalers.volume_scale).reshape(n, -1)
    return out


@dataclass
class GridDataset:
    """Everything the grid runner needs, assembled once per series."""

    train_x: dict            # scheme -> (n, D)
    train_y: np.ndarray      # class indices 0..2
    val_x: dict
    val_y: np.ndarray
    test_x: dict             # (scheme, paradigm) -> (m, D)
    test_y: np.ndarray       # class codes 1..3
    levels: int
    scalers: Scalers
    config: ExperimentConfig


def assemble(series: SnapshotSeries, cfg: ExperimentConfig) -> GridDataset:
    labels = labels_for_series(series, k=cfg.k, alpha=cfg.alpha)
    pos = window_positions(series, cfg)
    train_pos, test_pos = split_positions(series, cfg, pos)
    if len(train_pos) < 10 or len(test_pos) < 10:
        raise LobError(
            f"split too small: {len(train_pos)} train / {len(test_pos)} test windows"
        )
    n_val = max(1, int(cfg.val_frac * len(train_pos)))
    fit_pos, val_pos = train_pos[:-n_val], train_pos[-n_val:]
    levels = series.L
    scalers = fit_scalers(series, train_end_t=series.snapshots[train_pos[-1]].t)

    perturbed = {}
    for paradigm in cfg.paradigms:
        spec = PerturbationSpec(
            paradigm=paradigm, order_size=cfg.order_size, levels=cfg.perturb_levels
        )
        perturbed[paradigm] = (
            series.snapshots if paradigm == "none" else perturb_series(series, spec).snapshots
        )

    train_x = bulk_design_matrices(series.snapshots, fit_pos, cfg.schemes, cfg, scalers, levels)
    val_x = bulk_design_matrices(series.snapshots, val_pos, cfg.schemes, cfg, scalers, levels)
    test_x = {}
    for paradigm in cfg.paradigms:
        per_scheme = bulk_design_matrices(
            perturbed[paradigm], test_pos, cfg.schemes, cfg, scalers, levels
        )
        for scheme, mat in per_scheme.items():
            test_x[(scheme, paradigm)] = mat
    cls = labels.cls
    return GridDataset(
        train_x=train_x,
        train_y=cls[fit_pos] - 1,
        val_x=val_x,
        val_y=cls[val_pos] - 1,
        test_x=test_x,
        test_y=cls[test_pos],
        levels=levels,
        scalers=scalers,
        config=cfg,
    )


def run_grid(dataset: GridDataset) -> tuple[list[dict], dict, list[dict]]:
    """All (model, scheme, seed) trainings evaluated under every paradigm.

    Returns (rows, confusions, failures): one row per grid cell per seed,
    summed confusion counts keyed by (model, scheme, paradigm), and failure
    markers. A failing cell never discards the results of completed cells.
    """
    cfg = dataset.config
    rows = []
    confusions = {}
    failures = []
    for kind in cfg.models:
        for scheme in cfg.schemes:
            input_dim = dataset.train_x[scheme].shape[1]
            for seed in cfg.seeds:
                spec = ModelSpec(kind, input_dim=input_dim, seed=seed)
                try:
                    result = train(
                        spec,
                        dataset.train_x[scheme],
                        dataset.train_y,
                        dataset.val_x[scheme],
                        dataset.val_y,
                        cfg.train_cfg,
                    )
                except LobError as exc:
                    failures.append({
                        "model": kind, "scheme": scheme, "seed": seed,
                        "error": f"{type(exc).__name__}: {exc}",
                    })
                    continue
                for paradigm in cfg.paradigms:
                    preds = result.model.predict(dataset.test_x[(scheme, paradigm)]) + 1
                    m = metrics(preds, dataset.test_y)
                    rows.append({
                        "model": kind, "scheme": scheme, "paradigm": paradigm,
                        "seed": seed, **m.as_dict(),
                    })
                    key = (kind, scheme, paradigm)
                    confusions[key] = confusions.get(key, 0) + m.confusion
    return rows, confusions, failures


def summarize(rows: list[dict], cfg: ExperimentConfig, failures: list[dict] | None = None) -> dict:
    """Mean and std per (model, scheme, paradigm) across seeds."""
    cells = {}
    for row in rows:
        key = (row["model"], row["scheme"], row["paradigm"])
        cells.setdefault(key, []).append(row)
    grid = []
    for (kind, scheme, paradigm), group in sorted(cells.items()):
        entry = {"model": kind, "scheme": scheme, "paradigm": paradigm, "seeds": len(group)}
        for metric in ("accuracy", "precision", "recall", "fscore"):
            vals = np.array([g[metric] for g in group])
            entry[metric] = {"mean": float(vals.mean()), "std": float(vals.std())}
        grid.append(entry)
    out = {"config": cfg.describe(), "grid": grid}
    if failures:
        out["failures"] = failures
    return out


def format_table(summary: dict) -> str:
    """Text table per model: paradigms as rows, schemes as column groups of
    accuracy and F-score (mean +/- std over seeds)."""
    grid = summary["grid"]
    models = sorted({e["model"] for e in grid})
    schemes = [s for s in SCHEMES if any(e["scheme"] == s for e in grid)]
    paradigms = [p for p in PARADIGMS if any(e["paradigm"] == p for e in grid)]
    cell = {(e["model"], e["scheme"], e["paradigm"]): e for e in grid}
    width = 28
    lines = []
    for kind in models:
        lines.append(f"== {kind} ==")
        header = f"{'perturbation':<12}" + "".join(f"{s:^{width}}" for s in schemes)
        sub = f"{'':<12}" + "".join(f"{'acc':^{width // 2}}{'f':^{width // 2}}" for _ in schemes)
        lines += [header, sub]
        for paradigm in paradigms:
            parts = [f"{paradigm:<12}"]
            for scheme in schemes:
                entry = cell.get((kind, scheme, paradigm))
                if entry is None:
                    parts.append(f"{'/':^{width // 2}}{'/':^{width // 2}}")
                    continue
                acc = f"{entry['accuracy']['mean']:.2f}+-{entry['accuracy']['std']:.2f}"
                f1 = f"{entry['fscore']['mean']:.2f}+-{entry['fscore']['std']:.2f}"
                parts.append(f"{acc:^{width // 2}}{f1:^{width // 2}}")
            lines.append("".join(parts))
        lines.append("")
    return "\n".join(lines)


def _atomic_write(path, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_results_csv(rows: list[dict], path) -> None:
    lines = [",".join(RESULT_FIELDS)]
    for row in rows:
        lines.append(",".join(
            repr(row[f]) if isinstance(row[f], float) else str(row[f])
            for f in RESULT_FIELDS
        ))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_summary_json(summary: dict, path) -> None:
    _atomic_write(path, json.dumps(summary, sort_keys=True, indent=2) + "\n")


def write_confusions(confusions: dict, outdir) -> None:
    for (kind, scheme, paradigm), matrix in sorted(confusions.items()):
        path = os.path.join(outdir, f"confusion_{kind}_{scheme}_{paradigm}.csv")
        lines = ["true\\pred," + ",".join(CLASS_NAMES)]
        for i, name in enumerate(CLASS_NAMES):
            lines.append(name + "," + ",".join(str(int(v)) for v in matrix[i]))
        _atomic_write(path, "\n".join(lines) + "\n")


def read_results_csv(path) -> list[dict]:
    with open(path) as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = dict(raw)
            row["seed"] = int(row["seed"])
            for f in ("accuracy", "precision", "recall", "fscore"):
                row[f] = float(row[f])
            rows.append(row)
        return rows
