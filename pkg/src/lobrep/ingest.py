"""Parsers for FI-2010-style snapshot files and generic event-stream CSVs.

FI-2010 layout (one snapshot per row, whitespace- or comma-delimited,
auto-detected): 40 features ordered per level i = 1..L ascending as
p_a^i, v_a^i, p_b^i, v_b^i, optionally followed by 5 label columns for
prediction horizons 10, 20, 30, 50, 100.

Event CSV: header ``seq,kind,side,price,volume`` required; rows replay in
order through the book engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .book import BookEvent, BookState, EventKind, LevelSnapshot, Side, snapshot_from_levels, to_ticks
from .errors import (
    DegenerateFeature,
    InvalidSnapshot,
    LobError,
    MalformedRow,
    OffTickGrid,
)

LABEL_HORIZONS = (10, 20, 30, 50, 100)
EVENT_HEADER = "seq,kind,side,price,volume"


@dataclass
class SnapshotSeries:
    """Ordered, uniform-depth snapshot series plus dataset metadata."""

    snapshots: list[LevelSnapshot]
    tick_size: float
    min_order_size: float
    provided_labels: dict[int, np.ndarray] | None = None
    day_ids: np.ndarray | None = None      # one int per snapshot
    depth_truncated: bool = False
    normalized: bool = False
    feature_override: np.ndarray | None = None  # T x 4L, normalized variants

    def __len__(self):
        return len(self.snapshots) if self.snapshots else len(self.feature_override)

    @property
    def L(self) -> int:
        if self.snapshots:
            return self.snapshots[0].depth
        return self.feature_override.shape[1] // 4

    def mids(self) -> np.ndarray:
        if self.normalized:
            raise LobError("mid prices are unavailable on a normalized series")
        return np.array([s.mid_price for s in self.snapshots])

    def features(self) -> np.ndarray:
        """T x 4L level-based feature view of the series."""
        if self.feature_override is not None:
            return self.feature_override
        out = np.empty((len(self.snapshots), 4 * self.L))
        for i, s in enumerate(self.snapshots):
            out[i, 0::4] = s.ask_prices
            out[i, 1::4] = s.ask_volumes
            out[i, 2::4] = s.bid_prices
            out[i, 3::4] = s.bid_volumes
        return out

    def validate(self):
        ts = [s.t for s in self.snapshots]
        assert all(b > a for a, b in zip(ts, ts[1:])), "snapshot indices must increase"
        depths = {s.depth for s in self.snapshots}
        assert len(depths) <= 1, "depth must be uniform across the series"
        for s in self.snapshots:
            s.validate()


@dataclass
class NormalizationSpec:
    """Per-feature affine transform; statistics come from a training split."""

    mode: str = "none"               # none | zscore
    mean: np.ndarray | None = None
    std: np.ndarray | None = None


def _split_fields(line: str) -> list[str]:
    return line.split(",") if "," in line else line.split()


def _parse_row(fields: list[str], row: int) -> np.ndarray:
    try:
        return np.array([float(f) for f in fields])
    except ValueError as exc:
        raise MalformedRow(str(exc), row=row) from None


def _snapshot_from_features(values, t, tick_size, row):
    ap, av = values[0::4], values[1::4]
    bp, bv = values[2::4], values[3::4]
    if not np.all(np.diff(ap) > 0):
        raise InvalidSnapshot("ask prices must strictly ascend", row=row)
    if not np.all(np.diff(bp) < 0):
        raise InvalidSnapshot("bid prices must strictly descend", row=row)
    if ap[0] <= bp[0]:
        raise InvalidSnapshot(f"crossed book: best ask {ap[0]} <= best bid {bp[0]}", row=row)
    if not (np.all(av > 0) and np.all(bv > 0)):
        raise InvalidSnapshot("volumes must be positive", row=row)
    try:
        ask = [(to_ticks(p, tick_size), v) for p, v in zip(ap, av)]
        bid = [(to_ticks(p, tick_size), v) for p, v in zip(bp, bv)]
    except OffTickGrid as exc:
        raise InvalidSnapshot(str(exc), row=row) from None
    return snapshot_from_levels(t, tick_size, ask, bid)


def parse_fi2010(
    paths,
    tick_size: float = 0.01,
    min_order_size: float = 1.0,
    normalized: bool = False,
) -> SnapshotSeries:
    """Parse one or more FI-2010-style files; each file counts as one trading day.

    ``normalized=True`` ingests a pre-normalized variant: rows are kept as a
    plain feature matrix (no book reconstruction, labels still parsed).
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    snapshots: list[LevelSnapshot] = []
    rows: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    day_ids: list[int] = []
    have_labels = None
    t = 0
    for day, path in enumerate(paths):
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                fields = _split_fields(line)
                if len(fields) not in (40, 45):
                    raise MalformedRow(
                        f"expected 40 or 45 columns, got {len(fields)}", row=lineno
                    )
                values = _parse_row(fields, lineno)
                row_has_labels = len(fields) == 45
                if have_labels is None:
                    have_labels = row_has_labels
                elif have_labels != row_has_labels:
                    raise MalformedRow("inconsistent label columns", row=lineno)
                feats = values[:40]
                if normalized:
                    rows.append(feats)
                else:
                    snapshots.append(_snapshot_from_features(feats, t, tick_size, lineno))
                if row_has_labels:
                    labels.append(values[40:])
                day_ids.append(day)
                t += 1
    provided = None
    if labels:
        arr = np.array(labels, dtype=np.int64)
        provided = {h: arr[:, i] for i, h in enumerate(LABEL_HORIZONS)}
    return SnapshotSeries(
        snapshots=snapshots,
        tick_size=tick_size,
        min_order_size=min_order_size,
        provided_labels=provided,
        day_ids=np.array(day_ids, dtype=np.int64),
        normalized=normalized,
        feature_override=np.array(rows) if normalized else None,
    )


def write_fi2010(series: SnapshotSeries, path) -> None:
    """Write a series back out in the FI-2010 row layout (fixture writer)."""
    feats = series.features()
    label_cols = None
    if series.provided_labels:
        label_cols = np.stack([series.provided_labels[h] for h in LABEL_HORIZONS], axis=1)
    with open(path, "w") as fh:
        for i in range(feats.shape[0]):
            parts = [repr(float(v)) for v in feats[i]]
            if label_cols is not None:
                parts += [str(int(v)) for v in label_cols[i]]
            fh.write(" ".join(parts) + "\n")


def replay_events(
    events,
    tick_size: float,
    min_order_size: float,
    levels: int = 10,
    t0: int = 0,
) -> list[LevelSnapshot]:
    """Replay in-memory events, emitting one top-``levels`` snapshot per event
    once both sides hold at least ``levels`` price levels."""
    state = BookState(tick_size=tick_size, min_order_size=min_order_size)
    snapshots = []
    t = t0
    for ev in events:
        state.apply(ev)
        if len(state.asks) >= levels and len(state.bids) >= levels:
            snapshots.append(state.snapshot(levels, t=t))
            t += 1
    return snapshots


def parse_events(
    path,
    tick_size: float,
    min_order_size: float,
    levels: int = 10,
) -> SnapshotSeries:
    """Replay an event CSV through the book, emitting one snapshot per event
    once both sides hold at least ``levels`` price levels."""
    state = BookState(tick_size=tick_size, min_order_size=min_order_size)
    snapshots = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != EVENT_HEADER:
            raise MalformedRow(f"expected header {EVENT_HEADER!r}, got {header!r}", row=1)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise MalformedRow(f"expected 5 fields, got {len(fields)}", row=lineno)
            seq_s, kind_s, side_s, price_s, vol_s = fields
            try:
                seq = int(seq_s)
                kind = EventKind(kind_s)
                side = Side(side_s)
                price = float(price_s)
                volume = float(vol_s)
            except ValueError as exc:
                raise MalformedRow(str(exc), row=lineno) from None
            if volume < min_order_size:
                raise MalformedRow(
                    f"volume {volume} below minimum order size {min_order_size}", row=lineno
                )
            try:
                state.apply(BookEvent(kind, side, price, volume))
            except LobError as exc:
                raise type(exc)(f"line {lineno}: {exc}") from None
            if len(state.asks) >= levels and len(state.bids) >= levels:
                snapshots.append(state.snapshot(levels, t=seq))
    return SnapshotSeries(
        snapshots=snapshots,
        tick_size=tick_size,
        min_order_size=min_order_size,
        day_ids=np.zeros(len(snapshots), dtype=np.int64),
    )


def write_events(events, path) -> None:
    """Write BookEvents as an event CSV (inverse of parse_events input)."""
    with open(path, "w") as fh:
        fh.write(EVENT_HEADER + "\n")
        for seq, ev in enumerate(events):
            fh.write(
                f"{seq},{ev.kind.value},{ev.side.value},"
                f"{repr(float(ev.price))},{repr(float(ev.volume))}\n"
            )


def fit_normalization(series: SnapshotSeries, mode: str = "zscore") -> NormalizationSpec:
    """Fit per-feature statistics; call this on the training split only."""
    if mode == "none":
        return NormalizationSpec(mode="none")
    feats = series.features()
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    if np.any(std == 0):
        idx = int(np.argmax(std == 0))
        raise DegenerateFeature(f"feature {idx} has zero variance")
    return NormalizationSpec(mode="zscore", mean=mean, std=std)


def normalize(series: SnapshotSeries, spec: NormalizationSpec) -> SnapshotSeries:
    """Apply the affine transform; mode=none returns the series unchanged."""
    if spec.mode == "none":
        return series
    feats = (series.features() - spec.mean) / spec.std
    return replace(series, snapshots=[], normalized=True, feature_override=feats)


def denormalize(series: SnapshotSeries, spec: NormalizationSpec) -> np.ndarray:
    """Invert ``normalize``, returning the raw feature matrix."""
    if spec.mode == "none":
        return series.features()
    return series.features() * spec.std + spec.mean
