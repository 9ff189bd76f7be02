"""Adversarial tick-filling perturbation and displacement measurement.

Every empty tick strictly between a side's best quote and its level-L price
receives a resting order of the minimum (or configured) size. Best quotes
are untouched, so the mid-price and all labels derived from it are invariant
by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .book import BookState, LevelSnapshot, snapshot_from_levels
from .errors import DepthUnknown, InsufficientDepth, LobError, ShapeMismatch
from .ingest import SnapshotSeries
from .represent import WindowConfig, build_level_based, build_mw

PARADIGMS = ("none", "ask", "bid", "both")


@dataclass(frozen=True)
class PerturbationSpec:
    """Which sides to fill, with what size, and how deep.

    ``levels`` caps the fill range at the level-``levels`` price of the
    unperturbed book; ``cap_at_level=False`` extends it to the deepest
    visible level instead.
    """

    paradigm: str = "none"
    order_size: float | None = None  # None -> book's minimum order size
    levels: int = 10
    cap_at_level: bool = True

    def __post_init__(self):
        if self.paradigm not in PARADIGMS:
            raise ValueError(f"paradigm must be one of {PARADIGMS}")

    def sides(self) -> tuple[str, ...]:
        if self.paradigm == "none":
            return ()
        if self.paradigm == "both":
            return ("ask", "bid")
        return (self.paradigm,)

    def to_dict(self) -> dict:
        return {
            "paradigm": self.paradigm,
            "order_size": self.order_size,
            "levels": self.levels,
            "cap_at_level": self.cap_at_level,
        }


@dataclass
class DisplacementReport:
    """Distances between representations of the same window before/after."""

    l2_level_based: float
    l2_mw: float
    linf_mw: float
    total_added_volume: float
    mid_before: float
    mid_after: float


def _fill_ticks(levels: dict[int, float], spec: PerturbationSpec, ascending: bool, size: float):
    ticks = sorted(levels, reverse=not ascending)
    if spec.cap_at_level:
        if len(ticks) < spec.levels:
            raise InsufficientDepth(
                f"perturbation needs {spec.levels} levels, side has {len(ticks)}"
            )
        bound = ticks[spec.levels - 1]
    else:
        bound = ticks[-1]
    best = ticks[0]
    lo, hi = (best, bound) if ascending else (bound, best)
    added = 0.0
    for tick in range(lo + 1, hi):
        if tick not in levels:
            levels[tick] = size
            added += size
    return added


def perturb_book(state: BookState, spec: PerturbationSpec) -> BookState:
    """Perturbed copy of the book; the original is untouched."""
    out = state.copy()
    size = spec.order_size if spec.order_size is not None else state.min_order_size
    if size < state.min_order_size:
        raise LobError(f"order size {size} below book minimum {state.min_order_size}")
    for side in spec.sides():
        _fill_ticks(out.asks if side == "ask" else out.bids, spec, side == "ask", size)
    return out


def perturb_snapshot(
    snap: LevelSnapshot, spec: PerturbationSpec, min_order_size: float
) -> LevelSnapshot:
    """Perturb a snapshot view directly, keeping every known level.

    Fills stay strictly inside the visible range, so the result is exact over
    that range; side depths grow by the number of injected ticks. Fixed-width
    consumers (the level-based builder) truncate back to their own L.
    """
    if spec.paradigm == "none":
        return snap
    if spec.cap_at_level and spec.levels > snap.depth:
        raise DepthUnknown(
            f"fill range needs {spec.levels} levels, snapshot exposes {snap.depth}"
        )
    book = BookState(
        tick_size=snap.tick_size,
        min_order_size=min_order_size,
        asks=dict(zip(snap.ask_ticks.tolist(), snap.ask_volumes.tolist())),
        bids=dict(zip(snap.bid_ticks.tolist(), snap.bid_volumes.tolist())),
    )
    return perturb_book(book, spec).snapshot(t=snap.t)


def perturb_series(series: SnapshotSeries, spec: PerturbationSpec) -> SnapshotSeries:
    """Apply the same spec to every snapshot independently.

    The result is flagged ``depth_truncated``: the perturbed book extends
    beyond the retained top-L view.
    """
    if series.normalized:
        raise DepthUnknown("cannot perturb a normalized series: no tick grid")
    if spec.paradigm == "none":
        return series
    out = [perturb_snapshot(s, spec, series.min_order_size) for s in series.snapshots]
    return replace(series, snapshots=out, depth_truncated=True)


def _added_volume(before: LevelSnapshot, after: LevelSnapshot) -> float:
    added = 0.0
    for b_ticks, b_vols, a_ticks, a_vols in (
        (before.ask_ticks, before.ask_volumes, after.ask_ticks, after.ask_volumes),
        (before.bid_ticks, before.bid_volumes, after.bid_ticks, after.bid_volumes),
    ):
        old = dict(zip(b_ticks.tolist(), b_vols.tolist()))
        for tick, vol in zip(a_ticks.tolist(), a_vols.tolist()):
            delta = vol - old.get(tick, 0.0)
            if delta > 0:
                added += delta
    return added


def displacement(
    before: list[LevelSnapshot],
    after: list[LevelSnapshot],
    cfg: WindowConfig,
    levels: int | None = None,
) -> DisplacementReport:
    """Distances between the level-based and mw representations of two windows.

    The level-based view is taken at ``levels`` (default: the unperturbed
    window's depth); the mw view keeps everything inside the tick range.
    """
    if len(before) != len(after):
        raise ShapeMismatch(f"window lengths differ: {len(before)} vs {len(after)}")
    if levels is None:
        levels = min(s.depth for s in before)
    for b, a in zip(before, after):
        if a.depth < levels or b.depth < levels:
            raise ShapeMismatch(f"both windows need at least {levels} levels per side")
        if b.tick_size != a.tick_size:
            raise ShapeMismatch("windows differ in tick size")
    lb_b = build_level_based(before, levels=levels).data
    lb_a = build_level_based(after, levels=levels).data
    mw_b = build_mw(before, cfg).data
    mw_a = build_mw(after, cfg).data
    return DisplacementReport(
        l2_level_based=float(np.linalg.norm(lb_a - lb_b)),
        l2_mw=float(np.linalg.norm(mw_a - mw_b)),
        linf_mw=float(np.max(np.abs(mw_a - mw_b))),
        total_added_volume=sum(_added_volume(b, a) for b, a in zip(before, after)),
        mid_before=before[-1].mid_price,
        mid_after=after[-1].mid_price,
    )


def fig2_fixture(tick_size: float = 0.01) -> BookState:
    """Synthetic 10-level book: mid 10.00, spread 0.04, minimum order size 1,
    with empty ticks at 10.03 and 10.06 on the ask side and 9.96 and 9.94 on
    the bid side; ten empty in-range ticks in total."""
    state = BookState(tick_size=tick_size, min_order_size=1.0)
    ask_levels = [
        (1002, 120.0), (1004, 85.0), (1007, 146.0), (1010, 63.0), (1012, 210.0),
        (1013, 97.0), (1014, 58.0), (1015, 122.0), (1016, 74.0), (1017, 180.0),
    ]
    bid_levels = [
        (998, 110.0), (997, 90.0), (995, 152.0), (993, 71.0), (991, 133.0),
        (989, 88.0), (988, 160.0), (987, 54.0), (986, 95.0), (985, 140.0),
    ]
    state.asks = dict(ask_levels)
    state.bids = dict(bid_levels)
    return state
