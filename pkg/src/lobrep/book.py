"""Aggregated (Level-2) limit order book kept on an integer tick grid.

Prices are stored as integer tick counts internally; conversion to currency
happens only at the API boundary. Emptiness tests per tick are therefore
exact, which the perturbation logic relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    CrossedBook,
    InsufficientDepth,
    OffTickGrid,
    OverCancel,
    UnknownLevel,
)

_GRID_RTOL = 1e-9


class Side(str, Enum):
    ASK = "ask"
    BID = "bid"


class EventKind(str, Enum):
    PLACE = "place"
    CANCEL = "cancel"
    EXECUTE = "execute"


@dataclass(frozen=True)
class BookEvent:
    kind: EventKind
    side: Side
    price: float
    volume: float


def to_ticks(price: float, tick_size: float) -> int:
    """Convert a currency price to a tick count, rejecting off-grid prices."""
    ratio = price / tick_size
    ticks = round(ratio)
    if abs(ratio - ticks) > _GRID_RTOL * max(1.0, abs(ratio)):
        raise OffTickGrid(f"price {price} is not on the {tick_size} tick grid")
    return int(ticks)


@dataclass(frozen=True)
class LevelSnapshot:
    """Top-L aggregated view of the book at one point in time.

    Prices are kept as tick counts (``ask_ticks`` ascending, ``bid_ticks``
    descending); currency values are derived via ``tick_size``.
    """

    t: int
    tick_size: float
    ask_ticks: np.ndarray
    ask_volumes: np.ndarray
    bid_ticks: np.ndarray
    bid_volumes: np.ndarray

    def __post_init__(self):
        for arr in (self.ask_ticks, self.ask_volumes, self.bid_ticks, self.bid_volumes):
            arr.flags.writeable = False

    @property
    def ask_depth(self) -> int:
        return len(self.ask_ticks)

    @property
    def bid_depth(self) -> int:
        return len(self.bid_ticks)

    @property
    def depth(self) -> int:
        return min(len(self.ask_ticks), len(self.bid_ticks))

    @property
    def ask_prices(self) -> np.ndarray:
        return self.ask_ticks * self.tick_size

    @property
    def bid_prices(self) -> np.ndarray:
        return self.bid_ticks * self.tick_size

    @property
    def best_ask_tick(self) -> int:
        return int(self.ask_ticks[0])

    @property
    def best_bid_tick(self) -> int:
        return int(self.bid_ticks[0])

    @property
    def mid_price(self) -> float:
        return (self.best_ask_tick + self.best_bid_tick) / 2.0 * self.tick_size

    @property
    def mid_tick_snapped(self) -> int:
        """Mid price on the tick grid; an exact half tick rounds toward the bid."""
        return (self.best_ask_tick + self.best_bid_tick) // 2

    def validate(self) -> None:
        """Raise AssertionError when any snapshot invariant is violated.

        Side depths may differ (perturbed views keep every known level)."""
        a, b = self.ask_ticks, self.bid_ticks
        assert len(a) == len(self.ask_volumes) and len(b) == len(self.bid_volumes)
        assert len(a) >= 1 and len(b) >= 1
        assert np.all(np.diff(a) > 0), "ask prices must strictly ascend"
        assert np.all(np.diff(b) < 0), "bid prices must strictly descend"
        assert a[0] > b[0], "book is crossed"
        assert np.all(self.ask_volumes > 0) and np.all(self.bid_volumes > 0)


def mid_price(snap: LevelSnapshot) -> float:
    """(best ask + best bid) / 2, in currency."""
    return snap.mid_price


@dataclass
class BookState:
    """Mutable book: two price-keyed sides with aggregate volumes.

    Single-writer; snapshots taken from it are immutable values.
    """

    tick_size: float
    min_order_size: float
    asks: dict[int, float] = field(default_factory=dict)
    bids: dict[int, float] = field(default_factory=dict)
    sequence: int = 0

    def __post_init__(self):
        if self.tick_size <= 0:
            raise ValueError("tick_size must be > 0")
        if self.min_order_size <= 0:
            raise ValueError("min_order_size must be > 0")

    def best_ask_tick(self):
        return min(self.asks) if self.asks else None

    def best_bid_tick(self):
        return max(self.bids) if self.bids else None

    def apply(self, ev: BookEvent) -> "BookState":
        """Apply one place/cancel/execute event; returns self.

        Execute decrements resting volume at the stated price exactly like
        cancel; no matching semantics are modelled.
        """
        tick = to_ticks(ev.price, self.tick_size)
        side = self.asks if ev.side is Side.ASK else self.bids
        if ev.kind is EventKind.PLACE:
            opp_best = self.best_bid_tick() if ev.side is Side.ASK else self.best_ask_tick()
            if opp_best is not None:
                crossed = tick <= opp_best if ev.side is Side.ASK else tick >= opp_best
                if crossed:
                    raise CrossedBook(
                        f"{ev.side.value} placement at {ev.price} crosses opposite best"
                    )
            side[tick] = side.get(tick, 0.0) + ev.volume
        else:  # cancel / execute
            resting = side.get(tick)
            if resting is None:
                raise UnknownLevel(f"no {ev.side.value} volume at {ev.price}")
            if ev.volume > resting + 1e-12:
                raise OverCancel(
                    f"{ev.kind.value} of {ev.volume} exceeds resting {resting} at {ev.price}"
                )
            remaining = resting - ev.volume
            if remaining <= 1e-12:
                del side[tick]
            else:
                side[tick] = remaining
        self.sequence += 1
        return self

    def depth(self, side: Side) -> int:
        return len(self.asks if side is Side.ASK else self.bids)

    def snapshot(self, levels: int | None = None, t: int | None = None) -> LevelSnapshot:
        """Top-``levels`` view per side by price priority; None takes every level."""
        if levels is not None and (len(self.asks) < levels or len(self.bids) < levels):
            raise InsufficientDepth(
                f"need {levels} levels per side, have {len(self.asks)} ask / {len(self.bids)} bid"
            )
        ask_ticks = sorted(self.asks)[:levels]
        bid_ticks = sorted(self.bids, reverse=True)[:levels]
        return LevelSnapshot(
            t=self.sequence if t is None else t,
            tick_size=self.tick_size,
            ask_ticks=np.array(ask_ticks, dtype=np.int64),
            ask_volumes=np.array([self.asks[p] for p in ask_ticks], dtype=np.float64),
            bid_ticks=np.array(bid_ticks, dtype=np.int64),
            bid_volumes=np.array([self.bids[p] for p in bid_ticks], dtype=np.float64),
        )

    def copy(self) -> "BookState":
        return BookState(
            tick_size=self.tick_size,
            min_order_size=self.min_order_size,
            asks=dict(self.asks),
            bids=dict(self.bids),
            sequence=self.sequence,
        )


def apply_event(state: BookState, ev: BookEvent) -> BookState:
    """Functional spelling of ``BookState.apply``."""
    return state.apply(ev)


def snapshot_from_levels(
    t: int,
    tick_size: float,
    ask_levels: list[tuple[int, float]],
    bid_levels: list[tuple[int, float]],
) -> LevelSnapshot:
    """Build a snapshot from explicit (tick, volume) level lists."""
    ask_levels = sorted(ask_levels)
    bid_levels = sorted(bid_levels, reverse=True)
    return LevelSnapshot(
        t=t,
        tick_size=tick_size,
        ask_ticks=np.array([p for p, _ in ask_levels], dtype=np.int64),
        ask_volumes=np.array([v for _, v in ask_levels], dtype=np.float64),
        bid_ticks=np.array([p for p, _ in bid_levels], dtype=np.int64),
        bid_volumes=np.array([v for _, v in bid_levels], dtype=np.float64),
    )
