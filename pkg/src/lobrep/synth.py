"""Synthetic event-stream corpus with a planted, learnable signal.

A three-state regime (up / flat / down) drives two things at once: the drift
of the mid-price and the volume imbalance of the visible book, so future
micro-movements are predictable from resting volumes. Books keep irregular
inter-level gaps, which leaves plenty of empty in-range ticks for the
tick-filling perturbation to act on.

Every emitted event is applied to a live book first, so generated streams
are valid by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .book import BookEvent, BookState, EventKind, Side
from .ingest import SnapshotSeries, replay_events


@dataclass
class SynthConfig:
    n_events: int = 4_000          # events per day
    days: int = 10
    seed: int = 7
    tick_size: float = 0.01
    min_order_size: float = 1.0
    base_tick: int = 1000
    depth_low: int = 12
    depth_high: int = 20
    max_gap: int = 3
    regime_switch: float = 0.005   # per-event probability of leaving the regime
    p_trend: float = 0.30          # regime-following mid moves (skipped when flat)
    p_jitter: float = 0.30         # direction-balanced mid moves (noise)
    reversion: float = 1.2         # pull toward base: keeps each day range-bound
    range_ticks: int = 40          # displacement scale of the pull
    heavy_volume: tuple[int, int] = (100, 180)
    light_volume: tuple[int, int] = (10, 35)


class _Market:
    def __init__(self, cfg: SynthConfig, seed: int):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.state = BookState(tick_size=cfg.tick_size, min_order_size=cfg.min_order_size)
        self.regime = 0  # -1 down, 0 flat, +1 up
        self.events: list[BookEvent] = []

    # -- helpers ---------------------------------------------------------

    def _emit(self, kind, side, tick, volume) -> None:
        ev = BookEvent(kind, side, tick * self.cfg.tick_size, float(volume))
        self.state.apply(ev)
        self.events.append(ev)

    def _volume(self, side: Side) -> int:
        # the regime's favoured side rests heavy volume near the top
        heavy = (self.regime > 0 and side is Side.BID) or (self.regime < 0 and side is Side.ASK)
        lo, hi = self.cfg.heavy_volume if heavy else self.cfg.light_volume
        if self.regime == 0:
            lo, hi = self.cfg.light_volume[0], self.cfg.heavy_volume[1]
        return int(self.rng.integers(lo, hi))

    def _levels(self, side: Side) -> dict[int, float]:
        return self.state.asks if side is Side.ASK else self.state.bids

    def _deepest(self, side: Side) -> int:
        ticks = self._levels(side)
        return max(ticks) if side is Side.ASK else min(ticks)

    def _spread(self) -> int:
        return self.state.best_ask_tick() - self.state.best_bid_tick()

    # -- actions ----------------------------------------------------------

    def _seed_book(self) -> None:
        rng = self.rng
        ask = self.cfg.base_tick + 1
        bid = self.cfg.base_tick - 1
        for _ in range(self.cfg.depth_low + 3):
            self._emit(EventKind.PLACE, Side.ASK, ask, self._volume(Side.ASK))
            self._emit(EventKind.PLACE, Side.BID, bid, self._volume(Side.BID))
            ask += int(rng.integers(1, self.cfg.max_gap + 1))
            bid -= int(rng.integers(1, self.cfg.max_gap + 1))

    def _replenish(self, side: Side) -> None:
        gap = int(self.rng.integers(1, self.cfg.max_gap + 1))
        tick = self._deepest(side) + (gap if side is Side.ASK else -gap)
        self._emit(EventKind.PLACE, side, tick, self._volume(side))

    def _trim(self, side: Side) -> None:
        tick = self._deepest(side)
        self._emit(EventKind.CANCEL, side, tick, self._levels(side)[tick])

    def _move_mid(self, direction: int) -> None:
        # direction +1: better bid or consumed best ask; -1 symmetric.
        # Improving orders stay small (pennying), so the top of book carries
        # little of the regime signal; depth does.
        penny = int(self.rng.integers(1, 15))
        if direction > 0:
            if self._spread() >= 2:
                self._emit(EventKind.PLACE, Side.BID, self.state.best_bid_tick() + 1, penny)
            else:
                tick = self.state.best_ask_tick()
                self._emit(EventKind.EXECUTE, Side.ASK, tick, self.state.asks[tick])
        else:
            if self._spread() >= 2:
                self._emit(EventKind.PLACE, Side.ASK, self.state.best_ask_tick() - 1, penny)
            else:
                tick = self.state.best_bid_tick()
                self._emit(EventKind.EXECUTE, Side.BID, tick, self.state.bids[tick])

    def _noise(self) -> None:
        rng = self.rng
        side = Side.ASK if rng.random() < 0.5 else Side.BID
        levels = self._levels(side)
        best = self.state.best_ask_tick() if side is Side.ASK else self.state.best_bid_tick()
        roll = rng.random()
        if roll < 0.55:
            # refresh resting depth behind the best quote; the regime's
            # imbalance lives in these levels, not at the top of book
            offset = int(rng.integers(1, 9))
            tick = best + offset if side is Side.ASK else best - offset
            self._emit(EventKind.PLACE, side, tick, self._volume(side))
        elif roll < 0.8 and len(levels) > self.cfg.depth_low:
            ticks = sorted(levels)
            tick = int(ticks[int(rng.integers(0, len(ticks)))])
            resting = levels[tick]
            if resting >= 2 * self.cfg.min_order_size:
                vol = max(self.cfg.min_order_size, int(resting * rng.uniform(0.2, 0.7)))
                self._emit(EventKind.CANCEL, side, tick, vol)
            else:
                self._emit(EventKind.CANCEL, side, tick, resting)
        else:
            self._replenish(side)

    def run(self) -> list[BookEvent]:
        cfg = self.cfg
        rng = self.rng
        self._seed_book()
        while len(self.events) < cfg.n_events:
            if rng.random() < cfg.regime_switch:
                choices = [r for r in (-1, 0, 1) if r != self.regime]
                self.regime = int(rng.choice(choices))
            # keep the book within its depth band
            refilled = False
            for side in (Side.ASK, Side.BID):
                if len(self._levels(side)) < cfg.depth_low:
                    self._replenish(side)
                    refilled = True
                elif len(self._levels(side)) > cfg.depth_high:
                    self._trim(side)
                    refilled = True
            if refilled:
                continue
            roll = rng.random()
            trending = roll >= cfg.p_jitter and roll < cfg.p_jitter + cfg.p_trend
            if roll < cfg.p_jitter or (trending and self.regime != 0):
                # every mid move feels a pull toward the base price, so days
                # stay range-bound; trends dominate inside the soft rails
                if trending:
                    p_up = 0.95 if self.regime > 0 else 0.05
                else:
                    p_up = 0.5
                mid = (self.state.best_ask_tick() + self.state.best_bid_tick()) / 2
                offset = np.clip((mid - cfg.base_tick) / cfg.range_ticks, -1.0, 1.0)
                p_up = float(np.clip(p_up - 0.5 * cfg.reversion * offset, 0.02, 0.98))
                self._move_mid(1 if rng.random() < p_up else -1)
            else:
                self._noise()
        return self.events[: cfg.n_events]


def generate_events(cfg: SynthConfig, day: int = 0) -> list[BookEvent]:
    """One trading day of events; each day reseeds and restarts at base_tick."""
    return _Market(cfg, seed=cfg.seed + day).run()


def make_series(cfg: SynthConfig, levels: int = 10) -> SnapshotSeries:
    """Multi-day snapshot series with day ids, replayed through the book."""
    snapshots: list = []
    day_ids: list[int] = []
    for day in range(cfg.days):
        day_snaps = replay_events(
            generate_events(cfg, day),
            cfg.tick_size,
            cfg.min_order_size,
            levels=levels,
            t0=len(snapshots),
        )
        snapshots.extend(day_snaps)
        day_ids.extend([day] * len(day_snaps))
    return SnapshotSeries(
        snapshots=snapshots,
        tick_size=cfg.tick_size,
        min_order_size=cfg.min_order_size,
        day_ids=np.array(day_ids, dtype=np.int64),
    )
