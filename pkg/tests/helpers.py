"""Shared random generators for property tests.

Everything is driven by an explicit numpy Generator so failures reproduce.
"""

from __future__ import annotations

import numpy as np

from lobrep.book import BookEvent, BookState, EventKind, Side


def random_book(
    rng: np.random.Generator,
    tick_size: float = 0.01,
    min_order_size: float = 1.0,
    levels_per_side: int = 12,
    base_tick: int = 1000,
    max_gap: int = 3,
    spread_ticks: int | None = None,
) -> BookState:
    """Book with `levels_per_side` levels per side and random inter-level gaps."""
    state = BookState(tick_size=tick_size, min_order_size=min_order_size)
    if spread_ticks is None:
        spread_ticks = int(rng.integers(1, 5))
    ask = base_tick + (spread_ticks + 1) // 2
    bid = ask - spread_ticks
    for _ in range(levels_per_side):
        state.asks[ask] = float(rng.integers(1, 200))
        state.bids[bid] = float(rng.integers(1, 200))
        ask += int(rng.integers(1, max_gap + 1))
        bid -= int(rng.integers(1, max_gap + 1))
    return state


def random_event(rng: np.random.Generator, state: BookState) -> BookEvent:
    """One event that is valid against the current book state."""
    while True:
        side = Side.ASK if rng.random() < 0.5 else Side.BID
        levels = state.asks if side is Side.ASK else state.bids
        kind = rng.choice(["place", "cancel", "execute"], p=[0.55, 0.3, 0.15])
        if kind == "place":
            opp_best = state.best_bid_tick() if side is Side.ASK else state.best_ask_tick()
            if side is Side.ASK:
                lo = (opp_best + 1) if opp_best is not None else 990
                tick = lo + int(rng.integers(0, 25))
            else:
                hi = (opp_best - 1) if opp_best is not None else 1010
                tick = hi - int(rng.integers(0, 25))
            vol = float(rng.integers(1, 50))
            return BookEvent(EventKind.PLACE, side, tick * state.tick_size, vol)
        if not levels:
            continue
        # keep at least one level alive per side so the book never empties
        candidates = [t for t in levels if len(levels) > 1 or levels[t] > 1]
        if not candidates:
            continue
        tick = int(rng.choice(candidates))
        resting = levels[tick]
        if len(levels) > 1 and rng.random() < 0.5:
            vol = resting  # full removal
        else:
            vol = float(rng.integers(1, max(2, int(resting))))
            vol = min(vol, resting if len(levels) > 1 else max(resting - 1, 1))
        ek = EventKind.CANCEL if kind == "cancel" else EventKind.EXECUTE
        return BookEvent(ek, side, tick * state.tick_size, vol)


def random_event_sequence(rng, n_events, tick_size=0.01, min_order_size=1.0, seed_book=True):
    """(initial_book, events) where every event is valid when replayed in order."""
    if seed_book:
        state = random_book(rng, tick_size=tick_size, min_order_size=min_order_size)
    else:
        state = BookState(tick_size=tick_size, min_order_size=min_order_size)
    initial = state.copy()
    events = []
    for _ in range(n_events):
        ev = random_event(rng, state)
        state.apply(ev)
        events.append(ev)
    return initial, events


def random_snapshot_window(
    rng: np.random.Generator,
    n: int,
    levels: int = 8,
    n_events_between: int = 4,
    **book_kwargs,
) -> list:
    """Uniform-depth snapshot window taken from an evolving random book."""
    state = random_book(rng, levels_per_side=levels + 6, **book_kwargs)
    window = []
    t = 0
    while len(window) < n:
        for _ in range(n_events_between):
            ev = random_event(rng, state)
            state.apply(ev)
        if len(state.asks) >= levels and len(state.bids) >= levels:
            window.append(state.snapshot(levels, t=t))
            t += 1
        else:  # replenish depth and retry
            state = random_book(rng, levels_per_side=levels + 6, **book_kwargs)
    return window


def naive_replay(initial: BookState, events) -> tuple[dict, dict]:
    """Oracle: re-sum signed volume contributions per price, independent of BookState.

    Returns (asks, bids) as tick->volume dicts with zero levels removed.
    """
    asks = dict(initial.asks)
    bids = dict(initial.bids)
    for ev in events:
        tick = round(ev.price / initial.tick_size)
        side = asks if ev.side is Side.ASK else bids
        delta = ev.volume if ev.kind is EventKind.PLACE else -ev.volume
        side[tick] = side.get(tick, 0.0) + delta
        if abs(side[tick]) <= 1e-9:
            del side[tick]
    return asks, bids
