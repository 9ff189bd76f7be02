import numpy as np
import pytest

from lobrep.book import (
    BookEvent,
    BookState,
    EventKind,
    LevelSnapshot,
    Side,
    apply_event,
    mid_price,
    snapshot_from_levels,
    to_ticks,
)
from lobrep.errors import (
    CrossedBook,
    InsufficientDepth,
    OffTickGrid,
    OverCancel,
    UnknownLevel,
)

from helpers import naive_replay, random_book, random_event_sequence


def simple_book():
    state = BookState(tick_size=0.01, min_order_size=1)
    state.asks = {1002: 5.0, 1004: 7.0}
    state.bids = {998: 6.0, 997: 3.0}
    return state


def test_place_behind_best_quote():
    state = simple_book()
    apply_event(state, BookEvent(EventKind.PLACE, Side.ASK, 10.03, 1))
    assert state.asks[1003] == 1.0
    assert state.best_ask_tick() == 1002


def test_full_cancel_removes_level():
    state = simple_book()
    state.apply(BookEvent(EventKind.CANCEL, Side.ASK, 10.04, 7))
    assert 1004 not in state.asks
    snap = state.snapshot(1)
    assert snap.ask_ticks[0] == 1002


def test_execute_decrements_like_cancel():
    state = simple_book()
    state.apply(BookEvent(EventKind.EXECUTE, Side.BID, 9.98, 2))
    assert state.bids[998] == 4.0


def test_place_crossing_raises():
    state = simple_book()
    with pytest.raises(CrossedBook):
        state.apply(BookEvent(EventKind.PLACE, Side.ASK, 9.98, 1))
    with pytest.raises(CrossedBook):
        state.apply(BookEvent(EventKind.PLACE, Side.BID, 10.02, 1))


def test_place_inside_spread_ok():
    state = simple_book()
    state.apply(BookEvent(EventKind.PLACE, Side.BID, 9.99, 2))
    assert state.best_bid_tick() == 999
    assert state.best_ask_tick() == 1002


def test_cancel_unknown_level_raises():
    state = simple_book()
    with pytest.raises(UnknownLevel):
        state.apply(BookEvent(EventKind.CANCEL, Side.ASK, 10.03, 1))


def test_over_cancel_raises():
    state = simple_book()
    with pytest.raises(OverCancel):
        state.apply(BookEvent(EventKind.CANCEL, Side.ASK, 10.02, 6))


def test_off_grid_price_rejected():
    state = simple_book()
    with pytest.raises(OffTickGrid):
        state.apply(BookEvent(EventKind.PLACE, Side.ASK, 10.025, 1))
    assert to_ticks(10.02, 0.01) == 1002


def test_place_then_cancel_restores_volumes():
    state = simple_book()
    before = (dict(state.asks), dict(state.bids))
    state.apply(BookEvent(EventKind.PLACE, Side.ASK, 10.07, 4))
    state.apply(BookEvent(EventKind.CANCEL, Side.ASK, 10.07, 4))
    assert (state.asks, state.bids) == before


def test_replay_matches_naive_oracle_10k_events():
    rng = np.random.default_rng(7)
    initial, events = random_event_sequence(rng, 10_000)
    state = initial.copy()
    for ev in events:
        state.apply(ev)
    oracle_asks, oracle_bids = naive_replay(initial, events)
    assert set(state.asks) == set(oracle_asks)
    assert set(state.bids) == set(oracle_bids)
    for tick, vol in state.asks.items():
        assert vol == pytest.approx(oracle_asks[tick], abs=1e-9)
    for tick, vol in state.bids.items():
        assert vol == pytest.approx(oracle_bids[tick], abs=1e-9)


def test_snapshot_matches_sorting_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        initial, events = random_event_sequence(rng, 50)
        state = initial.copy()
        for ev in events:
            state.apply(ev)
        L = min(len(state.asks), len(state.bids), 5)
        if L == 0:
            continue
        snap = state.snapshot(L)
        # oracle: sort the raw maps and take the top L
        want_asks = sorted(state.asks.items())[:L]
        want_bids = sorted(state.bids.items(), reverse=True)[:L]
        assert list(snap.ask_ticks) == [t for t, _ in want_asks]
        assert list(snap.ask_volumes) == [v for _, v in want_asks]
        assert list(snap.bid_ticks) == [t for t, _ in want_bids]
        assert list(snap.bid_volumes) == [v for _, v in want_bids]


def test_snapshot_invariants_after_random_sequences():
    rng = np.random.default_rng(13)
    for _ in range(200):
        initial, events = random_event_sequence(rng, 30)
        state = initial.copy()
        for ev in events:
            state.apply(ev)
        L = min(len(state.asks), len(state.bids))
        if L == 0:
            continue
        state.snapshot(L).validate()


def test_snapshot_insufficient_depth():
    state = simple_book()
    with pytest.raises(InsufficientDepth):
        state.snapshot(3)


def test_snapshot_exact_depth_lists_all():
    state = simple_book()
    snap = state.snapshot(2)
    assert list(snap.ask_ticks) == [1002, 1004]
    assert list(snap.bid_ticks) == [998, 997]
    snap.validate()


def test_snapshot_pure_and_repeatable():
    state = simple_book()
    a = state.snapshot(2)
    b = state.snapshot(2)
    assert np.array_equal(a.ask_ticks, b.ask_ticks)
    assert np.array_equal(a.ask_volumes, b.ask_volumes)
    assert np.array_equal(a.bid_ticks, b.bid_ticks)
    assert np.array_equal(a.bid_volumes, b.bid_volumes)
    with pytest.raises(ValueError):
        a.ask_volumes[0] = 99.0  # snapshots are immutable


def test_mid_price_fig2_quotes():
    # best ask 10.02 / best bid 9.98 -> mid 10.00, spread 0.04
    snap = simple_book().snapshot(2)
    assert mid_price(snap) == pytest.approx(10.00)
    assert snap.ask_prices[0] - snap.bid_prices[0] == pytest.approx(0.04)


def test_mid_price_half_tick():
    snap = snapshot_from_levels(0, 0.01, [(1000, 1.0)], [(999, 1.0)])
    assert mid_price(snap) == pytest.approx(9.995)
    assert snap.mid_tick_snapped == 999  # exact half rounds toward the bid


def test_mid_price_random_matches_direct():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        book = random_book(rng, levels_per_side=3)
        snap = book.snapshot(1)
        direct = (min(book.asks) + max(book.bids)) / 2 * book.tick_size
        assert mid_price(snap) == pytest.approx(direct, rel=1e-12)
