import numpy as np
import pytest

from lobrep.book import BookState
from lobrep.errors import DepthUnknown, InsufficientDepth, ShapeMismatch
from lobrep.ingest import SnapshotSeries
from lobrep.perturb import (
    PARADIGMS,
    DisplacementReport,
    PerturbationSpec,
    displacement,
    fig2_fixture,
    perturb_book,
    perturb_series,
    perturb_snapshot,
)
from lobrep.represent import WindowConfig, build_mw

from helpers import random_book


def test_perturb_book_spec_example():
    # asks {10.02:5, 10.05:7}, L=2, ask paradigm, size 1
    state = BookState(tick_size=0.01, min_order_size=1)
    state.asks = {1002: 5.0, 1005: 7.0}
    state.bids = {998: 6.0, 996: 2.0}
    out = perturb_book(state, PerturbationSpec(paradigm="ask", order_size=1, levels=2))
    assert out.asks == {1002: 5.0, 1003: 1.0, 1004: 1.0, 1005: 7.0}
    assert sorted(out.asks)[:2] == [1002, 1003]
    assert out.bids == state.bids


def test_paradigm_none_is_noop():
    state = fig2_fixture()
    out = perturb_book(state, PerturbationSpec(paradigm="none"))
    assert out.asks == state.asks and out.bids == state.bids
    snap = state.snapshot(10)
    assert perturb_snapshot(snap, PerturbationSpec(paradigm="none"), 1.0) is snap


def test_original_book_untouched():
    state = fig2_fixture()
    before = dict(state.asks)
    perturb_book(state, PerturbationSpec(paradigm="both"))
    assert state.asks == before


def test_mid_price_invariance_all_paradigms():
    rng = np.random.default_rng(21)
    for _ in range(100):
        book = random_book(rng, levels_per_side=12)
        mid = book.snapshot(10).mid_price
        for paradigm in PARADIGMS:
            out = perturb_book(book, PerturbationSpec(paradigm=paradigm, levels=10))
            assert out.snapshot(10).mid_price == mid


def test_idempotence():
    rng = np.random.default_rng(22)
    for _ in range(50):
        book = random_book(rng, levels_per_side=12)
        spec = PerturbationSpec(paradigm="both", levels=10)
        once = perturb_book(book, spec)
        twice = perturb_book(once, spec)
        assert once.asks == twice.asks and once.bids == twice.bids


def test_insufficient_depth_raises():
    state = BookState(tick_size=0.01, min_order_size=1)
    state.asks = {1002: 5.0}
    state.bids = {998: 6.0}
    with pytest.raises(InsufficientDepth):
        perturb_book(state, PerturbationSpec(paradigm="ask", levels=2))


def test_uncapped_fill_reaches_deepest_level():
    state = BookState(tick_size=0.01, min_order_size=1)
    state.asks = {1002: 5.0, 1005: 7.0, 1009: 2.0}
    state.bids = {998: 6.0, 996: 2.0, 995: 1.0}
    spec = PerturbationSpec(paradigm="ask", levels=2, cap_at_level=False)
    out = perturb_book(state, spec)
    assert set(out.asks) == {1002, 1003, 1004, 1005, 1006, 1007, 1008, 1009}


def test_fills_never_enter_spread():
    state = fig2_fixture()  # spread 0.04: ticks 999..1001 are inside the spread
    out = perturb_book(state, PerturbationSpec(paradigm="both"))
    for tick in (999, 1000, 1001):
        assert tick not in out.asks and tick not in out.bids


def test_perturb_snapshot_matches_hand_oracle():
    rng = np.random.default_rng(23)
    for _ in range(30):
        book = random_book(rng, levels_per_side=14)
        spec = PerturbationSpec(paradigm="both", levels=10)
        snap = book.snapshot(10)
        got = perturb_snapshot(snap, spec, book.min_order_size)
        # oracle: original levels plus a size-1 order at each empty in-range tick
        want_asks = dict(zip(snap.ask_ticks.tolist(), snap.ask_volumes.tolist()))
        for tick in range(snap.ask_ticks[0] + 1, snap.ask_ticks[9]):
            want_asks.setdefault(tick, book.min_order_size)
        want_bids = dict(zip(snap.bid_ticks.tolist(), snap.bid_volumes.tolist()))
        for tick in range(snap.bid_ticks[9] + 1, snap.bid_ticks[0]):
            want_bids.setdefault(tick, book.min_order_size)
        assert dict(zip(got.ask_ticks.tolist(), got.ask_volumes.tolist())) == want_asks
        assert dict(zip(got.bid_ticks.tolist(), got.bid_volumes.tolist())) == want_bids


def test_perturb_series_per_snapshot_oracle():
    rng = np.random.default_rng(24)
    snaps = [random_book(rng, levels_per_side=12).snapshot(10, t=i) for i in range(3)]
    series = SnapshotSeries(snapshots=snaps, tick_size=0.01, min_order_size=1.0)
    spec = PerturbationSpec(paradigm="ask", levels=10)
    out = perturb_series(series, spec)
    assert out.depth_truncated
    for orig, got in zip(snaps, out.snapshots):
        want = perturb_snapshot(orig, spec, 1.0)
        assert np.array_equal(want.ask_ticks, got.ask_ticks)
        assert np.array_equal(want.bid_volumes, got.bid_volumes)
    # mid series unchanged
    assert np.array_equal(series.mids(), out.mids())


def test_perturb_series_none_identity():
    rng = np.random.default_rng(25)
    snaps = [random_book(rng).snapshot(5, t=i) for i in range(3)]
    series = SnapshotSeries(snapshots=snaps, tick_size=0.01, min_order_size=1.0)
    assert perturb_series(series, PerturbationSpec(paradigm="none")) is series


def test_depth_unknown_when_fill_range_exceeds_view():
    rng = np.random.default_rng(26)
    snap = random_book(rng, levels_per_side=8).snapshot(6)
    with pytest.raises(DepthUnknown):
        perturb_snapshot(snap, PerturbationSpec(paradigm="ask", levels=10), 1.0)


def test_displacement_no_perturbation_zero():
    rng = np.random.default_rng(27)
    window = [random_book(rng, levels_per_side=12).snapshot(10, t=i) for i in range(4)]
    rep = displacement(window, window, WindowConfig(N=4, W=20))
    assert rep.l2_level_based == 0 and rep.l2_mw == 0 and rep.linf_mw == 0
    assert rep.total_added_volume == 0
    assert rep.mid_before == rep.mid_after


def test_displacement_single_injected_order():
    state = BookState(tick_size=0.01, min_order_size=1)
    state.asks = {1002: 5.0, 1004: 7.0}
    state.bids = {998: 6.0, 997: 2.0}
    before = [state.snapshot(2, t=0)]
    spec = PerturbationSpec(paradigm="ask", order_size=1, levels=2)
    after = [perturb_book(state, spec).snapshot(t=0)]
    rep = displacement(before, after, WindowConfig(N=1, W=10))
    assert rep.l2_mw == pytest.approx(1.0)
    assert rep.linf_mw == pytest.approx(1.0)
    assert rep.total_added_volume == pytest.approx(1.0)


def test_displacement_shape_mismatch():
    rng = np.random.default_rng(28)
    w1 = [random_book(rng).snapshot(5, t=0)]
    w2 = [random_book(rng).snapshot(5, t=0), random_book(rng).snapshot(5, t=1)]
    with pytest.raises(ShapeMismatch):
        displacement(w1, w2, WindowConfig(N=2, W=5))


def test_fig2_fixture_properties():
    state = fig2_fixture()
    snap = state.snapshot(10)
    assert snap.mid_price == pytest.approx(10.00)
    assert snap.ask_prices[0] - snap.bid_prices[0] == pytest.approx(0.04)
    # the described empty ticks
    for tick in (1003, 1006):
        assert tick not in state.asks
    for tick in (996, 994):
        assert tick not in state.bids

    spec = PerturbationSpec(paradigm="both", order_size=1, levels=10)
    perturbed = perturb_book(state, spec)
    after = perturbed.snapshot(t=0)
    assert after.mid_price == pytest.approx(10.00)
    # original ask L2 (10.04) shifts to L3 after perturbation
    assert after.ask_ticks[2] == 1004

    rep = displacement([snap], [after], WindowConfig(N=1, W=20))
    assert rep.total_added_volume == pytest.approx(10.0)
    assert rep.l2_level_based / rep.total_added_volume >= 10.0
    assert rep.linf_mw == pytest.approx(1.0)
    assert rep.l2_level_based > rep.l2_mw


def test_mw_changed_cells_were_zero_and_equal_order_size():
    rng = np.random.default_rng(29)
    cfg = WindowConfig(N=1, W=20)
    for _ in range(50):
        book = random_book(rng, levels_per_side=12)
        spec = PerturbationSpec(paradigm="both", levels=10)
        snap = book.snapshot(10, t=0)
        before = build_mw([snap], cfg).data
        after = build_mw([perturb_snapshot(snap, spec, book.min_order_size)], cfg).data
        diff = after - before
        changed = diff != 0
        assert np.max(np.abs(diff)) <= book.min_order_size
        assert np.all(before[changed] == 0)
        assert np.all(np.abs(diff[changed]) == book.min_order_size)


def test_level_based_displacement_dominates_mw():
    rng = np.random.default_rng(30)
    cfg = WindowConfig(N=1, W=20)
    count = 0
    for _ in range(50):
        book = random_book(rng, levels_per_side=14, max_gap=3)
        spec = PerturbationSpec(paradigm="both", levels=10)
        snap = book.snapshot(10, t=0)
        before = [snap]
        after = [perturb_snapshot(snap, spec, book.min_order_size)]
        rep = displacement(before, after, cfg)
        if rep.total_added_volume >= 2:  # >= 2 empty in-range ticks
            count += 1
            assert rep.l2_level_based > rep.l2_mw
    assert count > 30  # the generator must actually exercise the property
