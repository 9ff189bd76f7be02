"""The four input representations built from a window of book snapshots.

level_based: T x 4L stack of per-level (price, volume) tuples.
mw:          N x (2W+1) signed-volume grid over contiguous ticks centred at
             the snapped mid-price of the window's most recent snapshot
             (ask volume positive, bid volume negative).
accumulated_mw: per-row outward cumulative sums of the mw grid.
smoothed_mw:    mw convolved along the price axis with a normalized Gaussian,
             each side separately; overlapping tails are netted in `data`
             while the per-side fields keep the exact side masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .book import LevelSnapshot, snapshot_from_levels
from .errors import DegenerateBook, EmptyWindow, NonUniformDepth, WrongScheme

SCHEMES = ("level_based", "mw", "accumulated_mw", "smoothed_mw")
MW_SCHEMES = ("mw", "accumulated_mw", "smoothed_mw")


@dataclass
class WindowConfig:
    """Geometry of the moving-window grid."""

    N: int = 10
    W: int = 20
    sigma: float = 1.0       # Gaussian std, in ticks
    truncation: float = 3.0  # kernel cutoff, in sigmas
    smooth_time: bool = False  # reserved: 2-d smoothing along the time axis

    def __post_init__(self):
        if self.N < 1 or self.W < 1:
            raise ValueError("N and W must be >= 1")
        if self.sigma <= 0 or self.truncation < 1:
            raise ValueError("sigma must be > 0 and truncation >= 1")
        if self.smooth_time:
            raise NotImplementedError("time-axis smoothing is reserved, not implemented")

    @property
    def width(self) -> int:
        return 2 * self.W + 1


@dataclass
class RepTensor:
    """Dense time x feature matrix in one representation scheme."""

    scheme: str
    data: np.ndarray
    tick_size: float
    ts: tuple[int, ...]
    levels: int | None = None        # level_based: L
    half_width: int | None = None    # mw family: W
    ref_tick: int | None = None      # mw family: snapped mid of last snapshot
    sigma: float | None = None       # smoothed only
    truncation: float | None = None  # smoothed only
    normalized: bool = False
    ask_data: np.ndarray | None = field(default=None, repr=False)
    bid_data: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self):
        return self.data.shape

    def meta(self) -> dict:
        out = {"scheme": self.scheme, "tick_size": self.tick_size}
        if self.levels is not None:
            out["levels"] = self.levels
        if self.half_width is not None:
            out["half_width"] = self.half_width
        if self.ref_tick is not None:
            out["ref_tick"] = self.ref_tick
        if self.sigma is not None:
            out["sigma"] = self.sigma
            out["truncation"] = self.truncation
        if self.normalized:
            out["normalized"] = True
        return out


def _check_window(window: list[LevelSnapshot]) -> float:
    if not window:
        raise EmptyWindow("representation requested for an empty window")
    tick = window[0].tick_size
    for snap in window:
        if snap.tick_size != tick:
            raise NonUniformDepth(f"window mixes tick sizes {tick} and {snap.tick_size}")
    return tick


def build_level_based(window: list[LevelSnapshot], levels: int | None = None) -> RepTensor:
    """T x 4L matrix; per level i the columns are p_a^i, v_a^i, p_b^i, v_b^i.

    With ``levels`` set, deeper snapshots are truncated to their top
    ``levels`` per side (how a fixed-width view sees a perturbed book)."""
    tick = _check_window(window)
    if levels is None:
        depths = {(s.ask_depth, s.bid_depth) for s in window}
        if len(depths) > 1 or window[0].ask_depth != window[0].bid_depth:
            raise NonUniformDepth(f"window depths are not uniform: {sorted(depths)}")
        levels = window[0].ask_depth
    L = levels
    for snap in window:
        if snap.ask_depth < L or snap.bid_depth < L:
            raise NonUniformDepth(
                f"snapshot {snap.t} has fewer than {L} levels on one side"
            )
    data = np.empty((len(window), 4 * L), dtype=np.float64)
    for n, snap in enumerate(window):
        row = data[n]
        row[0::4] = snap.ask_prices[:L]
        row[1::4] = snap.ask_volumes[:L]
        row[2::4] = snap.bid_prices[:L]
        row[3::4] = snap.bid_volumes[:L]
    return RepTensor(
        scheme="level_based",
        data=data,
        tick_size=tick,
        ts=tuple(s.t for s in window),
        levels=L,
    )


def unpack_level_based(tensor: RepTensor) -> list[LevelSnapshot]:
    """Inverse of build_level_based (raw, un-normalized tensors only)."""
    if tensor.scheme != "level_based":
        raise WrongScheme(f"expected level_based, got {tensor.scheme}")
    if tensor.normalized:
        raise WrongScheme("normalized tensors cannot be unpacked into books")
    L, tick = tensor.levels, tensor.tick_size
    out = []
    for n, row in enumerate(tensor.data):
        ask = [(round(p / tick), v) for p, v in zip(row[0::4], row[1::4])]
        bid = [(round(p / tick), v) for p, v in zip(row[2::4], row[3::4])]
        out.append(snapshot_from_levels(tensor.ts[n], tick, ask, bid))
    return out


def build_mw(window: list[LevelSnapshot], cfg: WindowConfig) -> RepTensor:
    """N x (2W+1) signed volume grid; column i holds the volume resting at
    tick r + (i - W), where r is the snapped mid of the last snapshot."""
    tick = _check_window(window)
    window = window[-cfg.N:] if len(window) > cfg.N else window
    r = window[-1].mid_tick_snapped
    lo = r - cfg.W
    data = np.zeros((len(window), cfg.width), dtype=np.float64)
    for n, snap in enumerate(window):
        row = data[n]
        a_cols = snap.ask_ticks - lo
        a_mask = (a_cols >= 0) & (a_cols < cfg.width)
        row[a_cols[a_mask]] = snap.ask_volumes[a_mask]
        b_cols = snap.bid_ticks - lo
        b_mask = (b_cols >= 0) & (b_cols < cfg.width)
        if np.any(row[b_cols[b_mask]] != 0.0):
            raise DegenerateBook(
                f"ask and bid volume coincide on one tick in snapshot {snap.t}"
            )
        row[b_cols[b_mask]] = -snap.bid_volumes[b_mask]
    return RepTensor(
        scheme="mw",
        data=data,
        tick_size=tick,
        ts=tuple(s.t for s in window),
        half_width=cfg.W,
        ref_tick=r,
    )


def build_accumulated_mw(mw: RepTensor) -> RepTensor:
    """Outward cumulative sums per row: market depth as a time series."""
    if mw.scheme != "mw":
        raise WrongScheme(f"expected mw, got {mw.scheme}")
    x = mw.data
    W = mw.half_width
    out = np.empty_like(x)
    out[:, W] = x[:, W]
    out[:, W + 1:] = np.cumsum(x[:, W + 1:], axis=1)
    out[:, :W] = np.cumsum(x[:, :W][:, ::-1], axis=1)[:, ::-1]
    return RepTensor(
        scheme="accumulated_mw",
        data=out,
        tick_size=mw.tick_size,
        ts=mw.ts,
        half_width=W,
        ref_tick=mw.ref_tick,
    )


def difference_accumulated_mw(acc: RepTensor) -> RepTensor:
    """Exact inverse of build_accumulated_mw."""
    if acc.scheme != "accumulated_mw":
        raise WrongScheme(f"expected accumulated_mw, got {acc.scheme}")
    x = acc.data
    W = acc.half_width
    out = np.empty_like(x)
    out[:, W] = x[:, W]
    out[:, W + 1] = x[:, W + 1]
    out[:, W + 2:] = np.diff(x[:, W + 1:], axis=1)
    out[:, W - 1] = x[:, W - 1]
    out[:, :W - 1] = x[:, :W - 1] - x[:, 1:W]
    return RepTensor(
        scheme="mw",
        data=out,
        tick_size=acc.tick_size,
        ts=acc.ts,
        half_width=W,
        ref_tick=acc.ref_tick,
    )


def gaussian_kernel(sigma: float, truncation: float) -> np.ndarray:
    """Discrete Gaussian over integer tick offsets, renormalized to sum 1."""
    radius = int(math.floor(truncation * sigma + 1e-12))
    if radius == 0:
        return np.ones(1)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (offsets / sigma) ** 2)
    return k / k.sum()


def build_smoothed_mw(mw: RepTensor, cfg: WindowConfig) -> RepTensor:
    """Price-axis Gaussian smoothing of the mw grid, each side separately.

    Boundary cells are zero-padded, so mass within `truncation*sigma` ticks
    of a window edge leaks out; interior mass is preserved per side.
    """
    if mw.scheme != "mw":
        raise WrongScheme(f"expected mw, got {mw.scheme}")
    kernel = gaussian_kernel(cfg.sigma, cfg.truncation)
    pos = np.clip(mw.data, 0.0, None)
    neg = np.clip(mw.data, None, 0.0)
    ask_sm = np.empty_like(pos)
    bid_sm = np.empty_like(neg)
    for n in range(mw.data.shape[0]):
        ask_sm[n] = np.convolve(pos[n], kernel, mode="same")
        bid_sm[n] = np.convolve(neg[n], kernel, mode="same")
    return RepTensor(
        scheme="smoothed_mw",
        data=ask_sm + bid_sm,
        tick_size=mw.tick_size,
        ts=mw.ts,
        half_width=mw.half_width,
        ref_tick=mw.ref_tick,
        sigma=cfg.sigma,
        truncation=cfg.truncation,
        ask_data=ask_sm,
        bid_data=bid_sm,
    )


def build(scheme: str, window: list[LevelSnapshot], cfg: WindowConfig) -> RepTensor:
    """Build any scheme from raw snapshots."""
    if scheme == "level_based":
        return build_level_based(window)
    mw = build_mw(window, cfg)
    if scheme == "mw":
        return mw
    if scheme == "accumulated_mw":
        return build_accumulated_mw(mw)
    if scheme == "smoothed_mw":
        return build_smoothed_mw(mw, cfg)
    raise WrongScheme(f"unknown scheme {scheme!r}")


def validate_rep_tensor(tensor: RepTensor, window: list[LevelSnapshot] | None = None):
    """Assert scheme invariants; with the source window, also check the
    per-row sign partition and volume totality of the mw grid."""
    if tensor.scheme == "level_based":
        if not tensor.normalized:
            for snap in unpack_level_based(tensor):
                snap.validate()
        return
    W = tensor.half_width
    assert tensor.data.shape[1] == 2 * W + 1
    if tensor.scheme == "accumulated_mw":
        x = tensor.data
        ask = x[:, W + 1:]
        bid = x[:, :W]
        # outward |cumsum| is non-decreasing wherever a row is side-pure
        for n in range(x.shape[0]):
            if np.all(ask[n] >= 0):
                assert np.all(np.diff(np.abs(ask[n])) >= -1e-9)
            if np.all(bid[n] <= 0):
                assert np.all(np.diff(np.abs(bid[n][::-1])) >= -1e-9)
    if window is None:
        return
    window = window[-tensor.data.shape[0]:]
    lo = tensor.ref_tick - W
    hi = tensor.ref_tick + W
    base = tensor.data if tensor.scheme == "mw" else None
    if base is None:
        return
    for n, snap in enumerate(window):
        row = base[n]
        own = snap.mid_tick_snapped
        for c in np.nonzero(row)[0]:
            tick = lo + c
            if tick > own:
                assert row[c] > 0, "cell above the row's own mid must be ask volume"
            elif tick < own:
                assert row[c] < 0, "cell below the row's own mid must be bid volume"
        in_range_ask = snap.ask_volumes[(snap.ask_ticks >= lo) & (snap.ask_ticks <= hi)].sum()
        in_range_bid = snap.bid_volumes[(snap.bid_ticks >= lo) & (snap.bid_ticks <= hi)].sum()
        assert row[row > 0].sum() == in_range_ask
        assert -row[row < 0].sum() == in_range_bid
