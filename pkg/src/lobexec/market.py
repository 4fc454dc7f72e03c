"""Event-driven market simulation with noise, tactical, and strategic traders.

The market evolves as a continuous-time Markov chain simulated exactly: after
every event all channel rates are recomputed from the current book, a waiting
time is drawn from the total rate, and a single channel fires. Rates are
state dependent (cancellations are proportional to resting volume, tactical
traders react to the weighted book imbalance), so no discretization or
thinning is involved.

Channel conventions, with ``j`` the current spread in ticks and ``D`` the
modeled depth:

* market buy / sell orders arrive at a flat rate per side;
* limit buys arrive ``k`` ticks below the best ask and limit sells ``k``
  ticks above the best bid, for ``k = 1..D``;
* cancellations target background lots ``k`` ticks inside the opposite touch
  for ``k = j..D``, at a rate per resting lot at that price, and remove lots
  from the back of the queue.

Tactical traders use the same channel layout scaled by the positive or
negative part of the weighted imbalance: buy-side flow fires on ``I+``,
sell-side flow on ``I-``, and cancellations on the opposite part (buy orders
are cancelled when the book looks ask-heavy). Their default per-channel
rates mirror the noise arrival profile times a reaction factor, which keeps
the feedback loop between imbalance and order flow stable.

For reproducibility the sampler draws, per event: one uniform for the
waiting time (inverse transform), one uniform for the channel (against the
cumulative rate vector in the fixed block order noise market/limit/cancel
then tactical market/limit/cancel, buys before sells), and one standard
normal for the order size.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._kernels import rate_cum
from .book import EmptySide, OrderBook, Owner, Side
from .seeding import rng_stream

DEPTH = 30

# Baseline per-level arrival intensities (events per second) for the noise
# traders; index k-1 is the rate k ticks inside the opposite touch.
# Cancellation intensities are per resting lot. Deeper levels are inactive.
_LIMIT_INTENSITY = [0.2842, 0.5255, 0.2971, 0.2307, 0.0826, 0.0682, 0.0631,
                    0.0481, 0.0462, 0.0321, 0.0178, 0.0015, 0.0001]
_CANCEL_INTENSITY = [0.08636, 0.04635, 0.01487, 0.01096, 0.00402, 0.00341,
                     0.00311, 0.00237, 0.00233, 0.00178, 0.00127, 0.00012,
                     0.00001]
MARKET_INTENSITY = 0.1237

ORDER_SIZE_SIGMA = 2.0
SIZE_CAP_SIGMAS = 5.0  # the random part of a size draw is capped here

TACTICAL_REACTION = 2.0  # tactical rate multiplier on the baseline profile


def _as_level_array(value, depth: int) -> np.ndarray:
    arr = np.zeros(depth)
    if np.isscalar(value):
        arr[:] = float(value)
    else:
        value = np.asarray(value, dtype=float)
        arr[: len(value)] = value
    return arr


@dataclass
class NoiseConfig:
    """Arrival intensities for the random order flow."""

    market_rate: float = MARKET_INTENSITY
    limit_rates: np.ndarray = None
    cancel_rates: np.ndarray = None
    market_size_sigma: float = ORDER_SIZE_SIGMA
    limit_size_sigma: np.ndarray = ORDER_SIZE_SIGMA
    cancel_size_sigma: np.ndarray = ORDER_SIZE_SIGMA
    intensity_scale: float = 1.0
    depth: int = DEPTH

    def __post_init__(self):
        base_limit = _LIMIT_INTENSITY if self.limit_rates is None else self.limit_rates
        base_cancel = _CANCEL_INTENSITY if self.cancel_rates is None else self.cancel_rates
        self.limit_rates = _as_level_array(base_limit, self.depth)
        self.cancel_rates = _as_level_array(base_cancel, self.depth)
        self.limit_size_sigma = _as_level_array(self.limit_size_sigma, self.depth)
        self.cancel_size_sigma = _as_level_array(self.cancel_size_sigma, self.depth)


@dataclass
class TacticalConfig:
    """Imbalance-driven order flow: channel rates scale with the signed imbalance.

    A channel's instantaneous rate is its configured rate times ``I+`` (buy
    flow), ``I-`` (sell flow), or the opposite part for cancellations, where
    ``I`` is the depth-discounted volume imbalance.
    """

    market_rate: float = None
    limit_rates: np.ndarray = None
    cancel_rates: np.ndarray = None
    damping: float = 0.65  # depth discount inside the weighted imbalance
    market_size_sigma: float = ORDER_SIZE_SIGMA
    limit_size_sigma: np.ndarray = ORDER_SIZE_SIGMA
    cancel_size_sigma: np.ndarray = ORDER_SIZE_SIGMA
    intensity_scale: float = 1.0
    depth: int = DEPTH

    def __post_init__(self):
        if self.market_rate is None:
            self.market_rate = TACTICAL_REACTION * MARKET_INTENSITY
        base_limit = (TACTICAL_REACTION * np.asarray(_LIMIT_INTENSITY)
                      if self.limit_rates is None else self.limit_rates)
        base_cancel = (TACTICAL_REACTION * np.asarray(_CANCEL_INTENSITY)
                       if self.cancel_rates is None else self.cancel_rates)
        self.limit_rates = _as_level_array(base_limit, self.depth)
        self.cancel_rates = _as_level_array(base_cancel, self.depth)
        self.limit_size_sigma = _as_level_array(self.limit_size_sigma, self.depth)
        self.cancel_size_sigma = _as_level_array(self.cancel_size_sigma, self.depth)


@dataclass
class StrategicConfig:
    """A directional trader working a parent order at fixed intervals.

    Market orders of ``market_size`` lots and limit orders of ``limit_size``
    lots (joining the best quote on its own side) are sent on deterministic
    schedules starting at the simulation start time. ``direction`` may be
    ``"buy"``, ``"sell"`` or ``"random"`` (fair coin drawn once at start).
    """

    market_size: int = 1
    limit_size: int = 2
    market_interval: float = 3.0
    limit_interval: float = 3.0
    direction: str = "random"


def default_noise_config(intensity_scale: float = 1.0) -> NoiseConfig:
    return NoiseConfig(intensity_scale=intensity_scale)


def default_tactical_config(intensity_scale: float = 1.0) -> TacticalConfig:
    return TacticalConfig(intensity_scale=intensity_scale)


def draw_order_size(sigma: float, rng: np.random.Generator) -> int:
    """Shifted half-normal order size, rounded, with the random part capped."""
    z = abs(rng.standard_normal())
    extra = sigma * z
    cap = SIZE_CAP_SIGMAS * sigma
    if extra > cap:
        extra = cap
    return int(1.0 + extra + 0.5)


def weighted_imbalance(book: OrderBook, damping: float, depth: int = DEPTH) -> float:
    """Depth-discounted volume imbalance in [-1, 1]; 0 when no depth volume."""
    v_bid, v_ask = book.snapshot(depth)
    weights = np.exp(-damping * np.arange(depth))
    heavy_bid = float(v_bid @ weights)
    heavy_ask = float(v_ask @ weights)
    total = heavy_bid + heavy_ask
    if total == 0.0:
        return 0.0
    return (heavy_bid - heavy_ask) / total


class Channel(NamedTuple):
    agent: str  # "noise" | "tactical"
    kind: str   # "market" | "limit" | "cancel"
    side: Side
    level: int  # k, ticks inside the opposite touch; 0 for market orders
    rate: float


class MarketState:
    """One simulated market: a book, a clock, an RNG, and flow accumulators.

    Flow accumulators hold the signed market-order and limit-order volumes
    since the last :meth:`reset_flows`; the execution agent's own orders are
    submitted directly to the book and therefore never counted here.

    The book may be mutated externally between :meth:`advance` calls (the
    execution agent does); each call re-anchors its internal depth caches.
    """

    def __init__(self, book: OrderBook, rng: np.random.Generator,
                 noise: NoiseConfig | None = None,
                 tactical: TacticalConfig | None = None,
                 strategic: StrategicConfig | None = None,
                 clock: float = 0.0, strategic_stop: float = math.inf,
                 record_events: bool = False, paranoid: bool = False):
        self.book = book
        self.rng = rng
        self.noise = noise
        self.tactical = tactical
        self.strategic = strategic
        self.clock = clock
        self.market_buy_flow = 0
        self.market_sell_flow = 0
        self.limit_buy_flow = 0
        self.limit_sell_flow = 0
        self.event_log: list[tuple] | None = [] if record_events else None
        self._paranoid = paranoid

        depth = DEPTH
        if noise is not None:
            depth = noise.depth
        if tactical is not None:
            depth = max(depth, tactical.depth)
        self.depth = depth

        # strategic schedule state; the direction is resolved once at start
        self._strat_side = None
        self._next_strat_market = math.inf
        self._next_strat_limit = math.inf
        self._strat_stop = strategic_stop
        if strategic is not None:
            if strategic.direction == "random":
                self._strat_side = Side.BUY if rng.random() < 0.5 else Side.SELL
            else:
                self._strat_side = Side(strategic.direction)
            if strategic.market_size > 0:
                self._next_strat_market = clock
            if strategic.limit_size > 0:
                self._next_strat_limit = clock

        # rate vector blocks: per present trader [market buy, market sell,
        # limit buy x D, limit sell x D, cancel buy x D, cancel sell x D]
        d = depth
        size = 0
        if noise is not None:
            self._nmb = 0
            self._nlb, self._nls = 2, 2 + d
            self._ncb, self._ncs = 2 + 2 * d, 2 + 3 * d
            self._noise_end = size = 2 + 4 * d
        else:
            self._noise_end = 0
        if tactical is not None:
            t0 = size
            self._tmb = t0
            self._tlb, self._tls = t0 + 2, t0 + 2 + d
            self._tcb, self._tcs = t0 + 2 + 2 * d, t0 + 2 + 3 * d
            size = t0 + 2 + 4 * d
        self._rates = np.zeros(size)
        self._cum = np.zeros(size)
        self._v_bid = np.zeros(d)
        self._v_ask = np.zeros(d)
        self._anchor_bid = self._anchor_ask = None
        self._stale = True
        if noise is not None:
            s = noise.intensity_scale
            self._rates[self._nmb] = self._rates[self._nmb + 1] = noise.market_rate * s
            self._rates[self._nlb:self._nls] = noise.limit_rates * s
            self._rates[self._nls:self._ncb] = noise.limit_rates * s
            self._noise_cancel_scaled = noise.cancel_rates * s
        else:
            self._noise_cancel_scaled = np.zeros(d)
        if tactical is not None:
            s = tactical.intensity_scale
            self._tact_market_scaled = tactical.market_rate * s
            self._tact_limit_scaled = tactical.limit_rates * s
            self._tact_cancel_scaled = tactical.cancel_rates * s
            self._imbalance_weights = np.exp(-tactical.damping * np.arange(d))
        else:
            self._tact_market_scaled = 0.0
            self._tact_limit_scaled = np.zeros(d)
            self._tact_cancel_scaled = np.zeros(d)
            self._imbalance_weights = np.zeros(d)
        self._noise_market_scaled = (noise.market_rate * noise.intensity_scale
                                     if noise is not None else 0.0)
        self._noise_limit_scaled = (noise.limit_rates * noise.intensity_scale
                                    if noise is not None else np.zeros(d))

    # ------------------------------------------------------------------

    def reset_flows(self) -> None:
        self.market_buy_flow = 0
        self.market_sell_flow = 0
        self.limit_buy_flow = 0
        self.limit_sell_flow = 0

    def invalidate_depth_cache(self) -> None:
        """Call after mutating the book outside of :meth:`advance`."""
        self._stale = True

    def _refresh_volumes(self) -> None:
        bid, ask = self.book.fill_depth_volumes(self.depth, self._v_bid,
                                                self._v_ask)
        self._anchor_bid, self._anchor_ask = bid, ask
        self._stale = False

    def _fill_rates(self) -> float:
        """Recompute the cumulative channel rates; returns the total rate."""
        if self._stale:
            self._refresh_volumes()
        elif self._paranoid:
            self._check_cache()
        if self._cum.size == 0:
            return 0.0
        return rate_cum(
            self._cum, self._v_bid, self._v_ask,
            self._anchor_ask - self._anchor_bid, self.depth,
            self.noise is not None, self._noise_market_scaled,
            self._noise_limit_scaled, self._noise_cancel_scaled,
            self.tactical is not None, self._tact_market_scaled,
            self._tact_limit_scaled, self._tact_cancel_scaled,
            self._imbalance_weights)

    def _fill_rates_numpy(self) -> float:
        """Interpreted twin of :meth:`_fill_rates` (equivalence testing)."""
        if self._stale:
            self._refresh_volumes()
        d = self.depth
        v_bid, v_ask = self._v_bid, self._v_ask
        j = self._anchor_ask - self._anchor_bid
        rates = self._rates
        lo = j - 1 if j <= d else d
        n = d - j + 1
        if self.noise is not None:
            rates[self._ncb:self._ncb + lo] = 0.0
            rates[self._ncs:self._ncs + lo] = 0.0
            if j <= d:
                np.multiply(self._noise_cancel_scaled[j - 1:], v_bid[:n],
                            out=rates[self._ncb + j - 1:self._ncb + d])
                np.multiply(self._noise_cancel_scaled[j - 1:], v_ask[:n],
                            out=rates[self._ncs + j - 1:self._ncs + d])
        if self.tactical is not None:
            w = self._imbalance_weights
            heavy_bid = float(v_bid @ w)
            heavy_ask = float(v_ask @ w)
            total_w = heavy_bid + heavy_ask
            imb = (heavy_bid - heavy_ask) / total_w if total_w > 0.0 else 0.0
            pos = imb if imb > 0.0 else 0.0
            neg = -imb if imb < 0.0 else 0.0
            tmb = self._tmb
            rates[tmb] = self._tact_market_scaled * pos
            rates[tmb + 1] = self._tact_market_scaled * neg
            np.multiply(self._tact_limit_scaled, pos,
                        out=rates[self._tlb:self._tlb + d])
            np.multiply(self._tact_limit_scaled, neg,
                        out=rates[self._tls:self._tls + d])
            rates[self._tcb:self._tcb + lo] = 0.0
            rates[self._tcs:self._tcs + lo] = 0.0
            if j <= d:
                np.multiply(self._tact_cancel_scaled[j - 1:] * neg, v_bid[:n],
                            out=rates[self._tcb + j - 1:self._tcb + d])
                np.multiply(self._tact_cancel_scaled[j - 1:] * pos, v_ask[:n],
                            out=rates[self._tcs + j - 1:self._tcs + d])
        if rates.size == 0:
            return 0.0
        rates.cumsum(out=self._cum)
        return float(self._cum[-1])

    def _check_cache(self) -> None:
        fresh_bid = np.zeros(self.depth)
        fresh_ask = np.zeros(self.depth)
        bid, ask = self.book.fill_depth_volumes(self.depth, fresh_bid, fresh_ask)
        assert bid == self._anchor_bid and ask == self._anchor_ask, \
            f"anchor drift: cached ({self._anchor_bid},{self._anchor_ask}) vs ({bid},{ask})"
        assert np.array_equal(fresh_bid, self._v_bid), "bid depth cache drift"
        assert np.array_equal(fresh_ask, self._v_ask), "ask depth cache drift"

    # ------------------------------------------------------------------
    # event executors: each keeps the depth cache coherent, falling back to
    # a full refresh whenever a best quote moved
    # ------------------------------------------------------------------

    def _log(self, agent, kind, side, price, size):
        if self.event_log is not None:
            self.event_log.append((self.clock, agent, kind, side.value, price, size))

    def _exec_market(self, agent: str, side: Side, size: int) -> None:
        fills, unfilled = self.book.submit_market(side, size, time=self.clock)
        filled = size - unfilled
        if side is Side.BUY:
            self.market_buy_flow += filled
            if self.book.best_ask == self._anchor_ask:
                self._v_ask[0] -= filled
            else:
                self._stale = True
        else:
            self.market_sell_flow += filled
            if self.book.best_bid == self._anchor_bid:
                self._v_bid[0] -= filled
            else:
                self._stale = True
        self._log(agent, "market", side, None, filled)

    def _exec_limit(self, agent: str, side: Side, k: int, size: int) -> None:
        if side is Side.BUY:
            price = self._anchor_ask - k
            self.book.submit_limit(Side.BUY, price, size)
            self.limit_buy_flow += size
            idx = self._anchor_bid - price
            if idx < 0:
                self._stale = True  # improved the bid
            elif idx < self.depth:
                self._v_bid[idx] += size
        else:
            price = self._anchor_bid + k
            self.book.submit_limit(Side.SELL, price, size)
            self.limit_sell_flow += size
            idx = price - self._anchor_ask
            if idx < 0:
                self._stale = True  # improved the ask
            elif idx < self.depth:
                self._v_ask[idx] += size
        self._log(agent, "limit", side, price, size)

    def _exec_cancel(self, agent: str, side: Side, k: int, size: int) -> None:
        if side is Side.BUY:
            price = self._anchor_ask - k
            removed = self.book.cancel_background_from_back(Side.BUY, price, size)
            if removed:
                idx = self._anchor_bid - price
                if 0 <= idx < self.depth:
                    self._v_bid[idx] -= removed
                if idx == 0 and self.book.best_bid != self._anchor_bid:
                    self._stale = True
        else:
            price = self._anchor_bid + k
            removed = self.book.cancel_background_from_back(Side.SELL, price, size)
            if removed:
                idx = price - self._anchor_ask
                if 0 <= idx < self.depth:
                    self._v_ask[idx] -= removed
                if idx == 0 and self.book.best_ask != self._anchor_ask:
                    self._stale = True
        self._log(agent, "cancel", side, price, removed)

    def _exec_channel(self, idx: int) -> None:
        rng = self.rng
        if idx < self._noise_end:
            cfg = self.noise
            if idx < self._nlb:
                self._exec_market("noise", Side.BUY if idx == 0 else Side.SELL,
                                  draw_order_size(cfg.market_size_sigma, rng))
            elif idx < self._ncb:
                buy = idx < self._nls
                k = idx - (self._nlb if buy else self._nls) + 1
                self._exec_limit("noise", Side.BUY if buy else Side.SELL, k,
                                 draw_order_size(cfg.limit_size_sigma[k - 1], rng))
            else:
                buy = idx < self._ncs
                k = idx - (self._ncb if buy else self._ncs) + 1
                self._exec_cancel("noise", Side.BUY if buy else Side.SELL, k,
                                  draw_order_size(cfg.cancel_size_sigma[k - 1], rng))
        else:
            cfg = self.tactical
            if idx < self._tlb:
                self._exec_market("tactical",
                                  Side.BUY if idx == self._tmb else Side.SELL,
                                  draw_order_size(cfg.market_size_sigma, rng))
            elif idx < self._tcb:
                buy = idx < self._tls
                k = idx - (self._tlb if buy else self._tls) + 1
                self._exec_limit("tactical", Side.BUY if buy else Side.SELL, k,
                                 draw_order_size(cfg.limit_size_sigma[k - 1], rng))
            else:
                buy = idx < self._tcs
                k = idx - (self._tcb if buy else self._tcs) + 1
                self._exec_cancel("tactical", Side.BUY if buy else Side.SELL, k,
                                  draw_order_size(cfg.cancel_size_sigma[k - 1], rng))

    def _exec_strategic(self) -> None:
        cfg = self.strategic
        side = self._strat_side
        if self._next_strat_market <= self._next_strat_limit:
            self._exec_market("strategic", side, cfg.market_size)
            self._next_strat_market += cfg.market_interval
        else:
            # join the best quote on the trader's own side
            price = self.book.best_bid if side is Side.BUY else self.book.best_ask
            if price is None:
                raise EmptySide("strategic trader has no quote to join")
            self.book.submit_limit(side, price, cfg.limit_size)
            if side is Side.BUY:
                self.limit_buy_flow += cfg.limit_size
                self._v_bid[0] += cfg.limit_size
            else:
                self.limit_sell_flow += cfg.limit_size
                self._v_ask[0] += cfg.limit_size
            self._log("strategic", "limit", side, price, cfg.limit_size)
            self._next_strat_limit += cfg.limit_interval

    def _next_strategic_time(self) -> float:
        t = self._next_strat_market
        if self._next_strat_limit < t:
            t = self._next_strat_limit
        return t if t < self._strat_stop else math.inf

    def advance(self, until: float) -> None:
        """Run the event clock forward to ``until`` (events at ``until`` wait).

        Raises :class:`EmptySide` if either book side empties, leaving the
        state at the offending event for inspection.
        """
        book = self.book
        rng = self.rng
        log1p = math.log1p
        inf = math.inf
        cum = self._cum
        self._stale = True  # the book may have been touched since last call
        has_strat = self.strategic is not None
        while True:
            total = self._fill_rates()
            if total > 0.0:
                t_stoch = self.clock - log1p(-rng.random()) / total
            else:
                t_stoch = inf
            t_strat = self._next_strategic_time() if has_strat else inf
            t_next = t_strat if t_strat <= t_stoch else t_stoch
            if t_next >= until:
                self.clock = until
                return
            self.clock = t_next
            if t_strat <= t_stoch:
                self._exec_strategic()
            else:
                idx = int(cum.searchsorted(rng.random() * total, side="right"))
                self._exec_channel(idx)
            if not book._bids or not book._asks:
                raise EmptySide("a book side emptied during simulation")

    def export_events_csv(self, path) -> None:
        if self.event_log is None:
            raise ValueError("event recording was not enabled")
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["time", "agent", "kind", "side", "price", "size"])
            for row in self.event_log:
                writer.writerow([repr(row[0]), *row[1:]])


def channel_rates(state: MarketState) -> list[Channel]:
    """Labeled view of the current channel rates (testing and diagnostics)."""
    state.invalidate_depth_cache()
    state._fill_rates_numpy()
    rates = state._rates
    d = state.depth
    out = []

    def block(agent, kind, side, start, count, offset=0):
        for i in range(count):
            out.append(Channel(agent, kind, side, offset + i,
                               float(rates[start + i])))

    if state.noise is not None:
        block("noise", "market", Side.BUY, state._nmb, 1)
        block("noise", "market", Side.SELL, state._nmb + 1, 1)
        block("noise", "limit", Side.BUY, state._nlb, d, 1)
        block("noise", "limit", Side.SELL, state._nls, d, 1)
        block("noise", "cancel", Side.BUY, state._ncb, d, 1)
        block("noise", "cancel", Side.SELL, state._ncs, d, 1)
    if state.tactical is not None:
        block("tactical", "market", Side.BUY, state._tmb, 1)
        block("tactical", "market", Side.SELL, state._tmb + 1, 1)
        block("tactical", "limit", Side.BUY, state._tlb, d, 1)
        block("tactical", "limit", Side.SELL, state._tls, d, 1)
        block("tactical", "cancel", Side.BUY, state._tcb, d, 1)
        block("tactical", "cancel", Side.SELL, state._tcs, d, 1)
    return out


# ----------------------------------------------------------------------
# long-run average book shape
# ----------------------------------------------------------------------

@dataclass
class StationaryShape:
    """Long-run average relative volume profile and spread of a market."""

    depth: int
    v_bid: np.ndarray   # average lots at k-1 ticks below the best bid
    v_ask: np.ndarray
    spread: float
    samples: int = 1
    stderr: np.ndarray = None  # per-level standard errors, bid then ask
    restarts: int = 0

    def save_json(self, path) -> None:
        doc = {
            "depth": self.depth,
            "v_tilde_bid": [float(v) for v in self.v_bid],
            "v_tilde_ask": [float(v) for v in self.v_ask],
            "s_tilde": float(self.spread),
            "samples": self.samples,
            "stderr": [float(v) for v in self.stderr] if self.stderr is not None else None,
            "restarts": self.restarts,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load_json(cls, path) -> "StationaryShape":
        doc = json.loads(Path(path).read_text())
        stderr = doc.get("stderr")
        return cls(
            depth=int(doc["depth"]),
            v_bid=np.asarray(doc["v_tilde_bid"], dtype=float),
            v_ask=np.asarray(doc["v_tilde_ask"], dtype=float),
            spread=float(doc["s_tilde"]),
            samples=int(doc.get("samples", 1)),
            stderr=np.asarray(stderr, dtype=float) if stderr is not None else None,
            restarts=int(doc.get("restarts", 0)),
        )


def seed_book(bid: int = 1000, ask: int = 1001, lots: int = 5,
              levels: int = 5) -> OrderBook:
    """A small symmetric book used to start long-run shape estimation."""
    book = OrderBook()
    for k in range(levels):
        book.submit_limit(Side.BUY, bid - k, lots)
        book.submit_limit(Side.SELL, ask + k, lots)
    return book


def estimate_stationary_shape(noise: NoiseConfig,
                              tactical: TacticalConfig | None = None,
                              *, depth: int = DEPTH, burn_in: float = 300.0,
                              horizon: float = 3000.0, samples: int = 4,
                              seed: int = 0, sample_interval: float = 1.0,
                              max_restarts: int = 50) -> StationaryShape:
    """Average relative volumes and spread from independent long runs.

    Each run burns in, then samples the book every ``sample_interval``
    seconds until ``horizon``. A run whose book empties a side is restarted
    from the seed state (counted); the estimate fails once ``max_restarts``
    is exhausted.
    """
    n_points = max(1, int(round((horizon - burn_in) / sample_interval)))
    run_bid = np.zeros((samples, depth))
    run_ask = np.zeros((samples, depth))
    run_spread = np.zeros(samples)
    restarts = 0
    for r in range(samples):
        rng = rng_stream(seed, "shape", r)
        acc_bid = np.zeros(depth)
        acc_ask = np.zeros(depth)
        acc_spread = 0.0
        taken = 0
        state = MarketState(seed_book(), rng, noise, tactical)
        try:
            state.advance(burn_in)
        except EmptySide:
            restarts += 1
        while taken < n_points:
            if restarts > max_restarts:
                raise EmptySide(
                    f"shape estimation exceeded {max_restarts} restarts")
            try:
                state.advance(state.clock + sample_interval)
                v_bid, v_ask = state.book.snapshot(depth)
                acc_bid += v_bid
                acc_ask += v_ask
                acc_spread += state.book.spread()
                taken += 1
            except EmptySide:
                restarts += 1
                state = MarketState(seed_book(), rng, noise, tactical)
                try:
                    state.advance(burn_in)
                except EmptySide:
                    restarts += 1
        run_bid[r] = acc_bid / n_points
        run_ask[r] = acc_ask / n_points
        run_spread[r] = acc_spread / n_points
    stderr = None
    if samples > 1:
        stderr = np.concatenate([run_bid.std(axis=0, ddof=1),
                                 run_ask.std(axis=0, ddof=1)]) / math.sqrt(samples)
    return StationaryShape(
        depth=depth,
        v_bid=run_bid.mean(axis=0),
        v_ask=run_ask.mean(axis=0),
        spread=float(run_spread.mean()),
        samples=samples,
        stderr=stderr,
        restarts=restarts,
    )
