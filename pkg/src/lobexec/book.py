"""Price-time-priority limit order book with owner-tagged lots.

Prices are integer ticks, sizes integer lots. Every resting order carries an
owner tag so that the execution agent's lots can be located in their queues
and protected from background cancellations. The book is keyed by absolute
price; depth-relative views (volume at k-1 ticks from the touch) are derived
on demand via :meth:`OrderBook.snapshot`.
"""

from __future__ import annotations

import csv
import heapq
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Side(Enum):
    BUY = "buy"
    SELL = "sell"

    @property
    def opposite(self) -> "Side":
        return Side.SELL if self is Side.BUY else Side.BUY


class Owner(Enum):
    BACKGROUND = "background"
    AGENT = "agent"


class CrossingLimitOrder(Exception):
    """A limit order would cross the opposite best quote.

    No trader in this system legitimately submits marketable limit orders,
    so crossing is treated as a caller bug rather than converted to a fill.
    """


class UnknownOrder(Exception):
    """Cancellation referenced an order id that is not resting in the book."""


class EmptySide(Exception):
    """An operation required a best quote on a side that has no orders."""


@dataclass(slots=True)
class LimitOrder:
    id: int
    side: Side
    price: int
    size: int
    owner: Owner
    seq: int


@dataclass(frozen=True)
class Fill:
    maker_order_id: int
    maker_owner: Owner
    maker_side: Side
    price: int
    size: int
    time: float


class _Level:
    """FIFO queue of orders resting at one price, with a running lot total."""

    __slots__ = ("queue", "volume")

    def __init__(self):
        self.queue: deque[LimitOrder] = deque()
        self.volume = 0


class OrderBook:
    """Two-sided book of FIFO price levels under price-time priority."""

    def __init__(self):
        self._bids: dict[int, _Level] = {}
        self._asks: dict[int, _Level] = {}
        # lazy heaps of active prices (bids negated); stale entries are
        # discarded when the best quote is queried
        self._bid_heap: list[int] = []
        self._ask_heap: list[int] = []
        self._orders: dict[int, LimitOrder] = {}
        self._next_seq = 0
        self.fill_log: list[Fill] = []

    # ------------------------------------------------------------------
    # quotes and views
    # ------------------------------------------------------------------

    def _levels(self, side: Side) -> dict[int, _Level]:
        return self._bids if side is Side.BUY else self._asks

    @property
    def best_bid(self) -> int | None:
        heap, levels = self._bid_heap, self._bids
        while heap and -heap[0] not in levels:
            heapq.heappop(heap)
        return -heap[0] if heap else None

    @property
    def best_ask(self) -> int | None:
        heap, levels = self._ask_heap, self._asks
        while heap and heap[0] not in levels:
            heapq.heappop(heap)
        return heap[0] if heap else None

    def side_empty(self, side: Side) -> bool:
        return not self._levels(side)

    def spread(self) -> int:
        bid, ask = self.best_bid, self.best_ask
        if bid is None or ask is None:
            raise EmptySide("spread undefined on an empty side")
        return ask - bid

    def mid(self) -> float:
        bid, ask = self.best_bid, self.best_ask
        if bid is None or ask is None:
            raise EmptySide("mid undefined on an empty side")
        return 0.5 * (bid + ask)

    def level_volume(self, side: Side, price: int) -> int:
        level = self._levels(side).get(price)
        return level.volume if level is not None else 0

    def side_volume(self, side: Side) -> int:
        return sum(level.volume for level in self._levels(side).values())

    def snapshot(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        """Volumes at the first ``depth`` levels relative to each touch.

        Entry k-1 holds the lots at k-1 ticks below the best bid (above the
        best ask); gaps inside the range report zero.
        """
        bid, ask = self.best_bid, self.best_ask
        if bid is None or ask is None:
            raise EmptySide("snapshot requires both sides nonempty")
        v_bid = np.zeros(depth, dtype=np.int64)
        v_ask = np.zeros(depth, dtype=np.int64)
        bids, asks = self._bids, self._asks
        for k in range(depth):
            level = bids.get(bid - k)
            if level is not None:
                v_bid[k] = level.volume
            level = asks.get(ask + k)
            if level is not None:
                v_ask[k] = level.volume
        return v_bid, v_ask

    def fill_depth_volumes(self, depth: int, out_bid: np.ndarray,
                           out_ask: np.ndarray) -> tuple[int, int]:
        """Write the relative volume profile into preallocated arrays.

        Hot-path variant of :meth:`snapshot` used by the event engine; returns
        the (best_bid, best_ask) pair the profile is anchored to.
        """
        bid, ask = self.best_bid, self.best_ask
        if bid is None or ask is None:
            raise EmptySide("depth volumes require both sides nonempty")
        bids, asks = self._bids, self._asks
        for k in range(depth):
            level = bids.get(bid - k)
            out_bid[k] = level.volume if level is not None else 0
            level = asks.get(ask + k)
            out_ask[k] = level.volume if level is not None else 0
        return bid, ask

    def agent_order_states(self) -> list[tuple[int, int]]:
        """(level, lots_ahead) for each agent sell lot, ordered by (price, seq).

        Level 1 is the best ask; lots_ahead counts every lot resting earlier
        in the same price queue, regardless of owner.
        """
        agent_orders = sorted(
            (o for o in self._orders.values() if o.owner is Owner.AGENT),
            key=lambda o: (o.price, o.seq),
        )
        if not agent_orders:
            return []
        ask = self.best_ask
        if ask is None:
            raise EmptySide("agent orders rest on an empty ask side")
        states = []
        seen_prices = {o.price for o in agent_orders}
        ahead_at: dict[int, dict[int, int]] = {}
        for price in seen_prices:
            ahead = 0
            per_order = {}
            for order in self._asks[price].queue:
                if order.owner is Owner.AGENT:
                    per_order[order.id] = ahead
                ahead += order.size
            ahead_at[price] = per_order
        for order in agent_orders:
            states.append((order.price - ask + 1, ahead_at[order.price][order.id]))
        return states

    # ------------------------------------------------------------------
    # order entry
    # ------------------------------------------------------------------

    def submit_limit(self, side: Side, price: int, size: int,
                     owner: Owner = Owner.BACKGROUND) -> int:
        if size < 1:
            raise ValueError(f"limit order size must be >= 1, got {size}")
        if side is Side.BUY:
            ask = self.best_ask
            if ask is not None and price >= ask:
                raise CrossingLimitOrder(f"buy at {price} crosses ask {ask}")
        else:
            bid = self.best_bid
            if bid is not None and price <= bid:
                raise CrossingLimitOrder(f"sell at {price} crosses bid {bid}")
        self._next_seq += 1
        order = LimitOrder(self._next_seq, side, price, size, owner, self._next_seq)
        levels = self._levels(side)
        level = levels.get(price)
        if level is None:
            level = levels[price] = _Level()
            heapq.heappush(self._bid_heap if side is Side.BUY else self._ask_heap,
                           -price if side is Side.BUY else price)
        level.queue.append(order)
        level.volume += size
        self._orders[order.id] = order
        return order.id

    def submit_market(self, side: Side, size: int, time: float = 0.0
                      ) -> tuple[list[Fill], int]:
        """Match ``size`` lots against the opposite side, best price first.

        Returns the fills and the unfilled remainder (nonzero only when the
        opposite side ran out of lots).
        """
        if size < 1:
            raise ValueError(f"market order size must be >= 1, got {size}")
        maker_side = side.opposite
        levels = self._levels(maker_side)
        remaining = size
        fills: list[Fill] = []
        while remaining > 0:
            price = self.best_ask if side is Side.BUY else self.best_bid
            if price is None:
                break
            level = levels[price]
            queue = level.queue
            while remaining > 0 and queue:
                maker = queue[0]
                take = maker.size if maker.size <= remaining else remaining
                maker.size -= take
                level.volume -= take
                remaining -= take
                fill = Fill(maker.id, maker.owner, maker_side, price, take, time)
                fills.append(fill)
                self.fill_log.append(fill)
                if maker.size == 0:
                    queue.popleft()
                    del self._orders[maker.id]
            if level.volume == 0:
                del levels[price]
        return fills, remaining

    # ------------------------------------------------------------------
    # cancellation
    # ------------------------------------------------------------------

    def cancel_order(self, order_id: int) -> int:
        order = self._orders.get(order_id)
        if order is None:
            raise UnknownOrder(f"no resting order with id {order_id}")
        levels = self._levels(order.side)
        level = levels[order.price]
        level.queue.remove(order)
        level.volume -= order.size
        if level.volume == 0:
            del levels[order.price]
        del self._orders[order_id]
        return order.size

    def cancel_background_from_back(self, side: Side, price: int, size: int) -> int:
        """Remove up to ``size`` background lots at ``price``, back of queue first.

        Agent-owned orders are skipped; never removes more lots than rest at
        the level. Returns the lots actually removed.
        """
        if size < 1:
            raise ValueError(f"cancel size must be >= 1, got {size}")
        levels = self._levels(side)
        level = levels.get(price)
        if level is None:
            return 0
        removed = 0
        emptied = False
        for order in reversed(level.queue):
            if removed == size:
                break
            if order.owner is Owner.AGENT:
                continue
            take = order.size if order.size <= size - removed else size - removed
            order.size -= take
            removed += take
            if order.size == 0:
                del self._orders[order.id]
                emptied = True
        if removed:
            level.volume -= removed
            if emptied:
                level.queue = deque(o for o in level.queue if o.size > 0)
            if level.volume == 0:
                del levels[price]
        return removed

    # ------------------------------------------------------------------
    # diagnostics
    # ------------------------------------------------------------------

    def export_fills_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["time", "maker_owner", "side", "price", "size"])
            for fill in self.fill_log:
                writer.writerow([repr(fill.time), fill.maker_owner.value,
                                 fill.maker_side.value, fill.price, fill.size])
