import numpy as np
import pytest

from lobexec.book import (
    CrossingLimitOrder,
    EmptySide,
    OrderBook,
    Owner,
    Side,
    UnknownOrder,
)

from conftest import build_book_with_agent_lots, build_example_book


# ----------------------------------------------------------------------
# a deliberately naive shadow book used as an independent oracle: a flat
# list of live orders, with best prices and volumes recomputed by full scans
# ----------------------------------------------------------------------

class ShadowBook:
    def __init__(self):
        self.orders = []  # [side, price, size, owner, seq]
        self.seq = 0
        self.fills = []

    def limit(self, side, price, size, owner=Owner.BACKGROUND):
        self.seq += 1
        self.orders.append([side, price, size, owner, self.seq])

    def best(self, side):
        prices = [o[1] for o in self.orders if o[0] is side]
        if not prices:
            return None
        return max(prices) if side is Side.BUY else min(prices)

    def market(self, side, size):
        maker_side = side.opposite
        remaining = size
        while remaining > 0:
            best = self.best(maker_side)
            if best is None:
                break
            queue = sorted(
                (o for o in self.orders if o[0] is maker_side and o[1] == best),
                key=lambda o: o[4],
            )
            for order in queue:
                take = min(order[2], remaining)
                order[2] -= take
                remaining -= take
                self.fills.append((best, take))
                if remaining == 0:
                    break
            self.orders = [o for o in self.orders if o[2] > 0]
        return size - remaining

    def cancel_from_back(self, side, price, size):
        queue = sorted(
            (o for o in self.orders
             if o[0] is side and o[1] == price and o[3] is Owner.BACKGROUND),
            key=lambda o: o[4],
            reverse=True,
        )
        removed = 0
        for order in queue:
            take = min(order[2], size - removed)
            order[2] -= take
            removed += take
            if removed == size:
                break
        self.orders = [o for o in self.orders if o[2] > 0]
        return removed

    def volumes(self, side, start, depth):
        step = -1 if side is Side.BUY else 1
        out = []
        for k in range(depth):
            price = start + step * k
            out.append(sum(o[2] for o in self.orders
                           if o[0] is side and o[1] == price))
        return out


# ----------------------------------------------------------------------
# limit submission
# ----------------------------------------------------------------------

def test_submit_into_fresh_level():
    book = OrderBook()
    book.submit_limit(Side.SELL, 1001, 2)
    assert book.best_ask == 1001
    assert book.level_volume(Side.SELL, 1001) == 2


def test_agent_lot_joins_back_of_level(example_book):
    example_book.submit_limit(Side.SELL, 102, 1, Owner.AGENT)
    assert example_book.agent_order_states() == [(2, 4)]


def test_crossing_limit_rejected():
    book = OrderBook()
    book.submit_limit(Side.SELL, 1001, 1)
    with pytest.raises(CrossingLimitOrder):
        book.submit_limit(Side.BUY, 1001, 1)
    book.submit_limit(Side.BUY, 1000, 1)
    with pytest.raises(CrossingLimitOrder):
        book.submit_limit(Side.SELL, 1000, 1)
    # just inside the quotes is fine
    book.submit_limit(Side.BUY, 1000, 1)
    book.submit_limit(Side.SELL, 1001, 1)


def test_size_validation():
    book = OrderBook()
    with pytest.raises(ValueError):
        book.submit_limit(Side.BUY, 100, 0)


# ----------------------------------------------------------------------
# market orders
# ----------------------------------------------------------------------

def test_market_buy_walks_ask_levels(example_book):
    fills, unfilled = example_book.submit_market(Side.BUY, 3)
    assert unfilled == 0
    assert [(f.price, f.size) for f in fills] == [(101, 2), (102, 1)]
    assert example_book.best_ask == 102


def test_market_sell_partial_level():
    book = OrderBook()
    book.submit_limit(Side.BUY, 1000, 3)
    book.submit_limit(Side.SELL, 1001, 1)
    fills, unfilled = book.submit_market(Side.SELL, 1)
    assert unfilled == 0
    assert [(f.price, f.size) for f in fills] == [(1000, 1)]
    assert book.level_volume(Side.BUY, 1000) == 2


def test_market_order_exhausting_side(example_book):
    # total ask depth is 2+4+5+7 = 18
    fills, unfilled = example_book.submit_market(Side.BUY, 25)
    assert sum(f.size for f in fills) == 18
    assert unfilled == 7
    assert example_book.side_empty(Side.SELL)


def test_fill_conservation(example_book):
    fills, unfilled = example_book.submit_market(Side.BUY, 7)
    assert sum(f.size for f in fills) + unfilled == 7


# ----------------------------------------------------------------------
# cancellation
# ----------------------------------------------------------------------

def test_cancel_moves_best_ask(example_book):
    book = OrderBook()
    book.submit_limit(Side.BUY, 999, 1)
    oid = book.submit_limit(Side.SELL, 1001, 2)
    book.submit_limit(Side.SELL, 1003, 1)
    assert book.cancel_order(oid) == 2
    assert book.best_ask == 1003


def test_cancel_mid_queue_shrinks_lots_ahead():
    book = OrderBook()
    book.submit_limit(Side.BUY, 99, 1)
    front = book.submit_limit(Side.SELL, 101, 2)
    middle = book.submit_limit(Side.SELL, 101, 3)
    book.submit_limit(Side.SELL, 101, 1, Owner.AGENT)
    assert book.agent_order_states() == [(1, 5)]
    book.cancel_order(middle)
    assert book.agent_order_states() == [(1, 2)]
    book.cancel_order(front)
    assert book.agent_order_states() == [(1, 0)]


def test_cancel_unknown_order(example_book):
    with pytest.raises(UnknownOrder):
        example_book.cancel_order(99999)


def test_cancel_background_from_back_skips_agent():
    book = OrderBook()
    book.submit_limit(Side.BUY, 99, 1)
    book.submit_limit(Side.SELL, 101, 3)
    book.submit_limit(Side.SELL, 101, 1, Owner.AGENT)
    book.submit_limit(Side.SELL, 101, 2)
    removed = book.cancel_background_from_back(Side.SELL, 101, 4)
    assert removed == 4
    assert book.level_volume(Side.SELL, 101) == 2
    # the back order went first, then the front one was trimmed; the agent
    # lot now has one background lot ahead
    assert book.agent_order_states() == [(1, 1)]


def test_cancel_background_capacity_cap():
    book = OrderBook()
    book.submit_limit(Side.SELL, 101, 5)
    assert book.cancel_background_from_back(Side.SELL, 101, 10) == 5
    assert book.side_empty(Side.SELL)


def test_cancel_background_agent_only_level():
    book = OrderBook()
    book.submit_limit(Side.SELL, 101, 1, Owner.AGENT)
    book.submit_limit(Side.SELL, 101, 1, Owner.AGENT)
    assert book.cancel_background_from_back(Side.SELL, 101, 2) == 0
    assert book.level_volume(Side.SELL, 101) == 2


def test_cancel_background_missing_level(example_book):
    assert example_book.cancel_background_from_back(Side.SELL, 150, 3) == 0


# ----------------------------------------------------------------------
# snapshots
# ----------------------------------------------------------------------

def test_snapshot_example_book(example_book):
    v_bid, v_ask = example_book.snapshot(4)
    assert v_bid.tolist() == [3, 4, 6, 5]
    assert v_ask.tolist() == [2, 4, 5, 7]


def test_snapshot_reports_gaps_as_zero():
    book = OrderBook()
    book.submit_limit(Side.BUY, 100, 2)
    book.submit_limit(Side.BUY, 97, 4)
    book.submit_limit(Side.SELL, 101, 1)
    v_bid, v_ask = book.snapshot(4)
    assert v_bid.tolist() == [2, 0, 0, 4]
    assert v_ask.tolist() == [1, 0, 0, 0]


def test_snapshot_after_market_buy(example_book):
    example_book.submit_market(Side.BUY, 2)
    _, v_ask = example_book.snapshot(4)
    assert example_book.best_ask == 102
    assert v_ask.tolist() == [4, 5, 7, 0]


def test_snapshot_requires_both_sides():
    book = OrderBook()
    book.submit_limit(Side.BUY, 100, 1)
    with pytest.raises(EmptySide):
        book.snapshot(4)


# ----------------------------------------------------------------------
# agent order states
# ----------------------------------------------------------------------

def test_agent_states_example_layout():
    book, _, _ = build_book_with_agent_lots()
    assert book.agent_order_states() == [(2, 3), (3, 5)]


def test_agent_lot_alone_at_fresh_level():
    book = OrderBook()
    book.submit_limit(Side.BUY, 99, 1)
    book.submit_limit(Side.SELL, 101, 1)
    book.submit_limit(Side.SELL, 103, 1, Owner.AGENT)
    assert book.agent_order_states() == [(3, 0)]


def test_agent_level_shifts_when_touch_trades_through():
    book, _, _ = build_book_with_agent_lots()
    book.submit_market(Side.BUY, 2)  # consumes the 101 level
    states = book.agent_order_states()
    assert states[0][0] == 1  # the 102 lot is now at the touch


# ----------------------------------------------------------------------
# properties against the shadow-book oracle
# ----------------------------------------------------------------------

def _random_ops(seed, n_ops=400):
    rng = np.random.default_rng(seed)
    book = OrderBook()
    shadow = ShadowBook()
    book.submit_limit(Side.BUY, 1000, 5)
    shadow.limit(Side.BUY, 1000, 5)
    book.submit_limit(Side.SELL, 1001, 5)
    shadow.limit(Side.SELL, 1001, 5)
    for _ in range(n_ops):
        bid, ask = book.best_bid, book.best_ask
        if bid is None or ask is None:
            break
        op = rng.integers(0, 4)
        side = Side.BUY if rng.integers(0, 2) == 0 else Side.SELL
        size = int(rng.integers(1, 5))
        if op == 0:  # limit
            offset = int(rng.integers(1, 6))
            price = ask - offset if side is Side.BUY else bid + offset
            if (side is Side.BUY and price >= ask) or (
                    side is Side.SELL and price <= bid):
                continue
            book.submit_limit(side, price, size)
            shadow.limit(side, price, size)
        elif op == 1:  # market, keep the side alive
            opp = side.opposite
            depth = book.side_volume(opp)
            if depth <= size:
                continue
            fills, unfilled = book.submit_market(side, size)
            got = shadow.market(side, size)
            assert unfilled == 0
            assert sum(f.size for f in fills) == got
        else:  # background cancel from back
            offset = int(rng.integers(0, 6))
            price = bid - offset if side is Side.BUY else ask + offset
            if book.side_volume(side) - book.level_volume(side, price) == 0:
                continue
            a = book.cancel_background_from_back(side, price, size)
            b = shadow.cancel_from_back(side, price, size)
            assert a == b
    return book, shadow


@pytest.mark.parametrize("seed", range(8))
def test_random_ops_match_shadow_book(seed):
    book, shadow = _random_ops(seed)
    assert book.best_bid == shadow.best(Side.BUY)
    assert book.best_ask == shadow.best(Side.SELL)
    v_bid, v_ask = book.snapshot(8)
    assert v_bid.tolist() == shadow.volumes(Side.BUY, book.best_bid, 8)
    assert v_ask.tolist() == shadow.volumes(Side.SELL, book.best_ask, 8)
    # independent recount of per-side totals
    assert book.side_volume(Side.BUY) == sum(
        o[2] for o in shadow.orders if o[0] is Side.BUY)
    assert book.side_volume(Side.SELL) == sum(
        o[2] for o in shadow.orders if o[0] is Side.SELL)


@pytest.mark.parametrize("seed", range(8))
def test_book_invariants_hold_under_random_ops(seed):
    book, _ = _random_ops(seed, n_ops=300)
    if book.best_bid is not None and book.best_ask is not None:
        assert book.best_bid < book.best_ask


def test_market_fills_respect_price_time_priority(example_book):
    fills, _ = example_book.submit_market(Side.BUY, 12)
    prices = [f.price for f in fills]
    assert prices == sorted(prices)  # taker gets better prices first
    by_level = {}
    for f in fills:
        by_level.setdefault(f.price, []).append(f.maker_order_id)
    for makers in by_level.values():
        assert makers == sorted(makers)  # FIFO within a level


def test_cancel_resubmit_goes_to_back():
    book = OrderBook()
    book.submit_limit(Side.BUY, 99, 1)
    oid = book.submit_limit(Side.SELL, 101, 1, Owner.AGENT)
    book.submit_limit(Side.SELL, 101, 4)
    assert book.agent_order_states() == [(1, 0)]
    book.cancel_order(oid)
    book.submit_limit(Side.SELL, 101, 1, Owner.AGENT)
    assert book.agent_order_states() == [(1, 4)]


def test_identical_op_sequences_are_identical():
    def run():
        book = build_example_book(unit_lots=True)
        book.submit_market(Side.BUY, 5, time=1.0)
        book.submit_limit(Side.SELL, 102, 2)
        book.cancel_background_from_back(Side.SELL, 103, 2)
        book.submit_market(Side.SELL, 4, time=2.0)
        return book

    a, b = run(), run()
    assert a.fill_log == b.fill_log
    va, vb = a.snapshot(6), b.snapshot(6)
    assert va[0].tolist() == vb[0].tolist() and va[1].tolist() == vb[1].tolist()


def test_fill_csv_export(tmp_path, example_book):
    example_book.submit_market(Side.BUY, 3, time=1.5)
    path = tmp_path / "fills.csv"
    example_book.export_fills_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "time,maker_owner,side,price,size"
    assert len(lines) == 1 + len(example_book.fill_log)
