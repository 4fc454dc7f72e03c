import numpy as np
import pytest

from lobexec.book import OrderBook, Owner, Side

# The worked example book used throughout: best bid 100, best ask 101,
# bid volumes (3,4,6,5) going down from 100, ask volumes (2,4,5,7) going up
# from 101.
BID_LEVELS = [(100, 3), (99, 4), (98, 6), (97, 5)]
ASK_LEVELS = [(101, 2), (102, 4), (103, 5), (104, 7)]


def build_example_book(unit_lots=False):
    book = OrderBook()
    for price, size in BID_LEVELS:
        if unit_lots:
            for _ in range(size):
                book.submit_limit(Side.BUY, price, 1)
        else:
            book.submit_limit(Side.BUY, price, size)
    for price, size in ASK_LEVELS:
        if unit_lots:
            for _ in range(size):
                book.submit_limit(Side.SELL, price, 1)
        else:
            book.submit_limit(Side.SELL, price, size)
    return book


@pytest.fixture
def example_book():
    return build_example_book()


def build_book_with_agent_lots():
    """Example book variant with two agent sell lots resting at (2,3) and (3,5).

    The lot at 102 has 3 background lots ahead, the lot at 103 has 5 ahead.
    """
    book = OrderBook()
    for price, size in BID_LEVELS:
        book.submit_limit(Side.BUY, price, size)
    book.submit_limit(Side.SELL, 101, 2)
    book.submit_limit(Side.SELL, 102, 3)
    agent_a = book.submit_limit(Side.SELL, 102, 1, Owner.AGENT)
    book.submit_limit(Side.SELL, 103, 5)
    agent_b = book.submit_limit(Side.SELL, 103, 1, Owner.AGENT)
    book.submit_limit(Side.SELL, 104, 7)
    return book, agent_a, agent_b


def seeded_rng(seed):
    return np.random.default_rng(seed)
