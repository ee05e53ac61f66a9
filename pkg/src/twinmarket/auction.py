"""Single-period clearing of one double-auction market.

All orders arrive at once; the market sets a uniform price from the sample
means of the submitted bids and asks, discards orders on the wrong side of
it, and matches the two valid sides by uniform random pairing.  Matched
buyers score bid - price, matched sellers price - ask, everyone else zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Order:
    agent_id: int
    side: str       # "B" or "S"
    price: float

    def __post_init__(self):
        if self.side not in ("B", "S"):
            raise ValueError("side must be 'B' or 'S'")
        if not np.isfinite(self.price):
            raise ValueError("order price must be finite")


@dataclass
class ClearingResult:
    price: float | None
    valid_buy_ids: np.ndarray
    valid_sell_ids: np.ndarray
    matches: list[tuple[int, int]]
    scores: dict[int, float]


def clearing_price(bids: np.ndarray, asks: np.ndarray, theta: float) -> float:
    """Uniform price from this period's sample means."""
    b_mean = float(np.mean(bids))
    a_mean = float(np.mean(asks))
    return 0.5 * (b_mean + a_mean) + theta * (b_mean - a_mean)


def match_orders(valid_buyers, valid_sellers, rng: np.random.Generator
                 ) -> list[tuple[int, int]]:
    """Uniform random pairing; the minority side is fully matched.

    Both sides are shuffled, so the matched subset of the majority side is
    a uniform random subset and the pairing itself is exchangeable.
    """
    buyers = np.asarray(valid_buyers)
    sellers = np.asarray(valid_sellers)
    k = min(len(buyers), len(sellers))
    if k == 0:
        return []
    b = rng.permutation(buyers)[:k]
    s = rng.permutation(sellers)[:k]
    return list(zip(b.tolist(), s.tolist()))


def clear_market(orders: list[Order], theta: float,
                 rng: np.random.Generator) -> ClearingResult:
    """Clear one market for one period.

    A period where either side submitted nothing is a non-event: no price,
    no trades, zero scores for everyone who submitted.
    """
    ids = np.array([o.agent_id for o in orders], dtype=np.int64)
    sides = np.array([o.side == "B" for o in orders])
    prices = np.array([o.price for o in orders], dtype=float)
    price, vb, vs, matches, scores = clear_arrays(ids, sides, prices, theta, rng)
    return ClearingResult(price=price, valid_buy_ids=vb, valid_sell_ids=vs,
                          matches=matches,
                          scores={int(i): float(s) for i, s in zip(ids, scores)})


def clear_arrays(agent_ids: np.ndarray, is_buy: np.ndarray,
                 prices: np.ndarray, theta: float, rng: np.random.Generator):
    """Array-level clearing shared by the Order API and the simulator.

    Returns (price or None, valid buyer ids, valid seller ids, matches,
    per-order scores aligned with the input arrays).
    """
    scores = np.zeros(len(agent_ids))
    bids = prices[is_buy]
    asks = prices[~is_buy]
    if len(bids) == 0 or len(asks) == 0:
        empty = np.empty(0, dtype=np.int64)
        return None, empty, empty, [], scores
    price = clearing_price(bids, asks, theta)
    valid = np.where(is_buy, prices >= price, prices <= price)
    valid_buy = np.flatnonzero(valid & is_buy)
    valid_sell = np.flatnonzero(valid & ~is_buy)
    k = min(len(valid_buy), len(valid_sell))
    matches: list[tuple[int, int]] = []
    if k > 0:
        mb = rng.permutation(valid_buy)[:k]
        ms = rng.permutation(valid_sell)[:k]
        scores[mb] = prices[mb] - price
        scores[ms] = price - prices[ms]
        matches = list(zip(agent_ids[mb].tolist(), agent_ids[ms].tolist()))
    return (price, agent_ids[valid_buy], agent_ids[valid_sell], matches,
            scores)
