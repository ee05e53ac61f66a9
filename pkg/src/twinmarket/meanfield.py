"""Closed-form large-population market quantities.

Everything here is deterministic: clearing prices, the probability that a
submitted order ends up on the tradable side of the price, the first two
moments of the (zero-truncated Gaussian) score earned when a trade happens,
and the matching probabilities implied by buy/sell demand ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import ndtr  # standard normal CDF, vectorized

from .params import ACTIONS, BidAskSpec, MarketSpec, action_market, action_side

# Below this validity probability an action effectively never trades and its
# conditional moments are reported as exact zeros to keep downstream
# arithmetic NaN-free.
Q_FLOOR = 1e-12
CDF_CLAMP = 1e-300


@dataclass(frozen=True)
class ScoreMoments:
    """Moments of the score for one action at a given clearing price.

    z is the standardized margin; q_valid = Phi(z) is the probability the
    order is valid; the *_given_trade moments are conditional on the order
    actually being executed.
    """

    z: float
    q_valid: float
    mean_given_trade: float
    second_moment_given_trade: float


@dataclass(frozen=True)
class TradingProbs:
    """Probability that a valid order finds a partner, per action."""

    t_b1: float
    t_s1: float
    t_b2: float
    t_s2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t_b1, self.t_s1, self.t_b2, self.t_s2])

    def for_action(self, action: str) -> float:
        return self.as_array()[ACTIONS.index(action)]

    def max_diff(self, other: "TradingProbs") -> float:
        return float(np.max(np.abs(self.as_array() - other.as_array())))


@dataclass(frozen=True)
class DemandRatios:
    """Buy/sell order-count ratio at each market, before validation."""

    d1: float
    d2: float

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError("demand ratios must be positive; an all-buyer "
                             "or all-seller market has no mean-field state")

    def as_array(self) -> np.ndarray:
        return np.array([self.d1, self.d2])


def clearing_price_largeN(market_index: int, markets: MarketSpec,
                          bidask: BidAskSpec) -> float:
    """Deterministic clearing price of market 1 or 2 in the large-N limit.

    The midpoint convention (mu_a + mu_b)/2 is kept even when the two sides
    have unequal spreads, where it is no longer the exact demand=supply
    price.
    """
    if market_index not in (1, 2):
        raise ValueError("market_index must be 1 or 2")
    theta = markets.theta[market_index - 1]
    mid = 0.5 * (bidask.mu_ask + bidask.mu_bid)
    return mid + theta * (bidask.mu_bid - bidask.mu_ask)


def action_margin(action: str, price: float, bidask: BidAskSpec) -> tuple[float, float]:
    """Mean margin and price spread for one action: (mu_side - price
    signed so that positive means profitable, sigma of that side)."""
    mu, sigma = bidask.side_params(action_side(action))
    margin = (mu - price) if action_side(action) == "B" else (price - mu)
    return margin, sigma


def validity_prob(action: str, price: float, bidask: BidAskSpec) -> float:
    """Probability the submitted order lies on the tradable side of price."""
    margin, sigma = action_margin(action, price, bidask)
    return float(ndtr(margin / sigma))


def score_moments(action: str, price: float, bidask: BidAskSpec) -> ScoreMoments:
    """First two moments of the zero-truncated Gaussian score.

    A valid order earns score = margin + noise conditioned on being
    positive, i.e. a N(margin, sigma^2) variable truncated at zero.
    """
    margin, sigma = action_margin(action, price, bidask)
    z = margin / sigma
    q = float(ndtr(z))
    if q < Q_FLOOR:
        return ScoreMoments(z=z, q_valid=0.0, mean_given_trade=0.0,
                            second_moment_given_trade=0.0)
    phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    hazard = phi / max(q, CDF_CLAMP)
    mean = margin + sigma * hazard
    second = margin * margin + sigma * sigma + margin * sigma * hazard
    return ScoreMoments(z=z, q_valid=q, mean_given_trade=mean,
                        second_moment_given_trade=second)


def trading_probs_from_flows(valid_buy_flows, valid_sell_flows) -> TradingProbs:
    """Matching probabilities from per-market valid order flows.

    The minority side always trades, the majority side trades with
    probability minority/majority.  A market where one side has no valid
    flow at all produces no trades, so both probabilities are zero there.
    """
    t = []
    for m in range(2):
        flow_b = valid_buy_flows[m]
        flow_s = valid_sell_flows[m]
        if flow_b <= 0.0 or flow_s <= 0.0:
            t.extend([0.0, 0.0])
            continue
        rho = flow_b / flow_s
        t.extend([min(1.0, 1.0 / rho), min(1.0, rho)])
    return TradingProbs(*t)


def trading_probs_from_ratios(d: DemandRatios,
                              q: Mapping[str, float]) -> TradingProbs:
    """Matching probabilities implied by demand ratios and validity probs.

    D_m is the pre-validation buy/sell order-count ratio; multiplying by
    the validity probabilities turns it into the valid-flow ratio
    rho_m = (Q_Bm / Q_Sm) * D_m that the min rule acts on.
    """
    return trading_probs_from_flows(
        [q["B1"] * d.d1, q["B2"] * d.d2],
        [q["S1"], q["S2"]],
    )


def action_return(moments: ScoreMoments, t_action: float) -> float:
    """Unconditional expected score per period for one action.

    Includes the zero scores of periods where the order is invalid or
    unmatched: R = Q * T * E[score | trade].
    """
    return moments.q_valid * t_action * moments.mean_given_trade


@dataclass(frozen=True)
class ActionTable:
    """Per-action clearing prices, validity probabilities and conditional
    score moments for a fixed market/bid-ask configuration.

    Arrays follow the canonical action order B1, S1, B2, S2.  This is the
    working representation used by the Fokker-Planck and bifurcation code;
    all entries derive from the scalar functions above.
    """

    prices: np.ndarray       # shape (2,), per market
    q: np.ndarray            # shape (4,), validity probabilities
    mean_t: np.ndarray       # shape (4,), E[score | trade]
    second_t: np.ndarray     # shape (4,), E[score^2 | trade]

    @classmethod
    def build(cls, markets: MarketSpec, bidask: BidAskSpec) -> "ActionTable":
        prices = np.array([clearing_price_largeN(m, markets, bidask)
                           for m in (1, 2)])
        q = np.empty(4)
        mean_t = np.empty(4)
        second_t = np.empty(4)
        for i, action in enumerate(ACTIONS):
            sm = score_moments(action, prices[action_market(action) - 1], bidask)
            q[i] = sm.q_valid
            mean_t[i] = sm.mean_given_trade
            second_t[i] = sm.second_moment_given_trade
        return cls(prices=prices, q=q, mean_t=mean_t, second_t=second_t)

    def validity_map(self) -> dict[str, float]:
        return {a: float(self.q[i]) for i, a in enumerate(ACTIONS)}

    def returns(self, t: TradingProbs) -> np.ndarray:
        """Unconditional expected score per action, R = Q*T*E[S|trade]."""
        return self.q * t.as_array() * self.mean_t

    def second_moments(self, t: TradingProbs) -> np.ndarray:
        """Unconditional second moment per action, Q*T*E[S^2|trade]."""
        return self.q * t.as_array() * self.second_t

    def type_market_moments(self, p_buy: float, t: TradingProbs
                            ) -> tuple[np.ndarray, np.ndarray]:
        """Expected score and second moment per market for an agent that
        buys with probability p_buy: arrays of shape (2,)."""
        r = self.returns(t)
        u = self.second_moments(t)
        first = np.array([p_buy * r[0] + (1 - p_buy) * r[1],
                          p_buy * r[2] + (1 - p_buy) * r[3]])
        second = np.array([p_buy * u[0] + (1 - p_buy) * u[1],
                           p_buy * u[2] + (1 - p_buy) * u[3]])
        return first, second
