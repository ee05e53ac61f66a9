"""Parameter types shared across the simulation and mean-field analysis.

Actions are encoded in the fixed order B1, S1, B2, S2 (buy/sell at market 1,
buy/sell at market 2) throughout the package; arrays indexed by action use
this order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ACTIONS = ("B1", "S1", "B2", "S2")
ACTION_INDEX = {name: i for i, name in enumerate(ACTIONS)}

DEFAULT_TYPE_MIX = ((0.8, 0.5), (0.2, 0.5))


def action_market(action: str) -> int:
    """Market (1 or 2) of an action label like 'B1' or 'S2'."""
    return int(action[1])


def action_side(action: str) -> str:
    """'B' or 'S'."""
    return action[0]


@dataclass(frozen=True)
class BidAskSpec:
    """Gaussian populations the bid and ask prices are drawn from.

    mu_bid > mu_ask is the usual regime (more trades clear) but is not
    required; the opposite ordering is a valid, if sparse, market.
    """

    mu_ask: float = 9.5
    sigma_ask: float = 1.0
    mu_bid: float = 10.5
    sigma_bid: float = 1.0

    def __post_init__(self):
        if self.sigma_ask <= 0 or self.sigma_bid <= 0:
            raise ValueError("bid/ask standard deviations must be positive")

    def side_params(self, side: str) -> tuple[float, float]:
        if side == "B":
            return self.mu_bid, self.sigma_bid
        if side == "S":
            return self.mu_ask, self.sigma_ask
        raise ValueError(f"unknown side {side!r}")


@dataclass(frozen=True)
class MarketSpec:
    """Price biases of the two markets.

    theta_m shifts the uniform clearing price from the bid/ask midpoint
    toward the average bid (theta > 0) or average ask (theta < 0).
    """

    theta: tuple[float, float] = (-0.2, 0.2)

    def __post_init__(self):
        if len(self.theta) != 2:
            raise ValueError("exactly two markets are supported")
        if any(abs(t) > 0.5 for t in self.theta):
            raise ValueError("|theta| must be <= 0.5 so the price stays "
                             "between the average ask and the average bid")


@dataclass(frozen=True)
class LearningParams:
    """Reinforcement-learning parameters.

    beta  -- intensity of choice (softmax sharpness), >= 0
    r     -- forgetting rate; memory window is of order 1/r periods
    alpha -- forgetting factor applied to unplayed actions (1 = vanilla
             rule, 0 = unplayed attractions are never forgotten)
    """

    beta: float
    r: float = 0.1
    alpha: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0 < self.r <= 1:
            raise ValueError("r must lie in (0, 1]")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class PopulationSpec:
    """Trader population: size, model kind and (reduced model) type mix.

    kind 'full' gives every agent all four actions; 'reduced' fixes each
    agent's buy probability and leaves only the market choice.  type_mix
    lists (p_buy, weight) pairs with weights summing to one.
    """

    n_agents: int = 200
    kind: str = "full"
    type_mix: tuple[tuple[float, float], ...] = DEFAULT_TYPE_MIX

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError("need at least two agents")
        if self.kind not in ("full", "reduced"):
            raise ValueError("kind must be 'full' or 'reduced'")
        if self.kind == "reduced":
            w = sum(w for _, w in self.type_mix)
            if abs(w - 1.0) > 1e-9:
                raise ValueError("type weights must sum to 1")
            if any(not 0 <= p <= 1 for p, _ in self.type_mix):
                raise ValueError("buy probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class RecordFlags:
    """What a run stores beyond per-period aggregates.

    snapshot_stride applies to per-agent snapshots (attractions, actions,
    scores); None resolves at run time to 1, except for full-model
    populations of 1000+ agents where it becomes 10 (snapshot memory).
    snapshot_start skips early periods so ensemble runs only pay for the
    measurement window.
    """

    snapshots: bool = True
    snapshot_stride: int | None = None
    snapshot_start: int = 0

    def resolved_stride(self, kind: str, n_agents: int) -> int:
        if self.snapshot_stride is not None:
            return self.snapshot_stride
        return 10 if kind == "full" and n_agents >= 1000 else 1


@dataclass(frozen=True)
class SimConfig:
    population: PopulationSpec
    markets: MarketSpec
    bidask: BidAskSpec
    learning: LearningParams
    n_periods: int = 6000
    burn_in: int = 5000
    seed: int = 0
    record: RecordFlags = field(default_factory=RecordFlags)

    def __post_init__(self):
        if not 0 <= self.burn_in < self.n_periods:
            raise ValueError("need n_periods > burn_in >= 0")
