"""Finite-population simulation of the adaptive two-market model.

One period: every agent picks an action (market and side), submits a price
drawn from its side's Gaussian, both markets clear independently, and the
received scores update the agents' attractions.  The reduced variant fixes
each agent's buy probability so only the market choice is learned.

Runs are deterministic functions of (config, seed); ensembles derive one
sub-seed per member with the splitmix64 splitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .auction import clear_arrays
from .params import RecordFlags, SimConfig
from .seeds import GENERATOR_NAME, make_rng, split_seed


@dataclass
class Trajectory:
    """Recorded output of one run.

    Per-period aggregates are always kept; per-agent snapshots (end-of-period
    state) follow the config's record flags.  Action codes are the canonical
    indices B1=0, S1=1, B2=2, S2=3.
    """

    config: SimConfig
    kind: str
    seed: int
    generator: str
    snapshot_periods: np.ndarray
    attractions: np.ndarray | None      # (n_snap, N, 4), full model
    delta: np.ndarray | None            # (n_snap, N), reduced model
    actions: np.ndarray                 # (n_snap, N) int8
    scores: np.ndarray                  # (n_snap, N) float32
    prices: np.ndarray                  # (n_periods, 2), nan = no event
    order_counts: np.ndarray            # (n_periods, 2, 2) [market][B, S]
    valid_counts: np.ndarray            # (n_periods, 2, 2)
    trade_counts: np.ndarray            # (n_periods, 2)
    mean_score: np.ndarray              # (n_periods,)
    agent_types: np.ndarray | None = None   # (N,), reduced model
    p_buy: np.ndarray | None = None          # (N,), reduced model


@dataclass
class EnsembleResult:
    """Pooled final-window samples and per-run summaries of an ensemble."""

    kind: str
    base_seed: int
    seeds: list[int]
    window: int
    pooled_delta: dict[int, np.ndarray] | None     # reduced: per type
    pooled_projections: np.ndarray | None          # full: (n, 2) = (d_bs, d_12)
    pooled_attractions: np.ndarray | None          # full: (n, 4)
    per_run_return: np.ndarray
    per_run_trades: np.ndarray                     # (n_runs, 2)


def assign_types(population) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic agent-type layout: contiguous blocks, sized by weight
    rounding with the last type absorbing the remainder."""
    n = population.n_agents
    counts = [int(round(w * n)) for _, w in population.type_mix[:-1]]
    counts.append(n - sum(counts))
    if min(counts) < 0:
        raise ValueError("type weights produce a negative block")
    types = np.repeat(np.arange(len(counts)), counts)
    p_buy = np.array([population.type_mix[t][0] for t in types])
    return types, p_buy


class _Recorder:
    def __init__(self, config: SimConfig, n_agents: int):
        self.flags = config.record
        self.stride = config.record.resolved_stride(config.population.kind,
                                                    n_agents)
        n_p = config.n_periods
        self.prices = np.full((n_p, 2), np.nan)
        self.order_counts = np.zeros((n_p, 2, 2), dtype=np.int32)
        self.valid_counts = np.zeros((n_p, 2, 2), dtype=np.int32)
        self.trade_counts = np.zeros((n_p, 2), dtype=np.int32)
        self.mean_score = np.zeros(n_p)
        self.snap_periods: list[int] = []
        self.snap_state: list[np.ndarray] = []
        self.snap_actions: list[np.ndarray] = []
        self.snap_scores: list[np.ndarray] = []

    def want_snapshot(self, period: int) -> bool:
        f = self.flags
        return (f.snapshots and period >= f.snapshot_start
                and (period - f.snapshot_start) % self.stride == 0)

    def snapshot(self, period: int, state: np.ndarray, actions: np.ndarray,
                 scores: np.ndarray):
        self.snap_periods.append(period)
        self.snap_state.append(state.astype(np.float32))
        self.snap_actions.append(actions.astype(np.int8))
        self.snap_scores.append(scores.astype(np.float32))

    def stack(self):
        periods = np.array(self.snap_periods, dtype=np.int64)
        if self.snap_state:
            state = np.stack(self.snap_state)
            actions = np.stack(self.snap_actions)
            scores = np.stack(self.snap_scores)
        else:
            state = np.empty((0,)); actions = np.empty((0,), dtype=np.int8)
            scores = np.empty((0,), dtype=np.float32)
        return periods, state, actions, scores


def _clear_period(period: int, action_idx: np.ndarray, sub_prices: np.ndarray,
                  theta, rng, rec: _Recorder) -> np.ndarray:
    """Clear both markets for one period; returns per-agent scores."""
    n = len(action_idx)
    scores = np.zeros(n)
    market = action_idx >> 1
    is_buy = (action_idx & 1) == 0
    for m in (0, 1):
        at_m = np.flatnonzero(market == m)
        if len(at_m) == 0:
            continue
        buy_m = is_buy[at_m]
        rec.order_counts[period, m, 0] = buy_m.sum()
        rec.order_counts[period, m, 1] = len(at_m) - buy_m.sum()
        price, vb, vs, matches, sub_scores = clear_arrays(
            at_m, buy_m, sub_prices[at_m], theta[m], rng)
        if price is None:
            continue
        rec.prices[period, m] = price
        rec.valid_counts[period, m, 0] = len(vb)
        rec.valid_counts[period, m, 1] = len(vs)
        rec.trade_counts[period, m] = len(matches)
        scores[at_m] = sub_scores
    return scores


def run_reduced(config: SimConfig, delta0=None) -> Trajectory:
    """Simulate the fixed buy-preference model.

    With alpha = 1 the per-agent state is the single relative attraction
    Delta; otherwise both market attractions are tracked and Delta is
    reported as their difference.  delta0 seeds the initial relative
    attractions (default all zero: agents without preferences).
    """
    if config.population.kind != "reduced":
        raise ValueError("config.population.kind must be 'reduced'")
    lp = config.learning
    ba = config.bidask
    n = config.population.n_agents
    types, p_buy = assign_types(config.population)
    rng = make_rng(config.seed)
    rec = _Recorder(config, n)

    one_dim = lp.alpha == 1.0
    delta = np.zeros(n) if delta0 is None else np.asarray(delta0, float).copy()
    attr = np.zeros((n, 2))
    if delta0 is not None:
        attr[:, 0] = np.maximum(delta, 0.0)
        attr[:, 1] = np.maximum(-delta, 0.0)
    for period in range(config.n_periods):
        p1 = expit(lp.beta * delta)
        market = (rng.random(n) >= p1).astype(np.int8)      # 0 = market 1
        buys = rng.random(n) < p_buy
        action_idx = (market << 1) | (~buys).astype(np.int8)
        z = rng.standard_normal(n)
        sub_prices = np.where(buys, ba.mu_bid + ba.sigma_bid * z,
                              ba.mu_ask + ba.sigma_ask * z)
        scores = _clear_period(period, action_idx, sub_prices,
                               config.markets.theta, rng, rec)
        rec.mean_score[period] = scores.mean()
        if one_dim:
            sign = np.where(market == 0, 1.0, -1.0)
            delta = (1.0 - lp.r) * delta + lp.r * sign * scores
        else:
            chosen = attr[np.arange(n), market]
            attr *= (1.0 - lp.alpha * lp.r)
            attr[np.arange(n), market] = (1.0 - lp.r) * chosen + lp.r * scores
            delta = attr[:, 0] - attr[:, 1]
        if rec.want_snapshot(period):
            rec.snapshot(period, delta, action_idx, scores)

    periods, state, actions, scores = rec.stack()
    return Trajectory(config=config, kind="reduced", seed=config.seed,
                      generator=GENERATOR_NAME, snapshot_periods=periods,
                      attractions=None, delta=state, actions=actions,
                      scores=scores, prices=rec.prices,
                      order_counts=rec.order_counts,
                      valid_counts=rec.valid_counts,
                      trade_counts=rec.trade_counts,
                      mean_score=rec.mean_score, agent_types=types,
                      p_buy=p_buy)


def run_full(config: SimConfig) -> Trajectory:
    """Simulate the fully adaptive model (four actions per agent)."""
    if config.population.kind != "full":
        raise ValueError("config.population.kind must be 'full'")
    lp = config.learning
    ba = config.bidask
    n = config.population.n_agents
    rng = make_rng(config.seed)
    rec = _Recorder(config, n)
    rows = np.arange(n)

    attr = np.zeros((n, 4))
    for period in range(config.n_periods):
        probs = np.exp(lp.beta * (attr - attr.max(axis=1, keepdims=True)))
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n) * cum[:, -1]
        action_idx = (u[:, None] >= cum).sum(axis=1).astype(np.int8)
        buys = (action_idx & 1) == 0
        z = rng.standard_normal(n)
        sub_prices = np.where(buys, ba.mu_bid + ba.sigma_bid * z,
                              ba.mu_ask + ba.sigma_ask * z)
        scores = _clear_period(period, action_idx, sub_prices,
                               config.markets.theta, rng, rec)
        rec.mean_score[period] = scores.mean()
        chosen = attr[rows, action_idx]
        attr *= (1.0 - lp.alpha * lp.r)
        attr[rows, action_idx] = (1.0 - lp.r) * chosen + lp.r * scores
        if rec.want_snapshot(period):
            rec.snapshot(period, attr, action_idx, scores)

    periods, state, actions, scores = rec.stack()
    return Trajectory(config=config, kind="full", seed=config.seed,
                      generator=GENERATOR_NAME, snapshot_periods=periods,
                      attractions=state, delta=None, actions=actions,
                      scores=scores, prices=rec.prices,
                      order_counts=rec.order_counts,
                      valid_counts=rec.valid_counts,
                      trade_counts=rec.trade_counts,
                      mean_score=rec.mean_score)


def default_window(r: float) -> int:
    """Default measurement window: ceil(10 / r) periods."""
    return int(math.ceil(10.0 / r))


def _ensemble_member(config: SimConfig):
    """One ensemble member, reduced to the pooled quantities (picklable)."""
    kind = config.population.kind
    traj = run_reduced(config) if kind == "reduced" else run_full(config)
    post = slice(config.burn_in, None)
    ret = traj.mean_score[post].mean()
    trades = traj.trade_counts[post].mean(axis=0)
    if kind == "reduced":
        delta = {t: traj.delta[:, traj.agent_types == t].ravel()
                 for t in range(len(config.population.type_mix))}
        return ret, trades, delta, None
    return ret, trades, None, traj.attractions.reshape(-1, 4).astype(np.float64)


def run_ensemble(config: SimConfig, n_runs: int,
                 base_seed: int | None = None,
                 window: int | None = None,
                 workers: int = 1) -> EnsembleResult:
    """Independent runs pooled over the final measurement window.

    Member i is seeded with split_seed(base, i); aggregation is keyed by
    member index, so results do not depend on execution order or on the
    worker count.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base = config.seed if base_seed is None else base_seed
    if window is None:
        window = default_window(config.learning.r)
    window = min(window, config.n_periods)
    record = RecordFlags(snapshots=True, snapshot_stride=1,
                         snapshot_start=config.n_periods - window)
    kind = config.population.kind
    seeds = [split_seed(base, i) for i in range(n_runs)]
    configs = [replace(config, seed=s, record=record) for s in seeds]

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(_ensemble_member, configs))
    else:
        members = [_ensemble_member(c) for c in configs]

    pooled_delta: dict[int, list[np.ndarray]] = {}
    pooled_proj: list[np.ndarray] = []
    pooled_attr: list[np.ndarray] = []
    returns = np.empty(n_runs)
    trades = np.empty((n_runs, 2))
    for i, (ret, tr, delta, attr) in enumerate(members):
        returns[i] = ret
        trades[i] = tr
        if delta is not None:
            for t, samples in delta.items():
                pooled_delta.setdefault(t, []).append(samples)
        else:
            pooled_attr.append(attr)
            d_bs = (attr[:, 0] + attr[:, 2]) - (attr[:, 1] + attr[:, 3])
            d_12 = (attr[:, 0] + attr[:, 1]) - (attr[:, 2] + attr[:, 3])
            pooled_proj.append(np.column_stack([d_bs, d_12]))

    return EnsembleResult(
        kind=kind, base_seed=base, seeds=seeds, window=window,
        pooled_delta=({t: np.concatenate(v) for t, v in pooled_delta.items()}
                      if kind == "reduced" else None),
        pooled_projections=(np.concatenate(pooled_proj) if pooled_proj else None),
        pooled_attractions=(np.concatenate(pooled_attr) if pooled_attr else None),
        per_run_return=returns, per_run_trades=trades,
    )
