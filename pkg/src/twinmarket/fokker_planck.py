"""Stationary mean-field analysis of the reduced (fixed buy-preference) model.

For each agent type the relative market attraction Delta follows a 1-D
diffusion whose drift and diffusion coefficients depend on the matching
probabilities, which in turn depend on the whole population's densities.
This module computes the closed-form stationary density on a grid and
iterates the demand-ratio self-consistency loop to a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import root
from scipy.special import expit

from .meanfield import ActionTable, DemandRatios, TradingProbs, trading_probs_from_ratios
from .params import DEFAULT_TYPE_MIX, BidAskSpec, MarketSpec

EDGE_MASS_TOL = 1e-6


class GridTooNarrowError(ValueError):
    """Raised when a stationary density leaves non-negligible mass in the
    outermost grid bins; callers should enlarge the grid and retry."""


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n_points: int = 2001

    def __post_init__(self):
        if self.hi <= self.lo:
            raise ValueError("need hi > lo")
        if self.n_points < 3:
            raise ValueError("need at least 3 grid points")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    def widened(self, factor: float = 1.5) -> "GridSpec":
        center = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo) * factor
        n = int(round((self.n_points - 1) * factor)) + 1
        return GridSpec(center - half, center + half, n)


@dataclass(frozen=True)
class Density1D:
    """Normalized stationary density of Delta for one agent type."""

    grid: np.ndarray
    values: np.ndarray
    type_id: int

    def norm(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def moment(self, k: int) -> float:
        return float(np.trapezoid(self.values * self.grid ** k, self.grid))

    def mirrored(self) -> np.ndarray:
        """Density values reflected through Delta = 0 (symmetric grids)."""
        return self.values[::-1]

    def binder(self) -> float:
        """Binder cumulant 1 - <x^4>/(3<x^2>^2) of this density."""
        m2 = self.moment(2)
        if m2 <= 0:
            raise ValueError("Binder cumulant undefined for zero second moment")
        return 1.0 - self.moment(4) / (3.0 * m2 * m2)


@dataclass
class SelfConsistentState:
    densities: list[Density1D]
    t: TradingProbs
    d: DemandRatios
    market_fractions: list[float]
    iterations: int
    converged: bool
    trace: list[dict] = field(default_factory=list)


def default_grid(markets: MarketSpec, bidask: BidAskSpec,
                 type_mix=DEFAULT_TYPE_MIX, n_points: int = 2001) -> GridSpec:
    """Symmetric grid wide enough for all drift zeros.

    Zeros of the drift lie inside [-E2, E1] where E_m is the largest
    expected per-period score at market m over the agent types; 1.5x that
    leaves margin for the density tails at small r.  Larger r may still
    need auto-widening (handled in solve_self_consistent).
    """
    table = ActionTable.build(markets, bidask)
    t_full = TradingProbs(1.0, 1.0, 1.0, 1.0)
    e_max = 0.0
    for p_buy, _ in type_mix:
        first, _ = table.type_market_moments(p_buy, t_full)
        e_max = max(e_max, float(np.max(first)))
    half = 1.5 * e_max
    return GridSpec(-half, half, n_points)


def jump_moments(delta, p_buy: float, beta: float, t: TradingProbs,
                 markets: MarketSpec, bidask: BidAskSpec,
                 alpha: float = 1.0, table: ActionTable | None = None):
    """Drift and diffusion coefficients of the reduced single-agent dynamics.

    Per unit forgetting rate: one period changes Delta by r*(S - Delta) when
    the agent trades at market 1 and r*(-S - Delta) at market 2, so

        m1 = p1*E1 - (1 - p1)*E2 - Delta
        m2 = p1*(U1 - 2*Delta*E1 + Delta^2) + (1-p1)*(U2 + 2*Delta*E2 + Delta^2)

    with p1 the logistic market-1 probability, E_m / U_m the unconditional
    first/second score moments at market m.  Only alpha = 1 collapses the
    dynamics to one dimension.
    """
    if alpha != 1.0:
        raise ValueError("the one-dimensional reduction requires alpha = 1")
    if table is None:
        table = ActionTable.build(markets, bidask)
    delta = np.asarray(delta, dtype=float)
    first, second = table.type_market_moments(p_buy, t)
    e1, e2 = first
    u1, u2 = second
    p1 = expit(beta * delta)
    m1 = p1 * e1 - (1.0 - p1) * e2 - delta
    m2 = (p1 * (u1 - 2.0 * delta * e1 + delta ** 2)
          + (1.0 - p1) * (u2 + 2.0 * delta * e2 + delta ** 2))
    return m1, m2


def stationary_density(p_buy: float, beta: float, t: TradingProbs, r: float,
                       grid: GridSpec, markets: MarketSpec, bidask: BidAskSpec,
                       type_id: int = 0, table: ActionTable | None = None,
                       check_edges: bool = True) -> Density1D:
    """Closed-form stationary density P ~ exp((2/r) int m1/m2) / m2.

    The exponent is accumulated by cumulative trapezoid and shifted by its
    maximum before exponentiating, so small r cannot overflow.  Raises
    GridTooNarrowError when the normalized density keeps more than
    EDGE_MASS_TOL of its mass in the two outermost bins on either side.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    x = grid.points()
    m1, m2 = jump_moments(x, p_buy, beta, t, markets, bidask, table=table)
    if np.any(m2 <= 0):
        raise ValueError("diffusion coefficient vanished on the grid; "
                         "the market configuration admits no noise")
    ratio = m1 / m2
    dx = x[1] - x[0]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (ratio[1:] + ratio[:-1]) * dx)))
    log_p = (2.0 / r) * cum - np.log(m2)
    log_p -= log_p.max()
    values = np.exp(log_p)
    values /= np.trapezoid(values, x)
    if check_edges:
        edge_lo = np.trapezoid(values[:3], x[:3])
        edge_hi = np.trapezoid(values[-3:], x[-3:])
        if max(edge_lo, edge_hi) > EDGE_MASS_TOL:
            raise GridTooNarrowError(
                f"density mass {max(edge_lo, edge_hi):.2e} in outermost bins; "
                f"enlarge the grid beyond [{grid.lo:g}, {grid.hi:g}]")
    return Density1D(grid=x, values=values, type_id=type_id)


def market_fraction(density: Density1D, beta: float) -> float:
    """Average probability of choosing market 1 under a type's density."""
    p1 = expit(beta * density.grid)
    return float(np.trapezoid(p1 * density.values, density.grid))


def demand_ratios_from_densities(densities: list[Density1D], type_mix,
                                 beta: float) -> DemandRatios:
    """Buy/sell order-count ratios implied by per-type densities.

    f_g is the fraction of type g at market 1; weighting by type weights and
    buy preferences gives the pre-validation demand ratio at each market.
    """
    fs = [market_fraction(dens, beta) for dens in densities]
    num1 = den1 = num2 = den2 = 0.0
    for (p_buy, weight), f in zip(type_mix, fs):
        num1 += weight * f * p_buy
        den1 += weight * f * (1.0 - p_buy)
        num2 += weight * (1.0 - f) * p_buy
        den2 += weight * (1.0 - f) * (1.0 - p_buy)
    if den1 <= 0.0 or den2 <= 0.0:
        raise ValueError("no sell-side flow at one of the markets")
    if num1 <= 0.0 or num2 <= 0.0:
        raise ValueError("no buy-side flow at one of the markets")
    return DemandRatios(num1 / den1, num2 / den2)


def solve_self_consistent(markets: MarketSpec, bidask: BidAskSpec,
                          type_mix=DEFAULT_TYPE_MIX, *, beta: float, r: float,
                          init_d: tuple[float, float] = (1.0, 1.0),
                          damping: float = 0.5, tol: float = 1e-6,
                          max_iter: int = 500, grid: GridSpec | None = None,
                          keep_trace: bool = False) -> SelfConsistentState:
    """Fixed point of the demand-ratio loop d -> T -> densities -> d.

    The update on d is damped, d <- (1-damping)*d + damping*d_new, and the
    loop stops once no matching probability moves by more than tol.  A grid
    that turns out too narrow for the density tails is widened by 1.5x and
    the solve restarts (the default grid is sized for small r).
    """
    table = ActionTable.build(markets, bidask)
    q_map = {a: q for a, q in table.validity_map().items()}
    base_grid = grid if grid is not None else default_grid(markets, bidask, type_mix)
    for _ in range(8):
        try:
            return _solve_on_grid(table, q_map, markets, bidask, type_mix,
                                  beta=beta, r=r, init_d=init_d,
                                  damping=damping, tol=tol, max_iter=max_iter,
                                  grid=base_grid, keep_trace=keep_trace)
        except GridTooNarrowError:
            base_grid = base_grid.widened()
    raise GridTooNarrowError("grid widening did not terminate; the density "
                             "tail keeps escaping the domain")


def _solve_on_grid(table, q_map, markets, bidask, type_mix, *, beta, r,
                   init_d, damping, tol, max_iter, grid,
                   keep_trace) -> SelfConsistentState:
    d = np.asarray(init_d, dtype=float)
    t = trading_probs_from_ratios(DemandRatios(*d), q_map)
    trace: list[dict] = []
    converged = False
    iterations = 0
    densities: list[Density1D] = []

    def apply_map(d_arr):
        dens = [
            stationary_density(p_buy, beta, t_, r, grid, markets, bidask,
                               type_id=g, table=table)
            for t_ in (trading_probs_from_ratios(DemandRatios(*d_arr), q_map),)
            for g, (p_buy, _) in enumerate(type_mix)
        ]
        return dens, demand_ratios_from_densities(dens, type_mix, beta)

    def polish(seed):
        # Newton-style root solve in log d; reaches fixed points that
        # repel the damped iteration (the only way to report such states).
        sol = root(lambda y: np.log(apply_map(np.exp(y))[1].as_array()) - y,
                   np.log(seed), method="hybr", options={"xtol": 1e-13})
        return np.exp(sol.x)

    # Near sharp-density regimes the damped loop can lock into a 2-cycle;
    # halving the damping whenever the residual stops improving restores
    # convergence without touching well-behaved runs.
    lam = damping
    best = np.inf
    stalled = 0
    for iterations in range(1, max_iter + 1):
        densities = [
            stationary_density(p_buy, beta, t, r, grid, markets, bidask,
                               type_id=g, table=table)
            for g, (p_buy, _) in enumerate(type_mix)
        ]
        d_new = demand_ratios_from_densities(densities, type_mix, beta)
        t_new = trading_probs_from_ratios(d_new, q_map)
        diff = t_new.max_diff(t)
        if keep_trace:
            trace.append({"iteration": iterations, "d1": d_new.d1,
                          "d2": d_new.d2, "t_diff": diff})
        if diff < tol:
            converged = True
            break
        if diff < 0.95 * best:
            best = diff
            stalled = 0
        else:
            stalled += 1
            if stalled >= 40:
                stalled = 0
                # A stall means the iterate is circling a fixed point that
                # repels the damped loop (multiple-solution regime); a root
                # solve from here lands on the solution whose neighborhood
                # the orbit reached, e.g. the symmetric one from the
                # symmetric default start.
                cand = polish(d)
                dens_c, d_c = apply_map(cand)
                t_c = trading_probs_from_ratios(DemandRatios(*cand), q_map)
                if trading_probs_from_ratios(d_c, q_map).max_diff(t_c) < tol:
                    densities = dens_c
                    d = cand
                    t = t_c
                    converged = True
                    break
                lam = max(0.5 * lam, 0.02)
        # Damping acts on log d: the demand ratios are scale quantities and
        # the mirror map (d1, d2) -> (1/d2, 1/d1) is linear in the logs, so
        # a symmetric start stays exactly on the symmetric branch.
        d = np.exp((1.0 - lam) * np.log(d) + lam * np.log(d_new.as_array()))
        t = trading_probs_from_ratios(DemandRatios(*d), q_map)
    fractions = [market_fraction(dens, beta) for dens in densities]
    return SelfConsistentState(densities=densities, t=t, d=DemandRatios(*d),
                               market_fractions=fractions,
                               iterations=iterations, converged=converged,
                               trace=trace)


def population_return(state: SelfConsistentState, type_mix, beta: float,
                      markets: MarketSpec, bidask: BidAskSpec,
                      table: ActionTable | None = None) -> float:
    """Average per-period score across the population at a converged state."""
    if table is None:
        table = ActionTable.build(markets, bidask)
    total = 0.0
    for (p_buy, weight), dens in zip(type_mix, state.densities):
        first, _ = table.type_market_moments(p_buy, state.t)
        p1 = expit(beta * dens.grid)
        local = p1 * first[0] + (1.0 - p1) * first[1]
        total += weight * float(np.trapezoid(local * dens.values, dens.grid))
    return total
