"""Fixed-point structure of the learning dynamics in the long-memory limit.

Covers the homogeneous (single-peak) state, detection of additional
single-agent fixed points, segregation thresholds for the reduced and the
fully adaptive model, the envy-free equal-return benchmark, steady-state
return curves, and the census of self-consistent demand-ratio solutions in
the (r, beta) plane.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root
from scipy.special import expit

from .fokker_planck import (Density1D, GridSpec, GridTooNarrowError,
                            default_grid, demand_ratios_from_densities,
                            population_return, solve_self_consistent,
                            stationary_density)
from .learning import choice_probs
from .meanfield import (ActionTable, DemandRatios, TradingProbs,
                        trading_probs_from_flows)
from .params import DEFAULT_TYPE_MIX, BidAskSpec, MarketSpec


@dataclass(frozen=True)
class FixedPoint:
    location: object            # float (reduced) or ndarray shape (4,) (full)
    stable: bool


@dataclass
class FixedPointSet:
    points: list[FixedPoint]
    t_context: TradingProbs
    kind: str                   # "reduced" or "full"
    type_id: int | None = None
    dropped_starts: int = 0

    def stable_count(self) -> int:
        return sum(1 for p in self.points if p.stable)


@dataclass
class HomogeneousState:
    """Self-consistent point-mass state of the reduced model at r -> 0."""

    deltas: np.ndarray          # per type
    t: TradingProbs
    d: DemandRatios
    converged: bool
    iterations: int


@dataclass
class NashSolution:
    t: TradingProbs
    common_return: float
    consistent: bool
    returns: np.ndarray         # per action


@dataclass
class CensusSolution:
    d: DemandRatios
    klass: str                  # "U", "S" or "W"
    peak_masses: list[list[float]]   # per type, per peak


@dataclass
class SteadyStateCensus:
    solutions: list[CensusSolution]
    r: float
    beta: float

    def count(self) -> int:
        return len(self.solutions)

    def classes(self) -> list[str]:
        return sorted(s.klass for s in self.solutions)


@dataclass
class PhaseBoundaries:
    r_grid: np.ndarray
    beta_grid: np.ndarray
    n_solutions: np.ndarray     # shape (n_r, n_beta)
    any_segregated: np.ndarray  # bool, same shape
    fold_r_max: float           # largest grid r with three solutions
    blue_beta_r0: float         # r -> 0 segregation threshold
    orange_beta_r0: float       # r -> 0 fold of the point-mass census


# ---------------------------------------------------------------------------
# Reduced model, r -> 0
# ---------------------------------------------------------------------------

def _point_mass_trading(table: ActionTable, type_mix, beta: float,
                        deltas) -> TradingProbs:
    """Matching probabilities when each type sits at a single Delta."""
    f = expit(beta * np.asarray(deltas, dtype=float))
    buy = np.zeros(2)
    sell = np.zeros(2)
    for (p_buy, weight), f_g in zip(type_mix, f):
        buy += weight * p_buy * np.array([f_g, 1.0 - f_g])
        sell += weight * (1.0 - p_buy) * np.array([f_g, 1.0 - f_g])
    return trading_probs_from_flows(
        [table.q[0] * buy[0], table.q[2] * buy[1]],
        [table.q[1] * sell[0], table.q[3] * sell[1]],
    )


def _point_mass_demand(type_mix, beta: float, deltas) -> DemandRatios:
    f = expit(beta * np.asarray(deltas, dtype=float))
    num = np.zeros(2)
    den = np.zeros(2)
    for (p_buy, weight), f_g in zip(type_mix, f):
        at = np.array([f_g, 1.0 - f_g])
        num += weight * p_buy * at
        den += weight * (1.0 - p_buy) * at
    return DemandRatios(num[0] / den[0], num[1] / den[1])


def _drift_map(table: ActionTable, type_mix, beta: float, deltas,
               t: TradingProbs) -> np.ndarray:
    """Per type, the zero-drift target p1*E1 - (1-p1)*E2 at fixed T."""
    out = np.empty(len(type_mix))
    for g, (p_buy, _) in enumerate(type_mix):
        first, _ = table.type_market_moments(p_buy, t)
        p1 = expit(beta * deltas[g])
        out[g] = p1 * first[0] - (1.0 - p1) * first[1]
    return out


def _point_state_residual(table, type_mix, beta, deltas) -> np.ndarray:
    """Joint self-consistency residual: drift at each type's point mass,
    with matching probabilities generated by the point masses themselves."""
    t = _point_mass_trading(table, type_mix, beta, deltas)
    return _drift_map(table, type_mix, beta, deltas, t) - deltas


def homogeneous_state_r0(markets: MarketSpec, bidask: BidAskSpec,
                         type_mix=DEFAULT_TYPE_MIX, *, beta: float,
                         deltas0=None, beta_anchor: float = 0.5,
                         beta_step: float = 0.25,
                         table: ActionTable | None = None) -> HomogeneousState:
    """Unsegregated point-mass state (Delta per type, T), continued in beta.

    Below the segregation threshold the state is the unique zero of the
    joint residual reachable from all-zero attractions.  Above it the
    branch persists but becomes unstable under both the single-agent
    dynamics and plain self-consistency iteration, so each solve is a
    Newton-style root solve seeded by continuation from a low-beta anchor.
    Supplying deltas0 solves from that seed directly instead.
    """
    if table is None:
        table = ActionTable.build(markets, bidask)

    def solve_at(b: float, seed: np.ndarray):
        sol = root(lambda d: _point_state_residual(table, type_mix, b, d),
                   seed, method="hybr", options={"xtol": 1e-13})
        return sol.x

    if deltas0 is not None:
        deltas = solve_at(beta, np.asarray(deltas0, dtype=float))
    else:
        deltas = np.zeros(len(type_mix))
        b = min(beta, beta_anchor)
        while True:
            deltas = solve_at(b, deltas)
            if b >= beta:
                break
            b = min(beta, b + beta_step)
    residual = float(np.max(np.abs(
        _point_state_residual(table, type_mix, beta, deltas))))
    t = _point_mass_trading(table, type_mix, beta, deltas)
    return HomogeneousState(deltas=deltas, t=t,
                            d=_point_mass_demand(type_mix, beta, deltas),
                            converged=residual < 1e-9, iterations=0)


def single_agent_fixed_points(p_buy: float, beta: float, t: TradingProbs,
                              markets: MarketSpec, bidask: BidAskSpec,
                              search_interval: tuple[float, float] | None = None,
                              n_scan: int = 10000,
                              table: ActionTable | None = None) -> FixedPointSet:
    """All zeros of the single-agent drift at fixed matching probabilities.

    Dense sign scan over the interval bracketing every possible zero
    (drift is positive below -E2 and negative above E1), refined by
    bisection; a zero is stable when the drift derivative is negative.
    """
    if table is None:
        table = ActionTable.build(markets, bidask)
    first, _ = table.type_market_moments(p_buy, t)
    e1, e2 = float(first[0]), float(first[1])

    def drift(x: float) -> float:
        p1 = expit(beta * x)
        return p1 * e1 - (1.0 - p1) * e2 - x

    if search_interval is None:
        pad = 1e-6 + 0.01 * (e1 + e2)
        search_interval = (-e2 - pad, e1 + pad)
    xs = np.linspace(search_interval[0], search_interval[1], n_scan)
    p1s = expit(beta * xs)
    values = p1s * e1 - (1.0 - p1s) * e2 - xs
    zeros = [float(x) for x in xs[values == 0.0]]
    for i in np.flatnonzero(values[:-1] * values[1:] < 0.0):
        zeros.append(brentq(drift, xs[i], xs[i + 1], xtol=1e-12))
    zeros.sort()

    points = []
    for z in zeros:
        p1 = expit(beta * z)
        slope = beta * p1 * (1.0 - p1) * (e1 + e2) - 1.0
        points.append(FixedPoint(location=z, stable=bool(slope < 0.0)))
    return FixedPointSet(points=points, t_context=t, kind="reduced")


def beta_s_reduced(markets: MarketSpec, bidask: BidAskSpec,
                   type_mix=DEFAULT_TYPE_MIX, beta_lo: float = 0.5,
                   beta_hi: float = 15.0, tol: float = 1e-3) -> float:
    """Segregation threshold of the reduced model in the r -> 0 limit.

    Bisection on beta of the predicate "some agent type has at least two
    stable drift zeros at the homogeneous state's matching probabilities";
    tol is relative on beta.
    """
    table = ActionTable.build(markets, bidask)

    def predicate(beta: float) -> bool:
        hom = homogeneous_state_r0(markets, bidask, type_mix, beta=beta,
                                   table=table)
        for g, (p_buy, _) in enumerate(type_mix):
            fps = single_agent_fixed_points(p_buy, beta, hom.t, markets,
                                            bidask, table=table)
            if fps.stable_count() >= 2:
                return True
        return False

    lo_val, hi_val = predicate(beta_lo), predicate(beta_hi)
    if lo_val or not hi_val:
        raise ValueError(f"threshold not bracketed: predicate({beta_lo})="
                         f"{lo_val}, predicate({beta_hi})={hi_val}")
    while beta_hi - beta_lo > tol * 0.5 * (beta_lo + beta_hi):
        mid = 0.5 * (beta_lo + beta_hi)
        if predicate(mid):
            beta_hi = mid
        else:
            beta_lo = mid
    return 0.5 * (beta_lo + beta_hi)


# ---------------------------------------------------------------------------
# Fully adaptive model, r -> 0
# ---------------------------------------------------------------------------

def _full_trading(table: ActionTable, probs: np.ndarray) -> TradingProbs:
    """Matching probabilities when the whole population plays probs."""
    return trading_probs_from_flows(
        [table.q[0] * probs[0], table.q[2] * probs[2]],
        [table.q[1] * probs[1], table.q[3] * probs[3]],
    )


def full_homogeneous_r0(markets: MarketSpec, bidask: BidAskSpec, *,
                        beta: float, damping: float = 0.3,
                        tol: float = 1e-12, max_iter: int = 200000,
                        table: ActionTable | None = None):
    """Homogeneous attraction vector of the fully adaptive model.

    At a drift zero every attraction equals choice probability times the
    action's expected score, with matching probabilities generated by the
    population sitting at that same point.  Returns (A, T, converged).
    """
    if table is None:
        table = ActionTable.build(markets, bidask)
    a = np.zeros(4)
    converged = False
    t = _full_trading(table, np.full(4, 0.25))
    for _ in range(max_iter):
        probs = choice_probs(a, beta)
        t = _full_trading(table, probs)
        target = probs * table.returns(t)
        residual = target - a
        if np.max(np.abs(residual)) < tol:
            converged = True
            break
        a = a + damping * residual
    return a, t, converged


_SIMPLEX_EPS = 0.01


def _full_start_points() -> list[np.ndarray]:
    """Deterministic start set on the choice simplex: center, corners
    pulled in by eps, and edge midpoints."""
    starts = [np.full(4, 0.25)]
    for i in range(4):
        p = np.full(4, _SIMPLEX_EPS)
        p[i] = 1.0 - 3.0 * _SIMPLEX_EPS
        starts.append(p)
    for i in range(4):
        for j in range(i + 1, 4):
            p = np.full(4, _SIMPLEX_EPS)
            p[i] = p[j] = 0.5 - _SIMPLEX_EPS
            starts.append(p)
    return starts


def _full_jacobian(a: np.ndarray, beta: float, returns: np.ndarray) -> np.ndarray:
    """Jacobian of the drift P(A)*R - A."""
    p = choice_probs(a, beta)
    jac = beta * p[:, None] * (np.eye(4) - p[None, :]) * returns[:, None]
    return jac - np.eye(4)


def full_model_fixed_points_r0(markets: MarketSpec, bidask: BidAskSpec, *,
                               beta: float, t: TradingProbs | None = None,
                               damping: float = 0.5, tol: float = 1e-12,
                               max_iter: int = 20000,
                               table: ActionTable | None = None) -> FixedPointSet:
    """Fixed points of the 4-D single-agent drift at fixed T.

    Matching probabilities default to the homogeneous state's values.
    Damped iteration from a deterministic start set; starts that fail to
    converge are dropped (and counted), duplicates merged at 1e-6.
    Stability from the eigenvalues of the 4x4 drift Jacobian.
    """
    if table is None:
        table = ActionTable.build(markets, bidask)
    if t is None:
        _, t, ok = full_homogeneous_r0(markets, bidask, beta=beta, table=table)
        if not ok:
            raise RuntimeError("homogeneous state iteration did not converge")
    returns = table.returns(t)

    found: list[np.ndarray] = []
    dropped = 0
    for p0 in _full_start_points():
        a = p0 * returns
        ok = False
        for _ in range(max_iter):
            target = choice_probs(a, beta) * returns
            residual = target - a
            if np.max(np.abs(residual)) < tol:
                ok = True
                break
            a = a + damping * residual
        if not ok:
            dropped += 1
            continue
        if not any(np.max(np.abs(a - b)) < 1e-6 for b in found):
            found.append(a)

    points = []
    for a in found:
        eigs = np.linalg.eigvals(_full_jacobian(a, beta, returns))
        points.append(FixedPoint(location=a, stable=bool(np.max(eigs.real) < 0.0)))
    return FixedPointSet(points=points, t_context=t, kind="full",
                         dropped_starts=dropped)


def beta_s_full(markets: MarketSpec, bidask: BidAskSpec,
                beta_lo: float = 3.0, beta_hi: float = 9.0,
                tol: float = 1e-3) -> float:
    """Segregation threshold of the fully adaptive model at r -> 0.

    A segregated population needs a persistent group for every action
    (buyers and sellers at both markets; otherwise some group has no
    trading partners), so the threshold is the beta above which every
    action supports a stable specialist fixed point.  The matching
    probabilities are those of the preference-free reference population
    (uniform choice probabilities), the state the population is in before
    any segregation develops.
    """
    table = ActionTable.build(markets, bidask)
    t_ref = _full_trading(table, np.full(4, 0.25))

    def predicate(beta: float) -> bool:
        fps = full_model_fixed_points_r0(markets, bidask, beta=beta,
                                         t=t_ref, table=table)
        specialist_actions = set()
        for p in fps.points:
            if not p.stable:
                continue
            probs = choice_probs(np.asarray(p.location), beta)
            if probs.max() > 0.5:
                specialist_actions.add(int(probs.argmax()))
        return len(specialist_actions) == 4

    lo_val, hi_val = predicate(beta_lo), predicate(beta_hi)
    if lo_val or not hi_val:
        raise ValueError(f"threshold not bracketed: predicate({beta_lo})="
                         f"{lo_val}, predicate({beta_hi})={hi_val}")
    while beta_hi - beta_lo > tol * 0.5 * (beta_lo + beta_hi):
        mid = 0.5 * (beta_lo + beta_hi)
        if predicate(mid):
            beta_hi = mid
        else:
            beta_lo = mid
    return 0.5 * (beta_lo + beta_hi)


# ---------------------------------------------------------------------------
# Envy-free equal-return benchmark
# ---------------------------------------------------------------------------

def envy_free_nash(markets: MarketSpec, bidask: BidAskSpec,
                   table: ActionTable | None = None) -> NashSolution:
    """Matching probabilities equalizing the return of all four actions.

    At each market one side is the minority (T = 1); equality inside the
    market fixes the other side's T in closed form, and the assignment is
    consistent when every T <= 1 and the two markets' common returns agree.
    """
    if table is None:
        table = ActionTable.build(markets, bidask)
    full = table.q * table.mean_t  # return per action if every valid order traded

    best = None
    best_err = np.inf
    for minority in ((0, 0), (0, 1), (1, 0), (1, 1)):
        # minority[m] = 0 means buyers are the minority side at market m+1
        t = np.ones(4)
        rets = np.empty(2)
        feasible = True
        for m in range(2):
            b_idx, s_idx = 2 * m, 2 * m + 1
            if minority[m] == 0:
                rets[m] = full[b_idx]
                t[s_idx] = full[b_idx] / full[s_idx] if full[s_idx] > 0 else 0.0
                feasible &= t[s_idx] <= 1.0 + 1e-12
            else:
                rets[m] = full[s_idx]
                t[b_idx] = full[s_idx] / full[b_idx] if full[b_idx] > 0 else 0.0
                feasible &= t[b_idx] <= 1.0 + 1e-12
        err = abs(rets[0] - rets[1])
        if feasible and err <= 1e-8:
            tp = TradingProbs(*np.clip(t, 0.0, 1.0))
            return NashSolution(t=tp, common_return=float(rets.mean()),
                                consistent=True,
                                returns=table.returns(tp))
        score = err + (0.0 if feasible else 1e6)
        if score < best_err:
            best_err = score
            best = (np.clip(t, 0.0, 1.0), float(rets.mean()))
    tp = TradingProbs(*best[0])
    return NashSolution(t=tp, common_return=best[1], consistent=False,
                        returns=table.returns(tp))


# ---------------------------------------------------------------------------
# Return curves
# ---------------------------------------------------------------------------

def homogeneous_return_r0(markets: MarketSpec, bidask: BidAskSpec,
                          type_mix=DEFAULT_TYPE_MIX, *, beta: float,
                          table: ActionTable | None = None) -> float:
    """Population return on the homogeneous point-mass branch."""
    if table is None:
        table = ActionTable.build(markets, bidask)
    hom = homogeneous_state_r0(markets, bidask, type_mix, beta=beta,
                               table=table)
    total = 0.0
    for g, (p_buy, weight) in enumerate(type_mix):
        first, _ = table.type_market_moments(p_buy, hom.t)
        p1 = expit(beta * hom.deltas[g])
        total += weight * (p1 * first[0] + (1.0 - p1) * first[1])
    return total


def return_curve(markets: MarketSpec, bidask: BidAskSpec,
                 type_mix=DEFAULT_TYPE_MIX, *, beta_grid, r_list,
                 grid: GridSpec | None = None) -> list[dict]:
    """Steady-state population return against beta for each r.

    Each row carries the default-start self-consistent solution's return,
    the homogeneous r -> 0 baseline at the same beta, the equal-return
    benchmark, and the converged density's Binder cumulant.
    """
    table = ActionTable.build(markets, bidask)
    nash = envy_free_nash(markets, bidask, table=table)
    rows = []
    for r in r_list:
        for beta in beta_grid:
            state = solve_self_consistent(markets, bidask, type_mix,
                                          beta=beta, r=r, grid=grid)
            rows.append({
                "r": r,
                "beta": beta,
                "population_return": population_return(state, type_mix, beta,
                                                       markets, bidask, table),
                "baseline_return": homogeneous_return_r0(markets, bidask,
                                                         type_mix, beta=beta,
                                                         table=table),
                "nash_return": nash.common_return,
                "binder": float(np.mean([d.binder() for d in state.densities])),
                "converged": state.converged,
            })
    return rows


# ---------------------------------------------------------------------------
# Census of self-consistent demand ratios
# ---------------------------------------------------------------------------

def _census_grid(markets, bidask, type_mix) -> GridSpec:
    # Wider than the solver default so census states far from symmetric
    # never trip the edge check at moderate r.
    return default_grid(markets, bidask, type_mix).widened(2.0)


def _demand_map(log_d: np.ndarray, table, markets, bidask, type_mix, beta, r,
                grid: GridSpec) -> np.ndarray:
    """One application of the self-consistency map in log demand space."""
    d = DemandRatios(*np.exp(log_d))
    t = trading_probs_from_flows([table.q[0] * d.d1, table.q[2] * d.d2],
                                 [table.q[1], table.q[3]])
    densities = [
        stationary_density(p_buy, beta, t, r, grid, markets, bidask,
                           type_id=g, table=table)
        for g, (p_buy, _) in enumerate(type_mix)
    ]
    d_new = demand_ratios_from_densities(densities, type_mix, beta)
    return np.log(d_new.as_array())


def selfconsistency_map(d: DemandRatios, markets: MarketSpec,
                        bidask: BidAskSpec, type_mix=DEFAULT_TYPE_MIX, *,
                        beta: float, r: float,
                        grid: GridSpec | None = None) -> DemandRatios:
    """Demand ratios regenerated from the densities they induce."""
    table = ActionTable.build(markets, bidask)
    if grid is None:
        grid = _census_grid(markets, bidask, type_mix)
    out = _demand_map(np.log(d.as_array()), table, markets, bidask, type_mix,
                      beta, r, grid)
    return DemandRatios(*np.exp(out))


def _refine_fixed_point(log_d0, map_fn, damping=0.5, tol=1e-11,
                        max_iter=400, iterate_first=True
                        ) -> tuple[np.ndarray, float]:
    """Damped iteration followed by a root polish; returns (log_d, residual).

    iterate_first=False skips the damped phase: solutions that are unstable
    under the self-consistency iteration (the census must count those too)
    repel the iterates, so their seeds must go straight to the root solver.
    """
    x = np.asarray(log_d0, dtype=float).copy()
    if iterate_first:
        for _ in range(max_iter):
            fx = map_fn(x)
            res = fx - x
            if np.max(np.abs(res)) < tol:
                return x, float(np.max(np.abs(res)))
            x = x + damping * res
            if np.max(np.abs(x)) > 12.0:   # far out of any sensible domain
                break
    sol = root(lambda y: map_fn(y) - y, x, method="hybr",
               options={"xtol": 1e-12})
    res = float(np.max(np.abs(map_fn(sol.x) - sol.x)))
    return sol.x, res


def _density_peaks(dens: Density1D) -> list[float]:
    """Masses of the local maxima of a density, split at interior minima."""
    v = dens.values
    x = dens.grid
    peak_idx = [i for i in range(1, len(v) - 1)
                if v[i] > v[i - 1] and v[i] >= v[i + 1]]
    if v[0] > v[1]:
        peak_idx.insert(0, 0)
    if v[-1] > v[-2]:
        peak_idx.append(len(v) - 1)
    if not peak_idx:
        return [1.0]
    boundaries = [0]
    for a, b in zip(peak_idx[:-1], peak_idx[1:]):
        boundaries.append(a + int(np.argmin(v[a:b + 1])))
    boundaries.append(len(v) - 1)
    masses = []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        masses.append(float(np.trapezoid(v[lo:hi + 1], x[lo:hi + 1])))
    # Discard numerically empty peaks (flat tails produce spurious maxima).
    return [m for m in masses if m > 1e-9] or [1.0]


def _classify(peak_masses: list[list[float]], w_min: float) -> str:
    if all(len(m) == 1 for m in peak_masses):
        return "U"
    for masses in peak_masses:
        if len(masses) > 1 and min(masses) / max(masses) < w_min:
            return "W"
    return "S"


def steady_state_census(markets: MarketSpec, bidask: BidAskSpec,
                        type_mix=DEFAULT_TYPE_MIX, *, beta: float, r: float,
                        domain: tuple[float, float] = (-2.0, 2.0),
                        grid_n: int = 81, w_min: float = 0.05,
                        method: str = "contour",
                        grid: GridSpec | None = None) -> SteadyStateCensus:
    """All self-consistent demand-ratio solutions at one (r, beta).

    method "contour" locates sign changes of both components of the
    log-space residual on a grid_n x grid_n lattice over the domain and
    refines each candidate cell; "multistart" runs the refinement from a
    fixed 3x3 spread of starting points (much cheaper, same solutions in
    practice).  Solutions are classified U/S/W from the per-type peak
    masses of their densities.
    """
    table = ActionTable.build(markets, bidask)
    if grid is None:
        grid = _census_grid(markets, bidask, type_mix)

    def map_fn(log_d):
        return _demand_map(log_d, table, markets, bidask, type_mix, beta, r,
                           grid)

    # The asymmetric (weakly segregated) pair branches off the symmetric
    # solution in a pitchfork; close to the fold all three fixed points sit
    # inside a single lattice cell, where corner sign changes cancel.  Seed
    # the search from the default-start solution displaced along the
    # symmetry-breaking direction so those solutions are never missed.
    candidates: list[np.ndarray] = []
    try:
        center, res0 = _refine_fixed_point(np.zeros(2), map_fn,
                                           iterate_first=False)
        if res0 < 1e-8:
            candidates.append(center)
            for eps in (0.01, 0.03, 0.1, 0.3, 1.0):
                candidates.append(center + eps)
                candidates.append(center - eps)
    except (GridTooNarrowError, ValueError):
        pass
    if method == "contour":
        axis = np.linspace(domain[0], domain[1], grid_n)
        res = np.empty((grid_n, grid_n, 2))
        for i, l1 in enumerate(axis):
            for j, l2 in enumerate(axis):
                res[i, j] = map_fn(np.array([l1, l2])) - (l1, l2)
        for i in range(grid_n - 1):
            for j in range(grid_n - 1):
                cell = res[i:i + 2, j:j + 2, :].reshape(4, 2)
                if (cell[:, 0].min() < 0 < cell[:, 0].max()
                        and cell[:, 1].min() < 0 < cell[:, 1].max()):
                    candidates.append(np.array([
                        0.5 * (axis[i] + axis[i + 1]),
                        0.5 * (axis[j] + axis[j + 1]),
                    ]))
    elif method == "multistart":
        lo, hi = domain
        for l1 in (lo, 0.0, hi):
            for l2 in (lo, 0.0, hi):
                candidates.append(np.array([l1, l2]))
    else:
        raise ValueError(f"unknown census method {method!r}")

    found: list[np.ndarray] = []
    for c in candidates:
        try:
            log_d, residual = _refine_fixed_point(c, map_fn,
                                                  iterate_first=False)
        except (GridTooNarrowError, ValueError):
            continue
        if residual > 1e-8:
            continue
        if np.max(np.abs(log_d)) > abs(domain[1]) + 1.0:
            continue
        if not any(np.max(np.abs(log_d - f)) < 1e-6 for f in found):
            found.append(log_d)

    solutions = []
    for log_d in sorted(found, key=lambda v: (v[0], v[1])):
        d = DemandRatios(*np.exp(log_d))
        t = trading_probs_from_flows([table.q[0] * d.d1, table.q[2] * d.d2],
                                     [table.q[1], table.q[3]])
        densities = [
            stationary_density(p_buy, beta, t, r, grid, markets, bidask,
                               type_id=g, table=table)
            for g, (p_buy, _) in enumerate(type_mix)
        ]
        masses = [_density_peaks(dens) for dens in densities]
        solutions.append(CensusSolution(d=d, klass=_classify(masses, w_min),
                                        peak_masses=masses))
    if len(solutions) not in (1, 3):
        warnings.warn(f"census found {len(solutions)} solutions at "
                      f"r={r}, beta={beta}; expected 1 or 3 in the "
                      "explored regime", stacklevel=2)
    return SteadyStateCensus(solutions=solutions, r=r, beta=beta)


def _point_mass_census_count(markets, bidask, type_mix, beta, table) -> int:
    """Number of deterministic (r -> 0) point-mass self-consistent states.

    Counts the unsegregated branch plus every distinct state where all
    types sit at stable drift zeros (at small r the density mass lives at
    stable zeros; the unsegregated branch counts even where it has turned
    single-agent unstable, since it remains a delta-peak solution of the
    stationarity condition).  Seeded from a dense grid so Newton basins
    of the asymmetric states are always hit.
    """
    first_full = [table.type_market_moments(p, TradingProbs(1, 1, 1, 1))[0]
                  for p, _ in type_mix]
    big = 1.2 * max(float(np.max(f)) for f in first_full)

    def residual(deltas):
        return _point_state_residual(table, type_mix, beta, deltas)

    hom = homogeneous_state_r0(markets, bidask, type_mix, beta=beta,
                               table=table)
    axis = np.linspace(-big, big, 9)
    seeds = [np.array([a, b]) for a in axis for b in axis]

    extra: list[np.ndarray] = []
    for s in seeds:
        sol = root(residual, s, method="hybr", options={"xtol": 1e-13})
        x = sol.x
        if np.max(np.abs(residual(x))) > 1e-9:
            continue
        if np.max(np.abs(x - hom.deltas)) < 1e-6:
            continue
        t = _point_mass_trading(table, type_mix, beta, x)
        stable = True
        for g, (p_buy, _) in enumerate(type_mix):
            first, _ = table.type_market_moments(p_buy, t)
            p1 = expit(beta * x[g])
            slope = beta * p1 * (1.0 - p1) * (first[0] + first[1]) - 1.0
            stable &= slope < 0.0
        if stable and not any(np.max(np.abs(x - f)) < 1e-6 for f in extra):
            extra.append(x)
    return 1 + len(extra)


def orange_endpoint_r0(markets: MarketSpec, bidask: BidAskSpec,
                       type_mix=DEFAULT_TYPE_MIX, beta_lo: float = 0.5,
                       beta_hi: float = 30.0, tol: float = 1e-3) -> float:
    """r -> 0 onset of multiple point-mass self-consistent states."""
    table = ActionTable.build(markets, bidask)

    def predicate(beta: float) -> bool:
        return _point_mass_census_count(markets, bidask, type_mix, beta,
                                        table) >= 3

    lo_val, hi_val = predicate(beta_lo), predicate(beta_hi)
    if lo_val or not hi_val:
        raise ValueError(f"fold not bracketed: predicate({beta_lo})={lo_val}, "
                         f"predicate({beta_hi})={hi_val}")
    while beta_hi - beta_lo > tol * 0.5 * (beta_lo + beta_hi):
        mid = 0.5 * (beta_lo + beta_hi)
        if predicate(mid):
            beta_hi = mid
        else:
            beta_lo = mid
    return 0.5 * (beta_lo + beta_hi)


def phase_boundaries(markets: MarketSpec, bidask: BidAskSpec,
                     type_mix=DEFAULT_TYPE_MIX, *, r_grid, beta_grid,
                     w_min: float = 0.05) -> PhaseBoundaries:
    """Solution count and segregation flag over an (r, beta) grid.

    The fold is reported as the largest grid r at which any beta still
    yields three solutions; the two r -> 0 endpoints come from the
    threshold bisection and the point-mass census fold.
    """
    r_grid = np.asarray(list(r_grid), dtype=float)
    beta_grid = np.asarray(list(beta_grid), dtype=float)
    counts = np.zeros((len(r_grid), len(beta_grid)), dtype=int)
    seg = np.zeros_like(counts, dtype=bool)
    for i, r in enumerate(r_grid):
        for j, beta in enumerate(beta_grid):
            census = steady_state_census(markets, bidask, type_mix,
                                         beta=beta, r=r, method="multistart",
                                         w_min=w_min)
            counts[i, j] = census.count()
            seg[i, j] = any(s.klass in ("S", "W") for s in census.solutions)
    has_three = counts.max(axis=1) >= 3
    fold_r = float(r_grid[has_three].max()) if has_three.any() else float("nan")
    return PhaseBoundaries(
        r_grid=r_grid, beta_grid=beta_grid, n_solutions=counts,
        any_segregated=seg, fold_r_max=fold_r,
        blue_beta_r0=beta_s_reduced(markets, bidask, type_mix),
        orange_beta_r0=orange_endpoint_r0(markets, bidask, type_mix),
    )
