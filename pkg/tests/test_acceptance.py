"""Acceptance gate: every stated criterion at its stated tolerance.

Run `pytest tests/test_acceptance.py -v -s` to see one [PASS]/[FAIL] line
per criterion with the measured value next to its bound.  Heavy ensembles
are shared through session fixtures; everything is seeded, so the suite is
reproducible bit for bit.
"""

import time
import warnings

import numpy as np
import pytest

from twinmarket.bifurcation import (beta_s_full, beta_s_reduced,
                                    envy_free_nash, homogeneous_return_r0,
                                    phase_boundaries, return_curve,
                                    steady_state_census)
from twinmarket.fokker_planck import solve_self_consistent
from twinmarket.meanfield import ActionTable, DemandRatios, trading_probs_from_ratios
from twinmarket.fokker_planck import jump_moments
from twinmarket.params import (BidAskSpec, LearningParams, MarketSpec,
                               PopulationSpec, RecordFlags, SimConfig)
from twinmarket.simulate import run_ensemble, run_full
from twinmarket.stats import (autocovariance, binder, binder_two_type,
                              count_peaks_2d, find_plateau, histogram2d)

warnings.filterwarnings("ignore", message="census found")

MK = MarketSpec()
BA = BidAskSpec()
WORKERS = 2


def report(ok: bool, label: str, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


def reduced_config(beta, n_periods, burn_in, seed):
    return SimConfig(population=PopulationSpec(n_agents=200, kind="reduced"),
                     markets=MK, bidask=BA,
                     learning=LearningParams(beta=beta, r=0.1),
                     n_periods=n_periods, burn_in=burn_in, seed=seed)


# --------------------------------------------------------------------------
# shared heavy ensembles
# --------------------------------------------------------------------------

@pytest.fixture(scope="session")
def fig2_ensembles():
    out = {}
    t0 = time.monotonic()
    for beta in (7.14, 3.45):
        cfg = SimConfig(population=PopulationSpec(n_agents=200, kind="full"),
                        markets=MK, bidask=BA,
                        learning=LearningParams(beta=beta, r=0.1),
                        n_periods=5100, burn_in=5000, seed=2024)
        out[beta] = run_ensemble(cfg, n_runs=100, workers=WORKERS)
    out["elapsed"] = time.monotonic() - t0
    return out


@pytest.fixture(scope="session")
def binder_curve_data():
    """Simulation vs theory across the 10-point beta grid at r = 0.1.

    The two betas used for the density comparison get a deeper burn-in:
    peak-weight equilibration in the bimodal regime is the slowest mode of
    the dynamics and the L1 comparison is sensitive to it.
    """
    inv_betas = [0.55, 0.50, 0.45, 0.40, 0.35, 0.30, 0.25, 0.20, 0.15, 0.10]
    l1_betas = {1 / 0.45, 1 / 0.15}
    rows = []
    pooled = {}
    for ib in inv_betas:
        beta = 1.0 / ib
        state = solve_self_consistent(MK, BA, beta=beta, r=0.1, tol=1e-9)
        burn = 20000 if beta in l1_betas else 5000
        cfg = reduced_config(beta, burn + 100, burn, seed=123)
        res = run_ensemble(cfg, n_runs=100, workers=WORKERS)
        rows.append({"beta": beta,
                     "binder_fp": float(np.mean([d.binder()
                                                 for d in state.densities])),
                     "binder_sim": binder_two_type(res.pooled_delta)})
        if beta in l1_betas:
            pooled[beta] = (res.pooled_delta, state)
    return rows, pooled


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------

def test_c01_reduced_threshold():
    t0 = time.monotonic()
    bs = beta_s_reduced(MK, BA)
    dt = time.monotonic() - t0
    ok = abs(bs - 3.55) <= 0.05 and dt <= 120
    assert report(ok, "C1 reduced-model threshold",
                  f"beta_s = {bs:.4f} (3.55 +/- 0.05), {dt:.1f}s <= 120s")


def test_c02_full_threshold():
    t0 = time.monotonic()
    bs = beta_s_full(MK, BA)
    dt = time.monotonic() - t0
    ok = abs(bs - 5.9) <= 0.15 and dt <= 600
    assert report(ok, "C2 full-model threshold",
                  f"beta_s = {bs:.4f} (5.9 +/- 0.15), {dt:.1f}s <= 600s")


def test_c03_fold_threshold():
    r_grid = np.round(np.arange(0.045, 0.0631, 0.002), 4)
    beta_grid = [6.0, 6.67, 7.4, 8.0, 9.0, 10.0]
    pb = phase_boundaries(MK, BA, r_grid=r_grid, beta_grid=beta_grid)
    ok = abs(pb.fold_r_max - 0.054) <= 0.005
    detail = (f"max three-solution r = {pb.fold_r_max:.3f} (0.054 +/- 0.005, "
              f"grid step 0.002); r->0 endpoints: segregation "
              f"{pb.blue_beta_r0:.3f}, fold {pb.orange_beta_r0:.3f}")
    assert report(ok, "C3 fold threshold", detail)


def test_c04_fig2_reproduction(fig2_ensembles):
    proj_hi = fig2_ensembles[7.14].pooled_projections
    proj_lo = fig2_ensembles[3.45].pooled_projections
    peaks_hi = count_peaks_2d(histogram2d(proj_hi[:, 0], proj_hi[:, 1],
                                          bins=36), mass_floor=0.02)
    peaks_lo = count_peaks_2d(histogram2d(proj_lo[:, 0], proj_lo[:, 1],
                                          bins=36), mass_floor=0.02)
    dt = fig2_ensembles["elapsed"]
    ok = len(peaks_hi) == 4 and len(peaks_lo) == 1 and dt <= 900
    detail = (f"beta=7.14 -> {len(peaks_hi)} peaks >=2% "
              f"{[round(m, 3) for _, _, m in peaks_hi]}, beta=3.45 -> "
              f"{len(peaks_lo)} peak, {dt:.0f}s <= 900s")
    assert report(ok, "C4 desk-scale segregation snapshot", detail)


def test_c04b_peaks_on_diagonals_and_buyer_fraction(fig2_ensembles):
    proj = fig2_ensembles[7.14].pooled_projections
    peaks = count_peaks_2d(histogram2d(proj[:, 0], proj[:, 1], bins=36),
                           mass_floor=0.02)
    off_diag = max(min(abs(x - y), abs(x + y)) for x, y, _ in peaks)
    frac = float((proj[:, 0] > 0).mean())
    ok = off_diag < 0.25 and 0.4 <= frac <= 0.6
    assert report(ok, "C4b peak geometry",
                  f"max off-diagonal distance {off_diag:.3f} < 0.25, "
                  f"buyer-side fraction {frac:.3f} in [0.4, 0.6]")


def _l1_binned(samples, density, bins=30):
    grid, vals = density.grid, density.values
    counts, edges = np.histogram(samples, bins=bins, range=(grid[0], grid[-1]))
    w = np.diff(edges)
    p_hat = counts / (len(samples) * w)
    cum = np.concatenate(([0.0],
                          np.cumsum(0.5 * (vals[1:] + vals[:-1])
                                    * np.diff(grid))))
    p_avg = np.diff(np.interp(edges, grid, cum)) / w
    return float(np.sum(np.abs(p_hat - p_avg) * w)
                 + 1.0 - counts.sum() / len(samples))


def test_c05_fp_vs_simulation(binder_curve_data):
    rows, pooled = binder_curve_data
    max_diff = max(abs(r["binder_fp"] - r["binder_sim"]) for r in rows)
    l1_max = 0.0
    for beta, (delta_by_type, state) in pooled.items():
        for g in (0, 1):
            l1_max = max(l1_max,
                         _l1_binned(delta_by_type[g], state.densities[g]))
    ok = l1_max < 0.1 and max_diff < 0.05
    assert report(ok, "C5 theory vs simulation",
                  f"max L1 = {l1_max:.4f} < 0.1 at beta in {{2.22, 6.67}}; "
                  f"max |Binder diff| = {max_diff:.4f} < 0.05 over 10 betas")


def test_c06_binder_limits():
    rng = np.random.default_rng(2718)
    b_gauss = binder(rng.normal(size=10**6))
    two_point = binder(np.array([0.7, -0.7] * 1000))
    ok = abs(b_gauss) < 0.02 and abs(two_point - 2 / 3) < 1e-12
    assert report(ok, "C6 Binder limits",
                  f"Gaussian B = {b_gauss:+.4f} (|B| < 0.02), two-point "
                  f"B = {two_point:.12f} (= 2/3)")


def test_c07_returns_ordering():
    # NOTE: the minimum-location clause is known to fail for this model:
    # the r = 0.1 return curve has a shallow valley whose floor sits at
    # beta ~ 5-6 (confirmed independently by direct simulation), i.e. about
    # 1.4x the segregation threshold rather than within 20% of it.  The
    # criterion is asserted as stated; see the printed clause verdicts.
    inv_betas = [0.55, 0.50, 0.45, 0.40, 0.35, 0.30, 0.25, 0.20, 0.15, 0.10]
    betas = [1.0 / ib for ib in inv_betas]
    rows = return_curve(MK, BA, beta_grid=betas, r_list=[0.1])
    nash = rows[0]["nash_return"]
    beyond = [r for r in rows if r["beta"] > 3.55 + 0.2]
    above_baseline = all(r["population_return"] > r["baseline_return"]
                         for r in beyond)
    above_nash = all(r["population_return"] > nash for r in beyond)
    rets = [r["population_return"] for r in rows]
    k = int(np.argmin(rets))
    interior = 0 < k < len(rows) - 1
    near_threshold = 0.8 * 3.55 <= rows[k]["beta"] <= 1.2 * 3.55
    base_grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]
    base = [homogeneous_return_r0(MK, BA, beta=b) for b in base_grid]
    monotone = all(a > b for a, b in zip(base, base[1:]))
    ok = above_baseline and above_nash and interior and near_threshold \
        and monotone
    assert report(ok, "C7 returns ordering",
                  f"segregated > baseline: {above_baseline}; > benchmark "
                  f"{nash:.4f}: {above_nash}; baseline monotone: {monotone}; "
                  f"interior minimum: {interior}; minimum at beta = "
                  f"{rows[k]['beta']:.3f} within 20% of 3.55: {near_threshold}")


def test_c07b_return_minimum_deepens_as_r_falls():
    betas = [2.857, 3.333, 4.0, 4.5]
    minima = {}
    for r in (0.15, 0.1, 0.05):
        rows = return_curve(MK, BA, beta_grid=betas, r_list=[r])
        minima[r] = min(row["population_return"] for row in rows)
    ok = minima[0.05] < minima[0.1] < minima[0.15]
    assert report(ok, "C7b minimum deepens with falling r",
                  f"min returns {minima[0.15]:.4f} > {minima[0.1]:.4f} > "
                  f"{minima[0.05]:.4f}")


def test_c08_jump_moment_oracle():
    rng = np.random.default_rng(424242)
    table = ActionTable.build(MK, BA)
    settings = [(0.8, 1 / 0.15, DemandRatios(1.0, 1.0)),
                (0.2, 1 / 0.45, DemandRatios(1.3, 0.8)),
                (0.5, 5.0, DemandRatios(0.7, 1.4))]
    deltas = np.linspace(-0.6, 0.7, 9)
    n = 10**7
    worst = 0.0
    for p_buy, beta, d in settings:
        t = trading_probs_from_ratios(d, table.validity_map())
        t_arr = t.as_array()
        for delta in deltas:
            m = (rng.random(n)
                 >= 1 / (1 + np.exp(-beta * delta))).astype(np.int64)
            buy = rng.random(n) < p_buy
            z = rng.standard_normal(n)
            price = np.where(buy, BA.mu_bid + BA.sigma_bid * z,
                             BA.mu_ask + BA.sigma_ask * z)
            pi = table.prices[m]
            margin = np.where(buy, price - pi, pi - price)
            action = 2 * m + (~buy).astype(np.int64)
            s = np.where((margin >= 0) & (rng.random(n) < t_arr[action]),
                         margin, 0.0)
            x = np.where(m == 0, s, -s) - delta
            a1, a2 = jump_moments(delta, p_buy, beta, t, MK, BA, table=table)
            z1 = abs(float(a1) - x.mean()) / (x.std() / np.sqrt(n))
            x2 = x * x
            z2 = abs(float(a2) - x2.mean()) / (x2.std() / np.sqrt(n))
            worst = max(worst, z1, z2)
    ok = worst < 4.0
    assert report(ok, "C8 jump-moment oracle",
                  f"27 cells x 1e7 draws: worst deviation {worst:.2f} "
                  "standard errors < 4")


def test_c09_mirror_symmetries():
    mirror_gap = 0.0
    for beta in (1 / 0.45, 1 / 0.15):
        st = solve_self_consistent(MK, BA, beta=beta, r=0.1, tol=1e-9)
        d0, d1 = st.densities
        mirror_gap = max(mirror_gap,
                         float(np.max(np.abs(d0.values - d1.mirrored()))))
    census = steady_state_census(MK, BA, beta=10.0, r=0.02,
                                 method="multistart")
    ds = sorted((s.d.d1, s.d.d2) for s in census.solutions)
    mirrored = sorted((1 / b, 1 / a) for a, b in ds)
    census_gap = max(max(abs(a - c), abs(b - e))
                     for (a, b), (c, e) in zip(ds, mirrored))
    variants = [beta_s_full(MarketSpec(theta=th), BA, tol=5e-3)
                for th in ((-0.2, 0.2), (0.2, -0.2), (0.2, 0.2),
                           (-0.2, -0.2))]
    spread = (max(variants) - min(variants)) / np.mean(variants)
    ok = mirror_gap < 1e-6 and census_gap < 1e-4 and spread < 0.02
    assert report(ok, "C9 mirror symmetries",
                  f"density mirror gap {mirror_gap:.2e} < 1e-6; census "
                  f"mirror gap {census_gap:.2e}; four-fold beta_s spread "
                  f"{100 * spread:.2f}% < 2%")


def test_c10_autocovariance_two_timescales():
    cfg = SimConfig(population=PopulationSpec(n_agents=200, kind="full"),
                    markets=MK, bidask=BA,
                    learning=LearningParams(beta=20.0, r=0.2),
                    n_periods=20000, burn_in=10000, seed=99,
                    record=RecordFlags(snapshots=True, snapshot_stride=1,
                                       snapshot_start=10000))
    traj = run_full(cfg)
    lags = np.unique(np.concatenate(
        [np.arange(0, 11),
         np.round(np.logspace(1, np.log10(8000), 32)).astype(int)]))
    curve = autocovariance(traj, lags, mode="central")
    window = find_plateau(curve, slope_frac=0.05)
    slopes = np.diff(curve.values) / np.diff(curve.t_rescaled)
    init = float(np.abs(slopes[curve.t_rescaled[:-1] <= 2.0]).max())
    elevated = curve.values[:-1] > 0.15 * curve.values[0]
    min_ratio = float((np.abs(slopes) / init)[elevated].min())
    ok = window is not None
    assert report(ok, "C10 autocovariance plateau",
                  f"flat window (slope < 5% of initial {init:.4f}) at "
                  f"elevated correlation: "
                  f"{'found at lags ' + str((curve.lags[window[0]], curve.lags[window[1]])) if window else 'none'}"
                  f"; flattest elevated slope = {100 * min_ratio:.1f}% of initial")
