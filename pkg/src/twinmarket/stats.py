"""Observables computed from trajectories and pooled samples.

Attraction projections, the Binder cumulant, autocovariance curves with
plateau detection, dwell-time statistics, average returns, and histogram
peak counting for segregation detection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulate import Trajectory


def project_attractions(attractions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(buy-vs-sell, market-1-vs-2) projections of attraction vectors.

    Accepts any array with the four actions on the last axis.
    """
    a = np.asarray(attractions)
    d_bs = (a[..., 0] + a[..., 2]) - (a[..., 1] + a[..., 3])
    d_12 = (a[..., 0] + a[..., 1]) - (a[..., 2] + a[..., 3])
    return d_bs, d_12


def binder(samples) -> float:
    """Binder cumulant 1 - <x^4> / (3 <x^2>^2) of a sample set.

    Zero for a centered Gaussian, 2/3 for any mixture of two sharp peaks
    at +/-c, 2/5 for a uniform on [-c, c].
    """
    x = np.asarray(samples, dtype=float).ravel()
    m2 = float(np.mean(x * x))
    if m2 <= 0.0:
        raise ValueError("Binder cumulant undefined for all-zero samples")
    m4 = float(np.mean(x ** 4))
    return 1.0 - m4 / (3.0 * m2 * m2)


def binder_two_type(samples_by_type: dict[int, np.ndarray]) -> float:
    """Average of the per-type Binder cumulants (two-type populations)."""
    values = [binder(s) for s in samples_by_type.values()]
    return float(np.mean(values))


@dataclass
class AutocovCurve:
    lags: np.ndarray          # in periods
    t_rescaled: np.ndarray    # lags * r
    values: np.ndarray
    mode: str


def autocovariance(trajectory: Trajectory, lags, mode: str = "central"
                   ) -> AutocovCurve:
    """Attraction autocovariance summed over actions.

    central:   C(tau) = sum_g <dA_g(t0+tau) dA_g(t0)>, fluctuations around
               the population-and-time mean; C(0) is the summed variance.
    increment: C(tau) = sum_g <(A_g(t0+tau) - A_g(t0))^2>, the mean squared
               displacement, which starts at 0 and grows.
    Averages run over agents and stationary start times t0; feed a
    post-burn-in snapshot segment.  Lags are given in snapshot steps and
    reported in periods (snapshot stride times steps).
    """
    if mode not in ("central", "increment"):
        raise ValueError("mode must be 'central' or 'increment'")
    state = trajectory.attractions if trajectory.kind == "full" else trajectory.delta
    if state is None or len(state) == 0:
        raise ValueError("trajectory carries no snapshots")
    a = np.asarray(state, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    n_t = a.shape[0]
    lags = np.asarray(sorted(set(int(l) for l in lags)), dtype=np.int64)
    if lags.max() >= n_t:
        raise ValueError(f"lag {lags.max()} exceeds snapshot segment {n_t}")
    values = np.empty(len(lags))
    if mode == "central":
        d = a - a.mean(axis=(0, 1), keepdims=True)
        for i, tau in enumerate(lags):
            if tau == 0:
                values[i] = np.mean(np.sum(d * d, axis=2))
            else:
                values[i] = np.mean(np.sum(d[tau:] * d[:-tau], axis=2))
    else:
        for i, tau in enumerate(lags):
            if tau == 0:
                values[i] = 0.0
            else:
                diff = a[tau:] - a[:-tau]
                values[i] = np.mean(np.sum(diff * diff, axis=2))
    cfg = trajectory.config
    stride = cfg.record.resolved_stride(cfg.population.kind,
                                        cfg.population.n_agents)
    period_lags = lags * stride
    return AutocovCurve(lags=period_lags,
                        t_rescaled=period_lags * cfg.learning.r,
                        values=values, mode=mode)


def find_plateau(curve: AutocovCurve, slope_frac: float = 0.05,
                 min_points: int = 3,
                 level_floor: float = 0.15) -> tuple[int, int] | None:
    """First lag window where the curve is locally flat but still elevated.

    Flat means the local slope per rescaled time stays below slope_frac
    times the initial decay slope (the steepest early-lag slope); elevated
    means the window's values stay above level_floor * C(0), which
    excludes the trivially flat fully-decorrelated tail.  Returns (start,
    stop) indices into curve.lags covering the first window of at least
    min_points consecutive flat intervals, or None when no plateau exists.
    """
    t = curve.t_rescaled.astype(float)
    vals = curve.values
    if len(t) < min_points + 2:
        return None
    slopes = np.diff(vals) / np.diff(t)
    early = t[:-1] <= max(2.0, t[1] * 2)
    if not early.any():
        early = np.zeros(len(slopes), dtype=bool)
        early[0] = True
    init = np.max(np.abs(slopes[early]))
    if init <= 0:
        return None
    floor = level_floor * vals[0]
    flat = (np.abs(slopes) < slope_frac * init) \
        & (vals[:-1] > floor) & (vals[1:] > floor)
    run = 0
    for i, ok in enumerate(flat):
        run = run + 1 if ok else 0
        if run >= min_points:
            return i - run + 1, i + 1
    return None


def persistence_times(trajectory: Trajectory,
                      classifier: str = "auto") -> np.ndarray:
    """Dwell times (in snapshot periods) between label changes, per agent.

    Labels are the sign of Delta for the reduced model and the argmax
    attraction for the full model; runs truncated by the segment edges are
    included.
    """
    if classifier == "auto":
        classifier = "sign" if trajectory.kind == "reduced" else "argmax"
    if classifier == "sign":
        if trajectory.delta is None:
            raise ValueError("sign classifier needs a reduced trajectory")
        labels = (trajectory.delta > 0).astype(np.int8)
    elif classifier == "argmax":
        if trajectory.attractions is None:
            raise ValueError("argmax classifier needs a full trajectory")
        labels = trajectory.attractions.argmax(axis=2).astype(np.int8)
    else:
        raise ValueError(f"unknown classifier {classifier!r}")
    n_t, n_agents = labels.shape
    dwells = []
    for j in range(n_agents):
        col = labels[:, j]
        change = np.flatnonzero(col[1:] != col[:-1])
        edges = np.concatenate(([0], change + 1, [n_t]))
        dwells.append(np.diff(edges))
    return np.concatenate(dwells)


def average_return(trajectory: Trajectory, burn_in: int | None = None) -> float:
    """Mean score per agent-period, zeros included, after burn-in."""
    if burn_in is None:
        burn_in = trajectory.config.burn_in
    return float(trajectory.mean_score[burn_in:].mean())


@dataclass
class Hist2D:
    x_edges: np.ndarray
    y_edges: np.ndarray
    density: np.ndarray        # normalized to integrate to 1
    counts: np.ndarray
    marginal_x: np.ndarray     # normalized 1-D densities
    marginal_y: np.ndarray


def histogram2d(x, y, bins: int = 36,
                ranges=None) -> Hist2D:
    """Normalized 2-D histogram with marginals."""
    if bins < 2:
        raise ValueError("need at least 2 bins per axis")
    counts, xe, ye = np.histogram2d(np.asarray(x).ravel(),
                                    np.asarray(y).ravel(),
                                    bins=bins, range=ranges)
    area = np.outer(np.diff(xe), np.diff(ye))
    total = counts.sum()
    if total == 0:
        raise ValueError("no samples")
    density = counts / (total * area)
    marg_x = counts.sum(axis=1) / (total * np.diff(xe))
    marg_y = counts.sum(axis=0) / (total * np.diff(ye))
    return Hist2D(x_edges=xe, y_edges=ye, density=density, counts=counts,
                  marginal_x=marg_x, marginal_y=marg_y)


def _watershed(counts: np.ndarray):
    """Steepest-ascent basin decomposition of a 2-D histogram.

    Cells are processed from highest to lowest; each joins the basin of its
    largest higher 8-neighbor, otherwise it seeds a new peak.  Returns
    (peak cells, basin masses in counts, label grid, saddle matrix) where
    saddle[a, b] is the highest cell on the boundary between basins a and b.
    """
    nx, ny = counts.shape
    order = np.argsort(counts, axis=None)[::-1]
    label = np.full(counts.shape, -1, dtype=np.int64)
    peaks: list[tuple[int, int]] = []
    masses: list[float] = []
    boundary: dict[tuple[int, int], float] = {}
    for flat in order:
        i, j = divmod(int(flat), ny)
        if counts[i, j] == 0:
            break
        best = None
        best_val = counts[i, j]
        seen: set[int] = set()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                ii, jj = i + di, j + dj
                if 0 <= ii < nx and 0 <= jj < ny and label[ii, jj] >= 0:
                    seen.add(int(label[ii, jj]))
                    if counts[ii, jj] > best_val:
                        best_val = counts[ii, jj]
                        best = int(label[ii, jj])
        if best is None:
            label[i, j] = len(peaks)
            peaks.append((i, j))
            masses.append(float(counts[i, j]))
        else:
            label[i, j] = best
            masses[best] += float(counts[i, j])
            for other in seen:
                if other != best:
                    key = (min(best, other), max(best, other))
                    boundary.setdefault(key, float(counts[i, j]))
    return peaks, masses, label, boundary


def count_peaks_2d(hist: Hist2D, mass_floor: float = 0.02,
                   noise_sigmas: float = 4.0
                   ) -> list[tuple[float, float, float]]:
    """Histogram peaks carrying significant mass of their own.

    Kernel-free: 8-neighbor local maxima of the raw histogram define
    watershed basins; a peak whose height above its highest saddle is
    within noise_sigmas * sqrt(peak count) (Poisson scale) is merged into
    the neighboring basin, removing sampling-noise maxima without any
    bandwidth tuning.  A surviving peak is reported when the mass that
    belongs distinctly to it (its basin cells above the saddle toward the
    other peaks) reaches the floor; that keeps well-separated groups and
    discards shallow bumps riding on background, however wide their
    drainage area.  Returns (x_center, y_center, basin mass fraction),
    heaviest first.
    """
    counts = hist.counts
    total = counts.sum()
    peaks, masses, label, boundary = _watershed(counts)
    peak_h = [float(counts[p]) for p in peaks]
    alive = list(range(len(peaks)))
    members: dict[int, list[int]] = {p: [p] for p in alive}

    def saddle(a: int, b: int) -> float:
        return boundary.get((min(a, b), max(a, b)), -np.inf)

    merged = True
    while merged:
        merged = False
        for p in sorted(alive, key=lambda q: peak_h[q]):
            partners = [q for q in alive if q != p
                        and saddle(p, q) > -np.inf and peak_h[q] >= peak_h[p]]
            if not partners:
                continue
            q = max(partners, key=lambda t: saddle(p, t))
            prominence = peak_h[p] - saddle(p, q)
            if prominence < noise_sigmas * np.sqrt(max(peak_h[p], 1.0)):
                masses[q] += masses[p]
                members[q] += members.pop(p)
                alive.remove(p)
                for t in alive:
                    if t != q and saddle(p, t) > -np.inf:
                        key = (min(q, t), max(q, t))
                        boundary[key] = max(saddle(q, t), saddle(p, t))
                merged = True
                break

    xc = 0.5 * (hist.x_edges[:-1] + hist.x_edges[1:])
    yc = 0.5 * (hist.y_edges[:-1] + hist.y_edges[1:])
    out = []
    for p in alive:
        sad = max((saddle(p, q) for q in alive if q != p
                   and saddle(p, q) > -np.inf), default=0.0)
        basin = np.isin(label, members[p])
        own = float(counts[basin & (counts > sad)].sum()) / total
        if own >= mass_floor:
            i, j = peaks[p]
            out.append((float(xc[i]), float(yc[j]),
                        float(masses[p] / total)))
    return sorted(out, key=lambda t: -t[2])


def l1_distance(samples, grid: np.ndarray, density: np.ndarray,
                bins: int = 80) -> float:
    """L1 distance between a sample histogram and a grid density.

    The samples are binned over the grid's support; the reference density
    is evaluated at bin centers.  Returns integral |p_hat - p| dx, which is
    0 for identical and 2 for disjoint distributions.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) == 0:
        raise ValueError("no samples")
    counts, edges = np.histogram(x, bins=bins, range=(grid[0], grid[-1]))
    width = np.diff(edges)
    p_hat = counts / (len(x) * width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    p_ref = np.interp(centers, grid, density)
    outside = 1.0 - counts.sum() / len(x)
    return float(np.sum(np.abs(p_hat - p_ref) * width)) + outside


def count_modes_1d(counts: np.ndarray, mass_floor: float = 0.02) -> int:
    """Number of local maxima of a 1-D histogram with basin mass above the
    floor (basins split at the minima between peaks)."""
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("empty histogram")
    peak_idx = [i for i in range(len(c))
                if (i == 0 or c[i] > c[i - 1])
                and (i == len(c) - 1 or c[i] >= c[i + 1])
                and c[i] > 0]
    if not peak_idx:
        return 0
    boundaries = [0]
    for a, b in zip(peak_idx[:-1], peak_idx[1:]):
        boundaries.append(a + int(np.argmin(c[a:b + 1])))
    boundaries.append(len(c))
    n = 0
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        if c[lo:hi].sum() / total >= mass_floor:
            n += 1
    return n
