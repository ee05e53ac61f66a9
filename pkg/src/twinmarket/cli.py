"""Command-line interface: simulation and analysis runs with reproducible
manifests and fixed-schema CSV outputs (documented in docs/formats.md).

Exit codes: 0 success, 2 usage or configuration error, 3 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .bifurcation import (beta_s_full, beta_s_reduced, envy_free_nash,
                          orange_endpoint_r0, return_curve,
                          steady_state_census)
from .config import ConfigError, config_hash, config_to_dict, load_config
from .fokker_planck import population_return, solve_self_consistent
from .seeds import GENERATOR_NAME
from .simulate import run_ensemble, run_full, run_reduced
from .stats import autocovariance, binder, binder_two_type, histogram2d

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _write_atomic(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: str, header: list[str], rows) -> int:
    lines = [",".join(header)]
    n = 0
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
        n += 1
    _write_atomic(path, "\n".join(lines) + "\n")
    return n


class _Outputs:
    """Collects written files and row counts for the manifest."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.files: list[dict] = []
        self.t0 = time.time()

    def csv(self, name: str, header: list[str], rows) -> str:
        path = os.path.join(self.out_dir, name)
        n = write_csv(path, header, rows)
        self.files.append({"name": name, "rows": n})
        return path

    def manifest(self, cfg_dict: dict, seeds):
        payload = {
            "config_hash": config_hash(cfg_dict),
            "config": cfg_dict,
            "seeds": seeds,
            "generator": GENERATOR_NAME,
            "version": __version__,
            "wall_clock_s": round(time.time() - self.t0, 3),
            "outputs": self.files,
        }
        _write_atomic(os.path.join(self.out_dir, "manifest.json"),
                      json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise SystemExit(f"error: {what} must be comma-separated numbers") \
            from None


def _parse_grid(text: str, what: str) -> list[float]:
    """Either 'lo:hi:step' or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise SystemExit(f"error: {what} grid must be lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        return list(np.arange(lo, hi + 0.5 * step, step))
    return _parse_floats(text, what)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    if args.runs < 1:
        raise SystemExit("error: --runs must be >= 1")
    out = _Outputs(args.out)
    kind = cfg.population.kind
    betas = _parse_floats(args.sweep_beta, "--sweep-beta") \
        if args.sweep_beta else None

    def one_ensemble(config):
        return run_ensemble(config, n_runs=args.runs, workers=args.workers)

    res = one_ensemble(cfg)
    window = res.window
    if kind == "reduced":
        rows = []
        for type_id, samples in sorted(res.pooled_delta.items()):
            per_run = len(samples) // args.runs
            for i, v in enumerate(samples):
                rows.append((i // per_run, type_id, v))
        out.csv("attraction_samples.csv", ["run", "type_id", "delta"], rows)
        b = binder_two_type(res.pooled_delta)
        lo = min(s.min() for s in res.pooled_delta.values())
        hi = max(s.max() for s in res.pooled_delta.values())
        edges = np.linspace(lo, hi, 81)
        hist_rows = []
        for type_id, samples in sorted(res.pooled_delta.items()):
            counts, _ = np.histogram(samples, bins=edges)
            dens = counts / (counts.sum() * np.diff(edges))
            hist_rows += [(type_id, edges[i], edges[i + 1], dens[i])
                          for i in range(len(dens))]
        out.csv("delta_hist.csv", ["type_id", "bin_lo", "bin_hi", "density"],
                hist_rows)
    else:
        proj = res.pooled_projections
        attr = res.pooled_attractions
        per_run = len(attr) // args.runs
        rows = ((i // per_run, *a, p[0], p[1])
                for i, (a, p) in enumerate(zip(attr, proj)))
        out.csv("attraction_samples.csv",
                ["run", "a_b1", "a_s1", "a_b2", "a_s2", "delta_bs", "delta_12"],
                rows)
        h = histogram2d(proj[:, 0], proj[:, 1], bins=args.bins)
        hist_rows = []
        for i in range(args.bins):
            for j in range(args.bins):
                hist_rows.append((h.x_edges[i], h.x_edges[i + 1],
                                  h.y_edges[j], h.y_edges[j + 1],
                                  h.density[i, j]))
        out.csv("hist2d.csv",
                ["x_lo", "x_hi", "y_lo", "y_hi", "density"], hist_rows)
        marg = []
        for i in range(args.bins):
            marg.append(("delta_bs", h.x_edges[i], h.x_edges[i + 1],
                         h.marginal_x[i]))
        for j in range(args.bins):
            marg.append(("delta_12", h.y_edges[j], h.y_edges[j + 1],
                         h.marginal_y[j]))
        out.csv("marginals.csv", ["axis", "bin_lo", "bin_hi", "density"], marg)
        b = binder(proj[:, 1])

    out.csv("returns.csv",
            ["run", "mean_return", "trades_market1", "trades_market2"],
            ((i, res.per_run_return[i], res.per_run_trades[i, 0],
              res.per_run_trades[i, 1]) for i in range(args.runs)))
    out.csv("summary.csv",
            ["n_runs", "window", "binder", "mean_return", "se_return"],
            [(args.runs, window, b, res.per_run_return.mean(),
              res.per_run_return.std(ddof=1) / np.sqrt(args.runs)
              if args.runs > 1 else 0.0)])

    if betas:
        from dataclasses import replace as _replace
        sweep_rows = []
        for bv in betas:
            from .params import LearningParams
            lp = LearningParams(beta=bv, r=cfg.learning.r,
                                alpha=cfg.learning.alpha)
            res_b = one_ensemble(_replace(cfg, learning=lp))
            bb = (binder_two_type(res_b.pooled_delta) if kind == "reduced"
                  else binder(res_b.pooled_projections[:, 1]))
            sweep_rows.append((bv, bb, res_b.per_run_return.mean()))
        out.csv("sweep.csv", ["beta", "binder", "mean_return"], sweep_rows)

    out.manifest(config_to_dict(cfg), res.seeds)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fp
# ---------------------------------------------------------------------------

def cmd_fp(args) -> int:
    cfg = load_config(args.config)
    beta = args.beta if args.beta is not None else cfg.learning.beta
    r = args.r if args.r is not None else cfg.learning.r
    init_d = tuple(_parse_floats(args.init_d, "--init-d"))
    if len(init_d) != 2:
        raise SystemExit("error: --init-d needs exactly two values")
    out = _Outputs(args.out)
    state = solve_self_consistent(cfg.markets, cfg.bidask,
                                  cfg.population.type_mix, beta=beta, r=r,
                                  init_d=init_d, damping=args.damping,
                                  tol=args.tol, max_iter=args.max_iter,
                                  keep_trace=True)
    d0, d1 = state.densities
    out.csv("density.csv", ["delta", "density_type1", "density_type2"],
            zip(d0.grid, d0.values, d1.values))
    ret = population_return(state, cfg.population.type_mix, beta,
                            cfg.markets, cfg.bidask)
    out.csv("state.csv",
            ["beta", "r", "converged", "iterations", "d1", "d2",
             "t_b1", "t_s1", "t_b2", "t_s2", "f_1", "f_2",
             "binder_type1", "binder_type2", "population_return"],
            [(beta, r, state.converged, state.iterations,
              state.d.d1, state.d.d2, state.t.t_b1, state.t.t_s1,
              state.t.t_b2, state.t.t_s2, *state.market_fractions,
              d0.binder(), d1.binder(), ret)])
    if not state.converged:
        out.csv("trace.csv", ["iteration", "d1", "d2", "t_diff"],
                ((row["iteration"], row["d1"], row["d2"], row["t_diff"])
                 for row in state.trace))
    out.manifest(config_to_dict(cfg), [cfg.seed])
    return EXIT_OK if state.converged else EXIT_NO_CONVERGENCE


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_threshold(args) -> int:
    cfg = load_config(args.config)
    out = _Outputs(args.out)
    if args.model == "reduced":
        bs = beta_s_reduced(cfg.markets, cfg.bidask, cfg.population.type_mix,
                            tol=args.tol)
    else:
        bs = beta_s_full(cfg.markets, cfg.bidask, tol=args.tol)
    out.csv("threshold.csv", ["model", "beta_s", "rel_tol"],
            [(args.model, bs, args.tol)])
    out.manifest(config_to_dict(cfg), [])
    return EXIT_OK


def cmd_census(args) -> int:
    cfg = load_config(args.config)
    out = _Outputs(args.out)
    tm = cfg.population.type_mix
    if args.r_grid or args.beta_grid:
        if not (args.r_grid and args.beta_grid):
            raise SystemExit("error: census grids need both --r-grid and "
                             "--beta-grid")
        r_grid = _parse_grid(args.r_grid, "--r-grid")
        beta_grid = _parse_grid(args.beta_grid, "--beta-grid")
        rows = []
        fold_r = float("nan")
        for r in r_grid:
            for bv in beta_grid:
                census = steady_state_census(cfg.markets, cfg.bidask, tm,
                                             beta=bv, r=r,
                                             method="multistart")
                seg = any(s.klass in ("S", "W") for s in census.solutions)
                rows.append((r, bv, census.count(), seg,
                             ";".join(census.classes())))
                if census.count() >= 3 and not (fold_r >= r):
                    fold_r = r
        out.csv("census_grid.csv",
                ["r", "beta", "n_solutions", "any_segregated", "classes"],
                rows)
        blue0 = beta_s_reduced(cfg.markets, cfg.bidask, tm)
        orange0 = orange_endpoint_r0(cfg.markets, cfg.bidask, tm)
        out.csv("boundaries.csv", ["kind", "r", "beta"],
                [("fold_max_r", fold_r, float("nan")),
                 ("blue_r0", 0.0, blue0),
                 ("orange_r0", 0.0, orange0)])
    else:
        if args.r is None or args.beta is None:
            raise SystemExit("error: census needs --r and --beta "
                             "(or both grids)")
        census = steady_state_census(cfg.markets, cfg.bidask, tm,
                                     beta=args.beta, r=args.r,
                                     method=args.method)
        rows = []
        for s in census.solutions:
            masses = ["|".join(f"{m:.6g}" for m in pm)
                      for pm in s.peak_masses]
            rows.append((s.d.d1, s.d.d2, s.klass, *masses))
        out.csv("census.csv",
                ["d1", "d2", "class", "peak_masses_type1",
                 "peak_masses_type2"], rows)
    out.manifest(config_to_dict(cfg), [])
    return EXIT_OK


def cmd_nash(args) -> int:
    cfg = load_config(args.config)
    out = _Outputs(args.out)
    sol = envy_free_nash(cfg.markets, cfg.bidask)
    out.csv("nash.csv",
            ["t_b1", "t_s1", "t_b2", "t_s2", "common_return", "consistent",
             "r_b1", "r_s1", "r_b2", "r_s2"],
            [(sol.t.t_b1, sol.t.t_s1, sol.t.t_b2, sol.t.t_s2,
              sol.common_return, sol.consistent, *sol.returns)])
    out.manifest(config_to_dict(cfg), [])
    return EXIT_OK


def cmd_returns(args) -> int:
    cfg = load_config(args.config)
    out = _Outputs(args.out)
    betas = _parse_grid(args.betas, "--betas")
    r_list = _parse_grid(args.r_list, "--r-list")
    rows = return_curve(cfg.markets, cfg.bidask, cfg.population.type_mix,
                        beta_grid=betas, r_list=r_list)
    out.csv("returns.csv",
            ["r", "beta", "population_return", "baseline_return",
             "nash_return", "binder", "converged"],
            ((row["r"], row["beta"], row["population_return"],
              row["baseline_return"], row["nash_return"], row["binder"],
              row["converged"]) for row in rows))
    out.manifest(config_to_dict(cfg), [])
    return EXIT_OK


def cmd_autocov(args) -> int:
    cfg = load_config(args.config)
    out = _Outputs(args.out)
    traj = run_reduced(cfg) if cfg.population.kind == "reduced" \
        else run_full(cfg)
    max_lag = args.max_lag or (len(traj.snapshot_periods) - 1)
    lags = np.unique(np.concatenate(
        [[0], np.round(np.logspace(0, np.log10(max(max_lag, 2)),
                                   args.n_lags)).astype(int)]))
    lags = lags[lags < len(traj.snapshot_periods)]
    curve = autocovariance(traj, lags, mode=args.mode)
    out.csv("autocov.csv", ["lag", "t_rescaled", "value", "mode"],
            zip(curve.lags, curve.t_rescaled, curve.values,
                [curve.mode] * len(curve.lags)))
    out.manifest(config_to_dict(cfg), [cfg.seed])
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twinmarket",
                                description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded ensemble")
    sim.add_argument("--config", required=True)
    sim.add_argument("--runs", type=int, default=1)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True)
    sim.add_argument("--bins", type=int, default=36)
    sim.add_argument("--sweep-beta", default=None,
                     help="comma list of betas for a sweep.csv")
    sim.add_argument("--workers", type=int,
                     default=int(os.environ.get("TWINMARKET_WORKERS", "1")))
    sim.set_defaults(fn=cmd_simulate)

    fp = sub.add_parser("fp", help="self-consistent stationary densities")
    fp.add_argument("--config", required=True)
    fp.add_argument("--beta", type=float, default=None)
    fp.add_argument("--r", type=float, default=None)
    fp.add_argument("--init-d", default="1,1")
    fp.add_argument("--damping", type=float, default=0.5)
    fp.add_argument("--tol", type=float, default=1e-6)
    fp.add_argument("--max-iter", type=int, default=500)
    fp.add_argument("--out", required=True)
    fp.set_defaults(fn=cmd_fp)

    an = sub.add_parser("analyze", help="steady-state analyses")
    an_sub = an.add_subparsers(dest="analysis", required=True)

    th = an_sub.add_parser("threshold")
    th.add_argument("--config", required=True)
    th.add_argument("--model", choices=["reduced", "full"], default="reduced")
    th.add_argument("--tol", type=float, default=1e-3)
    th.add_argument("--out", required=True)
    th.set_defaults(fn=cmd_threshold)

    ce = an_sub.add_parser("census")
    ce.add_argument("--config", required=True)
    ce.add_argument("--r", type=float, default=None)
    ce.add_argument("--beta", type=float, default=None)
    ce.add_argument("--r-grid", default=None)
    ce.add_argument("--beta-grid", default=None)
    ce.add_argument("--method", choices=["contour", "multistart"],
                    default="contour")
    ce.add_argument("--out", required=True)
    ce.set_defaults(fn=cmd_census)

    na = an_sub.add_parser("nash")
    na.add_argument("--config", required=True)
    na.add_argument("--out", required=True)
    na.set_defaults(fn=cmd_nash)

    rt = an_sub.add_parser("returns")
    rt.add_argument("--config", required=True)
    rt.add_argument("--betas", required=True)
    rt.add_argument("--r-list", required=True)
    rt.add_argument("--out", required=True)
    rt.set_defaults(fn=cmd_returns)

    ac = an_sub.add_parser("autocov")
    ac.add_argument("--config", required=True)
    ac.add_argument("--mode", choices=["central", "increment"],
                    default="central")
    ac.add_argument("--max-lag", type=int, default=None)
    ac.add_argument("--n-lags", type=int, default=40)
    ac.add_argument("--out", required=True)
    ac.set_defaults(fn=cmd_autocov)
    return p


def main(argv=None) -> int:
    warnings.filterwarnings("ignore", category=UserWarning)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_USAGE
        raise


if __name__ == "__main__":
    sys.exit(main())
