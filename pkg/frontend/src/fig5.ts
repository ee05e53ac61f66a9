/** Binder cumulant against intensity of choice: one theory curve per
 * forgetting rate from analyze-returns output, with an optional simulation
 * overlay from a simulate beta sweep. */

import { existsSync } from "node:fs";

import { column, readCsv, requireColumns } from "./csv";
import { SERIES_COLORS, Svg, extent, fmt, linearScale } from "./svg";
import { inPath, runFigure, Args } from "./cli";

export function renderFig5(returnsPath: string, sweepPath?: string): string {
  const table = readCsv(returnsPath);
  requireColumns(table, ["r", "beta", "binder"]);
  const r = column(table, "r");
  const beta = column(table, "beta");
  const binder = column(table, "binder");

  const left = 60;
  const top = 30;
  const w = 480;
  const h = 330;
  const svg = new Svg(left + w + 30, top + h + 60);
  const xs = linearScale(extent(beta, 0.03), [left, left + w]);
  const ys = linearScale([0, 0.7], [top + h, top]);

  const rValues = [...new Set(r)].sort((a, b) => a - b);
  rValues.forEach((rv, k) => {
    const idx = r.map((v, i) => [v, i] as const).filter(([v]) => v === rv)
      .map(([, i]) => i).sort((a, b) => beta[a] - beta[b]);
    svg.polyline(idx.map((i) => [xs(beta[i]), ys(binder[i])] as [number, number]),
      SERIES_COLORS[k % SERIES_COLORS.length], 'stroke-width="1.6"');
    svg.text(left + 10, top + 14 + 14 * k, `r = ${fmt(rv, 3)}`,
      `fill="${SERIES_COLORS[k % SERIES_COLORS.length]}"`);
  });

  if (sweepPath && existsSync(sweepPath)) {
    const sweep = readCsv(sweepPath);
    requireColumns(sweep, ["beta", "binder"]);
    const sb = column(sweep, "beta");
    const sv = column(sweep, "binder");
    sb.forEach((b, i) => svg.circle(xs(b), ys(sv[i]), 3, "none", "black"));
    svg.text(left + 10, top + 14 + 14 * rValues.length,
      "circles: simulation", 'fill="black"');
  }
  svg.axes(xs, ys, "intensity of choice", "Binder cumulant");
  return svg.render();
}

if (require.main === module) {
  runFigure("fig5 --in RETURNS_DIR [--in SIM_SWEEP_DIR] --out FILE.svg",
    (args: Args) => renderFig5(
      inPath(args, 0, "returns.csv"),
      args.inputs.length > 1 ? inPath(args, 1, "sweep.csv") : undefined));
}
