/** Steady-state population returns against intensity of choice for each
 * forgetting rate, with the unsegregated branch (dashed) and the
 * equal-return benchmark (dotted) from analyze-returns output. */

import { column, readCsv, requireColumns } from "./csv";
import { SERIES_COLORS, Svg, extent, fmt, linearScale } from "./svg";
import { inPath, runFigure, Args } from "./cli";

export function renderFig6(returnsPath: string): string {
  const table = readCsv(returnsPath);
  requireColumns(table, ["r", "beta", "population_return", "baseline_return",
                         "nash_return"]);
  const r = column(table, "r");
  const beta = column(table, "beta");
  const ret = column(table, "population_return");
  const base = column(table, "baseline_return");
  const nash = column(table, "nash_return");

  const left = 60;
  const top = 30;
  const w = 480;
  const h = 330;
  const svg = new Svg(left + w + 30, top + h + 60);
  const xs = linearScale(extent(beta, 0.03), [left, left + w]);
  const ys = linearScale(extent([...ret, ...base, ...nash], 0.08),
    [top + h, top]);

  const order = beta.map((b, i) => i).sort((a, b) => beta[a] - beta[b]);
  svg.polyline(order.map((i) => [xs(beta[i]), ys(base[i])] as [number, number]),
    "black", 'stroke-width="1.2" stroke-dasharray="6,3"');
  svg.line(xs(xs.domain[0]), ys(nash[0]), xs(xs.domain[1]), ys(nash[0]),
    "black", 'stroke-dasharray="2,3"');

  const rValues = [...new Set(r)].sort((a, b) => b - a);
  rValues.forEach((rv, k) => {
    const idx = r.map((v, i) => [v, i] as const).filter(([v]) => v === rv)
      .map(([, i]) => i).sort((a, b) => beta[a] - beta[b]);
    const color = SERIES_COLORS[k % SERIES_COLORS.length];
    svg.polyline(idx.map((i) => [xs(beta[i]), ys(ret[i])] as [number, number]),
      color, 'stroke-width="1.6"');
    idx.forEach((i) => svg.circle(xs(beta[i]), ys(ret[i]), 2.4, color));
    svg.text(left + 10, top + 14 + 14 * k, `r = ${fmt(rv, 3)}`, `fill="${color}"`);
  });
  svg.text(left + 10, top + 14 + 14 * rValues.length,
    "dashed: unsegregated branch; dotted: equal-return benchmark");
  svg.axes(xs, ys, "intensity of choice", "average return");
  return svg.render();
}

if (require.main === module) {
  runFigure("fig6 --in RETURNS_DIR --out FILE.svg", (args: Args) =>
    renderFig6(inPath(args, 0, "returns.csv")));
}
