/** Attraction-projection density panel: central heatmap over
 * (delta_bs, delta_12) with the two marginal distributions, rendered from
 * simulate's hist2d.csv and marginals.csv. */

import { column, readCsv, requireColumns, textColumn } from "./csv";
import { Svg, extent, fmt, heatColor, linearScale } from "./svg";
import { inPath, runFigure, Args } from "./cli";

export function renderFig2(hist2dPath: string, marginalsPath: string): string {
  const hist = readCsv(hist2dPath);
  requireColumns(hist, ["x_lo", "x_hi", "y_lo", "y_hi", "density"]);
  const marg = readCsv(marginalsPath);
  requireColumns(marg, ["axis", "bin_lo", "bin_hi", "density"]);

  const xLo = column(hist, "x_lo");
  const xHi = column(hist, "x_hi");
  const yLo = column(hist, "y_lo");
  const yHi = column(hist, "y_hi");
  const dens = column(hist, "density");

  const left = 70;
  const top = 120;
  const size = 380;
  const mh = 80;
  const svg = new Svg(left + size + mh + 40, top + size + 50);

  const xs = linearScale(extent([...xLo, ...xHi]), [left, left + size]);
  const ys = linearScale(extent([...yLo, ...yHi]), [top + size, top]);
  const dMax = Math.max(...dens, 1e-300);

  for (let i = 0; i < dens.length; i += 1) {
    if (dens[i] <= 0) continue;
    const x = xs(xLo[i]);
    const w = xs(xHi[i]) - x;
    const y = ys(yHi[i]);
    const h = ys(yLo[i]) - y;
    svg.rect(x, y, w, h, heatColor(dens[i] / dMax),
      `data-value="${fmt(dens[i], 6)}"`);
  }
  svg.axes(xs, ys, "buy-sell attraction difference", "market attraction difference");

  const axis = textColumn(marg, "axis");
  const bLo = column(marg, "bin_lo");
  const bHi = column(marg, "bin_hi");
  const bDen = column(marg, "density");
  const topRows: number[] = [];
  const rightRows: number[] = [];
  axis.forEach((a, i) => (a === "delta_bs" ? topRows : rightRows).push(i));

  const topMax = Math.max(...topRows.map((i) => bDen[i]), 1e-300);
  for (const i of topRows) {
    const x = xs(bLo[i]);
    const w = xs(bHi[i]) - x;
    const h = (bDen[i] / topMax) * mh;
    svg.rect(x, top - 12 - h, w, h, "#7a9cc4", `data-value="${fmt(bDen[i], 6)}"`);
  }
  const rightMax = Math.max(...rightRows.map((i) => bDen[i]), 1e-300);
  for (const i of rightRows) {
    const y = ys(bHi[i]);
    const h = ys(bLo[i]) - y;
    const w = (bDen[i] / rightMax) * mh;
    svg.rect(left + size + 12, y, w, h, "#7a9cc4", `data-value="${fmt(bDen[i], 6)}"`);
  }
  svg.text(left, 20, "population density of attraction projections");
  return svg.render();
}

if (require.main === module) {
  runFigure("fig2 --in SIM_DIR --out FILE.svg", (args: Args) =>
    renderFig2(inPath(args, 0, "hist2d.csv"), inPath(args, 0, "marginals.csv")));
}
