/** Stationary densities of the relative market attraction: theory curves
 * from fp's density.csv overlaid with simulation histograms from
 * simulate's delta_hist.csv. */

import { column, readCsv, requireColumns } from "./csv";
import { SERIES_COLORS, Svg, extent, linearScale } from "./svg";
import { inPath, runFigure, Args } from "./cli";

export function renderFig4(densityPath: string, histPath: string): string {
  const theory = readCsv(densityPath);
  requireColumns(theory, ["delta", "density_type1", "density_type2"]);
  const sim = readCsv(histPath);
  requireColumns(sim, ["type_id", "bin_lo", "bin_hi", "density"]);

  const delta = column(theory, "delta");
  const curves = [column(theory, "density_type1"),
                  column(theory, "density_type2")];
  const typeId = column(sim, "type_id");
  const lo = column(sim, "bin_lo");
  const hi = column(sim, "bin_hi");
  const den = column(sim, "density");

  const left = 60;
  const top = 40;
  const w = 480;
  const h = 320;
  const svg = new Svg(left + w + 30, top + h + 60);
  const xs = linearScale(extent([...lo, ...hi]), [left, left + w]);
  const yMax = Math.max(...curves[0], ...curves[1], ...den, 1e-300);
  const ys = linearScale([0, 1.05 * yMax], [top + h, top]);

  for (const t of [0, 1]) {
    const steps: Array<[number, number]> = [];
    for (let i = 0; i < typeId.length; i += 1) {
      if (typeId[i] !== t) continue;
      steps.push([xs(lo[i]), ys(den[i])], [xs(hi[i]), ys(den[i])]);
    }
    if (steps.length) {
      svg.polyline(steps, SERIES_COLORS[t], 'stroke-width="1" stroke-dasharray="3,2"');
    }
    svg.polyline(delta.map((d, i) => [xs(d), ys(curves[t][i])] as [number, number]),
      SERIES_COLORS[t], 'stroke-width="1.6"');
    svg.text(left + w - 150, top + 14 + 14 * t,
      `type ${t + 1}: theory (solid), simulation (dashed)`,
      `fill="${SERIES_COLORS[t]}"`);
  }
  svg.axes(xs, ys, "relative market attraction", "density");
  return svg.render();
}

if (require.main === module) {
  runFigure("fig4 --in FP_DIR --in SIM_DIR --out FILE.svg", (args: Args) =>
    renderFig4(inPath(args, 0, "density.csv"), inPath(args, 1, "delta_hist.csv")));
}
