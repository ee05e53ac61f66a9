/** Steady-state regions in the (r, 1/beta) plane: solution count and
 * segregation flags from the census grid, boundary markers from
 * boundaries.csv, with the independent r -> 0 endpoints as empty circles. */

import { column, readCsv, requireColumns, textColumn } from "./csv";
import { Svg, extent, fmt, linearScale } from "./svg";
import { inPath, runFigure, Args } from "./cli";

const REGION_COLORS: Record<string, string> = {
  "unsegregated": "#c7d8ef",
  "segregated-single": "#f2b8b4",
  "three-solutions": "#f8e3a1",
};

export function cellRegime(nSolutions: number, segregated: boolean): string {
  if (nSolutions >= 3) return "three-solutions";
  return segregated ? "segregated-single" : "unsegregated";
}

export function renderFig10(gridPath: string, boundariesPath: string): string {
  const grid = readCsv(gridPath);
  requireColumns(grid, ["r", "beta", "n_solutions", "any_segregated"]);
  const r = column(grid, "r");
  const beta = column(grid, "beta");
  const n = column(grid, "n_solutions");
  const seg = textColumn(grid, "any_segregated").map((s) => s === "true");

  const bounds = readCsv(boundariesPath);
  requireColumns(bounds, ["kind", "r", "beta"]);
  const bKind = textColumn(bounds, "kind");
  const bR = column(bounds, "r");
  const bBeta = column(bounds, "beta");

  const invBeta = beta.map((b) => 1 / b);
  const left = 60;
  const top = 30;
  const w = 460;
  const h = 340;
  const svg = new Svg(left + w + 170, top + h + 60);
  const xs = linearScale(extent([0, ...r], 0.05), [left, left + w]);
  const ys = linearScale(extent([0, ...invBeta], 0.08), [top + h, top]);

  const rStep = uniqueStep(r);
  const bStep = uniqueStep(invBeta);
  for (let i = 0; i < r.length; i += 1) {
    const regime = cellRegime(n[i], seg[i]);
    const x = xs(r[i] - rStep / 2);
    const y = ys(invBeta[i] + bStep / 2);
    svg.rect(x, y, xs(r[i] + rStep / 2) - x, ys(invBeta[i] - bStep / 2) - y,
      REGION_COLORS[regime], `data-value="${fmt(n[i], 0)}"`);
  }

  for (let i = 0; i < bKind.length; i += 1) {
    if (bKind[i] === "blue_r0") {
      svg.circle(xs(0), ys(1 / bBeta[i]), 5, "none", "#1f4e9c");
    } else if (bKind[i] === "orange_r0") {
      svg.circle(xs(0), ys(1 / bBeta[i]), 5, "none", "#c96a00");
    } else if (bKind[i] === "fold_max_r" && Number.isFinite(bR[i])) {
      svg.line(xs(bR[i]), ys.range[0], xs(bR[i]), ys.range[1], "#c96a00",
        'stroke-dasharray="5,3"');
    }
  }

  const legend: Array<[string, string]> = [
    ["unsegregated", "one solution, unimodal"],
    ["segregated-single", "one solution, segregated"],
    ["three-solutions", "three solutions"],
  ];
  legend.forEach(([key, label], k) => {
    svg.rect(left + w + 16, top + 10 + 18 * k, 12, 12, REGION_COLORS[key]);
    svg.text(left + w + 32, top + 20 + 18 * k, label);
  });
  svg.text(left + w + 16, top + 80, "circles: independent");
  svg.text(left + w + 16, top + 94, "r → 0 endpoints");
  svg.axes(xs, ys, "forgetting rate", "inverse intensity of choice");
  return svg.render();
}

function uniqueStep(values: number[]): number {
  const u = [...new Set(values)].sort((a, b) => a - b);
  if (u.length < 2) return u[0] || 1;
  let step = Infinity;
  for (let i = 1; i < u.length; i += 1) step = Math.min(step, u[i] - u[i - 1]);
  return step;
}

if (require.main === module) {
  runFigure("fig10 --in CENSUS_DIR --out FILE.svg", (args: Args) =>
    renderFig10(inPath(args, 0, "census_grid.csv"),
                inPath(args, 0, "boundaries.csv")));
}
