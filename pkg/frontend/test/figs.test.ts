import assert from "node:assert/strict";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { SchemaError, parseCsv, column } from "../src/csv";
import { renderFig2 } from "../src/fig2";
import { renderFig4 } from "../src/fig4";
import { renderFig5 } from "../src/fig5";
import { renderFig6 } from "../src/fig6";
import { cellRegime, renderFig10 } from "../src/fig10";
import { heatColor, linearScale, ticks } from "../src/svg";

const dir = mkdtempSync(join(tmpdir(), "figs-"));

function fixture(name: string, text: string): string {
  const path = join(dir, name);
  writeFileSync(path, text);
  return path;
}

const HIST2D = fixture("hist2d.csv", [
  "x_lo,x_hi,y_lo,y_hi,density",
  "-1,0,-1,0,0.125",
  "0,1,-1,0,0.25",
  "-1,0,0,1,0.375",
  "0,1,0,1,0.25",
].join("\n") + "\n");

const MARGINALS = fixture("marginals.csv", [
  "axis,bin_lo,bin_hi,density",
  "delta_bs,-1,0,0.5",
  "delta_bs,0,1,0.5",
  "delta_12,-1,0,0.375",
  "delta_12,0,1,0.625",
].join("\n") + "\n");

const DENSITY = fixture("density.csv", [
  "delta,density_type1,density_type2",
  "-1,0.1,0.6",
  "0,0.5,0.5",
  "1,0.6,0.1",
].join("\n") + "\n");

const DELTA_HIST = fixture("delta_hist.csv", [
  "type_id,bin_lo,bin_hi,density",
  "0,-1,0,0.45",
  "0,0,1,0.55",
  "1,-1,0,0.55",
  "1,0,1,0.45",
].join("\n") + "\n");

const RETURNS = fixture("returns.csv", [
  "r,beta,population_return,baseline_return,nash_return,binder,converged",
  "0.1,1,0.61,0.615,0.567,0.05,true",
  "0.1,4,0.55,0.54,0.567,0.35,true",
  "0.1,8,0.62,0.45,0.567,0.55,true",
  "0.05,1,0.6,0.615,0.567,0.03,true",
  "0.05,4,0.5,0.54,0.567,0.45,true",
  "0.05,8,0.63,0.45,0.567,0.6,true",
].join("\n") + "\n");

const SWEEP = fixture("sweep.csv", [
  "beta,binder,mean_return",
  "2,0.08,0.6",
  "6,0.5,0.58",
].join("\n") + "\n");

const CENSUS_GRID = fixture("census_grid.csv", [
  "r,beta,n_solutions,any_segregated,classes",
  "0.02,5,3,true,S;W;W",
  "0.02,10,3,true,S;W;W",
  "0.06,5,1,true,S",
  "0.06,10,1,true,S",
  "0.02,1,1,false,U",
  "0.06,1,1,false,U",
].join("\n") + "\n");

const BOUNDARIES = fixture("boundaries.csv", [
  "kind,r,beta",
  "fold_max_r,0.053,nan",
  "blue_r0,0,3.55",
  "orange_r0,0,3.25",
].join("\n") + "\n");

test("csv parsing rejects ragged rows and missing columns", () => {
  assert.throws(() => parseCsv("a,b\n1\n"), SchemaError);
  const t = parseCsv("a,b\n1,2\n");
  assert.deepEqual(column(t, "b"), [2]);
  assert.throws(() => column(t, "miss"), /missing column 'miss'/);
});

test("svg helpers are plain math", () => {
  const s = linearScale([0, 10], [100, 200]);
  assert.equal(s(5), 150);
  assert.ok(ticks(0, 1).length >= 3);
  assert.equal(heatColor(0), "rgb(0,0,255)");
  assert.equal(heatColor(1), "rgb(255,0,0)");
});

test("fig2 renders deterministically with verbatim cell values", () => {
  const a = renderFig2(HIST2D, MARGINALS);
  const b = renderFig2(HIST2D, MARGINALS);
  assert.equal(a, b);
  assert.ok(a.startsWith("<svg"));
  assert.ok(a.includes('data-value="0.375000"'));
  assert.ok(a.trimEnd().endsWith("</svg>"));
});

test("fig2 names a missing column", () => {
  const bad = fixture("bad_hist.csv", "x_lo,x_hi,y_lo,density\n0,1,0,1\n");
  assert.throws(() => renderFig2(bad, MARGINALS), /missing column 'y_hi'/);
});

test("fig4 overlays theory and simulation", () => {
  const out = renderFig4(DENSITY, DELTA_HIST);
  assert.ok(out.includes("polyline"));
  assert.ok(out.includes("theory (solid)"));
  assert.equal(out, renderFig4(DENSITY, DELTA_HIST));
});

test("fig5 draws one curve per forgetting rate plus sim overlay", () => {
  const out = renderFig5(RETURNS, SWEEP);
  assert.ok(out.includes("r = 0.050"));
  assert.ok(out.includes("r = 0.100"));
  assert.ok(out.includes("circles: simulation"));
  const without = renderFig5(RETURNS);
  assert.ok(!without.includes("circles: simulation"));
});

test("fig6 shows baseline and benchmark", () => {
  const out = renderFig6(RETURNS);
  assert.ok(out.includes("unsegregated branch"));
  assert.equal(out, renderFig6(RETURNS));
});

test("fig10 regime mapping and rendering", () => {
  assert.equal(cellRegime(3, true), "three-solutions");
  assert.equal(cellRegime(1, true), "segregated-single");
  assert.equal(cellRegime(1, false), "unsegregated");
  const out = renderFig10(CENSUS_GRID, BOUNDARIES);
  assert.ok(out.includes("three solutions"));
  assert.ok(out.includes("circle"));
  assert.equal(out, renderFig10(CENSUS_GRID, BOUNDARIES));
});
