/** Hand-rolled SVG building: scales, axes, marks. No timestamps, no
 * randomness — identical inputs render byte-identical documents. */

export function fmt(x: number, digits = 3): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(digits);
  return s === "-0.000" ? "0.000" : s;
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function extent(values: number[], pad = 0.0): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  const p = (hi - lo || 1) * pad;
  return [lo - p, hi + p];
}

export function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) out.push(Math.round(v / s) * s);
  return out;
}

/** Blue-to-red ramp over [0, 1] used by the density panels. */
export function heatColor(t: number): string {
  const u = Math.max(0, Math.min(1, t));
  const r = Math.round(255 * Math.min(1, 2 * u));
  const b = Math.round(255 * Math.min(1, 2 * (1 - u)));
  const g = Math.round(90 * (1 - Math.abs(2 * u - 1)));
  return `rgb(${r},${g},${b})`;
}

export class Svg {
  private parts: string[] = [];
  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
        `height="${height}" viewBox="0 0 ${width} ${height}" ` +
        `font-family="Helvetica,Arial,sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(tag: string): void {
    this.parts.push(tag);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, extra = ""): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `fill="${fill}"${extra ? " " + extra : ""}/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, extra = ""): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}"${extra ? " " + extra : ""}/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke: string, extra = ""): void {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${d}" fill="none" stroke="${stroke}"${extra ? " " + extra : ""}/>`,
    );
  }

  text(x: number, y: number, s: string, extra = ""): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="11"${extra ? " " + extra : ""}>${s}</text>`,
    );
  }

  axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string): void {
    const [x0, x1] = xs.range;
    const [y0, y1] = ys.range;
    this.line(x0, y0, x1, y0, "black");
    this.line(x0, y0, x0, y1, "black");
    for (const t of ticks(xs.domain[0], xs.domain[1])) {
      const px = xs(t);
      this.line(px, y0, px, y0 + 4, "black");
      this.text(px, y0 + 16, fmt(t, 2), 'text-anchor="middle"');
    }
    for (const t of ticks(ys.domain[0], ys.domain[1])) {
      const py = ys(t);
      this.line(x0 - 4, py, x0, py, "black");
      this.text(x0 - 6, py + 4, fmt(t, 2), 'text-anchor="end"');
    }
    this.text((x0 + x1) / 2, y0 + 32, xLabel, 'text-anchor="middle"');
    this.text(x0 - 38, (y0 + y1) / 2, yLabel,
      `text-anchor="middle" transform="rotate(-90 ${fmt(x0 - 38)} ${fmt((y0 + y1) / 2)})"`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export const SERIES_COLORS = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];
