/** Minimal deterministic SVG construction: linear/log scales, axes, series.
 *
 * Every data point is emitted with data-x / data-y attributes carrying the
 * exact values at 17 significant digits, so the series can be recovered
 * from the image byte-exactly; the drawn geometry is derived from them.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 70, top: 40, bottom: 55 };

export const SERIES_COLORS = ["#1f6fb2", "#d1495b", "#3f7d20", "#8d5a97", "#c77d1e", "#3a3a3a"];

export interface Scale {
  (v: number): number;
  ticks: number[];
}

export function exact(v: number): string {
  if (Number.isNaN(v)) return "nan";
  if (!Number.isFinite(v)) return v > 0 ? "inf" : "-inf";
  return v.toPrecision(17);
}

function pixel(v: number): string {
  return v.toFixed(2);
}

export function linearScale(min: number, max: number, lo: number, hi: number): Scale {
  if (max <= min) {
    max = min + 1;
  }
  const f = ((v: number) => lo + ((v - min) / (max - min)) * (hi - lo)) as Scale;
  const step = tickStep(min, max);
  const ticks: number[] = [];
  for (let t = Math.ceil(min / step) * step; t <= max + 1e-12 * Math.abs(max); t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  f.ticks = ticks;
  return f;
}

export function logScale(min: number, max: number, lo: number, hi: number): Scale {
  const safeMin = Math.max(min, 1e-300);
  const safeMax = Math.max(max, safeMin * 10);
  const lmin = Math.log10(safeMin);
  const lmax = Math.log10(safeMax);
  const f = ((v: number) => {
    const clamped = Math.max(v, 1e-300); // geometry only; data attrs stay exact
    return lo + ((Math.log10(clamped) - lmin) / (lmax - lmin)) * (hi - lo);
  }) as Scale;
  const ticks: number[] = [];
  for (let e = Math.ceil(lmin); e <= Math.floor(lmax); e++) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length < 2) {
    // no (or one) decade inside the range: label the endpoints instead
    ticks.length = 0;
    ticks.push(Number(safeMin.toPrecision(3)), Number(safeMax.toPrecision(3)));
  }
  f.ticks = ticks;
  return f;
}

function tickStep(min: number, max: number): number {
  const raw = (max - min) / 6;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
    return v.toExponential(0);
  }
  return String(Number(v.toPrecision(6)));
}

export class SvgDoc {
  private parts: string[] = [];

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  text(x: number, y: number, content: string, attrs = ""): void {
    this.add(`<text x="${pixel(x)}" y="${pixel(y)}" ${attrs}>${content}</text>`);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

export function drawAxes(
  doc: SvgDoc,
  xScale: Scale,
  yScale: Scale,
  xLabel: string,
  yLabel: string,
  opts: { yRight?: Scale; yRightLabel?: string } = {},
): void {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  doc.add(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  doc.add(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  for (const t of xScale.ticks) {
    const px = xScale(t);
    doc.add(`<line x1="${pixel(px)}" y1="${y0}" x2="${pixel(px)}" y2="${y0 + 5}" stroke="black"/>`);
    doc.text(px, y0 + 18, tickLabel(t), 'text-anchor="middle"');
  }
  for (const t of yScale.ticks) {
    const py = yScale(t);
    doc.add(`<line x1="${x0 - 5}" y1="${pixel(py)}" x2="${x0}" y2="${pixel(py)}" stroke="black"/>`);
    doc.text(x0 - 8, py + 4, tickLabel(t), 'text-anchor="end"');
  }
  doc.text((x0 + x1) / 2, HEIGHT - 12, xLabel, 'text-anchor="middle"');
  doc.text(16, (y0 + y1) / 2, yLabel, `text-anchor="middle" transform="rotate(-90 16 ${(y0 + y1) / 2})"`);
  if (opts.yRight) {
    doc.add(`<line x1="${x1}" y1="${y0}" x2="${x1}" y2="${y1}" stroke="black"/>`);
    for (const t of opts.yRight.ticks) {
      const py = opts.yRight(t);
      doc.add(`<line x1="${x1}" y1="${pixel(py)}" x2="${x1 + 5}" y2="${pixel(py)}" stroke="black"/>`);
      doc.text(x1 + 8, py + 4, tickLabel(t), 'text-anchor="start"');
    }
    if (opts.yRightLabel) {
      doc.text(WIDTH - 14, (y0 + y1) / 2, opts.yRightLabel,
        `text-anchor="middle" transform="rotate(90 ${WIDTH - 14} ${(y0 + y1) / 2})"`);
    }
  }
}

export function drawSeriesLine(
  doc: SvgDoc,
  name: string,
  xs: number[],
  ys: number[],
  xScale: Scale,
  yScale: Scale,
  color: string,
  withMarkers = false,
): void {
  const pts = xs.map((x, i) => `${pixel(xScale(x))},${pixel(yScale(ys[i]))}`).join(" ");
  doc.add(`<g class="series" data-name="${name}">`);
  doc.add(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
  for (let i = 0; i < xs.length; i++) {
    const r = withMarkers ? 3 : 1.2;
    doc.add(
      `<circle class="datum" data-x="${exact(xs[i])}" data-y="${exact(ys[i])}" ` +
        `cx="${pixel(xScale(xs[i]))}" cy="${pixel(yScale(ys[i]))}" r="${r}" fill="${color}"/>`,
    );
  }
  doc.add("</g>");
}

export function drawLegend(doc: SvgDoc, labels: string[], colors: string[]): void {
  const x = MARGIN.left + 12;
  let y = MARGIN.top + 8;
  for (let i = 0; i < labels.length; i++) {
    doc.add(`<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${colors[i]}" stroke-width="2"/>`);
    doc.text(x + 28, y + 4, labels[i]);
    y += 18;
  }
}
