/** The two figure kinds rendered from harness outputs.
 *
 * convergence: one relative-error-vs-epochs curve per input trace CSV,
 * log-scale y by default.
 *
 * complexity: empirical epochs-to-target against batch size from a grid
 * CSV, the theoretical total-complexity curve on a secondary axis, a
 * vertical marker at the theoretical optimum and a horizontal marker at
 * the adaptive run's epoch count (both from the grid summary JSON).
 */

import * as fs from "node:fs";

import { column, parseCsv, requireColumns, Table } from "./csv.js";
import {
  HEIGHT,
  MARGIN,
  SERIES_COLORS,
  SvgDoc,
  WIDTH,
  drawAxes,
  drawLegend,
  drawSeriesLine,
  exact,
  linearScale,
  logScale,
} from "./svg.js";

export type FigureKind = "convergence" | "complexity";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  out: string;
  logScale: boolean;
  labels: string[];
  summaryPath?: string;
  force: boolean;
}

interface GridSummary {
  tau_star_theoretical: number;
  epochs_adaptive: number | null;
}

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function loadTable(path: string, needed: string[]): Table {
  const table = parseCsv(fs.readFileSync(path, "utf-8"), path);
  requireColumns(table, needed, path);
  if (table.rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return table;
}

export function plotConvergence(spec: FigureSpec): string {
  if (spec.inputs.length === 0) {
    throw new Error("convergence figure needs at least one trace CSV");
  }
  const series = spec.inputs.map((path) => {
    const table = loadTable(path, ["epoch", "rel_err"]);
    return { epochs: column(table, "epoch"), relErr: column(table, "rel_err"), path };
  });

  const { x0, x1, y0, y1 } = plotArea();
  const xMax = Math.max(...series.map((s) => Math.max(...s.epochs)));
  const positives = series.flatMap((s) => s.relErr.filter((v) => v > 0));
  const yMin = positives.length ? Math.min(...positives) : 1e-12;
  const yMax = Math.max(...series.flatMap((s) => s.relErr), yMin * 10);
  const xScale = linearScale(0, xMax, x0, x1);
  const yScale = spec.logScale
    ? logScale(yMin, yMax, y0, y1)
    : linearScale(0, yMax, y0, y1);

  const doc = new SvgDoc();
  drawAxes(doc, xScale, yScale, "epochs", "relative error");
  const labels: string[] = [];
  series.forEach((s, i) => {
    const label = spec.labels[i] ?? s.path.replace(/^.*\//, "");
    labels.push(label);
    drawSeriesLine(doc, label, s.epochs, s.relErr, xScale, yScale, SERIES_COLORS[i % SERIES_COLORS.length]);
  });
  drawLegend(doc, labels, labels.map((_, i) => SERIES_COLORS[i % SERIES_COLORS.length]));
  return doc.render();
}

export function plotComplexity(spec: FigureSpec): string {
  if (spec.inputs.length !== 1) {
    throw new Error("complexity figure takes exactly one grid CSV");
  }
  if (!spec.summaryPath) {
    throw new Error("complexity figure needs the grid summary JSON (--summary)");
  }
  const table = loadTable(spec.inputs[0], [
    "tau",
    "T_theory",
    "epochs_mean",
    "is_adaptive",
  ]);
  const summary = JSON.parse(fs.readFileSync(spec.summaryPath, "utf-8")) as GridSummary;

  const flags = column(table, "is_adaptive");
  const keep = (xs: number[]) => xs.filter((_, i) => flags[i] === 0);
  const taus = keep(column(table, "tau"));
  const epochs = keep(column(table, "epochs_mean"));
  const theory = keep(column(table, "T_theory"));

  const { x0, x1, y0, y1 } = plotArea();
  const xScale = linearScale(0, Math.max(...taus), x0, x1);
  const finite = epochs.filter(Number.isFinite);
  const adaptiveEpochs = summary.epochs_adaptive;
  const yTop = Math.max(...finite, adaptiveEpochs ?? 0) * 1.1;
  const yScale = spec.logScale
    ? logScale(Math.min(...finite.filter((v) => v > 0)), yTop, y0, y1)
    : linearScale(0, yTop, y0, y1);
  const tScale = linearScale(0, Math.max(...theory.filter(Number.isFinite)) * 1.1, y0, y1);

  const doc = new SvgDoc();
  drawAxes(doc, xScale, yScale, "batch size", "epochs to target", {
    yRight: tScale,
    yRightLabel: "theoretical total complexity",
  });

  drawSeriesLine(doc, "theory", taus, theory, xScale, tScale, SERIES_COLORS[1]);
  drawSeriesLine(doc, "empirical", taus, epochs, xScale, yScale, SERIES_COLORS[0], true);

  const tauStar = summary.tau_star_theoretical;
  doc.add(
    `<line class="marker-tau-star" data-x="${exact(tauStar)}" x1="${xScale(tauStar).toFixed(2)}" ` +
      `y1="${y0}" x2="${xScale(tauStar).toFixed(2)}" y2="${y1}" stroke="${SERIES_COLORS[2]}" stroke-dasharray="6 3"/>`,
  );
  if (adaptiveEpochs !== null && adaptiveEpochs !== undefined) {
    doc.add(
      `<line class="marker-adaptive" data-y="${exact(adaptiveEpochs)}" x1="${x0}" ` +
        `y1="${yScale(adaptiveEpochs).toFixed(2)}" x2="${x1}" y2="${yScale(adaptiveEpochs).toFixed(2)}" ` +
        `stroke="${SERIES_COLORS[3]}" stroke-dasharray="2 3"/>`,
    );
  }
  drawLegend(
    doc,
    ["empirical epochs", "theoretical T", "theoretical optimum", "adaptive epochs"],
    [SERIES_COLORS[0], SERIES_COLORS[1], SERIES_COLORS[2], SERIES_COLORS[3]],
  );
  return doc.render();
}

export function renderFigure(spec: FigureSpec): string {
  const svg = spec.kind === "convergence" ? plotConvergence(spec) : plotComplexity(spec);
  if (fs.existsSync(spec.out) && !spec.force) {
    throw new Error(`${spec.out} exists; pass --force to overwrite`);
  }
  fs.writeFileSync(spec.out, svg + "\n");
  return spec.out;
}
