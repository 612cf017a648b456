/** Command line entry point.
 *
 *   node dist/main.js --kind convergence --input a.csv --input b.csv \
 *       --labels adaptive,fixed --out fig.svg
 *   node dist/main.js --kind complexity --input grid.csv \
 *       --summary grid_summary.json --out fig.svg
 *
 * Flags: --kind {convergence,complexity}, --input (repeatable or comma
 * separated), --summary, --out, --labels, --linear, --force.
 */

import { FigureKind, FigureSpec, renderFigure } from "./figures.js";

export function parseArgs(argv: string[]): FigureSpec {
  const inputs: string[] = [];
  let kind: FigureKind | undefined;
  let out: string | undefined;
  let labels: string[] = [];
  let summaryPath: string | undefined;
  let logScale = true;
  let force = false;

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i++;
      if (i >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case "--kind": {
        const v = next();
        if (v !== "convergence" && v !== "complexity") {
          throw new Error(`--kind must be convergence or complexity, got ${v}`);
        }
        kind = v;
        break;
      }
      case "--input":
        inputs.push(...next().split(","));
        break;
      case "--summary":
        summaryPath = next();
        break;
      case "--out":
        out = next();
        break;
      case "--labels":
        labels = next().split(",");
        break;
      case "--linear":
        logScale = false;
        break;
      case "--force":
        force = true;
        break;
      default:
        throw new Error(`unknown flag ${arg}`);
    }
  }
  if (!kind) throw new Error("--kind is required");
  if (!out) throw new Error("--out is required");
  if (inputs.length === 0) throw new Error("--input is required");
  return { kind, inputs, out, labels, summaryPath, logScale, force };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const path = renderFigure(spec);
    console.log(path);
    return 0;
  } catch (err) {
    console.error(`figure: error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
