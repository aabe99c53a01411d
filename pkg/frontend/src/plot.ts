/** Deterministic SVG rendering of trajectory channels with envelope
 * overlays, from the analysis CSVs.  No numerical computation happens
 * here: envelope curves come from the precomputed CSV columns. */

import * as fs from "node:fs";
import * as path from "node:path";
import { readCsv, column, Table } from "./csv.js";
import { linearScale, logScale, formatTick, Scale } from "./scale.js";

export interface SeriesSpec {
  /** CSV column holding the values (x is always the `t` column). */
  column: string;
  label?: string;
  /** Envelope overlays are drawn dashed. */
  envelope?: boolean;
}

export interface PanelSpec {
  title?: string;
  series: SeriesSpec[];
  xLabel?: string;
  yLabel?: string;
  logY?: boolean;
  /** Clip values at this many times the largest non-envelope series
   * maximum so diverging envelopes stay on the page (default 1e6). */
  clipFactor?: number;
}

export interface PlotSpec {
  csv: string;
  panels: PanelSpec[];
  out: string;
  width?: number;
  height?: number;
}

const PALETTE = ["#1f6eb4", "#d9541e", "#2c8a4b", "#7a4fa3", "#9a6324"];
const MARGIN = { top: 34, right: 14, bottom: 42, left: 58 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function polyline(
  xs: number[],
  ys: number[],
  sx: Scale,
  sy: Scale,
  yLo: number,
  yHi: number,
): string {
  const pts: string[] = [];
  let pen = false;
  let d = "";
  for (let i = 0; i < xs.length; i++) {
    const y = ys[i];
    if (!Number.isFinite(y)) {
      pen = false;
      continue;
    }
    const yc = Math.min(Math.max(y, yLo), yHi);
    const px = sx(xs[i]).toFixed(2);
    const py = sy(yc).toFixed(2);
    d += `${pen ? "L" : "M"}${px},${py}`;
    pen = true;
  }
  void pts;
  return d;
}

function renderPanel(
  table: Table,
  spec: PanelSpec,
  x0: number,
  panelW: number,
  panelH: number,
  source: string,
): string {
  const t = column(table, "t", source);
  const series = spec.series.map((s) => ({
    spec: s,
    values: column(table, s.column, source),
  }));

  const plotW = panelW - MARGIN.left - MARGIN.right;
  const plotH = panelH - MARGIN.top - MARGIN.bottom;
  const xDomain: [number, number] = [Math.min(...t), Math.max(...t)];

  let yLo = Infinity;
  let yHi = -Infinity;
  let simMax = 0;
  for (const s of series) {
    for (const v of s.values) {
      if (!Number.isFinite(v)) continue;
      yLo = Math.min(yLo, v);
      yHi = Math.max(yHi, v);
      if (!s.spec.envelope) simMax = Math.max(simMax, Math.abs(v));
    }
  }
  if (!Number.isFinite(yLo)) {
    yLo = 0;
    yHi = 1;
  }
  const clip = (spec.clipFactor ?? 1e6) * Math.max(simMax, 1e-12);
  yHi = Math.min(yHi, clip);
  if (spec.logY) {
    yLo = Math.max(yLo, 1e-12);
    yHi = Math.max(yHi, yLo * 10);
  } else {
    const pad = 0.05 * (yHi - yLo || 1);
    yLo = Math.min(yLo, 0) - pad * 0;
    yHi = yHi + pad;
  }

  const sx = linearScale(xDomain, [x0 + MARGIN.left, x0 + MARGIN.left + plotW]);
  const sy = (spec.logY ? logScale : linearScale)(
    [yLo, yHi],
    [MARGIN.top + plotH, MARGIN.top],
  );

  const parts: string[] = [];
  parts.push(
    `<rect x="${x0 + MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
      `height="${plotH}" fill="none" stroke="#222" stroke-width="1"/>`,
  );
  for (const tick of sx.ticks()) {
    const px = sx(tick);
    parts.push(
      `<line x1="${px.toFixed(2)}" y1="${MARGIN.top}" x2="${px.toFixed(2)}" ` +
        `y2="${MARGIN.top + plotH}" stroke="#ddd" stroke-width="0.6"/>`,
      `<text x="${px.toFixed(2)}" y="${MARGIN.top + plotH + 16}" ` +
        `font-size="10" text-anchor="middle">${formatTick(tick)}</text>`,
    );
  }
  for (const tick of sy.ticks()) {
    const py = sy(tick);
    parts.push(
      `<line x1="${x0 + MARGIN.left}" y1="${py.toFixed(2)}" ` +
        `x2="${x0 + MARGIN.left + plotW}" y2="${py.toFixed(2)}" ` +
        `stroke="#ddd" stroke-width="0.6"/>`,
      `<text x="${x0 + MARGIN.left - 6}" y="${(py + 3).toFixed(2)}" ` +
        `font-size="10" text-anchor="end">${formatTick(tick)}</text>`,
    );
  }

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const dash = s.spec.envelope ? ' stroke-dasharray="6,4"' : "";
    const d = polyline(t, s.values, sx, sy, sy.domain[0], sy.domain[1]);
    parts.push(
      `<path d="${d}" fill="none" stroke="${color}" stroke-width="1.4"${dash}/>`,
    );
    const lx = x0 + MARGIN.left + 8;
    const ly = MARGIN.top + 14 + 14 * i;
    parts.push(
      `<line x1="${lx}" y1="${ly - 3}" x2="${lx + 18}" y2="${ly - 3}" ` +
        `stroke="${color}" stroke-width="1.4"${dash}/>`,
      `<text x="${lx + 22}" y="${ly}" font-size="10">` +
        `${esc(s.spec.label ?? s.spec.column)}</text>`,
    );
  });

  if (spec.title) {
    parts.push(
      `<text x="${x0 + MARGIN.left + plotW / 2}" y="${MARGIN.top - 12}" ` +
        `font-size="12" text-anchor="middle" font-weight="bold">` +
        `${esc(spec.title)}</text>`,
    );
  }
  parts.push(
    `<text x="${x0 + MARGIN.left + plotW / 2}" y="${MARGIN.top + plotH + 32}" ` +
      `font-size="11" text-anchor="middle">${esc(spec.xLabel ?? "t")}</text>`,
  );
  if (spec.yLabel) {
    const cy = MARGIN.top + plotH / 2;
    parts.push(
      `<text x="${x0 + 14}" y="${cy}" font-size="11" text-anchor="middle" ` +
        `transform="rotate(-90 ${x0 + 14} ${cy})">${esc(spec.yLabel)}</text>`,
    );
  }
  return parts.join("\n");
}

/** Render a plot spec to an SVG string. */
export function renderSvg(spec: PlotSpec): string {
  if (!spec.panels || spec.panels.length === 0) {
    throw new Error("plot spec declares no panels");
  }
  const table = readCsv(spec.csv);
  const source = path.basename(spec.csv);
  const panelW = Math.floor((spec.width ?? 480 * spec.panels.length) / spec.panels.length);
  const height = spec.height ?? 330;
  const body = spec.panels
    .map((p, i) => renderPanel(table, p, i * panelW, panelW, height, source))
    .join("\n");
  const width = panelW * spec.panels.length;
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}

/** Render and write the image file; returns the output path. */
export function render(spec: PlotSpec): string {
  const svg = renderSvg(spec);
  fs.mkdirSync(path.dirname(path.resolve(spec.out)), { recursive: true });
  fs.writeFileSync(spec.out, svg);
  return spec.out;
}

/** Built-in figure layouts for the bundled scenario outputs. */
export function normEnvelopeFigure(
  csv: string,
  out: string,
  logY = false,
): PlotSpec {
  return {
    csv,
    out,
    panels: [
      {
        title: "healthy aggregate",
        series: [
          { column: "chi_Pnorm", label: "|chi|_P" },
          { column: "env_chi", label: "bound", envelope: true },
        ],
        yLabel: "P-norm",
        logY,
      },
      {
        title: "malfunctioning subsystem",
        series: [
          { column: "xN_Pnorm", label: "|x_N|_P" },
          { column: "env_xN_int", label: "integral bound", envelope: true },
          { column: "env_xN_closed", label: "closed bound", envelope: true },
        ],
        yLabel: "P-norm",
        logY,
      },
    ],
  };
}

export function feedbackFigure(csv: string, out: string): PlotSpec {
  return {
    csv,
    out,
    panels: [
      {
        title: "feedback magnitude",
        series: [{ column: "K_chi_inf", label: "|K chi|_inf" }],
        yLabel: "input magnitude",
      },
    ],
  };
}
