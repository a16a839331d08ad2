/** Line-chart drawing: linear/log scales, nice ticks, axes, legend. */

import { BLACK, Color, GREY, LIGHT_GREY, Raster } from './raster.js';

export interface Series {
  x: number[];
  y: number[];
  color: Color;
  label: string;
}

export interface ChartOptions {
  title?: string;
  xLabel?: string;
  yLabel?: string;
  logY?: boolean;
  yLimits?: [number, number];
  hLine?: { y: number; label: string };
  vLine?: { x: number; label: string };
  note?: string;
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** Round tick step to the 1/2/5 ladder. */
export function niceStep(span: number, maxTicks: number): number {
  const raw = span / Math.max(1, maxTicks);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

export function linearTicks(lo: number, hi: number, maxTicks = 6): number[] {
  if (!(hi > lo)) return [lo];
  const step = niceStep(hi - lo, maxTicks);
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  return ticks;
}

export function decadeTicks(lo: number, hi: number, maxTicks = 8): number[] {
  const a = Math.ceil(Math.log10(lo) - 1e-9);
  const b = Math.floor(Math.log10(hi) + 1e-9);
  const stride = Math.max(1, Math.ceil((b - a + 1) / maxTicks));
  const ticks: number[] = [];
  for (let k = a; k <= b; k += stride) ticks.push(Math.pow(10, k));
  return ticks.length ? ticks : [lo];
}

export function formatTick(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(0).replace('e+', 'e').toUpperCase();
  }
  const s = v.toPrecision(3);
  return String(Number(s));
}

function finiteRange(values: number[], positiveOnly: boolean): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (positiveOnly && v <= 0) continue;
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  if (lo === Infinity) {
    return positiveOnly ? [1e-16, 1] : [0, 1];
  }
  if (lo === hi) {
    return positiveOnly ? [lo / 10, hi * 10] : [lo - 1, hi + 1];
  }
  return [lo, hi];
}

/** Draw one chart into the given sub-rectangle of the raster. */
export function drawChart(r: Raster, rect: Rect, series: Series[], opts: ChartOptions = {}) {
  const margin = { left: 62, right: 12, top: opts.title ? 26 : 12, bottom: 40 };
  const plot: Rect = {
    x: rect.x + margin.left,
    y: rect.y + margin.top,
    w: rect.w - margin.left - margin.right,
    h: rect.h - margin.top - margin.bottom,
  };

  const allX = series.flatMap((s) => s.x);
  const allY = series.flatMap((s) => s.y);
  const [xLo, xHi] = finiteRange(allX, false);
  let [yLo, yHi] = opts.yLimits ?? finiteRange(allY, Boolean(opts.logY));
  if (opts.hLine) {
    yLo = Math.min(yLo, opts.hLine.y);
    yHi = Math.max(yHi, opts.hLine.y);
  }
  if (opts.logY) {
    yLo = Math.max(yLo, 1e-300);
    yHi = Math.max(yHi, yLo * 10);
  } else if (!opts.yLimits) {
    const pad = 0.05 * (yHi - yLo);
    yLo -= pad;
    yHi += pad;
  }

  const sx = (v: number) => plot.x + ((v - xLo) / (xHi - xLo)) * plot.w;
  const sy = (v: number) => {
    if (opts.logY) {
      const t = (Math.log10(v) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo));
      return plot.y + plot.h - t * plot.h;
    }
    return plot.y + plot.h - ((v - yLo) / (yHi - yLo)) * plot.h;
  };

  // frame and grid
  const xTicks = linearTicks(xLo, xHi);
  const yTicks = opts.logY ? decadeTicks(yLo, yHi) : linearTicks(yLo, yHi);
  for (const t of xTicks) {
    r.line(sx(t), plot.y, sx(t), plot.y + plot.h, LIGHT_GREY, 1);
  }
  for (const t of yTicks) {
    r.line(plot.x, sy(t), plot.x + plot.w, sy(t), LIGHT_GREY, 1);
  }
  r.fillRect(plot.x, plot.y, plot.x + plot.w, plot.y + 1, GREY);
  r.fillRect(plot.x, plot.y + plot.h, plot.x + plot.w, plot.y + plot.h + 1, BLACK);
  r.fillRect(plot.x, plot.y, plot.x + 1, plot.y + plot.h, BLACK);
  r.fillRect(plot.x + plot.w, plot.y, plot.x + plot.w + 1, plot.y + plot.h, GREY);

  for (const t of xTicks) {
    r.line(sx(t), plot.y + plot.h, sx(t), plot.y + plot.h + 4, BLACK, 1);
    r.text(sx(t), plot.y + plot.h + 8, formatTick(t), BLACK, 8, 'center');
  }
  for (const t of yTicks) {
    r.line(plot.x - 4, sy(t), plot.x, sy(t), BLACK, 1);
    r.text(plot.x - 6, sy(t) - 4, formatTick(t), BLACK, 8, 'right');
  }

  if (opts.title) {
    r.text(rect.x + rect.w / 2, rect.y + 6, opts.title, BLACK, 11, 'center');
  }
  if (opts.xLabel) {
    r.text(plot.x + plot.w / 2, rect.y + rect.h - 14, opts.xLabel, BLACK, 9, 'center');
  }
  if (opts.yLabel) {
    r.text(rect.x + 6, plot.y - 4, opts.yLabel, BLACK, 9);
  }

  // clip y values into range; log axis clips nonpositive values to the floor
  const clipY = (v: number) => {
    if (opts.logY && v <= 0) return yLo;
    return Math.min(yHi, Math.max(yLo, v));
  };

  for (const s of series) {
    const xs = s.x.map(sx);
    const ys = s.y.map((v) => sy(clipY(v)));
    r.polyline(xs, ys, s.color, 1.6);
  }

  if (opts.hLine) {
    const y = sy(clipY(opts.hLine.y));
    r.dashedLine(plot.x, y, plot.x + plot.w, y, BLACK, 8, 1);
    r.text(plot.x + plot.w - 4, y - 12, opts.hLine.label, BLACK, 8, 'right');
  }
  if (opts.vLine) {
    const x = sx(Math.min(xHi, Math.max(xLo, opts.vLine.x)));
    r.dashedLine(x, plot.y, x, plot.y + plot.h, GREY, 8, 1);
    r.text(x + 3, plot.y + 4, opts.vLine.label, BLACK, 8);
  }

  // legend, top-right inside the plot
  const legendW = Math.max(...series.map((s) => r.textWidth(s.label, 8))) + 26;
  let ly = plot.y + 6;
  const lx = plot.x + plot.w - legendW - 6;
  for (const s of series) {
    r.line(lx, ly + 4, lx + 14, ly + 4, s.color, 2);
    r.text(lx + 18, ly, s.label, BLACK, 8);
    ly += 13;
  }

  if (opts.note) {
    r.text(plot.x + 4, plot.y + plot.h - 12, opts.note, GREY, 8);
  }
}
