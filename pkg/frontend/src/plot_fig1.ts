#!/usr/bin/env node
/**
 * plot_fig1 <bundle_dir> <out.png>
 *
 * Renders the four trajectory panels (g vs eta, one line per slope) from a
 * `figures fig1` bundle directory holding panel_a ... panel_d.
 */

import { existsSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import { pathToFileURL } from 'node:url';

import { drawChart, Series } from './chart.js';
import { PanelData, readPanelBundle } from './contracts.js';
import { Raster, seriesColor } from './raster.js';

const PANELS = ['a', 'b', 'c', 'd'] as const;

/**
 * Rebounding trajectories end in a steep spike; cap the y-range at a
 * multiple of the dip depth so the dip-and-turn structure stays visible.
 */
function panelYLimits(panel: PanelData): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of panel.series) {
    for (const v of s.trajectory.g) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (lo < 0 && hi > 25 * Math.abs(lo)) hi = 25 * Math.abs(lo);
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

export function renderFig1(bundleDir: string, width = 1200, height = 900): Buffer {
  const panels: PanelData[] = [];
  for (const p of PANELS) {
    const dir = join(bundleDir, `panel_${p}`);
    if (!existsSync(dir)) {
      throw new Error(`${bundleDir}: missing panel_${p}`);
    }
    panels.push(readPanelBundle(dir));
  }
  const r = new Raster(width, height);
  const w2 = width / 2;
  const h2 = height / 2;
  panels.forEach((panel, i) => {
    const rect = { x: (i % 2) * w2, y: Math.floor(i / 2) * h2, w: w2, h: h2 };
    const series: Series[] = panel.series.map((s, k) => ({
      x: s.trajectory.eta,
      y: s.trajectory.g,
      color: seriesColor(s.color, k),
      label: `G'(0) = ${s.slope}`,
    }));
    drawChart(r, rect, series, {
      title: `(${panel.panel.toUpperCase()})`,
      xLabel: 'ETA',
      yLabel: 'G',
      yLimits: panelYLimits(panel),
    });
  });
  return r.toPng();
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error('usage: plot_fig1 <bundle_dir> <out.png>');
    return 2;
  }
  const [bundleDir, outPath] = argv;
  let png: Buffer;
  try {
    png = renderFig1(bundleDir);
  } catch (err) {
    console.error(`plot_fig1: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  writeFileSync(outPath, png);
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
