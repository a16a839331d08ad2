#!/usr/bin/env node
/**
 * plot_norms <norms.csv> <out.png> [summary.json]
 *
 * Log-scale W22 norm history of an evolution run.  When the sibling (or
 * given) run summary flags a blow-up, the cap level and the estimated
 * singular time are drawn as dashed lines.  Zero norms are clipped to the
 * bottom of the log axis and annotated.
 */

import { writeFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { pathToFileURL } from 'node:url';

import { ChartOptions, drawChart } from './chart.js';
import { readEvolveSummary, readNormHistoryCsv } from './contracts.js';
import { Raster, SERIES_COLORS } from './raster.js';

export function renderNorms(csvPath: string, summaryPath?: string,
                            width = 900, height = 600): Buffer {
  const history = readNormHistoryCsv(csvPath);
  const summary = readEvolveSummary(summaryPath ?? join(dirname(csvPath), 'summary.json'));

  const clipped = history.sobolev22.some((v) => v <= 0);
  const opts: ChartOptions = {
    title: summary ? `OUTCOME: ${summary.outcome.toUpperCase()}` : 'NORM HISTORY',
    xLabel: 'T',
    yLabel: 'W2,2 NORM',
    logY: true,
  };
  if (clipped) {
    opts.note = 'ZERO VALUES CLIPPED ON LOG AXIS';
  }
  if (summary?.outcome === 'BlowUp') {
    const finite = history.sobolev22.filter(Number.isFinite);
    const cap = finite.length ? Math.max(...finite) : 1;
    opts.hLine = { y: cap, label: 'BLOW-UP CAP' };
    if (summary.t_star_estimate != null && Number.isFinite(summary.t_star_estimate)) {
      opts.vLine = { x: summary.t_star_estimate, label: 'T* EST' };
    }
  }

  const r = new Raster(width, height);
  drawChart(r, { x: 0, y: 0, w: width, h: height }, [{
    x: history.t,
    y: history.sobolev22,
    color: SERIES_COLORS.blue,
    label: 'W2,2 NORM',
  }], opts);
  return r.toPng();
}

export function main(argv: string[]): number {
  if (argv.length < 2 || argv.length > 3) {
    console.error('usage: plot_norms <norms.csv> <out.png> [summary.json]');
    return 2;
  }
  const [csvPath, outPath, summaryPath] = argv;
  let png: Buffer;
  try {
    png = renderNorms(csvPath, summaryPath);
  } catch (err) {
    console.error(`plot_norms: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  writeFileSync(outPath, png);
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
