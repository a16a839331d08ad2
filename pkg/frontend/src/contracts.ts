/**
 * Readers for the solver's file contracts.  This package never recomputes
 * solver mathematics: everything drawn comes verbatim from these files.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';

export interface Trajectory {
  eta: number[];
  g: number[];
  gp: number[];
  gpp: number[];
}

export interface NormHistory {
  t: number[];
  sobolev22: number[];
  energy?: number[];
}

export interface BundleSeries {
  slope: number;
  color: string;
  file: string;
  termination: string;
  trajectory: Trajectory;
}

export interface PanelData {
  panel: string;
  series: BundleSeries[];
}

export interface EvolveSummary {
  outcome: string;
  t_star_estimate: number | null;
  final_norm?: number;
}

function parseNumericCsv(text: string, header: string[], path: string): number[][] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) {
    throw new Error(`${path}: expected a header plus at least one data row`);
  }
  const got = lines[0].trim().split(',').map((s) => s.trim());
  for (let i = 0; i < header.length; i++) {
    if (got[i] !== header[i]) {
      throw new Error(`${path}: header ${lines[0]!} does not start with ${header.join(',')}`);
    }
  }
  const columns = got.length;
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const toks = lines[i].split(',');
    if (toks.length !== columns) {
      throw new Error(`${path}: row ${i} has ${toks.length} fields, expected ${columns}`);
    }
    const row = toks.map(Number);
    if (row.some((v) => Number.isNaN(v))) {
      throw new Error(`${path}: row ${i} holds a non-numeric value`);
    }
    rows.push(row);
  }
  return rows;
}

/** Trajectory CSV contract: header `eta,g,gp,gpp`, one row per step. */
export function readTrajectoryCsv(path: string): Trajectory {
  const rows = parseNumericCsv(readFileSync(path, 'utf8'), ['eta', 'g', 'gp', 'gpp'], path);
  return {
    eta: rows.map((r) => r[0]),
    g: rows.map((r) => r[1]),
    gp: rows.map((r) => r[2]),
    gpp: rows.map((r) => r[3]),
  };
}

/** Norm-history CSV contract: header `t,sobolev22[,energy]`. */
export function readNormHistoryCsv(path: string): NormHistory {
  const text = readFileSync(path, 'utf8');
  const withEnergy = text.trimStart().startsWith('t,sobolev22,energy');
  const rows = parseNumericCsv(text, withEnergy ? ['t', 'sobolev22', 'energy'] : ['t', 'sobolev22'], path);
  const out: NormHistory = {
    t: rows.map((r) => r[0]),
    sobolev22: rows.map((r) => r[1]),
  };
  if (withEnergy) out.energy = rows.map((r) => r[2]);
  return out;
}

/** One figure panel directory: summary.json plus its trajectory CSVs. */
export function readPanelBundle(panelDir: string): PanelData {
  const summaryPath = join(panelDir, 'summary.json');
  const summary = JSON.parse(readFileSync(summaryPath, 'utf8'));
  if (typeof summary.panel !== 'string' || !Array.isArray(summary.trajectories)) {
    throw new Error(`${summaryPath}: not a panel summary`);
  }
  const series: BundleSeries[] = [];
  for (const entry of summary.trajectories) {
    if (entry.error !== undefined) {
      throw new Error(`${summaryPath}: slope ${entry.slope} failed upstream: ${entry.error}`);
    }
    series.push({
      slope: entry.slope,
      color: entry.color ?? '',
      file: entry.file,
      termination: entry.termination,
      trajectory: readTrajectoryCsv(join(panelDir, entry.file)),
    });
  }
  if (series.length === 0) {
    throw new Error(`${summaryPath}: empty series list`);
  }
  return { panel: summary.panel, series };
}

/** Evolution run summary next to a norm-history file, when present. */
export function readEvolveSummary(path: string): EvolveSummary | null {
  let text: string;
  try {
    text = readFileSync(path, 'utf8');
  } catch {
    return null;
  }
  const data = JSON.parse(text);
  if (typeof data.outcome !== 'string') return null;
  return data as EvolveSummary;
}
