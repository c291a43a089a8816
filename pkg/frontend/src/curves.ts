/**
 * Parsing and validation of sweep outputs.
 *
 * curves.csv rows are (gamma, curve_id, re, im, type) sorted by
 * (curve_id, gamma); events.json is an array of event records; the
 * optional sweep_meta.json sidecar declares the sweep range the gamma
 * values must stay inside.  Raw field strings are kept verbatim so the
 * figure can carry them unmodified.
 */

import { readFileSync, existsSync } from "node:fs";
import { dirname, join } from "node:path";
import Papa from "papaparse";

export interface CurveRow {
  gamma: number;
  curveId: number;
  re: number;
  im: number;
  type: number;
  /** verbatim field strings, in header order */
  raw: [string, string, string, string, string];
}

export interface EventRecord {
  kind: string;
  gamma_located: number;
  location: { re: number; im: number };
  bracket: [number, number];
  types_after: [number, number] | null;
  confidence?: string;
}

export interface SweepMeta {
  gamma_min: number;
  gamma_max: number;
  gamma_star?: number;
  config_hash?: string;
  version?: string;
}

export interface CurveFile {
  rows: CurveRow[];
  byCurve: Map<number, CurveRow[]>;
  meta: SweepMeta | null;
}

const COLUMNS = ["gamma", "curve_id", "re", "im", "type"] as const;

export function parseCurves(path: string): CurveFile {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`malformed curve file ${path}: ${parsed.errors[0].message}`);
  }
  const data = parsed.data;
  const header = data[0];
  for (const col of COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`curve file ${path} is missing the '${col}' column`);
    }
  }
  const idx = COLUMNS.map((c) => header.indexOf(c));
  const rows: CurveRow[] = data.slice(1).map((fields, r) => {
    const raw = idx.map((i) => fields[i]) as CurveRow["raw"];
    const row: CurveRow = {
      gamma: Number(raw[0]),
      curveId: Number(raw[1]),
      re: Number(raw[2]),
      im: Number(raw[3]),
      type: Number(raw[4]),
      raw,
    };
    if ([row.gamma, row.curveId, row.re, row.im, row.type].some(Number.isNaN)) {
      throw new Error(`curve file ${path}: unreadable numeric fields on data row ${r + 1}`);
    }
    return row;
  });

  const byCurve = new Map<number, CurveRow[]>();
  for (const row of rows) {
    let bucket = byCurve.get(row.curveId);
    if (!bucket) {
      bucket = [];
      byCurve.set(row.curveId, bucket);
    }
    bucket.push(row);
  }
  // rows must arrive sorted by (curve_id, gamma)
  let last: CurveRow | null = null;
  for (const row of rows) {
    if (
      last &&
      (row.curveId < last.curveId ||
        (row.curveId === last.curveId && row.gamma < last.gamma))
    ) {
      throw new Error(`curve file ${path}: rows not sorted by (curve_id, gamma)`);
    }
    last = row;
  }

  const meta = readSidecar(path);
  if (meta) {
    for (const row of rows) {
      if (row.gamma < meta.gamma_min - 1e-12 || row.gamma > meta.gamma_max + 1e-12) {
        throw new Error(
          `curve file ${path}: gamma ${row.gamma} outside the sweep range ` +
            `[${meta.gamma_min}, ${meta.gamma_max}] declared by the sidecar`,
        );
      }
    }
  }
  return { rows, byCurve, meta };
}

function readSidecar(curvesPath: string): SweepMeta | null {
  const sidecar = join(dirname(curvesPath), "sweep_meta.json");
  if (!existsSync(sidecar)) return null;
  return JSON.parse(readFileSync(sidecar, "utf8")) as SweepMeta;
}

export function parseEvents(path: string): EventRecord[] {
  const doc = JSON.parse(readFileSync(path, "utf8"));
  if (!Array.isArray(doc)) {
    throw new Error(`event file ${path} must be a JSON array`);
  }
  for (const ev of doc) {
    for (const field of ["kind", "gamma_located", "location", "bracket"]) {
      if (!(field in ev)) {
        throw new Error(`event file ${path}: record missing '${field}'`);
      }
    }
  }
  return doc as EventRecord[];
}

/**
 * Color keys that give the two members of a conjugate pair one color.
 *
 * Partnership is a per-sample property (curves can exchange partners at
 * collisions), so each not-yet-keyed curve is paired at its first
 * nonreal sample with the closest conjugate-mirror value there; curves
 * that stay real keep their own id.
 */
export function conjugateColorKeys(file: CurveFile): Map<number, number> {
  const ids = [...file.byCurve.keys()].sort((a, b) => a - b);
  const keys = new Map<number, number>();
  for (const id of ids) {
    if (keys.has(id)) continue;
    const rows = file.byCurve.get(id)!;
    const scale = 1 + Math.max(...rows.map((r) => Math.hypot(r.re, r.im)));
    const s = rows.findIndex((r) => Math.abs(r.im) > 1e-8 * scale);
    if (s < 0) {
      keys.set(id, id);
      continue;
    }
    let partner = id;
    let best = Infinity;
    for (const other of ids) {
      if (other === id || keys.has(other)) continue;
      const orow = file.byCurve.get(other)![s];
      if (!orow) continue;
      const d = Math.hypot(orow.re - rows[s].re, orow.im + rows[s].im);
      if (d < best) {
        best = d;
        partner = other;
      }
    }
    if (best > 1e-6 * scale) partner = id; // no genuine mirror found
    keys.set(id, Math.min(id, partner));
    keys.set(partner, Math.min(id, partner));
  }
  return keys;
}
