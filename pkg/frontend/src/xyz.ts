/** Parser for simple "x y z" per-line point cloud text files. */

import type { Point3 } from "./types";

export function parseXyz(text: string): Point3[] {
  const points: Point3[] = [];
  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const fields = line.split(/\s+/);
    if (fields.length < 3) {
      throw new Error(`line ${i + 1}: expected "x y z"`);
    }
    const p = fields.slice(0, 3).map(Number) as Point3;
    if (p.some((v) => !Number.isFinite(v))) {
      throw new Error(`line ${i + 1}: non-numeric coordinate`);
    }
    points.push(p);
  }
  if (points.length === 0) {
    throw new Error("no points in file");
  }
  return points;
}
