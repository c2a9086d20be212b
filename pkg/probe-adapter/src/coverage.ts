/**
 * Coverage inputs: local density in a hashed embedding space plus source
 * rarity, matching the pipeline's desk-scale convention (density weight
 * 0.7, rarity weight 0.3, radius = median pairwise distance).
 */

import { bucketOf } from './hash.js';
import type { PoolRecord } from './types.js';

const DIM = 64;
const DENSITY_WEIGHT = 0.7;
const RARITY_WEIGHT = 0.3;

export function embed(text: string): Float64Array {
  const vector = new Float64Array(DIM);
  const tokens = text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
  for (const token of tokens) {
    const { index, sign } = bucketOf(token, DIM);
    vector[index] += sign;
  }
  let norm = 0;
  for (const value of vector) norm += value * value;
  norm = Math.sqrt(norm);
  if (norm > 0) for (let i = 0; i < DIM; i += 1) vector[i] /= norm;
  return vector;
}

function distance(a: Float64Array, b: Float64Array): number {
  let total = 0;
  for (let i = 0; i < DIM; i += 1) total += (a[i] - b[i]) ** 2;
  return Math.sqrt(total);
}

function densities(vectors: Float64Array[]): number[] {
  const n = vectors.length;
  if (n < 2) return vectors.map(() => 0);
  const dists: number[][] = [];
  const all: number[] = [];
  for (let i = 0; i < n; i += 1) {
    dists.push(new Array(n).fill(0));
  }
  for (let i = 0; i < n; i += 1) {
    for (let j = i + 1; j < n; j += 1) {
      const d = distance(vectors[i], vectors[j]);
      dists[i][j] = d;
      dists[j][i] = d;
      all.push(d);
    }
  }
  all.sort((a, b) => a - b);
  const mid = all.length % 2
    ? all[(all.length - 1) / 2]
    : (all[all.length / 2 - 1] + all[all.length / 2]) / 2;
  return dists.map((row, i) => {
    let neighbors = 0;
    for (let j = 0; j < n; j += 1) {
      if (j !== i && row[j] <= mid) neighbors += 1;
    }
    return neighbors / (n - 1);
  });
}

function visualToken(record: PoolRecord): string {
  const ref = record.modality === 'video' ? record.video_id : record.id;
  return `${record.modality} ${record.source} ${ref}`;
}

/** Coverage for every record of a pool, keyed by id. */
export function coverageById(records: PoolRecord[]): Map<string, number> {
  const textDensity = densities(records.map((r) => embed(`${r.question} ${r.answer}`)));
  const visionDensity = densities(records.map((r) => embed(visualToken(r))));
  const counts = new Map<string, number>();
  for (const record of records) {
    counts.set(record.source, (counts.get(record.source) ?? 0) + 1);
  }
  const out = new Map<string, number>();
  records.forEach((record, i) => {
    const local = 0.5 * (textDensity[i] + visionDensity[i]);
    const rarity = 1 - (counts.get(record.source) ?? 0) / records.length;
    out.set(record.id, DENSITY_WEIGHT * (1 - local) + RARITY_WEIGHT * rarity);
  });
  return out;
}
