/**
 * Descriptor-table validation: field presence and types, value ranges, and
 * the two row-wise identities (loss gap, exponential loss). An empty table
 * passes with a zero-row warning.
 */

import * as fs from 'node:fs';

import { DescriptorRowSchema } from './types.js';

export interface CheckResult {
  rows: number;
  errors: string[];
  warnings: string[];
}

const REL_TOL = 1e-9;

function close(a: number, b: number): boolean {
  return Math.abs(a - b) <= Math.max(REL_TOL * Math.max(Math.abs(a), Math.abs(b)), 1e-12);
}

export function schemaCheck(path: string): CheckResult {
  const result: CheckResult = { rows: 0, errors: [], warnings: [] };
  if (!fs.existsSync(path)) {
    result.errors.push(`file not found: ${path}`);
    return result;
  }
  const seen = new Set<string>();
  const lines = fs.readFileSync(path, 'utf-8').split('\n');
  lines.forEach((line, index) => {
    if (!line.trim()) return;
    const rowNo = index + 1;
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch (error) {
      result.errors.push(`row ${rowNo}: invalid JSON (${String(error)})`);
      return;
    }
    const checked = DescriptorRowSchema.safeParse(parsed);
    if (!checked.success) {
      const issue = checked.error.issues[0];
      result.errors.push(
        `row ${rowNo}: ${issue ? `${issue.path.join('.')}: ${issue.message}` : 'invalid'}`,
      );
      return;
    }
    const row = checked.data;
    if (seen.has(row.id)) {
      result.errors.push(`row ${rowNo}: duplicate id ${row.id}`);
      return;
    }
    seen.add(row.id);
    if (!close(row.m_vds, row.loss_blind - row.loss_video)) {
      result.errors.push(
        `row ${rowNo} (${row.id}): m_vds=${row.m_vds} != loss_blind - loss_video=` +
          `${row.loss_blind - row.loss_video}`,
      );
      return;
    }
    if (!close(row.m_ppl, Math.exp(row.loss_video))) {
      result.errors.push(
        `row ${rowNo} (${row.id}): m_ppl=${row.m_ppl} != exp(loss_video)=` +
          `${Math.exp(row.loss_video)}`,
      );
      return;
    }
    result.rows += 1;
  });
  if (result.rows === 0 && result.errors.length === 0) {
    result.warnings.push('table has zero rows');
  }
  return result;
}
