/**
 * Pool file -> descriptor table, in the curation pipeline's wire format.
 *
 * The two row identities hold by construction: the loss gap is computed
 * from the two emitted losses and the difficulty term is the exponential
 * of the emitted visual loss. Rows are written in pool order regardless of
 * batch completion order, so output bytes are stable.
 */

import * as fs from 'node:fs';
import * as readline from 'node:readline';

import { DeterministicBackend } from './backends.js';
import { coverageById } from './coverage.js';
import { clipFlowMagnitude, frameDiversity, loadFrames } from './flow.js';
import { selfConsistency } from './text.js';
import {
  AdapterConfig,
  DescriptorRow,
  PoolRecord,
  PoolRecordSchema,
  ProbeBackend,
} from './types.js';

export interface ExtractionFailure {
  id: string;
  stage: string;
  message: string;
}

export interface ExtractionResult {
  rows: DescriptorRow[];
  failures: ExtractionFailure[];
  total: number;
}

export async function readPool(path: string): Promise<PoolRecord[]> {
  const records: PoolRecord[] = [];
  const seen = new Set<string>();
  const stream = readline.createInterface({
    input: fs.createReadStream(path, 'utf-8'),
    crlfDelay: Infinity,
  });
  let row = 0;
  for await (const line of stream) {
    row += 1;
    if (!line.trim()) continue;
    const parsed = PoolRecordSchema.safeParse(JSON.parse(line));
    if (!parsed.success) {
      throw new Error(`pool row ${row}: ${parsed.error.issues[0]?.message}`);
    }
    if (seen.has(parsed.data.id)) {
      throw new Error(`pool row ${row}: duplicate id ${parsed.data.id}`);
    }
    seen.add(parsed.data.id);
    records.push(parsed.data);
  }
  return records;
}

function motionInputs(
  record: PoolRecord,
  config: AdapterConfig,
  backend: ProbeBackend,
): { flow: number; diversity: number } {
  if (record.modality !== 'video') return { flow: 0, diversity: 0 };
  if (config.mediaDir) {
    const frames = loadFrames(config.mediaDir, record.video_id!, config.frameSampleRate);
    if (frames.length < 2) {
      throw new Error(`${record.video_id}: need at least 2 sampled frames`);
    }
    return { flow: clipFlowMagnitude(frames), diversity: frameDiversity(frames) };
  }
  if (backend instanceof DeterministicBackend) {
    return backend.mockFlow(record);
  }
  throw new Error(`${record.id}: no media directory and backend has no motion source`);
}

async function extractOne(
  record: PoolRecord,
  config: AdapterConfig,
  backend: ProbeBackend,
  coverage: Map<string, number>,
): Promise<DescriptorRow> {
  let stage = 'loss';
  try {
    const lossVideo = await backend.teacherForcedLoss(record, 'video');
    const lossBlind = await backend.teacherForcedLoss(record, 'blind');
    stage = 'temporal';
    const tnc =
      record.modality === 'video'
        ? Math.min(1, Math.max(0, await backend.temporalJudgment(record.question)))
        : 0;
    stage = 'decodes';
    const decodes = await backend.sampleAnswers(record, config.decodeCount, config.seed);
    const sc = selfConsistency(decodes);
    stage = 'motion';
    const { flow, diversity } = motionInputs(record, config, backend);
    return {
      id: record.id,
      m_flow: flow,
      m_vds: lossBlind - lossVideo,
      m_tnc: tnc,
      m_sc: sc,
      m_ppl: Math.exp(lossVideo),
      m_cov: coverage.get(record.id) ?? 0,
      loss_video: lossVideo,
      loss_blind: lossBlind,
      frame_diversity: diversity,
    };
  } catch (error) {
    throw { id: record.id, stage, message: String(error instanceof Error ? error.message : error) };
  }
}

export async function extractDescriptors(
  records: PoolRecord[],
  config: AdapterConfig,
  backend: ProbeBackend,
): Promise<ExtractionResult> {
  const coverage = coverageById(records);
  const rows: DescriptorRow[] = [];
  const failures: ExtractionFailure[] = [];
  for (let start = 0; start < records.length; start += config.batchSize) {
    const batch = records.slice(start, start + config.batchSize);
    const settled = await Promise.allSettled(
      batch.map((record) => extractOne(record, config, backend, coverage)),
    );
    for (const outcome of settled) {
      if (outcome.status === 'fulfilled') {
        rows.push(outcome.value);
      } else {
        failures.push(outcome.reason as ExtractionFailure);
      }
    }
  }
  const result = { rows, failures, total: records.length };
  if (records.length > 0 && failures.length / records.length > config.maxFailureFraction) {
    const detail = failures
      .slice(0, 5)
      .map((f) => `${f.id} (${f.stage}): ${f.message}`)
      .join('; ');
    throw new Error(
      `${failures.length}/${records.length} samples failed extraction: ${detail}`,
    );
  }
  return result;
}

export function writeRows(rows: DescriptorRow[], path: string): void {
  const lines = rows.map((row) => {
    const ordered: Record<string, unknown> = {};
    for (const key of Object.keys(row).sort()) ordered[key] = (row as any)[key];
    return JSON.stringify(ordered);
  });
  fs.writeFileSync(path, lines.join('\n') + (lines.length ? '\n' : ''));
}
