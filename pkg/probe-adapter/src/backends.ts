/**
 * Probe backends.
 *
 * `DeterministicBackend` needs no model: losses and decodes come from
 * keyed hashes, so extraction runs end-to-end in CI and produces identical
 * tables on every run. `HttpBackend` drives an OpenAI-compatible serving
 * endpoint hosting a vision-language model; teacher-forced losses come
 * from echoed completion logprobs and the temporal judgment from a fixed
 * yes/no template mapped to the model's normalized choice probability.
 */

import { unit } from './hash.js';
import type { PoolRecord, ProbeBackend } from './types.js';

const TEMPORAL_KEYWORDS = [
  'after', 'before', 'then', 'while', 'during', 'until', 'first', 'last',
  'next', 'earlier', 'later', 'eventually', 'finally', 'begin', 'begins',
  'start', 'starts', 'end', 'ends', 'happen', 'happens', 'happened',
  'change', 'changes', 'changed', 'order', 'sequence', 'when',
  'how long', 'how many times',
];

export class DeterministicBackend implements ProbeBackend {
  constructor(private readonly seed: number = 0) {}

  async teacherForcedLoss(record: PoolRecord, condition: 'video' | 'blind'): Promise<number> {
    const visual = 0.3 + 3.0 * unit(record.id, this.seed, 'loss');
    if (condition === 'video') return visual;
    const gap = -0.5 + 2.0 * unit(record.id, this.seed, 'gap');
    return Math.max(0, visual + gap);
  }

  async sampleAnswers(record: PoolRecord, n: number, seed: number): Promise<string[]> {
    const tokens = record.answer.toLowerCase().split(/\s+/).filter(Boolean);
    const base = tokens.length ? tokens : ['answer'];
    const stability = unit(record.id, this.seed, 'stability');
    const keepP = 0.35 + 0.6 * stability;
    const decodes: string[] = [];
    for (let i = 0; i < n; i += 1) {
      const kept = base.filter((_, j) => unit(record.id, this.seed, seed, 'keep', i, j) < keepP);
      if (kept.length === 0) kept.push(base[0]);
      if (unit(record.id, this.seed, seed, 'extra', i) > 0.5 + 0.5 * stability) {
        kept.push(`alt${Math.floor(unit(record.id, this.seed, seed, 'alt', i) * 7)}`);
      }
      decodes.push(kept.join(' '));
    }
    return decodes;
  }

  async temporalJudgment(question: string): Promise<number> {
    const text = ` ${question.toLowerCase().replace(/\?/g, ' ').replace(/\s+/g, ' ').trim()} `;
    const hits = TEMPORAL_KEYWORDS.filter((k) => text.includes(` ${k} `)).length;
    if (hits === 0) return 0.1;
    return Math.min(1, 0.1 + 0.45 + 0.15 * (hits - 1));
  }

  /** Hash-derived motion stats for records without media. */
  mockFlow(record: PoolRecord): { flow: number; diversity: number } {
    if (record.modality !== 'video') return { flow: 0, diversity: 0 };
    return {
      flow: 6.0 * unit(record.id, this.seed, 'flow'),
      diversity: 30.0 * unit(record.id, this.seed, 'fdiv'),
    };
  }
}

const TEMPORAL_PROMPT = `Does answering the following question require temporal reasoning
(ordering, change, duration, or cross-frame comparison) rather than a
single-frame lookup? Answer with exactly one word, yes or no.

Question: {question}
Answer:`;

interface CompletionClient {
  (url: string, body: unknown): Promise<any>;
}

const defaultClient: CompletionClient = async (url, body) => {
  const response = await fetch(url, {
    method: 'POST',
    headers: { 'content-type': 'application/json' },
    body: JSON.stringify(body),
  });
  if (!response.ok) {
    throw new Error(`${url} responded ${response.status}`);
  }
  return response.json();
};

export interface HttpBackendOptions {
  baseUrl: string;
  model: string;
  temperature: number;
  client?: CompletionClient;
}

export class HttpBackend implements ProbeBackend {
  private readonly client: CompletionClient;

  constructor(private readonly options: HttpBackendOptions) {
    this.client = options.client ?? defaultClient;
  }

  private prompt(record: PoolRecord, condition: 'video' | 'blind'): string {
    const media =
      condition === 'blind'
        ? '(no visual input)'
        : record.modality === 'video'
          ? `<video:${record.video_id}>`
          : `<image:${record.id}>`;
    return `${media}\nQuestion: ${record.question}\nAnswer: `;
  }

  /** Mean NLL (nats) of the answer tokens under teacher forcing. */
  async teacherForcedLoss(record: PoolRecord, condition: 'video' | 'blind'): Promise<number> {
    const prompt = this.prompt(record, condition);
    const data = await this.client(`${this.options.baseUrl}/v1/completions`, {
      model: this.options.model,
      prompt: prompt + record.answer,
      max_tokens: 0,
      echo: true,
      logprobs: 0,
    });
    const lp = data.choices[0].logprobs;
    const offsets: number[] = lp.text_offset;
    const tokenLogprobs: (number | null)[] = lp.token_logprobs;
    let total = 0;
    let count = 0;
    for (let i = 0; i < offsets.length; i += 1) {
      if (offsets[i] >= prompt.length && tokenLogprobs[i] !== null) {
        total += -tokenLogprobs[i]!;
        count += 1;
      }
    }
    if (count === 0) throw new Error(`no answer tokens scored for ${record.id}`);
    return Math.max(0, total / count);
  }

  async sampleAnswers(record: PoolRecord, n: number, seed: number): Promise<string[]> {
    const data = await this.client(`${this.options.baseUrl}/v1/chat/completions`, {
      model: this.options.model,
      messages: [{ role: 'user', content: this.prompt(record, 'video') + '?' }],
      n,
      temperature: this.options.temperature,
      seed,
    });
    return data.choices.map((choice: any) => String(choice.message.content ?? ''));
  }

  async temporalJudgment(question: string): Promise<number> {
    const data = await this.client(`${this.options.baseUrl}/v1/completions`, {
      model: this.options.model,
      prompt: TEMPORAL_PROMPT.replace('{question}', question),
      max_tokens: 1,
      temperature: 0,
      logprobs: 5,
    });
    const top = data.choices[0].logprobs?.top_logprobs?.[0] ?? {};
    let yes = -Infinity;
    let no = -Infinity;
    for (const [token, logprob] of Object.entries(top)) {
      const clean = token.trim().toLowerCase();
      if (clean === 'yes') yes = Math.max(yes, Number(logprob));
      if (clean === 'no') no = Math.max(no, Number(logprob));
    }
    if (yes === -Infinity && no === -Infinity) return 0.5;
    const pYes = Math.exp(yes);
    const pNo = Math.exp(no);
    return pYes / (pYes + pNo);
  }
}
