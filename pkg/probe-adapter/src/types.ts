import { z } from 'zod';

/** One line of a pool file, as the curation pipeline defines it. */
export const PoolRecordSchema = z
  .object({
    id: z.string().min(1),
    modality: z.enum(['video', 'image']),
    source: z.string().min(1),
    question: z.string().min(1),
    answer: z.string().min(1),
    video_id: z.string().min(1).optional(),
    duration_s: z.number().nonnegative().optional(),
    frame_count: z.number().int().positive().optional(),
    strata: z.record(z.string()).optional(),
    descriptors: z.record(z.number()).optional(),
    quality_score: z.number().optional(),
  })
  .strict()
  .refine(
    (r) =>
      r.modality === 'video'
        ? r.video_id !== undefined && r.duration_s !== undefined && r.frame_count !== undefined
        : r.video_id === undefined && r.duration_s === undefined && r.frame_count === undefined,
    { message: 'video records need video_id/duration_s/frame_count; image records must omit them' },
  );

export type PoolRecord = z.infer<typeof PoolRecordSchema>;

/** One line of a descriptor table: exactly the fields the pipeline ingests. */
export const DescriptorRowSchema = z
  .object({
    id: z.string().min(1),
    m_flow: z.number().nonnegative(),
    m_vds: z.number(),
    m_tnc: z.number().min(0).max(1),
    m_sc: z.number().min(0).max(1),
    m_ppl: z.number().positive(),
    m_cov: z.number(),
    loss_video: z.number().nonnegative(),
    loss_blind: z.number().nonnegative(),
    frame_diversity: z.number().nonnegative(),
  })
  .strict();

export type DescriptorRow = z.infer<typeof DescriptorRowSchema>;

export const DESCRIPTOR_FIELDS = [
  'id',
  'm_flow',
  'm_vds',
  'm_tnc',
  'm_sc',
  'm_ppl',
  'm_cov',
  'loss_video',
  'loss_blind',
  'frame_diversity',
] as const;

/** Extractor configuration. Self-consistency needs at least two decodes. */
export const AdapterConfigSchema = z.object({
  model: z.string().min(1),
  decodeCount: z.number().int().min(2),
  temperature: z.number().min(0).max(2).default(0.7),
  frameSampleRate: z.number().int().min(1).default(1),
  batchSize: z.number().int().min(1).default(8),
  seed: z.number().int().default(0),
  mediaDir: z.string().optional(),
  outputPath: z.string().min(1),
  maxFailureFraction: z.number().min(0).max(1).default(0.1),
});

export type AdapterConfig = z.infer<typeof AdapterConfigSchema>;

/** What the extractor needs from a probe model. */
export interface ProbeBackend {
  /** Teacher-forced answer loss in nats, visual- or blind-conditioned. */
  teacherForcedLoss(record: PoolRecord, condition: 'video' | 'blind'): Promise<number>;
  /** n stochastic decodes of the answer. */
  sampleAnswers(record: PoolRecord, n: number, seed: number): Promise<string[]>;
  /** Probability in [0, 1] that the question needs temporal reasoning. */
  temporalJudgment(question: string): Promise<number>;
}
