#!/usr/bin/env node
/**
 * CLI: extract descriptor tables from a pool, or validate an existing one.
 * Flag names mirror the curation pipeline's `gdo` commands.
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { DeterministicBackend, HttpBackend } from './backends.js';
import { extractDescriptors, readPool, writeRows } from './extract.js';
import { schemaCheck } from './schemaCheck.js';
import { AdapterConfigSchema, ProbeBackend } from './types.js';

async function runExtract(argv: any): Promise<void> {
  const config = AdapterConfigSchema.parse({
    model: argv.model,
    decodeCount: argv.n,
    temperature: argv.temperature,
    frameSampleRate: argv.frameSampleRate,
    batchSize: argv.batchSize,
    seed: argv.seed,
    mediaDir: argv.mediaDir,
    outputPath: argv.out,
    maxFailureFraction: argv.maxFailureFraction,
  });
  let backend: ProbeBackend;
  if (argv.backend === 'http') {
    if (!argv.baseUrl) throw new Error('--base-url is required with --backend http');
    backend = new HttpBackend({
      baseUrl: argv.baseUrl,
      model: config.model,
      temperature: config.temperature,
    });
  } else {
    backend = new DeterministicBackend(config.seed);
  }
  const records = await readPool(argv.pool);
  const result = await extractDescriptors(records, config, backend);
  writeRows(result.rows, config.outputPath);
  for (const failure of result.failures) {
    console.error(`skip ${failure.id} (${failure.stage}): ${failure.message}`);
  }
  console.log(
    `wrote ${result.rows.length}/${result.total} rows to ${config.outputPath}` +
      (result.failures.length ? `, ${result.failures.length} skipped` : ''),
  );
}

function runSchemaCheck(argv: any): void {
  const result = schemaCheck(argv.file);
  for (const warning of result.warnings) console.warn(`warning: ${warning}`);
  for (const error of result.errors) console.error(error);
  if (result.errors.length > 0) {
    console.error(`FAIL: ${result.errors.length} errors over ${result.rows} valid rows`);
    process.exit(1);
  }
  console.log(`PASS: ${result.rows} rows`);
}

const parser = yargs(hideBin(process.argv))
  .scriptName('probe-adapter')
  .command(
    'extract',
    'compute a descriptor table for a pool file',
    (cmd) =>
      cmd
        .option('pool', { type: 'string', demandOption: true, describe: 'pool JSONL file' })
        .option('out', { type: 'string', demandOption: true, describe: 'output table path' })
        .option('backend', { choices: ['mock', 'http'] as const, default: 'mock' })
        .option('model', { type: 'string', default: 'deterministic-probe' })
        .option('base-url', { type: 'string', describe: 'OpenAI-compatible endpoint' })
        .option('n', { type: 'number', default: 5, describe: 'decode count (>= 2)' })
        .option('temperature', { type: 'number', default: 0.7 })
        .option('seed', { type: 'number', default: 0 })
        .option('media-dir', { type: 'string', describe: 'PGM frames per video_id' })
        .option('frame-sample-rate', { type: 'number', default: 1 })
        .option('batch-size', { type: 'number', default: 8 })
        .option('max-failure-fraction', { type: 'number', default: 0.1 }),
    (argv) =>
      runExtract(argv).catch((error) => {
        console.error(String(error instanceof Error ? error.message : error));
        process.exit(1);
      }),
  )
  .command(
    'schema-check <file>',
    'validate a descriptor table',
    (cmd) => cmd.positional('file', { type: 'string', demandOption: true }),
    (argv) => runSchemaCheck(argv),
  )
  .demandCommand(1)
  .strict()
  .help();

parser.parse();
