/**
 * Dense flow magnitude from frame files.
 *
 * Frames are grayscale PGM images (P5 binary or P2 ascii) named so a
 * lexicographic sort gives temporal order. The estimator is exhaustive
 * block matching with interior anchors, mirroring the pipeline's reference
 * semantics: a constant clip scores exactly 0 and a whole-frame
 * translation scores its displacement magnitude.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

export interface Frame {
  width: number;
  height: number;
  pixels: Float64Array;
}

export function readPgm(filePath: string): Frame {
  const data = fs.readFileSync(filePath);
  const header = data.subarray(0, 2).toString('ascii');
  if (header !== 'P5' && header !== 'P2') {
    throw new Error(`${filePath}: not a PGM file (magic ${header})`);
  }
  // header tokens: magic, width, height, maxval; comments start with '#'
  const tokens: string[] = [];
  let offset = 0;
  while (tokens.length < 4) {
    let char = data[offset];
    if (char === 0x23) {
      while (data[offset] !== 0x0a) offset += 1;
      offset += 1;
      continue;
    }
    if (char === 0x20 || char === 0x09 || char === 0x0a || char === 0x0d) {
      offset += 1;
      continue;
    }
    let token = '';
    while (offset < data.length && !/\s/.test(String.fromCharCode(data[offset]))) {
      token += String.fromCharCode(data[offset]);
      offset += 1;
    }
    tokens.push(token);
  }
  const [, widthText, heightText, maxvalText] = tokens;
  const width = Number(widthText);
  const height = Number(heightText);
  const maxval = Number(maxvalText);
  if (!Number.isInteger(width) || !Number.isInteger(height) || maxval <= 0) {
    throw new Error(`${filePath}: malformed PGM header`);
  }
  const pixels = new Float64Array(width * height);
  if (header === 'P5') {
    offset += 1; // single whitespace after maxval
    if (maxval > 255) throw new Error(`${filePath}: 16-bit PGM not supported`);
    for (let i = 0; i < pixels.length; i += 1) pixels[i] = data[offset + i];
  } else {
    const body = data.subarray(offset).toString('ascii');
    const values = body.split(/\s+/).filter(Boolean).map(Number);
    if (values.length < pixels.length) throw new Error(`${filePath}: truncated P2 body`);
    for (let i = 0; i < pixels.length; i += 1) pixels[i] = values[i];
  }
  return { width, height, pixels };
}

export function loadFrames(mediaDir: string, videoId: string, sampleRate = 1): Frame[] {
  const dir = path.join(mediaDir, videoId);
  if (!fs.existsSync(dir)) {
    throw new Error(`no media directory for ${videoId} under ${mediaDir}`);
  }
  const files = fs
    .readdirSync(dir)
    .filter((name) => name.endsWith('.pgm'))
    .sort();
  if (files.length === 0) throw new Error(`no .pgm frames in ${dir}`);
  const sampled = files.filter((_, index) => index % sampleRate === 0);
  return sampled.map((name) => readPgm(path.join(dir, name)));
}

function anchors(length: number, blockSize: number, radius: number): number[] {
  const last = length - blockSize - radius;
  if (last < radius) {
    throw new Error(
      `frame of length ${length} too small for block ${blockSize} radius ${radius}`,
    );
  }
  const out: number[] = [];
  for (let value = radius; value <= last; value += blockSize) out.push(value);
  return out;
}

function ssd(a: Frame, b: Frame, ar: number, ac: number, br: number, bc: number, size: number): number {
  let total = 0;
  for (let dy = 0; dy < size; dy += 1) {
    const aRow = (ar + dy) * a.width + ac;
    const bRow = (br + dy) * b.width + bc;
    for (let dx = 0; dx < size; dx += 1) {
      const diff = a.pixels[aRow + dx] - b.pixels[bRow + dx];
      total += diff * diff;
    }
  }
  return total;
}

/** Mean displacement magnitude between two frames via block matching. */
export function blockFlowMagnitude(
  a: Frame,
  b: Frame,
  blockSize = 8,
  radius = 4,
): number {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error('frames differ in shape');
  }
  const rows = anchors(a.height, blockSize, radius);
  const cols = anchors(a.width, blockSize, radius);
  let total = 0;
  for (const r of rows) {
    for (const c of cols) {
      let best = Infinity;
      let bestDy = 0;
      let bestDx = 0;
      let bestNorm = Infinity;
      for (let dy = -radius; dy <= radius; dy += 1) {
        for (let dx = -radius; dx <= radius; dx += 1) {
          const cost = ssd(a, b, r, c, r + dy, c + dx, blockSize);
          const norm = dy * dy + dx * dx;
          if (cost < best || (cost === best && norm < bestNorm)) {
            best = cost;
            bestDy = dy;
            bestDx = dx;
            bestNorm = norm;
          }
        }
      }
      total += Math.hypot(bestDy, bestDx);
    }
  }
  return total / (rows.length * cols.length);
}

/** Average block-matching magnitude over adjacent frame pairs. */
export function clipFlowMagnitude(frames: Frame[], blockSize = 8, radius = 4): number {
  if (frames.length < 2) throw new Error(`need at least 2 frames, got ${frames.length}`);
  let total = 0;
  for (let i = 0; i + 1 < frames.length; i += 1) {
    total += blockFlowMagnitude(frames[i], frames[i + 1], blockSize, radius);
  }
  return total / (frames.length - 1);
}

/** Spread of per-frame mean intensity. */
export function frameDiversity(frames: Frame[]): number {
  if (frames.length === 0) throw new Error('need at least one frame');
  const means = frames.map((frame) => {
    let sum = 0;
    for (const value of frame.pixels) sum += value;
    return sum / frame.pixels.length;
  });
  const mean = means.reduce((acc, value) => acc + value, 0) / means.length;
  const variance =
    means.reduce((acc, value) => acc + (value - mean) ** 2, 0) / means.length;
  return Math.sqrt(variance);
}
