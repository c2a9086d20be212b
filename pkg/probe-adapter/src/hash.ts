import { createHash } from 'node:crypto';

/** Keyed hash of the parts mapped into [0, 1). Stable across runs. */
export function unit(...parts: (string | number)[]): number {
  const digest = createHash('sha256').update(parts.join('\x1f')).digest();
  // 48 bits keep the value exactly representable as a double
  const value = digest.readUIntBE(0, 6);
  return value / 2 ** 48;
}

export function bucketOf(token: string, dim: number): { index: number; sign: number } {
  const digest = createHash('blake2s256').update(token).digest();
  const value = digest.readUIntBE(0, 6);
  return { index: value % dim, sign: (digest[6] & 1) === 1 ? 1 : -1 };
}
