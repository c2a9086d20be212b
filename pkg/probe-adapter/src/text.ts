/** Whitespace-token sets and pairwise agreement over decodes. */

export function tokenSet(text: string): Set<string> {
  return new Set(text.toLowerCase().split(/\s+/).filter(Boolean));
}

export function jaccard(a: Set<string>, b: Set<string>): number {
  if (a.size === 0 && b.size === 0) return 1;
  let intersection = 0;
  for (const token of a) if (b.has(token)) intersection += 1;
  const union = a.size + b.size - intersection;
  return union === 0 ? 1 : intersection / union;
}

/** Mean pairwise Jaccard across decodes; the supervision-stability cue. */
export function selfConsistency(decodes: string[]): number {
  if (decodes.length < 2) {
    throw new Error(`self-consistency needs at least 2 decodes, got ${decodes.length}`);
  }
  const sets = decodes.map(tokenSet);
  let total = 0;
  let pairs = 0;
  for (let i = 0; i < sets.length; i += 1) {
    for (let j = i + 1; j < sets.length; j += 1) {
      total += jaccard(sets[i], sets[j]);
      pairs += 1;
    }
  }
  return total / pairs;
}
