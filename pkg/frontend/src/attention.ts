// Heatmap overlay: per-token background intensity proportional to the
// attention weight at the meme-decision tag.

export interface OverlayCell {
  token: string;
  weight: number;
  /** 0..1, weight relative to the strongest token */
  intensity: number;
}

export interface Overlay {
  cells: OverlayCell[];
  /** displayed so a user can sanity-check weights sum to ~1 */
  weightSum: number;
}

/** Returns null when tokens and weights disagree in length: the overlay is
 * then disabled with a warning instead of rendering garbage. */
export function buildOverlay(tokens: string[], weights: number[]): Overlay | null {
  if (tokens.length !== weights.length || tokens.length === 0) return null;
  let max = 0;
  let sum = 0;
  for (const w of weights) {
    if (!Number.isFinite(w) || w < 0) return null;
    max = Math.max(max, w);
    sum += w;
  }
  const cells = tokens.map((token, i) => ({
    token,
    weight: weights[i] ?? 0,
    intensity: max > 0 ? (weights[i] ?? 0) / max : 0,
  }));
  return { cells, weightSum: sum };
}

export function strongestToken(overlay: Overlay): OverlayCell {
  let best = overlay.cells[0]!;
  for (const cell of overlay.cells) {
    if (cell.weight > best.weight) best = cell;
  }
  return best;
}
