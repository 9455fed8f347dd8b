import type { DetectResponse, DetectionRow, MatchInfo } from "./types.js";

/**
 * Cache of the lowest-threshold response fetched per (media, nms) pair.
 * Raising the confidence slider re-filters the cached rows client-side;
 * lowering below the cached floor requires a fresh service query.
 */
export interface DetectionCache {
  mediaId: string;
  nmsIou: number;
  floorConf: number;
  response: DetectResponse;
}

export function canReuse(cache: DetectionCache | null, mediaId: string, conf: number, nmsIou: number): boolean {
  return (
    cache !== null &&
    cache.mediaId === mediaId &&
    cache.nmsIou === nmsIou &&
    conf >= cache.floorConf
  );
}

/** Keep rows at or above the slider threshold (mirrors server monotonicity). */
export function filterByConfidence(rows: DetectionRow[], conf: number): DetectionRow[] {
  return rows.filter((r) => r.conf >= conf);
}

export function rowsForFrame(rows: DetectionRow[], frame: number): DetectionRow[] {
  return rows.filter((r) => r.frame === frame);
}

export interface CountsPanel {
  detections: number;
  tp: number | null;
  fp: number | null;
  fn: number | null;
  gt: number | null;
}

/**
 * Counts shown in the panel come straight from service-provided numbers;
 * the client never recomputes matching.
 */
export function deriveCounts(response: DetectResponse): CountsPanel {
  const match = response.match;
  return {
    detections: response.detections.length,
    tp: match ? match.counts.tp : null,
    fp: match ? match.counts.fp : null,
    fn: match ? match.counts.fn : null,
    gt: match ? match.counts.gt : null,
  };
}

/** TP flags aligned to a filtered subset of the response rows. */
export function flagsForSubset(
  response: DetectResponse,
  subset: DetectionRow[],
): boolean[] | null {
  const match: MatchInfo | undefined = response.match;
  if (!match) return null;
  const index = new Map(response.detections.map((r, i) => [r, i]));
  return subset.map((r) => match.tp_flags[index.get(r)!]);
}
