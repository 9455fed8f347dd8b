import type { TrackResponse } from "./types.js";

export interface MotilityTableRow {
  objectId: number;
  frames: number;
  vsl: string;
  vcl: string;
  vap: string;
  motile: boolean;
}

/** Table rows formatted from service numbers; no client-side computation. */
export function motilityRows(response: TrackResponse): MotilityTableRow[] {
  return response.motility.entries.map((e) => ({
    objectId: e.object_id,
    frames: e.n_samples,
    vsl: e.vsl.toFixed(2),
    vcl: e.vcl.toFixed(2),
    vap: e.vap.toFixed(2),
    motile: e.motile,
  }));
}

export function progressiveLabel(response: TrackResponse): string {
  const pr = response.motility.progressive_ratio;
  if (pr === null) return "n/a";
  return `${(pr * 100).toFixed(1)}%`;
}
