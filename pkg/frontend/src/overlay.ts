import type { DetectionRow, FnBox, TrajectoryRow } from "./types.js";

export const COLOR_GT = "#2a7fff";
export const COLOR_TP = "#19c37d";
export const COLOR_FP = "#e5484d";
export const COLOR_CLASS: Record<number, string> = { 0: "#19c37d", 1: "#f5a623" };
export const TRAJECTORY_COLORS = [
  "#e5484d", "#19c37d", "#2a7fff", "#f5a623", "#b36bff", "#00b8c4",
];

/** Trajectory samples visible at scrub position k: frame index <= k. */
export function visibleSamples(
  track: TrajectoryRow,
  frame: number,
): [number, number, number][] {
  return track.samples.filter((s) => s[0] <= frame);
}

export function drawBoxes(
  ctx: CanvasRenderingContext2D,
  rows: DetectionRow[],
  scale: number,
  tpFlags: boolean[] | null,
): void {
  ctx.lineWidth = 1.5;
  rows.forEach((r, i) => {
    ctx.strokeStyle = tpFlags ? (tpFlags[i] ? COLOR_TP : COLOR_FP) : COLOR_CLASS[r.class] ?? COLOR_TP;
    ctx.strokeRect(
      r.x_min * scale,
      r.y_min * scale,
      (r.x_max - r.x_min) * scale,
      (r.y_max - r.y_min) * scale,
    );
  });
}

export function drawGroundTruth(
  ctx: CanvasRenderingContext2D,
  boxes: FnBox[],
  scale: number,
  color: string = COLOR_GT,
): void {
  ctx.lineWidth = 1;
  ctx.strokeStyle = color;
  for (const b of boxes) {
    ctx.strokeRect(b.x_min * scale, b.y_min * scale, (b.x_max - b.x_min) * scale, (b.y_max - b.y_min) * scale);
  }
}

export function drawTrajectories(
  ctx: CanvasRenderingContext2D,
  tracks: TrajectoryRow[],
  frame: number,
  scale: number,
): void {
  ctx.lineWidth = 1.5;
  for (const track of tracks) {
    const pts = visibleSamples(track, frame);
    if (pts.length < 2) continue;
    ctx.strokeStyle = TRAJECTORY_COLORS[track.object_id % TRAJECTORY_COLORS.length];
    ctx.beginPath();
    ctx.moveTo(pts[0][1] * scale, pts[0][2] * scale);
    for (const [, x, y] of pts.slice(1)) ctx.lineTo(x * scale, y * scale);
    ctx.stroke();
  }
}
