export interface DetectionRow {
  source_id: string;
  frame: number;
  class: number;
  conf: number;
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface FnBox {
  frame: number;
  class: number;
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface MatchInfo {
  tp_flags: boolean[];
  fn_boxes: FnBox[];
  counts: { tp: number; fp: number; fn: number; gt: number };
}

export interface DetectResponse {
  media_id: string;
  model: string;
  conf: number;
  nms_iou: number;
  n_frames: number;
  width: number;
  height: number;
  fps: number;
  detections: DetectionRow[];
  counts: { detections: number; tp?: number; fp?: number; fn?: number; gt?: number };
  match?: MatchInfo;
  overlay?: string;
}

export interface TrackSample {
  0: number; // frame
  1: number; // x
  2: number; // y
}

export interface TrajectoryRow {
  object_id: number;
  class_id: number;
  gaps: number;
  samples: [number, number, number][];
}

export interface MotilityEntry {
  object_id: number;
  class_id: number;
  n_samples: number;
  vsl: number;
  vcl: number;
  vap: number;
  unit: string;
  motile: boolean;
}

export interface TrackResponse {
  media_id: string;
  fps: number;
  trajectories: TrajectoryRow[];
  motility: {
    unit: string;
    progressive_ratio: number | null;
    entries: MotilityEntry[];
    excluded: { object_id: number; reason: string }[];
    thresholds: { vap_min: number | null; vsl_min: number | null; vcl_min: number | null };
  };
}
