export interface ConsoleState {
  model: string;
  mediaPath: string;
  mediaId: string;
  conf: number;
  nmsIou: number;
  frame: number;
  showGroundTruth: boolean;
  showDetections: boolean;
  showTrajectories: boolean;
  gtDir: string;
}

export const DEFAULT_STATE: ConsoleState = {
  model: "",
  mediaPath: "",
  mediaId: "",
  conf: 0.5,
  nmsIou: 0.45,
  frame: 0,
  showGroundTruth: false,
  showDetections: true,
  showTrajectories: false,
  gtDir: "",
};

const clamp = (v: number, lo: number, hi: number) => Math.min(Math.max(v, lo), hi);

/** Clamp slider values into their domains; NaN falls back to the default. */
export function normalize(state: ConsoleState): ConsoleState {
  return {
    ...state,
    conf: Number.isFinite(state.conf) ? clamp(state.conf, 0, 1) : DEFAULT_STATE.conf,
    nmsIou: Number.isFinite(state.nmsIou)
      ? clamp(state.nmsIou, 0.01, 0.99)
      : DEFAULT_STATE.nmsIou,
    frame: Number.isFinite(state.frame) ? Math.max(0, Math.round(state.frame)) : 0,
  };
}

/** Serialize to a URL query string; only non-default fields are written. */
export function encodeState(state: ConsoleState): string {
  const params = new URLSearchParams();
  const s = normalize(state);
  if (s.model) params.set("model", s.model);
  if (s.mediaPath) params.set("media", s.mediaPath);
  if (s.mediaId) params.set("id", s.mediaId);
  if (s.gtDir) params.set("gt", s.gtDir);
  params.set("conf", s.conf.toFixed(3));
  params.set("nms", s.nmsIou.toFixed(3));
  params.set("frame", String(s.frame));
  params.set("layers", [
    s.showGroundTruth ? "g" : "",
    s.showDetections ? "d" : "",
    s.showTrajectories ? "t" : "",
  ].join(""));
  return params.toString();
}

export function decodeState(query: string): ConsoleState {
  const params = new URLSearchParams(query);
  const layers = params.get("layers") ?? "d";
  // empty strings parse as NaN (not 0) so normalize() restores the default
  const num = (key: string, fallback: number) => {
    const raw = params.get(key);
    return raw === null || raw.trim() === "" ? fallback : Number(raw);
  };
  return normalize({
    ...DEFAULT_STATE,
    model: params.get("model") ?? "",
    mediaPath: params.get("media") ?? "",
    mediaId: params.get("id") ?? "",
    gtDir: params.get("gt") ?? "",
    conf: num("conf", DEFAULT_STATE.conf),
    nmsIou: num("nms", DEFAULT_STATE.nmsIou),
    frame: num("frame", 0),
    showGroundTruth: layers.includes("g"),
    showDetections: layers.includes("d"),
    showTrajectories: layers.includes("t"),
  });
}
