import type { DetectResponse, TrackResponse } from "./types.js";

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function post<T>(url: string, body: unknown): Promise<T> {
  const resp = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const err = await resp.json();
      detail = err.detail ?? err.error ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ServiceError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

export const api = {
  health: () => fetch("/health").then((r) => r.json()),
  models: () => fetch("/models").then((r) => r.json()),
  detect: (req: {
    path?: string;
    media_id?: string;
    conf: number;
    nms_iou: number;
    gt_dir?: string;
  }) => post<DetectResponse>("/detect", req),
  track: (req: {
    path?: string;
    media_id?: string;
    conf: number;
    nms_iou: number;
    fps?: number;
  }) => post<TrackResponse>("/track", req),
  upload: async (file: File) => {
    const form = new FormData();
    form.append("file", file);
    const resp = await fetch("/media", { method: "POST", body: form });
    if (!resp.ok) throw new ServiceError(resp.status, "upload failed");
    return resp.json();
  },
  frameUrl: (mediaId: string, index: number) => `/media/${mediaId}/frames/${index}`,
};
