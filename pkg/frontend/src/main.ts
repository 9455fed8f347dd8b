import { api, ServiceError } from "./api.js";
import {
  DetectionCache,
  canReuse,
  deriveCounts,
  filterByConfidence,
  flagsForSubset,
  rowsForFrame,
} from "./detections.js";
import { motilityRows, progressiveLabel } from "./motility.js";
import { drawBoxes, drawGroundTruth, drawTrajectories } from "./overlay.js";
import { SequencedRequester } from "./requests.js";
import { ConsoleState, decodeState, encodeState, normalize } from "./state.js";
import type { DetectResponse, TrackResponse } from "./types.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

let state: ConsoleState = decodeState(location.search.slice(1));
let cache: DetectionCache | null = null;
let lastResponse: DetectResponse | null = null;
let lastTrack: TrackResponse | null = null;

const detectRequester = new SequencedRequester<DetectResponse>(150);

function syncUrl(): void {
  history.replaceState(null, "", `?${encodeState(state)}`);
}

function banner(message: string | null): void {
  const el = $("banner");
  el.textContent = message ?? "";
  el.style.display = message ? "block" : "none";
}

function updateCountsPanel(): void {
  if (!lastResponse) return;
  const visible = filterByConfidence(lastResponse.detections, state.conf);
  const counts = deriveCounts({ ...lastResponse, detections: visible });
  $("count-det").textContent = String(counts.detections);
  $("count-gt").textContent = counts.gt === null ? "–" : String(counts.gt);
  const matched = lastResponse.match;
  if (matched && lastResponse.conf === state.conf) {
    // exact server counts only when the response was computed at this conf
    $("count-tp").textContent = String(matched.counts.tp);
    $("count-fp").textContent = String(matched.counts.fp);
    $("count-fn").textContent = String(matched.counts.fn);
  } else if (matched) {
    $("count-tp").textContent = "…";
    $("count-fp").textContent = "…";
    $("count-fn").textContent = "…";
  } else {
    for (const id of ["count-tp", "count-fp", "count-fn"]) $(id).textContent = "–";
  }
}

function redraw(): void {
  const canvas = $("overlay") as unknown as HTMLCanvasElement;
  const image = $("frame-image") as unknown as HTMLImageElement;
  const ctx = canvas.getContext("2d");
  if (!ctx || !lastResponse) return;
  canvas.width = image.clientWidth || lastResponse.width;
  canvas.height = image.clientHeight || lastResponse.height;
  const scale = canvas.width / lastResponse.width;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  if (state.showGroundTruth && lastResponse.match) {
    drawGroundTruth(
      ctx,
      lastResponse.match.fn_boxes.filter((b) => b.frame === state.frame),
      scale,
    );
  }
  if (state.showDetections) {
    const visible = rowsForFrame(
      filterByConfidence(lastResponse.detections, state.conf),
      state.frame,
    );
    drawBoxes(ctx, visible, scale, flagsForSubset(lastResponse, visible));
  }
  if (state.showTrajectories && lastTrack) {
    drawTrajectories(ctx, lastTrack.trajectories, state.frame, scale);
  }
}

function showFrame(): void {
  if (!lastResponse) return;
  const image = $("frame-image") as unknown as HTMLImageElement;
  image.onload = () => redraw();
  image.src = api.frameUrl(lastResponse.media_id, state.frame);
  $("frame-label").textContent = `${state.frame + 1} / ${lastResponse.n_frames}`;
}

function applyResponse(response: DetectResponse): void {
  lastResponse = response;
  state.mediaId = response.media_id;
  cache = {
    mediaId: response.media_id,
    nmsIou: response.nms_iou,
    floorConf: response.conf,
    response,
  };
  const scrub = $("frame-slider") as unknown as HTMLInputElement;
  scrub.max = String(response.n_frames - 1);
  if (state.frame > response.n_frames - 1) state.frame = 0;
  banner(null);
  updateCountsPanel();
  showFrame();
  syncUrl();
}

function queryDetect(forceFetch: boolean): void {
  const media = state.mediaId
    ? { media_id: state.mediaId }
    : state.mediaPath
      ? { path: state.mediaPath }
      : null;
  if (!media) return;

  if (!forceFetch && canReuse(cache, state.mediaId, state.conf, state.nmsIou)) {
    // threshold raise: instant client-side re-filter of cached detections
    lastResponse = cache!.response;
    updateCountsPanel();
    redraw();
    syncUrl();
    // still refresh server counts (match labels) at the exact threshold
    detectRequester.issue(
      () => api.detect({ ...media, conf: state.conf, nms_iou: state.nmsIou,
                         gt_dir: state.gtDir || undefined }),
      (resp) => {
        lastResponse = resp;
        updateCountsPanel();
        redraw();
      },
      (err) => showError(err),
    );
    return;
  }
  detectRequester.issue(
    () => api.detect({ ...media, conf: state.conf, nms_iou: state.nmsIou,
                       gt_dir: state.gtDir || undefined }),
    (resp) => applyResponse(resp),
    (err) => showError(err),
  );
}

function showError(err: unknown): void {
  const message = err instanceof ServiceError ? `${err.status}: ${err.message}` : String(err);
  banner(`service error: ${message}`);
  $("retry").style.display = "inline-block";
}

function renderMotility(response: TrackResponse): void {
  lastTrack = response;
  const body = $("motility-body");
  body.innerHTML = "";
  for (const row of motilityRows(response)) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${row.objectId}</td><td>${row.frames}</td><td>${row.vsl}</td>` +
      `<td>${row.vcl}</td><td>${row.vap}</td><td>${row.motile ? "yes" : "no"}</td>`;
    body.appendChild(tr);
  }
  $("motility-unit").textContent = response.motility.unit;
  $("pr-value").textContent = progressiveLabel(response);
  state.showTrajectories = true;
  ( $("toggle-traj") as unknown as HTMLInputElement).checked = true;
  redraw();
}

function wireControls(): void {
  const confSlider = $("conf-slider") as unknown as HTMLInputElement;
  const nmsSlider = $("nms-slider") as unknown as HTMLInputElement;
  const frameSlider = $("frame-slider") as unknown as HTMLInputElement;

  confSlider.value = String(state.conf);
  nmsSlider.value = String(state.nmsIou);
  ($("media-path") as unknown as HTMLInputElement).value = state.mediaPath;
  ($("gt-dir") as unknown as HTMLInputElement).value = state.gtDir;
  ($("toggle-gt") as unknown as HTMLInputElement).checked = state.showGroundTruth;
  ($("toggle-det") as unknown as HTMLInputElement).checked = state.showDetections;
  ($("toggle-traj") as unknown as HTMLInputElement).checked = state.showTrajectories;

  confSlider.addEventListener("input", () => {
    state = normalize({ ...state, conf: Number(confSlider.value) });
    $("conf-value").textContent = state.conf.toFixed(2);
    queryDetect(false);
  });
  nmsSlider.addEventListener("input", () => {
    state = normalize({ ...state, nmsIou: Number(nmsSlider.value) });
    $("nms-value").textContent = state.nmsIou.toFixed(2);
    queryDetect(true); // different suppression: cache invalid
  });
  frameSlider.addEventListener("input", () => {
    state = normalize({ ...state, frame: Number(frameSlider.value) });
    showFrame();
    redraw();
    syncUrl();
  });
  for (const [id, key] of [
    ["toggle-gt", "showGroundTruth"],
    ["toggle-det", "showDetections"],
    ["toggle-traj", "showTrajectories"],
  ] as const) {
    const el = $(id) as unknown as HTMLInputElement;
    el.addEventListener("change", () => {
      state = { ...state, [key]: el.checked };
      redraw();
      syncUrl();
    });
  }

  $("load-media").addEventListener("click", () => {
    state.mediaPath = ($("media-path") as unknown as HTMLInputElement).value.trim();
    state.gtDir = ($("gt-dir") as unknown as HTMLInputElement).value.trim();
    state.mediaId = "";
    cache = null;
    queryDetect(true);
  });
  ($("media-file") as unknown as HTMLInputElement).addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    if (!input.files?.length) return;
    try {
      const meta = await api.upload(input.files[0]);
      state.mediaId = meta.media_id;
      state.mediaPath = "";
      cache = null;
      queryDetect(true);
    } catch (err) {
      showError(err);
    }
  });
  $("run-track").addEventListener("click", async () => {
    try {
      const media = state.mediaId ? { media_id: state.mediaId } : { path: state.mediaPath };
      renderMotility(
        await api.track({ ...media, conf: state.conf, nms_iou: state.nmsIou }),
      );
    } catch (err) {
      showError(err);
    }
  });
  $("retry").addEventListener("click", () => {
    $("retry").style.display = "none";
    queryDetect(true);
  });
}

async function init(): Promise<void> {
  wireControls();
  $("conf-value").textContent = state.conf.toFixed(2);
  $("nms-value").textContent = state.nmsIou.toFixed(2);
  try {
    const [health, models] = await Promise.all([api.health(), api.models()]);
    const select = $("model-select") as unknown as HTMLSelectElement;
    select.innerHTML = "";
    for (const m of models) {
      const option = document.createElement("option");
      option.value = m.id;
      option.textContent = `${m.path} (${m.input_size}px)`;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      state = { ...state, model: select.value };
      syncUrl();
    });
    $("model-name").textContent = health.model.slice(0, 8);
    state.model = health.model;
  } catch (err) {
    showError(err);
  }
  if (state.mediaId || state.mediaPath) queryDetect(true);
}

init();
