/** Browser entry point: two lens panes, keyboard frame stepping with
 * prefetch, training-click mode, overlay toggles and the per-object error
 * chart. All numeric content on screen originates from API payloads. */

import { ApiClient } from "./api.js";
import {
  buildSeries,
  chartGeometry,
  gapSegments,
  isEmpty,
  objectNames,
  toPolylines,
} from "./chart.js";
import { buildOverlay, hitTest, imagePlaceholder, Marker } from "./overlay.js";
import { MutationQueue, Store } from "./state.js";
import { TrainingController } from "./training.js";
import type { ComparisonDto, FrameAnnotations, LensName } from "./types.js";

const LENSES: LensName[] = ["Backside", "Buttonside"];

const api = new ApiClient("");
const store = new Store();
const queue = new MutationQueue();
const training = new TrainingController(api, store, queue);

const imageCache = new Map<number, HTMLImageElement | null>();
let annotations: FrameAnnotations | null = null;
let comparison: ComparisonDto | null = null;
let annotateMode = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function canvasFor(lens: LensName): HTMLCanvasElement {
  return el<HTMLCanvasElement>(lens === "Backside" ? "pane-back" : "pane-button");
}

async function loadImage(frame: number): Promise<HTMLImageElement | null> {
  if (imageCache.has(frame)) return imageCache.get(frame) ?? null;
  const image = new Image();
  const loaded = await new Promise<HTMLImageElement | null>((resolve) => {
    image.onload = () => resolve(image);
    image.onerror = () => resolve(null);
    image.src = api.frameImageUrl(frame);
  });
  imageCache.set(frame, loaded);
  if (imageCache.size > 24) {
    const oldest = imageCache.keys().next().value;
    if (oldest !== undefined) imageCache.delete(oldest);
  }
  return loaded;
}

function drawMarkers(ctx: CanvasRenderingContext2D, markers: Marker[]): void {
  for (const marker of markers) {
    if (marker.kind === "box") {
      ctx.strokeStyle = "#ffd24d";
      ctx.strokeRect(marker.x, marker.y, marker.width ?? 0, marker.height ?? 0);
      continue;
    }
    ctx.fillStyle =
      marker.kind === "centroid" ? "#ff3333"
      : marker.kind === "training" ? "#3388ff"
      : "#33dd66";
    ctx.beginPath();
    ctx.arc(marker.x, marker.y, 4, 0, Math.PI * 2);
    ctx.fill();
  }
}

async function renderPane(lens: LensName, frame: number): Promise<void> {
  const canvas = canvasFor(lens);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const session = store.get().session;
  const subWidth = session?.video.subWidth ?? 960;
  const height = session?.video.height ?? 1080;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const image = await loadImage(frame);
  if (image) {
    // the full frame holds both sub-images side by side
    const offset = lens === "Buttonside" ? subWidth : 0;
    ctx.drawImage(image, offset, 0, subWidth, height, 0, 0, subWidth, height);
  } else {
    ctx.fillStyle = "#20242c";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#9aa3b2";
    ctx.font = "24px sans-serif";
    ctx.fillText(imagePlaceholder(frame), 24, 48);
  }
  const markers = buildOverlay(
    lens,
    annotations?.objects ?? [],
    store.get().toggles,
    training.cached(lens)?.points ?? [],
    null,
    subWidth,
  );
  drawMarkers(ctx, markers);
  canvas.onmousemove = (event) => {
    const rect = canvas.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
    const hit = hitTest(markers, x, y, 10);
    el<HTMLElement>("hover-info").textContent =
      hit ? hit.label : `(${x.toFixed(0)}, ${y.toFixed(0)})`;
  };
  canvas.onclick = async (event) => {
    if (!annotateMode) return;
    const rect = canvas.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
    await training.handleClick(lens, x, y, subWidth, height);
    updateTrainingBadges();
    await refresh();
  };
}

function updateTrainingBadges(): void {
  for (const lens of LENSES) {
    const set = training.cached(lens);
    const badge = el<HTMLElement>(
      lens === "Backside" ? "count-back" : "count-button");
    badge.textContent = set ? String(set.points.length) : "-";
  }
  const ready = LENSES.some((lens) => training.poseReady(lens));
  el<HTMLButtonElement>("estimate-pose").disabled = !ready;
  const error = store.get().inlineError;
  const banner = el<HTMLElement>("inline-error");
  banner.textContent = error ?? "";
  banner.style.display = error ? "block" : "none";
}

function renderChart(): void {
  const canvas = el<HTMLCanvasElement>("error-chart");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#14161c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!comparison || isEmpty(comparison)) {
    ctx.fillStyle = "#9aa3b2";
    ctx.font = "16px sans-serif";
    ctx.fillText("no comparison loaded", 16, 32);
    return;
  }
  const selected =
    store.get().selectedObject ?? objectNames(comparison)[0] ?? null;
  if (selected === null) return;
  const points = buildSeries(comparison, selected);
  const geometry = chartGeometry(points, canvas.width - 20, canvas.height - 20);
  const polylines = toPolylines(gapSegments(points), geometry);
  ctx.strokeStyle = "#5bd1ff";
  ctx.lineWidth = 1.5;
  for (const line of polylines) {
    ctx.beginPath();
    line.forEach((p, i) =>
      i === 0 ? ctx.moveTo(p.x + 10, p.y + 10) : ctx.lineTo(p.x + 10, p.y + 10));
    ctx.stroke();
  }
  const summary = comparison.series[selected];
  el<HTMLElement>("chart-summary").textContent = summary
    ? `${selected}: mean ${summary.mean.toFixed(2)} px over ` +
      `${summary.matched} frames (${summary.missing} missing)`
    : "";
}

function renderObjectToggles(): void {
  const host = el<HTMLElement>("object-toggles");
  host.textContent = "";
  if (!comparison) return;
  for (const name of objectNames(comparison)) {
    const button = document.createElement("button");
    button.textContent = name;
    button.onclick = () => {
      store.update({ selectedObject: name });
      renderChart(); // client-state toggle: no refetch
    };
    host.appendChild(button);
  }
}

async function refresh(): Promise<void> {
  const frame = store.get().frame;
  el<HTMLElement>("frame-label").textContent = `frame ${frame}`;
  try {
    annotations = await api.annotations(frame);
  } catch {
    annotations = null;
  }
  await Promise.all(LENSES.map((lens) => renderPane(lens, frame)));
  // prefetch neighbours for keyboard stepping
  void loadImage(frame + 1);
  void loadImage(frame - 1);
}

async function boot(): Promise<void> {
  const session = await api.session();
  store.update({ session, frame: session.frameRange?.start ?? 0 });
  await Promise.all(LENSES.map((lens) => training.load(lens)));
  updateTrainingBadges();

  document.addEventListener("keydown", (event) => {
    if (event.key === "ArrowRight") store.stepFrame(1);
    else if (event.key === "ArrowLeft") store.stepFrame(-1);
    else return;
    void refresh();
  });
  el<HTMLButtonElement>("annotate-toggle").onclick = () => {
    annotateMode = !annotateMode;
    el<HTMLElement>("annotate-toggle").classList.toggle("active", annotateMode);
  };
  for (const name of ["centroids", "boxes", "trainingPoints"] as const) {
    el<HTMLInputElement>(`toggle-${name}`).onchange = () => {
      store.toggle(name);
      void refresh();
    };
  }
  el<HTMLButtonElement>("estimate-pose").onclick = async () => {
    for (const lens of LENSES) {
      if (training.poseReady(lens)) await api.estimatePose(lens);
    }
    await refresh();
  };
  el<HTMLInputElement>("compare-file").onchange = async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    comparison = await api.compare(await file.text());
    renderObjectToggles();
    renderChart();
  };
  await refresh();
  renderChart();
}

void boot();
