/** Overlay construction: positions server-reported annotations, training
 * points and re-projections inside one lens pane.
 *
 * Coordinates are taken from the payloads untouched apart from the
 * full-frame -> pane shift for annotation centroids/boxes; training points
 * and re-projection samples are already lens-local. */

import { fullFrameToPane } from "./panes.js";
import type { OverlayToggles } from "./state.js";
import type {
  Annotation,
  LensName,
  PoseReport,
  TrainingPointDto,
} from "./types.js";

export interface Marker {
  kind: "centroid" | "box" | "training" | "reprojection";
  x: number;
  y: number;
  width?: number;
  height?: number;
  label: string;
}

export function buildOverlay(
  pane: LensName,
  annotations: Annotation[],
  toggles: OverlayToggles,
  training: TrainingPointDto[] = [],
  report: PoseReport | null = null,
  subWidth = 960,
): Marker[] {
  const markers: Marker[] = [];
  for (const obj of annotations) {
    if (obj.lens !== pane) continue;
    if (toggles.centroids) {
      markers.push({
        kind: "centroid",
        x: fullFrameToPane(pane, obj.centroid.x, subWidth),
        y: obj.centroid.y,
        label: `${obj.name} (${obj.centroid.x}, ${obj.centroid.y})`,
      });
    }
    if (toggles.boxes) {
      markers.push({
        kind: "box",
        x: fullFrameToPane(pane, obj.boxinfo.x, subWidth),
        y: obj.boxinfo.y,
        width: obj.boxinfo.width,
        height: obj.boxinfo.height,
        label: `${obj.name} box`,
      });
    }
  }
  if (toggles.trainingPoints) {
    training.forEach((point, index) => {
      markers.push({
        kind: "training",
        x: point.u,
        y: point.v,
        label: `training #${index} frame ${point.frame} (${point.u}, ${point.v})`,
      });
    });
  }
  if (toggles.reprojections && report) {
    for (const sample of report.samples) {
      if (sample.reprojected === null) continue;
      markers.push({
        kind: "reprojection",
        x: sample.reprojected.u,
        y: sample.reprojected.v,
        label: `reprojection (err ${sample.error?.toFixed(2) ?? "n/a"} px)`,
      });
    }
  }
  return markers;
}

/** Nearest marker within `radius` of a pane-local point, for hover text. */
export function hitTest(
  markers: Marker[],
  x: number,
  y: number,
  radius = 8,
): Marker | null {
  let best: Marker | null = null;
  let bestDist = radius;
  for (const marker of markers) {
    if (marker.kind === "box") continue;
    const d = Math.hypot(marker.x - x, marker.y - y);
    if (d <= bestDist) {
      best = marker;
      bestDist = d;
    }
  }
  return best;
}

/** Placeholder text shown when a frame image is unavailable. */
export function imagePlaceholder(frame: number): string {
  return `frame ${frame}: no image`;
}
