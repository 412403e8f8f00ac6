/** Frame-by-frame error chart data: one series per ground-truth object,
 * missing frames rendered as gaps. Distances come from the comparison
 * payload as-is; the chart only scales them to screen coordinates. */

import type { ComparisonDto } from "./types.js";

export interface SeriesPoint {
  frame: number;
  value: number | null; // null = missing system output at this frame
}

export function objectNames(comparison: ComparisonDto): string[] {
  return Object.keys(comparison.series).sort();
}

export function isEmpty(comparison: ComparisonDto): boolean {
  return objectNames(comparison).length === 0;
}

/** Series for one object; unknown names yield an empty series. */
export function buildSeries(
  comparison: ComparisonDto,
  object: string,
): SeriesPoint[] {
  const series = comparison.series[object];
  if (!series) return [];
  return series.entries.map((e) => ({ frame: e.frame, value: e.distance }));
}

/** Split a series into contiguous segments at the gaps, ready to draw as
 * separate polylines. */
export function gapSegments(points: SeriesPoint[]): SeriesPoint[][] {
  const segments: SeriesPoint[][] = [];
  let current: SeriesPoint[] = [];
  for (const point of points) {
    if (point.value === null) {
      if (current.length) segments.push(current);
      current = [];
    } else {
      current.push(point);
    }
  }
  if (current.length) segments.push(current);
  return segments;
}

/** Frames where the series has a gap (missing system output). */
export function gapFrames(points: SeriesPoint[]): number[] {
  return points.filter((p) => p.value === null).map((p) => p.frame);
}

export interface ChartGeometry {
  width: number;
  height: number;
  frameMin: number;
  frameMax: number;
  valueMax: number;
}

/** Scale segments into polyline screen coordinates. */
export function toPolylines(
  segments: SeriesPoint[][],
  geometry: ChartGeometry,
): { x: number; y: number }[][] {
  const { width, height, frameMin, frameMax, valueMax } = geometry;
  const spanX = Math.max(frameMax - frameMin, 1);
  const spanY = Math.max(valueMax, 1e-9);
  return segments.map((segment) =>
    segment.map((point) => ({
      x: ((point.frame - frameMin) / spanX) * width,
      y: height - ((point.value as number) / spanY) * height,
    })),
  );
}

export function chartGeometry(
  points: SeriesPoint[],
  width: number,
  height: number,
): ChartGeometry {
  const frames = points.map((p) => p.frame);
  const values = points
    .map((p) => p.value)
    .filter((v): v is number => v !== null);
  return {
    width,
    height,
    frameMin: frames.length ? Math.min(...frames) : 0,
    frameMax: frames.length ? Math.max(...frames) : 1,
    valueMax: values.length ? Math.max(...values) : 0,
  };
}
