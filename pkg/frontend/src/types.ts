/** Shapes of the JSON API payloads. The client treats every coordinate and
 * distance in these as opaque server truth: it repositions them between
 * panes for display but never recomputes them. */

export type LensName = "Backside" | "Buttonside";

export interface VideoInfo {
  fps: number;
  width: number;
  height: number;
  subWidth: number;
}

export interface SessionInfo {
  id: string;
  video: VideoInfo;
  frameRange: { start: number; end: number } | null;
  objects: { name: string; id: string; visibleMax: number }[];
  lenses: Record<LensName, { trainingPoints: number }>;
  flashes: { video: number; mocap: number }[];
}

export interface Annotation {
  name: string;
  id: string;
  lens: LensName;
  centroid: { x: number; y: number };
  boxinfo: { x: number; y: number; width: number; height: number };
  visibility: { visible: number; visibleMax: number };
}

export interface FrameAnnotations {
  frame: number;
  objects: Annotation[];
}

export interface TrainingPointDto {
  frame: number;
  u: number;
  v: number;
  x: number;
  y: number;
  z: number;
}

export interface TrainingSetDto {
  lens: LensName;
  session: string;
  minimumForPose: number;
  points: TrainingPointDto[];
}

export interface ReportSample {
  image: { u: number; v: number };
  reprojected: { u: number; v: number } | null;
  error: number | null;
}

export interface PoseReport {
  mean: number;
  sigma: number;
  count: number;
  excluded: number;
  singleton: boolean;
  converged: boolean;
  samples: ReportSample[];
}

export interface ComparisonEntryDto {
  frame: number;
  distance: number | null;
}

export interface ComparisonSeriesDto {
  entries: ComparisonEntryDto[];
  mean: number;
  max: number;
  matched: number;
  missing: number;
}

export interface ComparisonDto {
  series: Record<string, ComparisonSeriesDto>;
  unmatchedSystem: number;
  warnings: string[];
}
