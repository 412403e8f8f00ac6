/** Typed client for the session API. All methods pass payloads through
 * verbatim; the fetch implementation is injectable so tests can intercept
 * every request. */

import type {
  ComparisonDto,
  FrameAnnotations,
  LensName,
  PoseReport,
  SessionInfo,
  TrainingSetDto,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function readError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
    else if (body?.detail) detail = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`);
    if (!response.ok) throw await readError(response);
    return (await response.json()) as T;
  }

  private async send<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) throw await readError(response);
    return (await response.json()) as T;
  }

  session(): Promise<SessionInfo> {
    return this.getJson("/api/session");
  }

  annotations(frame: number): Promise<FrameAnnotations> {
    return this.getJson(`/api/frames/${frame}/annotations`);
  }

  frameImageUrl(frame: number): string {
    return `${this.base}/api/frames/${frame}/image`;
  }

  training(lens: LensName): Promise<TrainingSetDto> {
    return this.getJson(`/api/training/${lens}`);
  }

  /** Outbound clicks carry lens-local pixels; the world side is attached
   * by the server from the synced wand record. */
  addTrainingPoint(
    lens: LensName,
    point: { frame: number; u: number; v: number },
  ): Promise<{ count: number }> {
    return this.send("POST", `/api/training/${lens}`, point);
  }

  deleteTrainingPoint(lens: LensName, index: number): Promise<{ count: number }> {
    return this.send("DELETE", `/api/training/${lens}/${index}`);
  }

  estimatePose(lens: LensName): Promise<{
    lens: LensName;
    rotation: number[][];
    translation: number[];
    report: PoseReport;
  }> {
    return this.send("POST", `/api/pose/${lens}/estimate`);
  }

  poseReport(lens: LensName): Promise<PoseReport> {
    return this.getJson(`/api/pose/${lens}/report`);
  }

  setFlashes(
    flashes: { video: number; mocap: number }[],
  ): Promise<{ slope: number }> {
    return this.send("PUT", "/api/sync", { flashes });
  }

  async compare(systemXml: string, minVisible = 1): Promise<ComparisonDto> {
    const response = await this.fetchFn(
      `${this.base}/api/compare?min_visible=${minVisible}`,
      {
        method: "POST",
        headers: { "content-type": "application/xml" },
        body: systemXml,
      },
    );
    if (!response.ok) throw await readError(response);
    return (await response.json()) as ComparisonDto;
  }

  comparison(): Promise<ComparisonDto> {
    return this.getJson("/api/comparison");
  }
}
