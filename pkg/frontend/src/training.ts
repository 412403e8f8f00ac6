/** Training-point annotation: clicks in a lens pane become persisted
 * correspondences through the API.
 *
 * The click is transmitted in lens-local pixels exactly as received from
 * the pane (no pane offset is ever added outbound); the server attaches
 * the synced wand world position and validates that a record exists. */

import { ApiClient, ApiError } from "./api.js";
import { paneContains, paneToLensLocal } from "./panes.js";
import { MutationQueue, Store } from "./state.js";
import type { LensName, TrainingSetDto } from "./types.js";

export class TrainingController {
  private sets: Partial<Record<LensName, TrainingSetDto>> = {};

  constructor(
    private readonly api: ApiClient,
    private readonly store: Store,
    private readonly queue: MutationQueue = new MutationQueue(),
  ) {}

  async load(lens: LensName): Promise<TrainingSetDto> {
    const set = await this.api.training(lens);
    this.sets[lens] = set;
    return set;
  }

  cached(lens: LensName): TrainingSetDto | undefined {
    return this.sets[lens];
  }

  /** Points required before pose estimation unlocks. */
  minimumForPose(lens: LensName): number {
    return this.sets[lens]?.minimumForPose ?? 4;
  }

  poseReady(lens: LensName): boolean {
    const set = this.sets[lens];
    return !!set && set.points.length >= set.minimumForPose;
  }

  /** Handle a click at pane-local (x, y) on `lens`'s pane.
   *
   * Returns the new point count, or null when the click was ignored
   * (outside the pane) or rejected by the server (inline error set). */
  async handleClick(
    lens: LensName,
    x: number,
    y: number,
    subWidth = 960,
    height = 1080,
  ): Promise<number | null> {
    if (!paneContains(x, y, subWidth, height)) {
      return null; // clicks outside the image pane are ignored
    }
    const { u, v } = paneToLensLocal(x, y);
    const frame = this.store.get().frame;
    try {
      const { count } = await this.queue.enqueue(() =>
        this.api.addTrainingPoint(lens, { frame, u, v }),
      );
      await this.refresh(lens);
      this.store.update({ inlineError: null });
      return count;
    } catch (error) {
      this.store.update({
        inlineError:
          error instanceof ApiError ? error.detail : String(error),
      });
      return null;
    }
  }

  async deletePoint(lens: LensName, index: number): Promise<number | null> {
    try {
      const { count } = await this.queue.enqueue(() =>
        this.api.deleteTrainingPoint(lens, index),
      );
      await this.refresh(lens);
      this.store.update({ inlineError: null });
      return count;
    } catch (error) {
      this.store.update({
        inlineError:
          error instanceof ApiError ? error.detail : String(error),
      });
      return null;
    }
  }

  private async refresh(lens: LensName): Promise<void> {
    this.sets[lens] = await this.api.training(lens);
  }
}
