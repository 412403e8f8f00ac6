/** Pane arithmetic: the only coordinate handling the client performs.
 *
 * A pane shows one lens's sub-image, so pane-local pixels ARE lens-local
 * pixels. Server data arrives in full-frame coordinates, which shift by
 * the sub-image width for the right-hand lens; that offset is applied
 * when displaying and never on outbound clicks. */

import type { LensName } from "./types.js";

export const SUB_WIDTH = 960;
export const FRAME_HEIGHT = 1080;

export function lensOffset(lens: LensName, subWidth = SUB_WIDTH): number {
  return lens === "Buttonside" ? subWidth : 0;
}

/** A click in a pane is already lens-local; transmitted unchanged. */
export function paneToLensLocal(x: number, y: number): { u: number; v: number } {
  return { u: x, v: y };
}

/** Full-frame x -> pane-local x for the pane showing `lens`. */
export function fullFrameToPane(
  lens: LensName,
  x: number,
  subWidth = SUB_WIDTH,
): number {
  return x - lensOffset(lens, subWidth);
}

/** Which lens's pane a full-frame x coordinate belongs to. */
export function lensForFullFrameX(x: number, subWidth = SUB_WIDTH): LensName {
  return x < subWidth ? "Backside" : "Buttonside";
}

export function paneContains(
  x: number,
  y: number,
  subWidth = SUB_WIDTH,
  height = FRAME_HEIGHT,
): boolean {
  return x >= 0 && x < subWidth && y >= 0 && y < height;
}
