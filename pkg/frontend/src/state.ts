/** View state and the single-mutation queue.
 *
 * Reads may overlap freely; mutations run strictly one at a time in
 * submission order, so the server's session files never see interleaved
 * writes from this client. */

import type { LensName, SessionInfo } from "./types.js";

export interface OverlayToggles {
  centroids: boolean;
  boxes: boolean;
  trainingPoints: boolean;
  reprojections: boolean;
}

export interface ViewState {
  session: SessionInfo | null;
  frame: number;
  activeLens: LensName;
  toggles: OverlayToggles;
  selectedObject: string | null;
  inlineError: string | null;
}

export const initialState: ViewState = {
  session: null,
  frame: 0,
  activeLens: "Backside",
  toggles: {
    centroids: true,
    boxes: false,
    trainingPoints: true,
    reprojections: false,
  },
  selectedObject: null,
  inlineError: null,
};

type Listener = (state: ViewState) => void;

export class Store {
  private state: ViewState;
  private listeners: Listener[] = [];

  constructor(state: ViewState = initialState) {
    this.state = { ...state, toggles: { ...state.toggles } };
  }

  get(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<ViewState>): ViewState {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
    return this.state;
  }

  /** Clamp stepping to the session's frame range. */
  stepFrame(delta: number): number {
    const range = this.state.session?.frameRange;
    let frame = this.state.frame + delta;
    if (range) {
      frame = Math.min(Math.max(frame, range.start), range.end);
    }
    this.update({ frame, inlineError: null });
    return frame;
  }

  setLens(lens: LensName): void {
    this.update({ activeLens: lens });
  }

  toggle(name: keyof OverlayToggles): void {
    this.update({
      toggles: { ...this.state.toggles, [name]: !this.state.toggles[name] },
    });
  }
}

/** Serializes mutations: at most one in flight, FIFO order. */
export class MutationQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private pending = 0;

  get inFlight(): number {
    return this.pending;
  }

  enqueue<T>(work: () => Promise<T>): Promise<T> {
    this.pending += 1;
    const run = this.tail.then(work);
    // keep the chain alive regardless of individual failures
    this.tail = run.then(
      () => undefined,
      () => undefined,
    );
    return run.finally(() => {
      this.pending -= 1;
    });
  }
}
