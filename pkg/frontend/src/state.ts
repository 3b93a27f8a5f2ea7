/** Viewer state and transitions; pure except for the API calls. */

import { ApiClient, ApiError } from "./api";
import type { CompletionEntry, CompletionResponse, Point3 } from "./types";

export type InputSource =
  | { kind: "server"; shapeId: string; removedPartType: string; gtPrompt: string }
  | { kind: "file"; name: string };

export interface CompletionView {
  entry: CompletionEntry;
  color: string;
  visible: boolean;
}

export interface ViewerState {
  source: InputSource | null;
  inputPoints: Point3[];
  prompt: string;
  k: number;
  current: CompletionView[] | null;
  previous: CompletionView[] | null; // kept for A/B comparison
  showPrevious: boolean;
  modelId: string | null;
  timingMs: number | null;
  error: string | null;
  busy: boolean;
}

export const INPUT_COLOR = "#9a9a9a";
export const COARSE_COLOR = "#1a1a1a";

/** Distinct hues per prompt variant, stable within one response. */
export function completionColor(index: number): string {
  const hues = [14, 205, 130, 275, 45, 330, 170, 95];
  return `hsl(${hues[index % hues.length]}, 75%, 52%)`;
}

export function initialState(): ViewerState {
  return {
    source: null,
    inputPoints: [],
    prompt: "",
    k: 1,
    current: null,
    previous: null,
    showPrevious: false,
    modelId: null,
    timingMs: null,
    error: null,
    busy: false,
  };
}

export function withShape(state: ViewerState, source: InputSource, points: Point3[]): ViewerState {
  return {
    ...state,
    source,
    inputPoints: points,
    current: null,
    previous: null,
    error: null,
  };
}

export function withError(state: ViewerState, message: string): ViewerState {
  return { ...state, error: message, busy: false };
}

export function withResponse(state: ViewerState, res: CompletionResponse): ViewerState {
  const views = res.completions.map((entry, i) => ({
    entry,
    color: completionColor(i),
    visible: true,
  }));
  return {
    ...state,
    previous: state.current,
    current: views,
    modelId: res.model_id,
    timingMs: res.timing_ms,
    error: null,
    busy: false,
  };
}

export function toggleCompletion(state: ViewerState, index: number): ViewerState {
  if (!state.current) return state;
  const current = state.current.map((view, i) =>
    i === index ? { ...view, visible: !view.visible } : view,
  );
  return { ...state, current };
}

/** Points on screen right now: the render model never mutates inputs. */
export function renderedPointCounts(state: ViewerState): { input: number; missing: number } {
  const missing = (state.current ?? [])
    .filter((v) => v.visible)
    .reduce((acc, v) => acc + v.entry.missing.length, 0);
  return { input: state.inputPoints.length, missing };
}

export class CompletionRequester {
  /** One in-flight request; a new submission cancels the pending one. */
  private controller: AbortController | null = null;

  constructor(private api: ApiClient) {}

  async submit(state: ViewerState): Promise<ViewerState> {
    if (state.inputPoints.length === 0) {
      return withError(state, "load a shape first");
    }
    const diverse = state.k >= 2;
    if (!diverse && !state.prompt.trim()) {
      return withError(state, "enter a prompt or choose k >= 2 for diverse mode");
    }
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const req =
      diverse && !state.prompt.trim()
        ? {
            points: state.inputPoints,
            k: state.k,
            part_type:
              state.source?.kind === "server" ? state.source.removedPartType : undefined,
          }
        : { points: state.inputPoints, prompt: state.prompt.trim() };
    try {
      const res = await this.api.complete(req, controller.signal);
      if (controller.signal.aborted) return state;
      return withResponse(state, res);
    } catch (err) {
      if (controller.signal.aborted && this.controller !== controller) {
        return state; // superseded by a newer submission
      }
      const message = err instanceof ApiError ? err.message : String(err);
      return withError(state, message);
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }
}
