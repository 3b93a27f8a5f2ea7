/** Canvas-2D point cloud rendering with painter-sorted depth.
 *
 * The render model (layers of colored projected points) is built as
 * data first so tests can assert on it without a canvas.
 */

import { Camera, Projected, project } from "./camera";
import { COARSE_COLOR, INPUT_COLOR, ViewerState } from "./state";
import type { Point3 } from "./types";

export interface RenderLayer {
  label: string;
  color: string;
  points: Projected[];
  size: number; // point radius in px
}

export interface Panel {
  title: string;
  layers: RenderLayer[];
}

function layer(
  label: string,
  color: string,
  pts: readonly Point3[],
  cam: Camera,
  w: number,
  h: number,
  size = 1.6,
): RenderLayer {
  return { label, color, points: project(pts, cam, w, h), size };
}

/**
 * Small-multiple panels: one panel per visible completion in diverse
 * mode (k > 1), all sharing the camera; a single overlay panel
 * otherwise. The previous response is an extra panel when toggled on.
 */
export function buildPanels(state: ViewerState, cam: Camera, w: number, h: number): Panel[] {
  const views = (state.current ?? []).filter((v) => v.visible);
  const panels: Panel[] = [];
  if (views.length > 1) {
    for (const view of views) {
      panels.push({
        title: view.entry.prompt + (view.entry.oov ? " [oov]" : ""),
        layers: [
          layer("input", INPUT_COLOR, state.inputPoints, cam, w, h),
          layer("missing", view.color, view.entry.missing, cam, w, h),
          layer("coarse", COARSE_COLOR, view.entry.coarse, cam, w, h, 3.0),
        ],
      });
    }
    return panels;
  }
  const layers = [layer("input", INPUT_COLOR, state.inputPoints, cam, w, h)];
  for (const view of views) {
    layers.push(layer("missing", view.color, view.entry.missing, cam, w, h));
    layers.push(layer("coarse", COARSE_COLOR, view.entry.coarse, cam, w, h, 3.0));
  }
  panels.push({ title: views[0]?.entry.prompt ?? "input", layers });
  if (state.showPrevious && state.previous) {
    const prevLayers = [layer("input", INPUT_COLOR, state.inputPoints, cam, w, h)];
    for (const view of state.previous.filter((v) => v.visible)) {
      prevLayers.push(layer("missing", view.color, view.entry.missing, cam, w, h));
    }
    panels.push({ title: "previous", layers: prevLayers });
  }
  return panels;
}

export function drawPanel(ctx: CanvasRenderingContext2D, panel: Panel, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  const flat: { p: Projected; color: string; size: number }[] = [];
  for (const l of panel.layers) {
    for (const p of l.points) flat.push({ p, color: l.color, size: l.size });
  }
  flat.sort((a, b) => a.p.depth - b.p.depth); // far first
  for (const { p, color, size } of flat) {
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(p.x, p.y, size, 0, Math.PI * 2);
    ctx.fill();
  }
}
