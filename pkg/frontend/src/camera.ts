/** Orbit camera math: pure functions, no DOM. */

import type { Point3 } from "./types";

export interface Camera {
  yaw: number; // radians around +z
  pitch: number; // radians above the xy-plane
  zoom: number; // scale factor
}

export const DEFAULT_CAMERA: Camera = { yaw: 0.7, pitch: 0.45, zoom: 1.0 };

const PITCH_LIMIT = Math.PI / 2 - 0.01;

export function orbit(cam: Camera, dYaw: number, dPitch: number): Camera {
  const pitch = Math.max(-PITCH_LIMIT, Math.min(PITCH_LIMIT, cam.pitch + dPitch));
  return { ...cam, yaw: cam.yaw + dYaw, pitch };
}

export function zoomBy(cam: Camera, factor: number): Camera {
  const zoom = Math.max(0.2, Math.min(8, cam.zoom * factor));
  return { ...cam, zoom };
}

export interface Projected {
  x: number; // canvas coords in [0, width)
  y: number;
  depth: number; // larger = closer to the viewer
}

/**
 * Orthographic projection of unit-sphere-frame points (shapes live in
 * a z-up frame; the canvas y-axis points down).
 */
export function project(
  points: readonly Point3[],
  cam: Camera,
  width: number,
  height: number,
): Projected[] {
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const scale = (Math.min(width, height) / 2.6) * cam.zoom;
  const cxm = width / 2;
  const cym = height / 2;
  const out: Projected[] = new Array(points.length);
  for (let i = 0; i < points.length; i++) {
    const [x, y, z] = points[i];
    // yaw around z
    const rx = cy * x + sy * y;
    const ry = -sy * x + cy * y;
    // pitch tilts the view axis; screen-up follows world +z
    const sxv = rx;
    const syv = cp * z - sp * ry;
    const depth = cp * ry + sp * z;
    out[i] = { x: cxm + sxv * scale, y: cym - syv * scale, depth: -depth };
  }
  return out;
}
