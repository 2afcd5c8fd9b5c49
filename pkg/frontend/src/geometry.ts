/**
 * Viewport math: the zoom/pan mapping between screen pixels and image
 * pixels, and the drag-to-box conversion built on top of it.
 *
 * The mapping is
 *
 *     screen = image * zoom + pan        (pan in screen pixels)
 *     image  = (screen - pan) / zoom
 *
 * which is invertible for any zoom > 0. Box corners are rounded
 * half-away-from-zero and clamped to the image extent, so no drag can
 * produce a request the server would reject for being out of bounds;
 * drags that collapse to zero area after rounding produce no box at all.
 */

import type { Box } from './api';

export interface Point {
  x: number;
  y: number;
}

export interface ViewportState {
  zoom: number;
  panX: number;
  panY: number;
}

export interface ImageExtent {
  width: number;
  height: number;
}

export interface DragGesture {
  startX: number;
  startY: number;
  endX: number;
  endY: number;
}

export const ZOOM_MIN = 0.125;
export const ZOOM_MAX = 16;

export function makeViewport(zoom = 1, panX = 0, panY = 0): ViewportState {
  if (!(zoom > 0)) {
    throw new RangeError(`zoom must be > 0, got ${zoom}`);
  }
  return { zoom, panX, panY };
}

export function imageToScreen(viewport: ViewportState, point: Point): Point {
  return {
    x: point.x * viewport.zoom + viewport.panX,
    y: point.y * viewport.zoom + viewport.panY,
  };
}

export function screenToImage(viewport: ViewportState, point: Point): Point {
  return {
    x: (point.x - viewport.panX) / viewport.zoom,
    y: (point.y - viewport.panY) / viewport.zoom,
  };
}

/** Round to the nearest integer with ties away from zero: 0.5 → 1, -0.5 → -1. */
export function roundHalfAwayFromZero(value: number): number {
  const rounded = Math.round(Math.abs(value));
  return value < 0 ? -rounded : rounded;
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}

/**
 * Convert a completed drag into a bounding-box proposal.
 *
 * Screen corners go through the inverse viewport mapping, are rounded
 * half-away-from-zero, then clamped to the image. Returns null when the
 * result has no area (so the caller sends no request at all).
 */
export function dragToBox(
  drag: DragGesture,
  viewport: ViewportState,
  image: ImageExtent,
): Box | null {
  const a = screenToImage(viewport, { x: drag.startX, y: drag.startY });
  const b = screenToImage(viewport, { x: drag.endX, y: drag.endY });

  const x1 = clamp(roundHalfAwayFromZero(Math.min(a.x, b.x)), 0, image.width);
  const x2 = clamp(roundHalfAwayFromZero(Math.max(a.x, b.x)), 0, image.width);
  const y1 = clamp(roundHalfAwayFromZero(Math.min(a.y, b.y)), 0, image.height);
  const y2 = clamp(roundHalfAwayFromZero(Math.max(a.y, b.y)), 0, image.height);

  const width = x2 - x1;
  const height = y2 - y1;
  if (width <= 0 || height <= 0) {
    return null;
  }
  return { x: x1, y: y1, width, height };
}

/**
 * Change zoom by `factor` while keeping the image point under `anchor`
 * (screen coordinates) stationary — the standard wheel-zoom behavior.
 */
export function zoomAt(viewport: ViewportState, anchor: Point, factor: number): ViewportState {
  const zoom = clamp(viewport.zoom * factor, ZOOM_MIN, ZOOM_MAX);
  const pivot = screenToImage(viewport, anchor);
  return {
    zoom,
    panX: anchor.x - pivot.x * zoom,
    panY: anchor.y - pivot.y * zoom,
  };
}

export function panBy(viewport: ViewportState, dx: number, dy: number): ViewportState {
  return { ...viewport, panX: viewport.panX + dx, panY: viewport.panY + dy };
}

/** Viewport that fits the whole image into `frame` with a small margin, centered. */
export function fitImage(image: ImageExtent, frame: ImageExtent, margin = 8): ViewportState {
  const usableW = Math.max(frame.width - 2 * margin, 1);
  const usableH = Math.max(frame.height - 2 * margin, 1);
  const zoom = clamp(
    Math.min(usableW / image.width, usableH / image.height),
    ZOOM_MIN,
    ZOOM_MAX,
  );
  return {
    zoom,
    panX: (frame.width - image.width * zoom) / 2,
    panY: (frame.height - image.height * zoom) / 2,
  };
}
