/**
 * Component-level drawing tests: synthetic pointer gestures on the real
 * canvas component must produce exactly the box the zoom/pan formula
 * predicts, with the resulting create-annotation requests recorded by a
 * stubbed API client (no network anywhere).
 */

import { beforeEach, describe, expect, it } from 'vitest';
import type { Box } from '../src/api';
import { AnnotatorCanvas } from '../src/canvas';
import { App } from '../src/app';
import type { DragGesture, ImageExtent, ViewportState } from '../src/geometry';
import { makeImage, StubApi } from './stub';
import { mulberry32, randInt } from './prng';

/** Expected box, restated from the mapping image = (screen - pan) / zoom. */
function boxFromFormula(
  drag: DragGesture,
  viewport: ViewportState,
  image: ImageExtent,
): Box | null {
  const round = (v: number) => (v < 0 ? -Math.round(-v) : Math.round(v));
  const clampTo = (v: number, hi: number) => Math.min(Math.max(v, 0), hi);
  const ix = (sx: number) => (sx - viewport.panX) / viewport.zoom;
  const iy = (sy: number) => (sy - viewport.panY) / viewport.zoom;

  const x1 = clampTo(round(Math.min(ix(drag.startX), ix(drag.endX))), image.width);
  const x2 = clampTo(round(Math.max(ix(drag.startX), ix(drag.endX))), image.width);
  const y1 = clampTo(round(Math.min(iy(drag.startY), iy(drag.endY))), image.height);
  const y2 = clampTo(round(Math.max(iy(drag.startY), iy(drag.endY))), image.height);
  if (x2 - x1 <= 0 || y2 - y1 <= 0) {
    return null;
  }
  return { x: x1, y: y1, width: x2 - x1, height: y2 - y1 };
}

function headlessCanvas(): HTMLCanvasElement {
  const canvas = document.createElement('canvas');
  canvas.width = 800;
  canvas.height = 600;
  // no 2D context here: interaction must work without painting
  (canvas as unknown as { getContext: () => null }).getContext = () => null;
  return canvas;
}

function pointer(
  target: EventTarget,
  type: 'pointerdown' | 'pointermove' | 'pointerup',
  x: number,
  y: number,
  init: MouseEventInit = {},
): void {
  target.dispatchEvent(new MouseEvent(type, { clientX: x, clientY: y, ...init }));
}

function drag(target: EventTarget, gesture: DragGesture): void {
  pointer(target, 'pointerdown', gesture.startX, gesture.startY);
  pointer(target, 'pointermove', (gesture.startX + gesture.endX) / 2, (gesture.startY + gesture.endY) / 2);
  pointer(target, 'pointerup', gesture.endX, gesture.endY);
}

describe('AnnotatorCanvas drag-to-box (stubbed API)', () => {
  let stub: StubApi;
  let canvasEl: HTMLCanvasElement;
  let component: AnnotatorCanvas;
  const image = makeImage({ width: 400, height: 300 });

  beforeEach(() => {
    stub = new StubApi();
    canvasEl = headlessCanvas();
    component = new AnnotatorCanvas(canvasEl, {
      onBoxDrawn: (box) => {
        void stub.createAnnotation('p1', { image_id: image.id, box });
      },
    });
    component.setImage(image);
  });

  it('posts the formula box for drags at zoom 0.5, 1, 2, and 4', () => {
    const rng = mulberry32(0x5eed);
    for (const zoom of [0.5, 1, 2, 4]) {
      for (let trial = 0; trial < 60; trial++) {
        const viewport = {
          zoom,
          panX: randInt(rng, -3000, 3000) / 10,
          panY: randInt(rng, -3000, 3000) / 10,
        };
        component.setViewport(viewport);
        const gesture = {
          startX: randInt(rng, -100, 900),
          startY: randInt(rng, -100, 700),
          endX: randInt(rng, -100, 900),
          endY: randInt(rng, -100, 700),
        };

        const before = stub.createdBoxes.length;
        drag(canvasEl, gesture);

        const expected = boxFromFormula(gesture, viewport, image);
        if (expected === null) {
          expect(stub.createdBoxes.length).toBe(before); // no request at all
        } else {
          expect(stub.createdBoxes.length).toBe(before + 1);
          expect(stub.createdBoxes[before]).toEqual({
            projectId: 'p1',
            image_id: image.id,
            box: expected,
          });
        }
      }
    }
  });

  it('sends nothing for a click or a zero-area drag', () => {
    component.setViewport({ zoom: 1, panX: 0, panY: 0 });
    drag(canvasEl, { startX: 50, startY: 50, endX: 50, endY: 50 });
    drag(canvasEl, { startX: 50, startY: 50, endX: 50, endY: 90 });
    drag(canvasEl, { startX: 50, startY: 50, endX: 90, endY: 50 });
    expect(stub.createdBoxes).toEqual([]);
  });

  it('treats shift-drag as panning, not drawing', () => {
    component.setViewport({ zoom: 1, panX: 0, panY: 0 });
    pointer(canvasEl, 'pointerdown', 100, 100, { shiftKey: true });
    pointer(canvasEl, 'pointermove', 130, 160);
    pointer(canvasEl, 'pointerup', 130, 160);
    expect(stub.createdBoxes).toEqual([]);
    expect(component.viewport).toEqual({ zoom: 1, panX: 30, panY: 60 });
  });

  it('wheel zoom keeps the anchor point fixed and changes no annotations', () => {
    component.setViewport({ zoom: 1, panX: 0, panY: 0 });
    canvasEl.dispatchEvent(
      new WheelEvent('wheel', { clientX: 200, clientY: 150, deltaY: -1, cancelable: true }),
    );
    expect(component.viewport.zoom).toBeCloseTo(1.25, 12);
    // anchor (200, 150) maps to the same image point before and after
    expect(component.viewport.panX).toBeCloseTo(200 - 200 * 1.25, 12);
    expect(component.viewport.panY).toBeCloseTo(150 - 150 * 1.25, 12);
    expect(stub.createdBoxes).toEqual([]);
  });
});

describe('App-level drawing against a stubbed API', () => {
  let stub: StubApi;
  let root: HTMLElement;
  let app: App;
  let canvasEl: HTMLCanvasElement;

  beforeEach(async () => {
    stub = new StubApi();
    // image picked so the fit-to-frame viewport is exact: zoom 2, pan (8, 8)
    stub.images = [makeImage({ width: 392, height: 292 })];
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById('app') as HTMLElement;
    app = new App(root, stub);
    canvasEl = root.querySelector('.annotator-canvas') as HTMLCanvasElement;
    (canvasEl as unknown as { getContext: () => null }).getContext = () => null;
    await app.start();
    await app.idle();
  });

  it('auto-selects the only project and shows its image', () => {
    const select = root.querySelector('.project-select') as HTMLSelectElement;
    expect(select.value).toBe('p1');
    const strip = root.querySelector('.image-strip') as HTMLElement;
    expect(strip.textContent).toContain('cat.png');
  });

  it('a drag on the canvas creates the annotation the formula predicts', async () => {
    // viewport is fitImage(392x292 into 800x600) = zoom 2, pan (8, 8)
    drag(canvasEl, { startX: 108, startY: 108, endX: 208, endY: 158 });
    await app.idle();

    expect(stub.createdBoxes).toEqual([
      {
        projectId: 'p1',
        image_id: 'img-1',
        box: { x: 50, y: 50, width: 50, height: 25 },
      },
    ]);
    // the annotation came back and is drawn on the canvas' overlay list
    expect(stub.annotations).toHaveLength(1);
  });

  it('a zero-area drag sends no request', async () => {
    drag(canvasEl, { startX: 300, startY: 200, endX: 300, endY: 250 });
    await app.idle();
    expect(stub.createdBoxes).toEqual([]);
  });
});
