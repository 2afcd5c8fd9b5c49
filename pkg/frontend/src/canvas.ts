/**
 * The annotator canvas: shows the active image under the current
 * zoom/pan, tracks drag gestures, and turns completed drags into
 * bounding-box proposals via the viewport math in geometry.ts.
 *
 * Interaction state is plain data and never touches the 2D context, so
 * the component stays fully drivable in environments whose canvas cannot
 * paint (rendering quietly no-ops without a context).
 */

import type { Annotation, Box, ImageRecord } from './api';
import {
  DragGesture,
  ViewportState,
  dragToBox,
  fitImage,
  imageToScreen,
  makeViewport,
  panBy,
  zoomAt,
} from './geometry';

export interface AnnotatorCanvasOptions {
  /** Called with each completed non-empty box proposal. */
  onBoxDrawn: (box: Box) => void;
  /** Resolves an image id to a displayable source URL. */
  imageUrl?: (imageId: string) => string;
}

interface ActiveDrag {
  pointerId: number;
  startX: number;
  startY: number;
  lastX: number;
  lastY: number;
  panning: boolean;
}

export class AnnotatorCanvas {
  viewport: ViewportState = makeViewport();
  private image: ImageRecord | null = null;
  private bitmap: HTMLImageElement | null = null;
  private annotations: Annotation[] = [];
  private drag: ActiveDrag | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly options: AnnotatorCanvasOptions,
  ) {
    canvas.addEventListener('pointerdown', this.onPointerDown);
    canvas.addEventListener('pointermove', this.onPointerMove);
    canvas.addEventListener('pointerup', this.onPointerUp);
    canvas.addEventListener('pointercancel', this.onPointerCancel);
    canvas.addEventListener('wheel', this.onWheel, { passive: false });
  }

  dispose(): void {
    this.canvas.removeEventListener('pointerdown', this.onPointerDown);
    this.canvas.removeEventListener('pointermove', this.onPointerMove);
    this.canvas.removeEventListener('pointerup', this.onPointerUp);
    this.canvas.removeEventListener('pointercancel', this.onPointerCancel);
    this.canvas.removeEventListener('wheel', this.onWheel);
  }

  get activeImage(): ImageRecord | null {
    return this.image;
  }

  /** Show an image; the viewport resets to fit it into the canvas. */
  setImage(record: ImageRecord | null): void {
    this.image = record;
    this.bitmap = null;
    this.drag = null;
    if (record) {
      this.viewport = fitImage(record, {
        width: this.canvas.width || 800,
        height: this.canvas.height || 600,
      });
      if (this.options.imageUrl && typeof Image !== 'undefined') {
        const element = new Image();
        element.onload = () => {
          this.bitmap = element;
          this.render();
        };
        element.src = this.options.imageUrl(record.id);
      }
    }
    this.render();
  }

  /** Boxes to draw on top of the image (the image's annotations). */
  setAnnotations(annotations: Annotation[]): void {
    this.annotations = annotations;
    this.render();
  }

  setViewport(viewport: ViewportState): void {
    this.viewport = viewport;
    this.render();
  }

  /** The drag rectangle in progress, in screen coordinates, for feedback. */
  get dragRect(): { x: number; y: number; width: number; height: number } | null {
    if (!this.drag || this.drag.panning) {
      return null;
    }
    const x = Math.min(this.drag.startX, this.drag.lastX);
    const y = Math.min(this.drag.startY, this.drag.lastY);
    return {
      x,
      y,
      width: Math.abs(this.drag.lastX - this.drag.startX),
      height: Math.abs(this.drag.lastY - this.drag.startY),
    };
  }

  private local(event: { clientX: number; clientY: number }): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  private readonly onPointerDown = (event: PointerEvent): void => {
    if (!this.image || this.drag) {
      return;
    }
    const { x, y } = this.local(event);
    // middle button (or shift-drag) pans; plain drag draws a box
    const panning = event.button === 1 || event.shiftKey;
    this.drag = { pointerId: event.pointerId, startX: x, startY: y, lastX: x, lastY: y, panning };
    this.canvas.setPointerCapture?.(event.pointerId);
    event.preventDefault();
  };

  private readonly onPointerMove = (event: PointerEvent): void => {
    if (!this.drag || event.pointerId !== this.drag.pointerId) {
      return;
    }
    const { x, y } = this.local(event);
    if (this.drag.panning) {
      this.viewport = panBy(this.viewport, x - this.drag.lastX, y - this.drag.lastY);
    }
    this.drag.lastX = x;
    this.drag.lastY = y;
    this.render();
  };

  private readonly onPointerUp = (event: PointerEvent): void => {
    if (!this.drag || event.pointerId !== this.drag.pointerId) {
      return;
    }
    const { x, y } = this.local(event);
    const gesture: DragGesture = {
      startX: this.drag.startX,
      startY: this.drag.startY,
      endX: x,
      endY: y,
    };
    const wasPanning = this.drag.panning;
    this.drag = null;
    if (!wasPanning && this.image) {
      const box = dragToBox(gesture, this.viewport, this.image);
      if (box) {
        // zero-area drags were filtered out: no request for them
        this.options.onBoxDrawn(box);
      }
    }
    this.render();
  };

  private readonly onPointerCancel = (event: PointerEvent): void => {
    if (this.drag && event.pointerId === this.drag.pointerId) {
      this.drag = null;
      this.render();
    }
  };

  private readonly onWheel = (event: WheelEvent): void => {
    if (!this.image) {
      return;
    }
    event.preventDefault();
    const anchor = this.local(event);
    const factor = event.deltaY < 0 ? 1.25 : 0.8;
    this.viewport = zoomAt(this.viewport, anchor, factor);
    this.render();
  };

  render(): void {
    const ctx = this.canvas.getContext?.('2d');
    if (!ctx) {
      return; // headless environment: interaction still works, painting doesn't
    }
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (!this.image) {
      return;
    }
    const { zoom, panX, panY } = this.viewport;
    if (this.bitmap) {
      ctx.imageSmoothingEnabled = zoom < 1;
      ctx.drawImage(
        this.bitmap,
        panX,
        panY,
        this.image.width * zoom,
        this.image.height * zoom,
      );
    } else {
      ctx.fillStyle = '#222';
      ctx.fillRect(panX, panY, this.image.width * zoom, this.image.height * zoom);
    }

    for (const annotation of this.annotations) {
      const region = annotation.region;
      const box: Box =
        region.kind === 'Box'
          ? region
          : { x: 0, y: 0, width: this.image.width, height: this.image.height };
      const a = imageToScreen(this.viewport, { x: box.x, y: box.y });
      ctx.strokeStyle = strokeFor(annotation.status);
      ctx.lineWidth = 2;
      ctx.strokeRect(a.x, a.y, box.width * zoom, box.height * zoom);
    }

    const rect = this.dragRect;
    if (rect) {
      ctx.strokeStyle = '#00d8ff';
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(rect.x, rect.y, rect.width, rect.height);
      ctx.setLineDash([]);
    }
  }
}

function strokeFor(status: Annotation['status']): string {
  switch (status) {
    case 'Verified':
      return '#2fbf4f';
    case 'Corrected':
      return '#7a5fd0';
    case 'Flagged':
      return '#d2483b';
    case 'AiLabeled':
      return '#e0b138';
    default:
      return '#8a8a8a';
  }
}
