/**
 * Screen <-> image coordinate mapping for the zoomable annotation canvas.
 *
 * screen = image * scale + offset.  The mapping is invertible at every
 * zoom level, and zooming is centered on the cursor: the image point
 * under the cursor stays put.  Annotations are kept at sub-pixel
 * precision; an optional snapping mode rounds clicks to the pixel grid.
 */

export interface Point {
  x: number;
  y: number;
}

export const MIN_SCALE = 0.1;
export const MAX_SCALE = 64;

export class ViewTransform {
  scale = 1;
  offsetX = 0;
  offsetY = 0;

  toScreen(p: Point): Point {
    return {
      x: p.x * this.scale + this.offsetX,
      y: p.y * this.scale + this.offsetY,
    };
  }

  toImage(p: Point): Point {
    return {
      x: (p.x - this.offsetX) / this.scale,
      y: (p.y - this.offsetY) / this.scale,
    };
  }

  /**
   * Multiply the zoom by `factor`, keeping the image point under the
   * screen-space `cursor` fixed.
   */
  zoomAt(cursor: Point, factor: number): void {
    const next = Math.min(MAX_SCALE, Math.max(MIN_SCALE, this.scale * factor));
    const anchor = this.toImage(cursor);
    this.scale = next;
    this.offsetX = cursor.x - anchor.x * next;
    this.offsetY = cursor.y - anchor.y * next;
  }

  panBy(dx: number, dy: number): void {
    this.offsetX += dx;
    this.offsetY += dy;
  }

  reset(): void {
    this.scale = 1;
    this.offsetX = 0;
    this.offsetY = 0;
  }

  /** Fit an image of the given size into a viewport, centered. */
  fit(imageW: number, imageH: number, viewW: number, viewH: number): void {
    this.scale = Math.min(viewW / imageW, viewH / imageH);
    this.offsetX = (viewW - imageW * this.scale) / 2;
    this.offsetY = (viewH - imageH * this.scale) / 2;
  }
}

/** Round to the pixel grid (used when snapping mode is on). */
export function snapToGrid(p: Point): Point {
  return { x: Math.round(p.x), y: Math.round(p.y) };
}

export function withinImage(p: Point, width: number, height: number): boolean {
  return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
}
