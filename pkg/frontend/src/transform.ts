/** Pan/zoom view transform between world meters and screen pixels.
 *
 * Screen x grows right, screen y grows down; world y grows up, so the
 * vertical axis is flipped. `zoom` is pixels per meter.
 */

export type Vec2 = [number, number];

export class ViewTransform {
  constructor(
    public zoom = 50,
    public offsetX = 0, // screen position of world origin
    public offsetY = 0,
  ) {}

  worldToScreen(p: Vec2): Vec2 {
    return [p[0] * this.zoom + this.offsetX, this.offsetY - p[1] * this.zoom];
  }

  screenToWorld(s: Vec2): Vec2 {
    return [(s[0] - this.offsetX) / this.zoom, (this.offsetY - s[1]) / this.zoom];
  }

  panBy(dxPixels: number, dyPixels: number): void {
    this.offsetX += dxPixels;
    this.offsetY += dyPixels;
  }

  /** Zoom by `factor`, keeping the world point under `anchor` fixed. */
  zoomAt(anchor: Vec2, factor: number): void {
    const world = this.screenToWorld(anchor);
    this.zoom *= factor;
    const moved = this.worldToScreen(world);
    this.panBy(anchor[0] - moved[0], anchor[1] - moved[1]);
  }

  /** Center the view on a world bounding box inside a w x h pixel canvas. */
  fit(lo: Vec2, hi: Vec2, width: number, height: number, margin = 20): void {
    const spanX = Math.max(hi[0] - lo[0], 1e-6);
    const spanY = Math.max(hi[1] - lo[1], 1e-6);
    this.zoom = Math.min(
      (width - 2 * margin) / spanX,
      (height - 2 * margin) / spanY,
    );
    const cx = (lo[0] + hi[0]) / 2;
    const cy = (lo[1] + hi[1]) / 2;
    this.offsetX = width / 2 - cx * this.zoom;
    this.offsetY = height / 2 + cy * this.zoom;
  }
}
