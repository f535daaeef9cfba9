/** Canvas renderer for map snapshots.
 *
 * Draws against a minimal 2D-context interface so the hot path can be
 * exercised headlessly with a stub context. Points are batched into a
 * single path of 2x2 px rects; poses are short oriented arrows; correction
 * factors are drawn as their anchor segments, colored by mode.
 */

import type { MapUpdate, Mode } from "./messages.js";
import type { ViewTransform } from "./transform.js";

/** Subset of CanvasRenderingContext2D the renderer needs. */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export const MODE_COLORS: Record<Mode, string> = {
  colocation: "#e6553a",
  collinearity: "#3a8fe6",
  parallelism: "#3ac46a",
  perpendicularity: "#c78af0",
};

const POINT_SIZE = 2;
const POSE_ARROW_METERS = 0.25;

export class Renderer {
  constructor(
    private ctx: Ctx2D,
    private view: ViewTransform,
    private width: number,
    private height: number,
  ) {}

  resize(width: number, height: number): void {
    this.width = width;
    this.height = height;
  }

  draw(update: MapUpdate): void {
    const ctx = this.ctx;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, this.width, this.height);
    this.drawPoints(update.points);
    this.drawPoses(update.poses);
    this.drawFactors(update);
    this.drawStatus(update);
  }

  drawPoints(points: number[][]): void {
    const ctx = this.ctx;
    const { zoom, offsetX, offsetY } = this.view;
    const half = POINT_SIZE / 2;
    ctx.fillStyle = "#d8dde2";
    ctx.beginPath();
    for (let i = 0; i < points.length; i++) {
      const p = points[i];
      ctx.rect(
        p[0] * zoom + offsetX - half,
        offsetY - p[1] * zoom - half,
        POINT_SIZE,
        POINT_SIZE,
      );
    }
    ctx.fill();
  }

  drawPoses(poses: number[][]): void {
    const ctx = this.ctx;
    ctx.strokeStyle = "#f0b429";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (const [x, y, th] of poses) {
      const tip: [number, number] = [
        x + POSE_ARROW_METERS * Math.cos(th),
        y + POSE_ARROW_METERS * Math.sin(th),
      ];
      const [sx, sy] = this.view.worldToScreen([x, y]);
      const [tx, ty] = this.view.worldToScreen(tip);
      ctx.moveTo(sx, sy);
      ctx.lineTo(tx, ty);
    }
    ctx.stroke();
  }

  drawFactors(update: MapUpdate): void {
    const ctx = this.ctx;
    ctx.lineWidth = 2.5;
    for (const factor of update.factors) {
      ctx.strokeStyle = MODE_COLORS[factor.mode];
      ctx.beginPath();
      for (const seg of [factor.seg_a, factor.seg_b]) {
        const [ax, ay] = this.view.worldToScreen(seg[0]);
        const [bx, by] = this.view.worldToScreen(seg[1]);
        ctx.moveTo(ax, ay);
        ctx.lineTo(bx, by);
      }
      ctx.stroke();
    }
  }

  drawStatus(update: MapUpdate): void {
    const ctx = this.ctx;
    ctx.fillStyle = "#d8dde2";
    ctx.font = "12px monospace";
    const line =
      `iter ${update.iteration}  cost ${update.total_cost.toFixed(4)}  ` +
      `inconsistency ${update.inconsistency.toFixed(4)} m^2  ` +
      `solve ${update.timing_ms.toFixed(0)} ms`;
    ctx.fillText(line, 8, this.height - 8);
    if (update.error) {
      ctx.fillStyle = "#e6553a";
      ctx.fillText(update.error, 8, this.height - 24);
    }
  }
}
