/** Correction-stroke state machine.
 *
 * 'p' toggles the provide-correction state. While active, a click-drag with
 * a modifier held at drag start records one world-frame stroke; the modifier
 * picks the mode (CTRL colocation, SHIFT collinearity, ALT parallelism,
 * CTRL+SHIFT perpendicularity). Leaving the state with exactly two strokes
 * of the same mode submits them and locks input until the server answers.
 */

import type { Mode, SegmentPair, SubmitCorrection } from "./messages.js";
import type { Vec2, ViewTransform } from "./transform.js";

export const MIN_DRAG_PIXELS = 3;

export interface Modifiers {
  ctrl: boolean;
  shift: boolean;
  alt: boolean;
}

export function modeFromModifiers(m: Modifiers): Mode | null {
  if (m.ctrl && m.shift) return "perpendicularity";
  if (m.ctrl) return "colocation";
  if (m.shift) return "collinearity";
  if (m.alt) return "parallelism";
  return null;
}

export interface StrokeEvents {
  submit(msg: SubmitCorrection): void;
  warning(text: string): void;
}

interface PendingStroke {
  seg: SegmentPair;
  mode: Mode;
}

export class StrokeMachine {
  active = false;
  locked = false;
  private buffer: PendingStroke[] = [];
  private drag: { start: Vec2; mode: Mode } | null = null;

  constructor(
    private view: ViewTransform,
    private events: StrokeEvents,
  ) {}

  get pendingStrokes(): readonly PendingStroke[] {
    return this.buffer;
  }

  /** Returns true when the key was consumed. */
  keyPress(key: string): boolean {
    if (key !== "p") return false;
    if (this.locked) {
      this.events.warning("solving in progress, input locked");
      return true;
    }
    if (!this.active) {
      this.active = true;
      this.buffer = [];
      this.drag = null;
      return true;
    }
    this.active = false;
    this.drag = null;
    if (this.buffer.length === 2) {
      const [a, b] = this.buffer;
      this.events.submit({
        type: "submit_correction",
        mode: a.mode,
        a: a.seg,
        b: b.seg,
      });
      this.locked = true;
    } else if (this.buffer.length === 1) {
      this.events.warning("correction needs two strokes; discarded one");
    }
    this.buffer = [];
    return true;
  }

  pointerDown(sx: number, sy: number, mods: Modifiers): void {
    if (!this.active || this.locked) return;
    const mode = modeFromModifiers(mods);
    if (mode === null) {
      this.events.warning(
        "hold CTRL, SHIFT, ALT or CTRL+SHIFT to choose a correction mode",
      );
      return;
    }
    this.drag = { start: [sx, sy], mode };
  }

  pointerUp(sx: number, sy: number): void {
    if (!this.active || this.drag === null) return;
    const { start, mode } = this.drag;
    this.drag = null;
    if (Math.hypot(sx - start[0], sy - start[1]) < MIN_DRAG_PIXELS) {
      return; // sub-threshold click, not a stroke
    }
    if (this.buffer.length === 1 && this.buffer[0].mode !== mode) {
      this.events.warning(
        `stroke modes differ (${this.buffer[0].mode} vs ${mode}); pair cleared`,
      );
      this.buffer = [];
      return;
    }
    if (this.buffer.length >= 2) {
      this.events.warning("a correction takes exactly two strokes");
      return;
    }
    const seg: SegmentPair = [
      this.view.screenToWorld(start),
      this.view.screenToWorld([sx, sy]),
    ];
    this.buffer.push({ seg, mode });
  }

  /** Server answered (map_update or error): release the input lock. */
  notifyResolved(): void {
    this.locked = false;
  }
}
