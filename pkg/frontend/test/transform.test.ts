import { describe, expect, it } from "vitest";

import { ViewTransform, type Vec2 } from "../src/transform.js";

// Small deterministic generator so failures reproduce.
function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

describe("ViewTransform", () => {
  it("round-trips world->screen->world within 0.5 px at zooms 0.1..100", () => {
    const rand = lcg(7);
    const zooms = [0.1, 0.25, 1, 3.7, 10, 42.5, 100];
    for (const zoom of zooms) {
      const view = new ViewTransform(
        zoom,
        rand() * 2000 - 1000,
        rand() * 2000 - 1000,
      );
      for (let i = 0; i < 200; i++) {
        const w: Vec2 = [rand() * 100 - 50, rand() * 100 - 50];
        const s = view.worldToScreen(w);
        const back = view.screenToWorld(s);
        const errPx = Math.hypot(back[0] - w[0], back[1] - w[1]) * zoom;
        expect(errPx).toBeLessThan(0.5);
        // and the reverse direction, starting from pixels
        const s2 = view.worldToScreen(view.screenToWorld(s));
        expect(Math.hypot(s2[0] - s[0], s2[1] - s[1])).toBeLessThan(0.5);
      }
    }
  });

  it("flips the vertical axis", () => {
    const view = new ViewTransform(10, 0, 100);
    const [, syUp] = view.worldToScreen([0, 5]);
    const [, syDown] = view.worldToScreen([0, -5]);
    expect(syUp).toBeLessThan(syDown);
  });

  it("zoomAt keeps the anchored world point fixed on screen", () => {
    const view = new ViewTransform(20, 300, 200);
    const anchor: Vec2 = [137, 422];
    const before = view.screenToWorld(anchor);
    view.zoomAt(anchor, 2.5);
    const after = view.worldToScreen(before);
    expect(Math.hypot(after[0] - anchor[0], after[1] - anchor[1])).toBeLessThan(
      1e-9,
    );
    expect(view.zoom).toBeCloseTo(50, 12);
  });

  it("fit centers the bounding box inside the canvas", () => {
    const view = new ViewTransform();
    view.fit([-2, -1], [6, 3], 800, 600);
    const center = view.worldToScreen([2, 1]);
    expect(center[0]).toBeCloseTo(400, 9);
    expect(center[1]).toBeCloseTo(300, 9);
    for (const corner of [
      [-2, -1],
      [6, 3],
      [-2, 3],
      [6, -1],
    ] as Vec2[]) {
      const [sx, sy] = view.worldToScreen(corner);
      expect(sx).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(sx).toBeLessThanOrEqual(780 + 1e-9);
      expect(sy).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(sy).toBeLessThanOrEqual(580 + 1e-9);
    }
  });
});
