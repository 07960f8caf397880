import { describe, expect, it } from "vitest";

import {
  MAX_SCALE,
  MIN_SCALE,
  Point,
  snapToGrid,
  ViewTransform,
  withinImage,
} from "../src/view.js";

function rng(seed: number): () => number {
  // Small deterministic LCG, enough for property sampling.
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

describe("ViewTransform", () => {
  it("is the identity by default", () => {
    const v = new ViewTransform();
    expect(v.toScreen({ x: 12.5, y: -3 })).toEqual({ x: 12.5, y: -3 });
  });

  it("round-trips image -> screen -> image at every zoom level", () => {
    const rand = rng(1);
    for (let trial = 0; trial < 500; trial++) {
      const v = new ViewTransform();
      v.scale = MIN_SCALE + rand() * (MAX_SCALE - MIN_SCALE);
      v.offsetX = (rand() - 0.5) * 2000;
      v.offsetY = (rand() - 0.5) * 2000;
      const p: Point = { x: rand() * 1280, y: rand() * 960 };
      const back = v.toImage(v.toScreen(p));
      expect(Math.abs(back.x - p.x)).toBeLessThan(1e-9);
      expect(Math.abs(back.y - p.y)).toBeLessThan(1e-9);
    }
  });

  it("round-trips screen -> image -> screen", () => {
    const v = new ViewTransform();
    v.zoomAt({ x: 200, y: 150 }, 3.7);
    v.panBy(12.25, -8.5);
    const s: Point = { x: 640.125, y: 480.875 };
    const back = v.toScreen(v.toImage(s));
    expect(Math.abs(back.x - s.x)).toBeLessThan(1e-9);
    expect(Math.abs(back.y - s.y)).toBeLessThan(1e-9);
  });

  it("keeps the image point under the cursor fixed while zooming", () => {
    const rand = rng(2);
    for (let trial = 0; trial < 200; trial++) {
      const v = new ViewTransform();
      v.scale = 0.5 + rand() * 4;
      v.offsetX = rand() * 100;
      v.offsetY = rand() * 100;
      const cursor: Point = { x: rand() * 1280, y: rand() * 860 };
      const before = v.toImage(cursor);
      v.zoomAt(cursor, 0.25 + rand() * 4);
      const after = v.toImage(cursor);
      expect(Math.abs(after.x - before.x)).toBeLessThan(1e-9);
      expect(Math.abs(after.y - before.y)).toBeLessThan(1e-9);
    }
  });

  it("clamps zoom to the allowed range", () => {
    const v = new ViewTransform();
    v.zoomAt({ x: 0, y: 0 }, 1e9);
    expect(v.scale).toBe(MAX_SCALE);
    v.zoomAt({ x: 0, y: 0 }, 1e-9);
    expect(v.scale).toBe(MIN_SCALE);
  });

  it("pans additively", () => {
    const v = new ViewTransform();
    v.panBy(10, -5);
    v.panBy(2.5, 4);
    expect(v.offsetX).toBe(12.5);
    expect(v.offsetY).toBe(-1);
  });

  it("fit centers the image in the viewport", () => {
    const v = new ViewTransform();
    v.fit(1280, 960, 640, 640);
    expect(v.scale).toBeCloseTo(0.5, 12);
    expect(v.offsetX).toBeCloseTo(0, 12);
    expect(v.offsetY).toBeCloseTo((640 - 480) / 2, 12);
    // The image corners land inside the viewport.
    const br = v.toScreen({ x: 1280, y: 960 });
    expect(br.x).toBeLessThanOrEqual(640 + 1e-9);
    expect(br.y).toBeLessThanOrEqual(640 + 1e-9);
  });
});

describe("snapping and bounds", () => {
  it("snapToGrid rounds to integer pixels", () => {
    expect(snapToGrid({ x: 10.4, y: 20.6 })).toEqual({ x: 10, y: 21 });
  });

  it("withinImage uses half-open bounds", () => {
    expect(withinImage({ x: 0, y: 0 }, 100, 50)).toBe(true);
    expect(withinImage({ x: 99.9, y: 49.9 }, 100, 50)).toBe(true);
    expect(withinImage({ x: 100, y: 0 }, 100, 50)).toBe(false);
    expect(withinImage({ x: -0.1, y: 0 }, 100, 50)).toBe(false);
  });
});
