import { describe, expect, it } from "vitest";

import {
  arcminToPixels,
  loadCalibration,
  minDisplayableArcmin,
  pitchFromDpi,
  pitchFromReferenceObject,
  saveCalibration,
  type DisplayCalibration,
  type KeyValueStorage,
} from "../src/calibration.js";

const FIXTURE: DisplayCalibration = { pixelPitchMm: 0.291, viewingDistanceMm: 1000 };

class MemoryStorage implements KeyValueStorage {
  private map = new Map<string, string>();
  getItem(key: string) {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string) {
    this.map.set(key, value);
  }
}

describe("arcminToPixels", () => {
  it("matches the hand-computed reference fixture", () => {
    // tan(1/60 deg) * 1000mm / 0.291mm is almost exactly one pixel
    const { strokePx } = arcminToPixels(1.0, FIXTURE);
    expect(strokePx).toBeCloseTo(1.0, 2);
  });

  it("agrees with an independent trig oracle within 2%", () => {
    for (const arcmin of [0.25, 0.8, 2, 5, 20, 59]) {
      const oracle =
        (FIXTURE.viewingDistanceMm * Math.tan((arcmin * Math.PI) / (60 * 180))) /
        FIXTURE.pixelPitchMm;
      const { strokePx } = arcminToPixels(arcmin, FIXTURE);
      expect(Math.abs(strokePx - oracle) / oracle).toBeLessThan(0.02);
    }
  });

  it("doubles with viewing distance to within 0.1% below one degree", () => {
    const near = arcminToPixels(30, FIXTURE).strokePx;
    const far = arcminToPixels(30, { ...FIXTURE, viewingDistanceMm: 2000 }).strokePx;
    expect(Math.abs(far / near - 2)).toBeLessThan(0.001);
  });

  it("flags sub-pixel strokes", () => {
    expect(arcminToPixels(0.2, FIXTURE).tooSmall).toBe(true);
    expect(arcminToPixels(2, FIXTURE).tooSmall).toBe(false);
  });

  it("rejects zero pitch and non-positive sizes", () => {
    expect(() => arcminToPixels(1, { ...FIXTURE, pixelPitchMm: 0 })).toThrow();
    expect(() => arcminToPixels(0, FIXTURE)).toThrow();
  });
});

describe("calibration sources", () => {
  it("derives pitch from the credit-card match", () => {
    expect(pitchFromReferenceObject(856)).toBeCloseTo(0.1, 10);
  });

  it("derives pitch from dpi", () => {
    expect(pitchFromDpi(96)).toBeCloseTo(25.4 / 96, 10);
  });

  it("computes the smallest displayable angle", () => {
    const minArcmin = minDisplayableArcmin(FIXTURE);
    expect(arcminToPixels(minArcmin, FIXTURE).strokePx).toBeCloseTo(1.0, 6);
  });
});

describe("persistence", () => {
  it("round-trips through storage", () => {
    const storage = new MemoryStorage();
    saveCalibration(FIXTURE, storage);
    expect(loadCalibration(storage)).toEqual(FIXTURE);
  });

  it("treats garbage as absent", () => {
    const storage = new MemoryStorage();
    storage.setItem("acuity.calibration.v1", "{junk");
    expect(loadCalibration(storage)).toBeNull();
  });
});
