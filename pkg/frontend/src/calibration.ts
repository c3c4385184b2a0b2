/**
 * Display calibration: how many physical pixels one arcminute subtends on
 * this screen at this viewing distance. Obtained either from a known DPI or
 * by matching an on-screen rectangle against a reference object (credit
 * card), then persisted so the exam screen can size optotypes physically.
 */

export interface DisplayCalibration {
  pixelPitchMm: number;
  viewingDistanceMm: number;
}

export const CREDIT_CARD_WIDTH_MM = 85.6;
const STORAGE_KEY = "acuity.calibration.v1";

export function validateCalibration(cal: DisplayCalibration): void {
  if (!(cal.pixelPitchMm > 0)) {
    throw new Error(`pixel pitch must be positive, got ${cal.pixelPitchMm}`);
  }
  if (!(cal.viewingDistanceMm > 0)) {
    throw new Error(`viewing distance must be positive, got ${cal.viewingDistanceMm}`);
  }
}

/** Pixel pitch from a slider-matched on-screen width for a known object. */
export function pitchFromReferenceObject(
  matchedWidthPx: number,
  objectWidthMm: number = CREDIT_CARD_WIDTH_MM,
): number {
  if (!(matchedWidthPx > 0)) {
    throw new Error("matched width must be positive");
  }
  return objectWidthMm / matchedWidthPx;
}

/** Pixel pitch from a monitor DPI figure. */
export function pitchFromDpi(dpi: number): number {
  if (!(dpi > 0)) throw new Error("dpi must be positive");
  return 25.4 / dpi;
}

export interface StrokeSize {
  strokePx: number;
  tooSmall: boolean;
}

/**
 * Physical pixels subtended by `arcmin` of visual angle at the calibrated
 * distance. Flags results under one physical pixel: the service should not
 * be asked for sizes the screen cannot draw.
 */
export function arcminToPixels(arcmin: number, cal: DisplayCalibration): StrokeSize {
  validateCalibration(cal);
  if (!(arcmin > 0)) throw new Error(`arcmin must be positive, got ${arcmin}`);
  const radians = (arcmin / 60) * (Math.PI / 180);
  const strokePx = (cal.viewingDistanceMm * Math.tan(radians)) / cal.pixelPitchMm;
  return { strokePx, tooSmall: strokePx < 1 };
}

/** Smallest displayable size (one physical pixel of stroke), in arcmin. */
export function minDisplayableArcmin(cal: DisplayCalibration): number {
  validateCalibration(cal);
  const radians = Math.atan(cal.pixelPitchMm / cal.viewingDistanceMm);
  return radians * (180 / Math.PI) * 60;
}

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function saveCalibration(cal: DisplayCalibration, storage: KeyValueStorage): void {
  validateCalibration(cal);
  storage.setItem(STORAGE_KEY, JSON.stringify(cal));
}

export function loadCalibration(storage: KeyValueStorage): DisplayCalibration | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (raw === null) return null;
  try {
    const cal = JSON.parse(raw) as DisplayCalibration;
    validateCalibration(cal);
    return cal;
  } catch {
    return null;
  }
}
