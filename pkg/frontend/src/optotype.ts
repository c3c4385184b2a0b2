/**
 * Optotype geometry. Standard construction: the glyph is five strokes tall
 * and five wide, so a size quoted in arcmin refers to the stroke (gap)
 * width and the whole letter subtends five times that.
 */

import { DisplayCalibration, arcminToPixels } from "./calibration.js";

export type Orientation = "up" | "down" | "left" | "right";

export interface RenderedOptotype {
  symbol: string;
  strokePx: number;
  heightPx: number;
  tooSmall: boolean;
}

export function layoutOptotype(
  symbol: string,
  sizeArcmin: number,
  cal: DisplayCalibration,
): RenderedOptotype {
  const { strokePx, tooSmall } = arcminToPixels(sizeArcmin, cal);
  return { symbol, strokePx, heightPx: 5 * strokePx, tooSmall };
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/**
 * The tumbling E as filled rectangles in glyph units (1 unit = one stroke),
 * drawn pointing right; rotate for the other orientations. Spine plus three
 * prongs on a 5x5 grid.
 */
export const E_RECTS: Rect[] = [
  { x: 0, y: 0, w: 1, h: 5 },
  { x: 1, y: 0, w: 4, h: 1 },
  { x: 1, y: 2, w: 4, h: 1 },
  { x: 1, y: 4, w: 4, h: 1 },
];

export const ROTATION_RAD: Record<Orientation, number> = {
  right: 0,
  down: Math.PI / 2,
  left: Math.PI,
  up: -Math.PI / 2,
};

/** Draw a tumbling E centred at (cx, cy) with the given stroke pixels. */
export function drawTumblingE(
  ctx: CanvasRenderingContext2D,
  orientation: Orientation,
  cx: number,
  cy: number,
  strokePx: number,
): void {
  ctx.save();
  ctx.translate(cx, cy);
  ctx.rotate(ROTATION_RAD[orientation]);
  ctx.translate(-2.5 * strokePx, -2.5 * strokePx);
  for (const r of E_RECTS) {
    ctx.fillRect(r.x * strokePx, r.y * strokePx, r.w * strokePx, r.h * strokePx);
  }
  ctx.restore();
}

const ORIENTATIONS: Orientation[] = ["up", "down", "left", "right"];

export function isOrientation(symbol: string): symbol is Orientation {
  return (ORIENTATIONS as string[]).includes(symbol);
}

/** Keyboard mapping: arrows for tumbling-E, plain letters otherwise. */
export function keyToAnswer(key: string, options: string[]): string | null {
  const arrows: Record<string, Orientation> = {
    ArrowUp: "up",
    ArrowDown: "down",
    ArrowLeft: "left",
    ArrowRight: "right",
  };
  if (key in arrows && options.includes(arrows[key])) return arrows[key];
  const letter = key.length === 1 ? key.toUpperCase() : null;
  if (letter && options.includes(letter)) return letter;
  return null;
}
