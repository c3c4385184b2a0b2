/**
 * Canvas/DOM rendering: the optotype, the posterior sparkline, and the
 * result panel. Values arrive straight from the service.
 */

import { Belief, ExamResult } from "./api.js";
import { DisplayCalibration } from "./calibration.js";
import { drawTumblingE, isOrientation, layoutOptotype } from "./optotype.js";
import { snellenText } from "./flow.js";

export function renderStimulus(
  canvas: HTMLCanvasElement,
  symbol: string,
  sizeArcmin: number,
  cal: DisplayCalibration,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#111";
  const glyph = layoutOptotype(symbol, sizeArcmin, cal);
  const cx = canvas.width / 2;
  const cy = canvas.height / 2;
  if (isOrientation(symbol)) {
    drawTumblingE(ctx, symbol, cx, cy, glyph.strokePx);
  } else {
    ctx.font = `${glyph.heightPx}px serif`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(symbol, cx, cy);
  }
}

/** Posterior mass over logMAR as a small filled sparkline. */
export function renderSparkline(canvas: HTMLCanvasElement, belief: Belief): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const bins = belief.histogram;
  if (bins.length === 0) return;
  const peak = Math.max(...bins.map((b) => b.mass)) || 1;
  const barW = width / bins.length;
  ctx.fillStyle = "#4a7dbd";
  bins.forEach((b, i) => {
    const h = (b.mass / peak) * (height - 2);
    ctx.fillRect(i * barW, height - h, Math.max(barW - 1, 1), h);
  });
}

export function resultText(result: ExamResult): string {
  const logmar = result.predicted_logmar.toFixed(3);
  const pct = (result.confidence * 100).toFixed(0);
  return (
    `Acuity ${logmar} logMAR (${snellenText(result)}) - ` +
    `${pct}% confidence within 10%, ${result.questions_asked} letters`
  );
}
