/** Page wiring: calibration form, exam screen, result panel. */

import { ExamApi } from "./api.js";
import {
  DisplayCalibration,
  loadCalibration,
  minDisplayableArcmin,
  pitchFromDpi,
  saveCalibration,
} from "./calibration.js";
import { ExamFlow } from "./flow.js";
import { renderSparkline, renderStimulus, resultText } from "./render.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

function currentCalibration(): DisplayCalibration {
  const stored = loadCalibration(localStorage);
  if (stored) return stored;
  return { pixelPitchMm: pitchFromDpi(96), viewingDistanceMm: 1000 };
}

function setup(): void {
  const api = new ExamApi("");
  const flow = new ExamFlow(api, localStorage, {
    onStimulus(stimulus) {
      const cal = currentCalibration();
      renderStimulus($("stimulus") as HTMLCanvasElement, stimulus.optotype, stimulus.size_arcmin, cal);
      $("status").textContent =
        `letter ${stimulus.step}` +
        (flow.liveConfidence !== null
          ? ` - confidence ${(flow.liveConfidence * 100).toFixed(0)}%`
          : "");
    },
    onBelief(belief) {
      renderSparkline($("sparkline") as HTMLCanvasElement, belief);
    },
    onFinished(result) {
      $("status").textContent = resultText(result);
      flow.clearStoredSession();
      void api.getBelief(flow.sessionId as string).then((belief) => {
        renderSparkline($("sparkline") as HTMLCanvasElement, belief);
      }).catch(() => undefined);
    },
    onError() {
      $("status").textContent = "connection hiccup - answer again to retry";
    },
  });

  $("calibration-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const dpi = Number(($("dpi") as HTMLInputElement).value);
    const distanceMm = Number(($("distance") as HTMLInputElement).value) * 10;
    const cal = { pixelPitchMm: pitchFromDpi(dpi), viewingDistanceMm: distanceMm };
    saveCalibration(cal, localStorage);
    $("min-size").textContent =
      `smallest displayable letter: ${minDisplayableArcmin(cal).toFixed(2)} arcmin`;
  });

  $("start").addEventListener("click", () => {
    const star = ($("star-mode") as HTMLInputElement).checked;
    void flow.start(star ? { mode: { kind: "until_confident" } } : {});
  });

  window.addEventListener("keydown", (ev) => {
    void flow.handleKey(ev.key);
  });

  // refresh mid-exam: pick the pending session back up
  void flow.resume().catch(() => undefined);
}

document.addEventListener("DOMContentLoaded", setup);
