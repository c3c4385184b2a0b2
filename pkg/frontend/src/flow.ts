/**
 * Exam flow controller: one session per instance, driven by keyboard
 * events, resumable after a page refresh. All acuity math stays on the
 * server; this class only moves the protocol along and hands the service's
 * numbers to the UI verbatim.
 */

import {
  Belief,
  CreateSessionRequest,
  ExamApi,
  ExamResult,
  SessionConfig,
  Stimulus,
} from "./api.js";
import { KeyValueStorage } from "./calibration.js";
import { keyToAnswer } from "./optotype.js";

const SESSION_KEY = "acuity.session.v1";

export type FlowPhase = "idle" | "awaiting_response" | "submitting" | "finished";

export interface FlowHooks {
  onStimulus?: (stimulus: Stimulus) => void;
  onBelief?: (belief: Belief) => void;
  onFinished?: (result: ExamResult) => void;
  onError?: (error: unknown) => void;
}

export class ExamFlow {
  phase: FlowPhase = "idle";
  sessionId: string | null = null;
  stimulus: Stimulus | null = null;
  options: string[] = [];
  config: SessionConfig | null = null;
  result: ExamResult | null = null;
  liveConfidence: number | null = null;

  constructor(
    private api: ExamApi,
    private storage: KeyValueStorage,
    private hooks: FlowHooks = {},
    /** star-mode sessions poll the belief after every answer */
    private trackConfidence = false,
  ) {}

  async start(request: CreateSessionRequest): Promise<void> {
    const created = await this.api.createSession(request);
    this.sessionId = created.session_id;
    this.options = created.optotypes;
    this.config = created.config;
    this.storage.setItem(SESSION_KEY, created.session_id);
    this.trackConfidence ||= created.config.mode.kind === "until_confident";
    this.setStimulus(created.stimulus);
  }

  /** Resume the session recorded in storage; false when there is none. */
  async resume(): Promise<boolean> {
    const sessionId = this.storage.getItem(SESSION_KEY);
    if (!sessionId) return false;
    const state = await this.api.getSession(sessionId);
    this.sessionId = sessionId;
    this.options = state.optotypes;
    this.config = state.config;
    this.trackConfidence ||= state.config.mode.kind === "until_confident";
    if (state.state === "finished") {
      this.result = await this.api.getResult(sessionId);
      this.phase = "finished";
      this.hooks.onFinished?.(this.result);
    } else if (state.stimulus) {
      this.setStimulus(state.stimulus);
    }
    return true;
  }

  private setStimulus(stimulus: Stimulus): void {
    this.stimulus = stimulus;
    this.phase = "awaiting_response";
    this.hooks.onStimulus?.(stimulus);
  }

  /** Keyboard entry point; ignores keys that are not valid answers. */
  async handleKey(key: string): Promise<void> {
    if (this.phase !== "awaiting_response" || !this.stimulus) return;
    const answer = keyToAnswer(key, this.options);
    if (answer === null) return;
    await this.answer(answer);
  }

  async answer(chosen: string): Promise<void> {
    if (this.phase !== "awaiting_response" || !this.stimulus || !this.sessionId) {
      return;
    }
    this.phase = "submitting";
    try {
      const reply = await this.api.submitResponse(
        this.sessionId,
        this.stimulus.step,
        chosen,
      );
      if (this.trackConfidence && reply.status === "in_progress") {
        const belief = await this.api.getBelief(this.sessionId);
        this.liveConfidence = belief.confidence_in_band;
        this.hooks.onBelief?.(belief);
      }
      if (reply.status === "finished" && reply.result) {
        this.result = reply.result;
        this.phase = "finished";
        this.hooks.onFinished?.(reply.result);
      } else if (reply.stimulus) {
        this.setStimulus(reply.stimulus);
      }
    } catch (error) {
      this.phase = "awaiting_response"; // same step stays pending; retry is safe
      this.hooks.onError?.(error);
    }
  }

  clearStoredSession(): void {
    this.storage.setItem(SESSION_KEY, "");
  }
}

/** Snellen-style fraction text for a result, e.g. "20/40". */
export function snellenText(result: ExamResult): string {
  return `20/${Math.round(result.snellen_denominator)}`;
}
