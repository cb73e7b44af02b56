// Client-side session flows. All numbers shown to the user come from the
// server; this module only sequences requests and tracks what has been
// viewed locally.

import { ApiError, type ArenaApi } from "./api.js";
import type { PlanJson, PlanMetrics } from "./types.js";

export const DEFAULT_K_CAP = 10;

/** Clamp a requested batch size to the default cap unless overridden. */
export function clampK(k: number, cap = DEFAULT_K_CAP, override = false): number {
  if (!Number.isFinite(k)) return 1;
  const n = Math.max(1, Math.floor(k));
  return override ? n : Math.min(n, cap);
}

export interface PanelParams {
  alpha: number;
  beta: number;
  lambda: number;
  tau_d: number;
  tau_c: number;
  seed: number;
}

export const DEFAULT_PARAMS: PanelParams = {
  alpha: 0.33,
  beta: 0.33,
  lambda: 0.5,
  tau_d: 0.5,
  tau_c: 0.5,
  seed: 0,
};

/**
 * Distance parameters are frozen into a session when it is created
 * (candidate set and cost bounds depend on them), so changing any of them
 * while a session is active requires starting a new session. Batch size
 * and mode are per-request and never trigger this.
 */
export function requiresNewSession(
  sessionActive: boolean,
  current: PanelParams,
  next: PanelParams,
): boolean {
  if (!sessionActive) return false;
  return (Object.keys(current) as (keyof PanelParams)[]).some(
    (key) => current[key] !== next[key],
  );
}

export interface Proposed {
  plan: PlanJson;
  metrics: PlanMetrics;
}

/**
 * One-plan-at-a-time loop: the server proposes the next most informative
 * plan given everything viewed so far; "view & continue" commits the
 * proposal to the history and asks for the next one; "stop" discards the
 * pending proposal. Proposing alone never mutates server state, so a
 * stepper that stops immediately leaves the history untouched.
 */
export class StepperFlow {
  readonly history: PlanJson[] = [];
  proposed: Proposed | null = null;
  exhausted = false;
  message: string | null = null;

  private constructor(
    private readonly api: ArenaApi,
    readonly sessionId: string,
  ) {}

  static async open(api: ArenaApi, sessionId: string): Promise<StepperFlow> {
    const flow = new StepperFlow(api, sessionId);
    const { viewed } = await api.getViewed(sessionId);
    for (const id of viewed) {
      flow.history.push(await api.getPlan(sessionId, id));
    }
    await flow.propose();
    return flow;
  }

  async propose(): Promise<void> {
    try {
      const response = await this.api.stepSelect(this.sessionId);
      this.proposed = { plan: response.plan, metrics: response.metrics };
      this.message = null;
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        this.proposed = null;
        this.exhausted = true;
        this.message = error.message;
        return;
      }
      throw error;
    }
  }

  async viewAndContinue(): Promise<void> {
    const current = this.proposed;
    if (!current) {
      throw new Error("no proposed plan to view");
    }
    await this.api.markViewed(this.sessionId, current.plan.id);
    this.history.push(current.plan);
    this.proposed = null;
    await this.propose();
  }

  stop(): void {
    this.proposed = null;
  }

  historyIds(): number[] {
    return this.history.map((plan) => plan.id);
  }
}
