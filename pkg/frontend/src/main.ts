// Browser bootstrap: wires the forms, the mode toggle, the stepper, batch
// results, the history strip, and the compare pane to the HTTP API.

import { ApiError, makeApi, type ArenaApi } from "./api.js";
import {
  renderHistoryStrip,
  renderPairMetrics,
  renderPlanMetrics,
  renderPlanPair,
  renderTree,
} from "./render.js";
import {
  DEFAULT_PARAMS,
  StepperFlow,
  clampK,
  requiresNewSession,
  type PanelParams,
} from "./state.js";
import type { SessionInfo } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const baseUrlInput = el<HTMLInputElement>("base-url");
const sqlInput = el<HTMLTextAreaElement>("sql");
const catalogInput = el<HTMLTextAreaElement>("catalog");
const createButton = el<HTMLButtonElement>("create-session");
const demoButton = el<HTMLButtonElement>("open-demo");
const statusLine = el<HTMLElement>("status");
const sessionLabel = el<HTMLElement>("session-label");
const qepPane = el<HTMLElement>("qep-pane");
const modeBatch = el<HTMLInputElement>("mode-batch");
const modeStep = el<HTMLInputElement>("mode-step");
const batchPane = el<HTMLElement>("batch-pane");
const stepPane = el<HTMLElement>("step-pane");
const kInput = el<HTMLInputElement>("k");
const kOverride = el<HTMLInputElement>("k-override");
const runBatchButton = el<HTMLButtonElement>("run-batch");
const batchResults = el<HTMLElement>("batch-results");
const proposedPane = el<HTMLElement>("proposed-pane");
const viewContinueButton = el<HTMLButtonElement>("view-continue");
const stopButton = el<HTMLButtonElement>("stop");
const historyPane = el<HTMLElement>("history-pane");
const comparePane = el<HTMLElement>("compare-pane");
const paramBanner = el<HTMLElement>("param-banner");
const paramInputs: Record<keyof PanelParams, HTMLInputElement> = {
  alpha: el<HTMLInputElement>("alpha"),
  beta: el<HTMLInputElement>("beta"),
  lambda: el<HTMLInputElement>("lambda"),
  tau_d: el<HTMLInputElement>("tau-d"),
  tau_c: el<HTMLInputElement>("tau-c"),
  seed: el<HTMLInputElement>("seed"),
};

let api: ArenaApi = makeApi(baseUrlInput.value);
let session: SessionInfo | null = null;
let sessionParams: PanelParams = { ...DEFAULT_PARAMS };
let stepper: StepperFlow | null = null;

function readPanelParams(): PanelParams {
  const out = { ...DEFAULT_PARAMS };
  for (const key of Object.keys(paramInputs) as (keyof PanelParams)[]) {
    const raw = Number(paramInputs[key].value);
    if (Number.isFinite(raw)) out[key] = raw;
  }
  return out;
}

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.classList.toggle("error", isError);
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.status}: ${error.message}`;
  return String(error);
}

function refreshModePanes(): void {
  batchPane.hidden = !modeBatch.checked;
  stepPane.hidden = !modeStep.checked;
}

function refreshParamBanner(): void {
  const changed = requiresNewSession(
    session !== null,
    sessionParams,
    readPanelParams(),
  );
  paramBanner.hidden = !changed;
}

function renderHistory(): void {
  if (!stepper || !session) {
    historyPane.innerHTML = "";
    return;
  }
  historyPane.innerHTML = renderHistoryStrip(
    stepper.historyIds(),
    session.qep.id,
  );
  for (const chip of historyPane.querySelectorAll<HTMLButtonElement>(".chip")) {
    chip.addEventListener("click", () => {
      void showCompare(Number(chip.dataset.planId));
    });
  }
}

function renderProposed(): void {
  if (!stepper) {
    proposedPane.innerHTML = "";
    return;
  }
  if (stepper.proposed) {
    proposedPane.innerHTML =
      `<h3>proposed: plan #${stepper.proposed.plan.id}</h3>` +
      renderTree(stepper.proposed.plan) +
      renderPlanMetrics(stepper.proposed.metrics);
  } else if (stepper.exhausted) {
    proposedPane.innerHTML = `<p class="notice">${stepper.message ?? "every candidate has been viewed"}</p>`;
  } else {
    proposedPane.innerHTML = `<p class="notice">stopped</p>`;
  }
  const active = Boolean(stepper.proposed);
  viewContinueButton.disabled = !active;
  stopButton.disabled = !active;
}

async function showCompare(planId: number): Promise<void> {
  if (!session) return;
  try {
    const report = await api.compare(session.session_id, session.qep.id, planId);
    comparePane.innerHTML =
      renderPlanPair(report.a, report.b, report.nodes) +
      renderPairMetrics(report.metrics);
  } catch (error) {
    setStatus(describe(error), true);
  }
}

async function openSession(info: SessionInfo, params: PanelParams): Promise<void> {
  session = info;
  sessionParams = params;
  sessionLabel.textContent = `session ${info.session_id} — ${info.plan_count} plans, ${info.candidate_count} candidates`;
  qepPane.innerHTML =
    `<h3>chosen plan #${info.qep.id} (total ${info.qep.cost.toFixed(2)})</h3>` +
    renderTree(info.qep);
  comparePane.innerHTML = "";
  batchResults.innerHTML = "";
  stepper = await StepperFlow.open(api, info.session_id);
  renderHistory();
  renderProposed();
  refreshParamBanner();
  setStatus("session ready");
}

function paramsBody(params: PanelParams): Record<string, number> {
  return { ...params };
}

createButton.addEventListener("click", () => {
  void (async () => {
    api = makeApi(baseUrlInput.value);
    const params = readPanelParams();
    try {
      const body: Record<string, unknown> = {
        sql: sqlInput.value,
        params: paramsBody(params),
      };
      if (catalogInput.value.trim()) {
        body.catalog = JSON.parse(catalogInput.value);
      }
      const info = await api.createSession(body);
      await openSession(info, params);
    } catch (error) {
      setStatus(describe(error), true);
    }
  })();
});

demoButton.addEventListener("click", () => {
  void (async () => {
    api = makeApi(baseUrlInput.value);
    try {
      const qep = await api.getQep("demo");
      const info: SessionInfo = {
        session_id: "demo",
        qep,
        plan_count: 4,
        candidate_count: 3,
        params: {},
      };
      await openSession(info, readPanelParams());
    } catch (error) {
      setStatus(describe(error), true);
    }
  })();
});

runBatchButton.addEventListener("click", () => {
  void (async () => {
    if (!session) {
      setStatus("create a session first", true);
      return;
    }
    const k = clampK(Number(kInput.value), undefined, kOverride.checked);
    kInput.value = String(k);
    try {
      const batch = await api.batchSelect(session.session_id, k);
      batchResults.innerHTML =
        `<p>objective value: <b>${batch.interestingness.toFixed(4)}</b></p>` +
        batch.selected
          .map(
            (item) =>
              `<div class="batch-item" data-plan-id="${item.plan.id}">` +
              `<h4>plan #${item.plan.id}</h4>` +
              renderTree(item.plan) +
              renderPlanMetrics(item.metrics) +
              `</div>`,
          )
          .join("");
      for (const card of batchResults.querySelectorAll<HTMLElement>(".batch-item")) {
        card.addEventListener("click", () => {
          void showCompare(Number(card.dataset.planId));
        });
      }
      stepper = await StepperFlow.open(api, session.session_id);
      renderHistory();
      renderProposed();
      setStatus("batch selected");
    } catch (error) {
      setStatus(describe(error), true);
    }
  })();
});

viewContinueButton.addEventListener("click", () => {
  void (async () => {
    if (!stepper) return;
    try {
      await stepper.viewAndContinue();
      renderHistory();
      renderProposed();
    } catch (error) {
      setStatus(describe(error), true);
    }
  })();
});

stopButton.addEventListener("click", () => {
  stepper?.stop();
  renderProposed();
});

modeBatch.addEventListener("change", refreshModePanes);
modeStep.addEventListener("change", refreshModePanes);
for (const input of Object.values(paramInputs)) {
  input.addEventListener("input", refreshParamBanner);
}

refreshModePanes();
refreshParamBanner();
setStatus("no session");
