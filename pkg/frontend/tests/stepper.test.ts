// Stepper flow against the live fixture server. These tests share the
// server's "demo" session and its append-only history, so their order
// within this file matters: read-only first, then the mutating walk.

import { expect, inject, test } from "vitest";

import { makeApi } from "../src/api.js";
import { StepperFlow } from "../src/state.js";

const api = () => makeApi(inject("arenaUrl"));

test("stopping immediately leaves only the chosen plan in history", async () => {
  const flow = await StepperFlow.open(api(), "demo");
  expect(flow.historyIds()).toEqual([0]);
  expect(flow.proposed?.plan.id).toBe(3);

  flow.stop();
  expect(flow.proposed).toBeNull();
  expect(flow.historyIds()).toEqual([0]);

  // proposing without continuing must not touch server state
  const { viewed } = await api().getViewed("demo");
  expect(viewed).toEqual([0]);
});

test("continuing twice walks the worked example: chosen plan, then 3, then 2", async () => {
  const flow = await StepperFlow.open(api(), "demo");
  expect(flow.proposed?.plan.id).toBe(3);

  await flow.viewAndContinue();
  expect(flow.proposed?.plan.id).toBe(2);

  await flow.viewAndContinue();
  expect(flow.historyIds()).toEqual([0, 3, 2]);
  expect(flow.proposed?.plan.id).toBe(1);

  const { viewed } = await api().getViewed("demo");
  expect(viewed).toEqual([0, 3, 2]);
});

test("proposed plans carry server-computed metrics verbatim", async () => {
  const flow = await StepperFlow.open(api(), "demo");
  expect(flow.historyIds()).toEqual([0, 3, 2]);
  const metrics = flow.proposed?.metrics;
  expect(metrics).toBeDefined();
  for (const key of ["s_dist", "c_dist", "cost_dist", "rel"] as const) {
    expect(typeof metrics?.[key]).toBe("number");
  }
});

test("exhaustion is surfaced once every candidate has been viewed", async () => {
  const flow = await StepperFlow.open(api(), "demo");
  expect(flow.historyIds()).toEqual([0, 3, 2]);
  expect(flow.proposed?.plan.id).toBe(1);

  await flow.viewAndContinue();
  expect(flow.historyIds()).toEqual([0, 3, 2, 1]);
  expect(flow.proposed).toBeNull();
  expect(flow.exhausted).toBe(true);
  expect(flow.message).toMatch(/no remaining/i);
});
