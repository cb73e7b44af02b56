// String-level checks of the pure HTML builders.

import { expect, test } from "vitest";

import {
  escapeHtml,
  nodeToken,
  renderHistoryStrip,
  renderPlanMetrics,
  renderPlanPair,
  renderTree,
} from "../src/render.js";
import type { DiffNode, PlanJson } from "../src/types.js";

const LEAF_PLAN: PlanJson = {
  id: 4,
  cost: 12.5,
  root: { op: "IndexScan", table: "movie_keyword", cost: 12.5, rows: 80 },
};

test("markup special characters are escaped", () => {
  expect(escapeHtml(`<b a="1">&`)).toBe("&lt;b a=&quot;1&quot;&gt;&amp;");
});

test("node tokens combine operator and table", () => {
  expect(nodeToken(LEAF_PLAN.root)).toBe("IndexScan[movie_keyword]");
  expect(nodeToken({ op: "HashJoin", cost: 1, rows: 1 })).toBe("HashJoin");
});

test("trees render operator and cost labels per node", () => {
  const html = renderTree(LEAF_PLAN);
  expect(html).toContain(`<span class="op">IndexScan[movie_keyword]</span>`);
  expect(html).toContain(`<span class="cost">12.50</span>`);
});

test("unmatched accents land on the correct columns", () => {
  const wide: PlanJson = {
    id: 0,
    cost: 3,
    root: {
      op: "NestedLoop",
      cost: 1,
      rows: 1,
      children: [
        { op: "SeqScan", table: "t", cost: 1, rows: 1 },
        { op: "SeqScan", table: "s", cost: 1, rows: 1 },
      ],
    },
  };
  const nodes: DiffNode[] = [
    {
      path: "0",
      a: null,
      b: null,
      status: "operator_changed",
    },
    {
      path: "0.0",
      a: null,
      b: null,
      status: "unmatched_a",
    },
    {
      path: "0.1",
      a: null,
      b: null,
      status: "unmatched_a",
    },
  ];
  const html = renderPlanPair(wide, LEAF_PLAN, nodes);
  const [reference, alternative] = html.split("alternative #");
  expect(reference.split(" unmatched").length - 1).toBe(2);
  expect(alternative.split(" unmatched").length - 1).toBe(0);
  expect(alternative.split("changed-op").length - 1).toBe(1);
});

test("metric values are shown exactly as served, to four places", () => {
  const html = renderPlanMetrics({
    s_dist: 0.25,
    c_dist: 0.8,
    cost_dist: 0,
    rel: 0.123456,
  });
  expect(html).toContain("<b>structure</b> 0.2500");
  expect(html).toContain("<b>content</b> 0.8000");
  expect(html).toContain("<b>relevance</b> 0.1235");
});

test("the history strip labels the chosen plan and keeps click targets", () => {
  const html = renderHistoryStrip([0, 3, 2], 0);
  expect(html).toContain(">QEP #0<");
  expect(html).toContain(`data-plan-id="3"`);
  expect(html).toContain(">#2<");
  expect(html.split("chip").length - 1).toBe(3);
});
