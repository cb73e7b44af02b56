// HTML renderers as pure string builders so they can be tested without a
// DOM. The reference plan is always the left column; difference accents
// land on the alternative (right) column, mirroring the server diff:
// "changed-op" for operator changes, "changed-cost" for cost-only changes,
// "unmatched" for nodes present on one side only.

import type {
  DiffNode,
  PairMetrics,
  PlanJson,
  PlanMetrics,
  PlanNodeJson,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function nodeToken(node: PlanNodeJson): string {
  return node.table ? `${node.op}[${node.table}]` : node.op;
}

function formatCost(cost: number): string {
  return cost.toFixed(2);
}

type DiffIndex = Map<string, DiffNode>;

export function indexDiff(nodes: DiffNode[]): DiffIndex {
  return new Map(nodes.map((n) => [n.path, n]));
}

function accentFor(side: "a" | "b", entry: DiffNode | undefined): string {
  if (!entry) return "";
  if (side === "a") {
    // the reference column only marks nodes the other tree lacks
    return entry.status === "unmatched_a" ? " unmatched" : "";
  }
  switch (entry.status) {
    case "operator_changed":
      return " changed-op";
    case "cost_changed":
      return " changed-cost";
    case "unmatched_b":
      return " unmatched";
    default:
      return "";
  }
}

function renderNode(
  node: PlanNodeJson,
  path: string,
  side: "a" | "b",
  diff: DiffIndex | null,
): string {
  const accent = diff ? accentFor(side, diff.get(path)) : "";
  const children = node.children ?? [];
  const inner = children
    .map((child, i) => renderNode(child, `${path}.${i}`, side, diff))
    .join("");
  return (
    `<div class="node${accent}">` +
    `<span class="op">${escapeHtml(nodeToken(node))}</span>` +
    `<span class="cost">${formatCost(node.cost)}</span>` +
    (inner ? `<div class="children">${inner}</div>` : "") +
    `</div>`
  );
}

export function renderTree(plan: PlanJson): string {
  return renderNode(plan.root, "0", "a", null);
}

export function renderPlanPair(
  qep: PlanJson,
  alt: PlanJson,
  nodes: DiffNode[],
): string {
  const diff = indexDiff(nodes);
  return (
    `<div class="plan-pair">` +
    `<section class="plan-col"><h3>chosen plan #${qep.id}</h3>` +
    renderNode(qep.root, "0", "a", diff) +
    `</section>` +
    `<section class="plan-col"><h3>alternative #${alt.id}</h3>` +
    renderNode(alt.root, "0", "b", diff) +
    `</section>` +
    `</div>`
  );
}

export function renderPlanMetrics(metrics: PlanMetrics): string {
  const cells = [
    ["structure", metrics.s_dist],
    ["content", metrics.c_dist],
    ["cost", metrics.cost_dist],
    ["relevance", metrics.rel],
  ] as const;
  const spans = cells
    .map(
      ([label, value]) =>
        `<span class="metric"><b>${label}</b> ${value.toFixed(4)}</span>`,
    )
    .join("");
  return `<div class="metrics">${spans}</div>`;
}

export function renderPairMetrics(metrics: PairMetrics): string {
  const cells = [
    ["structure", metrics.s_dist],
    ["content", metrics.c_dist],
    ["cost", metrics.cost_dist],
    ["combined", metrics.dist],
    ["refined", metrics.refined_dist],
  ] as const;
  const spans = cells
    .map(
      ([label, value]) =>
        `<span class="metric"><b>${label}</b> ${value.toFixed(4)}</span>`,
    )
    .join("");
  return `<div class="metrics">${spans}</div>`;
}

export function renderHistoryStrip(ids: number[], qepId: number): string {
  const chips = ids
    .map((id) => {
      const label = id === qepId ? `QEP #${id}` : `#${id}`;
      return `<button class="chip" data-plan-id="${id}">${label}</button>`;
    })
    .join("");
  return `<div class="history">${chips}</div>`;
}
