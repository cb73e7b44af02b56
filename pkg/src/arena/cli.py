"""Command line entry points: enumerate, select, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .catalog import load_catalog
from .metrics import TipsParams, c_dist, cost_dist, rel, s_dist
from .planmodel import parse_plan_lines, serialize_plan
from .planspace import PruneThresholds, build_memo, count_plans, qep, unrank
from .sqlfront import parse_query
from .tips import (
    PlanListSource,
    SelectionState,
    b_tips_heap,
    i_tips,
    selection_value,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arena",
        description="Enumerate physical plans and pick informative alternatives.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enum = sub.add_parser(
        "enumerate", help="enumerate a query's plan space to a JSONL file"
    )
    enum.add_argument("--query", required=True, help="path to a SQL text file")
    enum.add_argument("--catalog", required=True, help="path to a catalog JSON file")
    enum.add_argument("--out", required=True, help="output path, one plan JSON per line")
    enum.add_argument(
        "--limit", type=int, default=None, help="write at most this many plans"
    )
    enum.set_defaults(func=cmd_enumerate)

    select = sub.add_parser(
        "select", help="pick informative alternatives from a plan list"
    )
    select.add_argument("--plans", required=True, help="JSONL plan list path")
    select.add_argument("--qep-id", type=int, required=True, help="plan id of the chosen plan")
    select.add_argument("--mode", choices=("batch", "step"), default="batch")
    select.add_argument("-k", type=int, default=1, help="plans to select")
    select.add_argument("--alpha", type=float, default=0.33, help="structure weight")
    select.add_argument("--beta", type=float, default=0.33, help="content weight")
    select.add_argument("--lambda", dest="lam", type=float, default=0.5, help="diversity/relevance mix")
    select.add_argument("--tau-d", type=float, default=0.5, help="structure prune threshold")
    select.add_argument("--tau-c", type=float, default=0.5, help="cost prune threshold")
    select.add_argument("--seed", type=int, default=0, help="sampling seed")
    select.add_argument(
        "--viewed", default=None, help="comma separated ids already viewed"
    )
    select.set_defaults(func=cmd_select)

    serve = sub.add_parser("serve", help="run the HTTP session service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--catalog", default=None, help="default catalog JSON file")
    serve.add_argument(
        "--demo", action="store_true", help="preload the fixed demo session"
    )
    serve.set_defaults(func=cmd_serve)

    return parser


def cmd_enumerate(args: argparse.Namespace) -> int:
    query = parse_query(Path(args.query).read_text())
    catalog = load_catalog(Path(args.catalog).read_text())
    memo = build_memo(query, catalog)
    total = count_plans(memo)
    written = total if args.limit is None else max(0, min(args.limit, total))
    with open(args.out, "w") as handle:
        for plan_id in range(written):
            handle.write(serialize_plan(unrank(memo, plan_id)))
            handle.write("\n")
    summary = {"total": total, "written": written, "qep_id": qep(memo).plan_id}
    print(json.dumps(summary))
    return 0


def _parse_viewed(raw: Optional[str], qep_id: int) -> Optional[list[int]]:
    if raw is None:
        return None
    ids = [int(part) for part in raw.split(",") if part.strip()]
    if qep_id not in ids:
        ids.insert(0, qep_id)
    return ids


def _plan_metrics(state: SelectionState, plan_id: int) -> dict:
    d = state.digest(plan_id)
    q = state.digest(state.qep_id)
    return {
        "id": plan_id,
        "s_dist": s_dist(d, q),
        "c_dist": c_dist(d, q),
        "cost_dist": cost_dist(d, q, state.bounds),
        "rel": rel(d, q, state.bounds),
    }


def cmd_select(args: argparse.Namespace) -> int:
    source = PlanListSource(parse_plan_lines(Path(args.plans).read_text()))
    qep_plan = source.plan(args.qep_id)
    state = SelectionState(
        source=source,
        qep=qep_plan,
        params=TipsParams(alpha=args.alpha, beta=args.beta, lam=args.lam),
        prune=PruneThresholds(tau_d=args.tau_d, tau_c=args.tau_c),
        seed=args.seed,
        viewed=_parse_viewed(args.viewed, args.qep_id),
    )
    if args.mode == "batch":
        selected = b_tips_heap(state, args.k)
    else:
        # step mode: k consecutive view-and-continue picks
        selected = []
        for _ in range(args.k):
            plan_id = i_tips(state)
            state.mark_viewed(plan_id)
            selected.append(plan_id)
    report = {
        "selected": selected,
        "metrics": [_plan_metrics(state, plan_id) for plan_id in selected],
        "interestingness": selection_value(state, selected),
    }
    print(json.dumps(report, indent=2))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    catalog = None
    if args.catalog is not None:
        catalog = load_catalog(Path(args.catalog).read_text())
    app = create_app(default_catalog=catalog, demo=args.demo)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
