"""HTTP session service for serving alternative query plans.

A session pins down one plan space (enumerated from SQL or uploaded as an
explicit plan list), the plan actually chosen by the cost model, and the
append-only list of plans the caller has already looked at.  Selection
endpoints run the greedy picker on top of that state; the compare endpoint
pre-computes a node-by-node diff so clients never have to re-derive
distances themselves.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field

from .catalog import Catalog, load_catalog
from .metrics import TipsParams, c_dist, cost_dist, dist, refined_dist, rel, s_dist
from .planmodel import PhysicalPlan, PlanNode, parse_plan, serialize_plan
from .planspace import MemoPlanSource, PruneThresholds, build_memo
from .sqlfront import parse_query
from .tips import (
    PlanListSource,
    SelectionError,
    SelectionState,
    b_tips_heap,
    i_tips,
    selection_value,
)

# Two costs count as equal in diffs below this relative gap.
COST_DIFF_TOLERANCE = 1e-9


class ParamsBody(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    alpha: float = 0.33
    beta: float = 0.33
    lam: float = Field(default=0.5, alias="lambda")
    tau_d: float = 0.5
    tau_c: float = 0.5
    tau_l: int = 10
    tau_g: int = 50000
    sample_n: Optional[int] = None
    seed: int = 0

    def tips_params(self) -> TipsParams:
        return TipsParams(alpha=self.alpha, beta=self.beta, lam=self.lam)

    def prune_thresholds(self) -> PruneThresholds:
        return PruneThresholds(tau_d=self.tau_d, tau_c=self.tau_c)


class CreateSessionBody(BaseModel):
    sql: Optional[str] = None
    plans: Optional[list[dict[str, Any]]] = None
    qep_id: Optional[int] = None
    catalog: Optional[dict[str, Any]] = None
    params: Optional[ParamsBody] = None


class BatchBody(BaseModel):
    k: int
    params: Optional[ParamsBody] = None


class ViewedBody(BaseModel):
    plan_id: int


@dataclass
class Session:
    """One plan space plus the viewing history of a single client."""

    session_id: str
    state: SelectionState
    created_at: float
    lock: threading.Lock


def _plan_json(plan: PhysicalPlan) -> dict[str, Any]:
    return json.loads(serialize_plan(plan))


def _params_json(params: ParamsBody) -> dict[str, Any]:
    return params.model_dump(by_alias=True)


def _node_info(node: PlanNode) -> dict[str, Any]:
    return {
        "operator": node.operator,
        "table": node.table,
        "token": node.token,
        "cost": node.est_cost,
        "rows": node.est_rows,
    }


def _cost_close(a: float, b: float) -> bool:
    return abs(a - b) <= COST_DIFF_TOLERANCE * max(1.0, abs(a), abs(b))


def _walk_diff(
    a: Optional[PlanNode],
    b: Optional[PlanNode],
    path: str,
    out: list[dict[str, Any]],
) -> None:
    """Pair nodes positionally and flag every divergence.

    Both trees are walked in lockstep preorder.  A position present in only
    one tree marks that whole subtree as unmatched.
    """
    if a is not None and b is not None:
        if a.token != b.token:
            status = "operator_changed"
        elif not _cost_close(a.est_cost, b.est_cost):
            status = "cost_changed"
        else:
            status = "same"
        out.append({"path": path, "a": _node_info(a), "b": _node_info(b), "status": status})
        width = max(len(a.children), len(b.children))
        for i in range(width):
            ca = a.children[i] if i < len(a.children) else None
            cb = b.children[i] if i < len(b.children) else None
            _walk_diff(ca, cb, f"{path}.{i}", out)
    elif a is not None:
        out.append({"path": path, "a": _node_info(a), "b": None, "status": "unmatched_a"})
        for i, child in enumerate(a.children):
            _walk_diff(child, None, f"{path}.{i}", out)
    elif b is not None:
        out.append({"path": path, "a": None, "b": _node_info(b), "status": "unmatched_b"})
        for i, child in enumerate(b.children):
            _walk_diff(None, child, f"{path}.{i}", out)


def plan_diff(a: PhysicalPlan, b: PhysicalPlan) -> list[dict[str, Any]]:
    nodes: list[dict[str, Any]] = []
    _walk_diff(a.root, b.root, "0", nodes)
    return nodes


def _metrics_against_qep(state: SelectionState, plan_id: int) -> dict[str, float]:
    d = state.digest(plan_id)
    q = state.digest(state.qep_id)
    return {
        "s_dist": s_dist(d, q),
        "c_dist": c_dist(d, q),
        "cost_dist": cost_dist(d, q, state.bounds),
        "rel": rel(d, q, state.bounds),
    }


def _demo_session() -> Session:
    """Fixed four-plan fixture with a hand-written distance matrix.

    Used by the web client's tests: with plan 0 as the chosen plan the
    stepper must yield 3 then 2, and a batch of two must pick {3, 2}.
    """
    scan_k = PlanNode(operator="SeqScan", table="keyword", est_cost=30.0, est_rows=60.0)
    scan_mk = PlanNode(operator="SeqScan", table="movie_keyword", est_cost=45.0, est_rows=90.0)
    idx_k = PlanNode(operator="IndexScan", table="keyword", est_cost=12.0, est_rows=60.0)
    plans = [
        PhysicalPlan.from_root(
            0, PlanNode(operator="HashJoin", est_cost=40.0, est_rows=30.0, children=(scan_k, scan_mk))
        ),
        PhysicalPlan.from_root(
            1, PlanNode(operator="MergeJoin", est_cost=55.0, est_rows=30.0, children=(scan_k, scan_mk))
        ),
        PhysicalPlan.from_root(
            2, PlanNode(operator="HashJoin", est_cost=25.0, est_rows=30.0, children=(idx_k, scan_mk))
        ),
        PhysicalPlan.from_root(
            3, PlanNode(operator="NestedLoop", est_cost=90.0, est_rows=30.0, children=(scan_mk, scan_k))
        ),
    ]
    matrix = {
        (0, 1): 3.0,
        (0, 2): 4.0,
        (0, 3): 7.0,
        (1, 2): 5.0,
        (1, 3): 9.0,
        (2, 3): 5.0,
    }

    def pair_dist(x, y):
        if x == y:
            return 0.0
        key = (min(x, y), max(x, y))
        return matrix[key]

    state = SelectionState(
        source=PlanListSource(plans),
        qep=plans[0],
        pair_dist=pair_dist,
    )
    return Session(
        session_id="demo",
        state=state,
        created_at=time.time(),
        lock=threading.Lock(),
    )


def _build_state(body: CreateSessionBody, default_catalog: Optional[Catalog]) -> SelectionState:
    params = body.params or ParamsBody()
    if body.sql is not None:
        if body.catalog is not None:
            catalog = load_catalog(body.catalog)
        elif default_catalog is not None:
            catalog = default_catalog
        else:
            raise SelectionError("a catalog is required to plan SQL text")
        query = parse_query(body.sql)
        memo = build_memo(query, catalog)
        source: Any = MemoPlanSource(memo)
        qep = source.qep()
    elif body.plans is not None:
        if not body.plans:
            raise SelectionError("plan list must not be empty")
        if body.qep_id is None:
            raise SelectionError("qep_id is required with a plan list")
        parsed = [parse_plan(doc) for doc in body.plans]
        ids = {p.plan_id for p in parsed}
        if body.qep_id not in ids:
            raise SelectionError(f"qep_id {body.qep_id} is not among the uploaded plans")
        source = PlanListSource(parsed)
        qep = source.plan(body.qep_id)
    else:
        raise SelectionError("either sql or plans is required")
    return SelectionState(
        source=source,
        qep=qep,
        params=params.tips_params(),
        prune=params.prune_thresholds(),
        tau_l=params.tau_l,
        tau_g=params.tau_g,
        sample_n=params.sample_n,
        seed=params.seed,
    )


def create_app(default_catalog: Optional[Catalog] = None, demo: bool = False) -> FastAPI:
    """Build the session-serving application.

    ``default_catalog`` backs SQL sessions that do not carry their own
    catalog document.  ``demo`` preloads the fixed session named "demo".
    """
    app = FastAPI(title="plan arena")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    if demo:
        demo_session = _demo_session()
        sessions[demo_session.session_id] = demo_session

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def get_plan(session: Session, plan_id: int) -> PhysicalPlan:
        state = session.state
        if plan_id == state.qep_id:
            return state.qep_plan
        try:
            return state.source.plan(plan_id)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/health")
    def health() -> dict[str, Any]:
        return {"status": "ok", "sessions": len(sessions)}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict[str, Any]:
        try:
            state = _build_state(body, default_catalog)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = Session(
            session_id=session_id,
            state=state,
            created_at=time.time(),
            lock=threading.Lock(),
        )
        params = body.params or ParamsBody()
        return {
            "session_id": session_id,
            "qep": _plan_json(state.qep_plan),
            "plan_count": state.source.count(),
            "candidate_count": len(state.candidates),
            "params": _params_json(params),
        }

    @app.get("/sessions/{session_id}/qep")
    def get_qep(session_id: str) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            return _plan_json(session.state.qep_plan)

    @app.get("/sessions/{session_id}/viewed")
    def get_viewed(session_id: str) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            return {"viewed": list(session.state.viewed)}

    @app.post("/sessions/{session_id}/select/batch")
    def select_batch(session_id: str, body: BatchBody) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            state = session.state
            original = state.params
            if body.params is not None:
                state.params = body.params.tips_params()
            try:
                selected = b_tips_heap(state, body.k)
                value = selection_value(state, selected)
                items = [
                    {
                        "plan": _plan_json(get_plan(session, pid)),
                        "metrics": _metrics_against_qep(state, pid),
                    }
                    for pid in selected
                ]
                return {
                    "selected": items,
                    "interestingness": value,
                    "viewed": list(state.viewed),
                }
            except SelectionError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            finally:
                state.params = original

    @app.post("/sessions/{session_id}/select/step")
    def select_step(session_id: str) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            state = session.state
            try:
                pid = i_tips(state)
            except SelectionError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            return {
                "plan": _plan_json(get_plan(session, pid)),
                "metrics": _metrics_against_qep(state, pid),
                "viewed": list(state.viewed),
            }

    @app.post("/sessions/{session_id}/viewed")
    def mark_viewed(session_id: str, body: ViewedBody) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            try:
                session.state.mark_viewed(body.plan_id)
            except SelectionError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            return {"viewed": list(session.state.viewed)}

    @app.get("/sessions/{session_id}/plans/{plan_id}")
    def get_plan_by_id(session_id: str, plan_id: int) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            return _plan_json(get_plan(session, plan_id))

    @app.get("/sessions/{session_id}/compare")
    def compare(session_id: str, a: int, b: int) -> dict[str, Any]:
        session = get_session(session_id)
        with session.lock:
            state = session.state
            plan_a = get_plan(session, a)
            plan_b = get_plan(session, b)
            da = state.digest(a)
            db = state.digest(b)
            qd = state.digest(state.qep_id)
            metrics = {
                "s_dist": s_dist(da, db),
                "c_dist": c_dist(da, db),
                "cost_dist": cost_dist(da, db, state.bounds),
                "dist": dist(da, db, state.params, state.bounds),
                "refined_dist": refined_dist(da, db, state.params, qd, state.bounds),
            }
            return {
                "a": _plan_json(plan_a),
                "b": _plan_json(plan_b),
                "nodes": plan_diff(plan_a, plan_b),
                "metrics": metrics,
            }

    return app
