"""Selection of informative alternative plans.

Candidates come from a plan source (a memo's plan space or an explicit
plan list).  Selection greedily maximizes the minimum refined distance
to everything already viewed, starting from the query's own plan.  Two
interchangeable batch implementations exist: a straightforward
recompute-everything loop and a lazy max-heap that skips most distance
evaluations; they return byte-identical output.
"""

from __future__ import annotations

import heapq
import math
import random
from typing import Callable, Iterable, Optional, Sequence

from .metrics import CostBounds, TipsParams, refined_dist
from .planmodel import PhysicalPlan, PlanDigest, digest as plan_digest
from .planspace import PruneThresholds, ShapeGuardExceeded, gfp_prune

__all__ = [
    "SelectionError",
    "PlanListSource",
    "SelectionState",
    "laps",
    "i_tips",
    "b_tips_basic",
    "b_tips_heap",
    "brute_force_opt",
    "selection_value",
    "DEFAULT_JOIN_TRIGGER",
    "DEFAULT_SIZE_TRIGGER",
    "DEFAULT_SAMPLE_CAP",
]

# Sampling kicks in above this many joined tables.
DEFAULT_JOIN_TRIGGER = 10
# Pruning kicks in above this many candidates.
DEFAULT_SIZE_TRIGGER = 50000
# Default sample size (capped by the space itself).
DEFAULT_SAMPLE_CAP = 5000

# Brute-force subset enumeration ceiling.
_BRUTE_FORCE_BUDGET = 10**6


class SelectionError(ValueError):
    """Raised for invalid selection requests or exhausted candidates."""


class PlanListSource:
    """Plan source over an explicit collection of plans."""

    def __init__(self, plans: Iterable[PhysicalPlan]):
        self._plans: dict[int, PhysicalPlan] = {}
        for plan in plans:
            if plan.plan_id in self._plans:
                raise SelectionError(f"duplicate plan id {plan.plan_id}")
            self._plans[plan.plan_id] = plan
        self._ids = sorted(self._plans)
        self._digests: dict[int, PlanDigest] = {}

    def count(self) -> int:
        return len(self._ids)

    def all_ids(self) -> list[int]:
        return list(self._ids)

    def sample_ids(self, n: int, rng: random.Random) -> list[int]:
        if n >= len(self._ids):
            return list(self._ids)
        return rng.sample(self._ids, n)

    def plan(self, plan_id: int) -> PhysicalPlan:
        try:
            return self._plans[plan_id]
        except KeyError:
            raise SelectionError(f"unknown plan id {plan_id}") from None

    def digest(self, plan_id: int) -> PlanDigest:
        d = self._digests.get(plan_id)
        if d is None:
            d = plan_digest(self.plan(plan_id))
            self._digests[plan_id] = d
        return d

    def cost(self, plan_id: int) -> float:
        return self.digest(plan_id).total_cost

    def structure_key(self, plan_id: int) -> bytes:
        return self.digest(plan_id).root_shape

    def ids_with_structure(self, key: bytes) -> tuple[int, ...]:
        return tuple(
            pid for pid in self._ids if self.digest(pid).root_shape == key
        )


def _leaf_count(node) -> int:
    if not node.children:
        return 1
    return sum(_leaf_count(child) for child in node.children)


def laps(
    qep: PhysicalPlan,
    space,
    sample_n: int,
    rng: Optional[random.Random] = None,
    seed: int = 0,
) -> list[int]:
    """Candidate set: all plans shaped like the QEP plus a uniform sample.

    The QEP itself is excluded.  Structure matches come from the plan
    source's shape index when available, otherwise from a digest scan.
    """
    if sample_n < 0:
        raise SelectionError("sample_n must be non-negative")
    if rng is None:
        rng = random.Random(seed)
    key = plan_digest(qep).root_shape
    try:
        same = set(space.ids_with_structure(key))
    except ShapeGuardExceeded:
        same = {
            pid for pid in space.all_ids() if space.structure_key(pid) == key
        }
    chosen = same | set(space.sample_ids(sample_n, rng))
    chosen.discard(qep.plan_id)
    return sorted(chosen)


class SelectionState:
    """Mutable selection session over one plan space.

    Construction fixes the candidate set (sampling it when the query
    joins more than ``tau_l`` tables) and freezes the cost bounds over
    candidates plus the QEP.  Pruning is deferred to the first
    selection call and applies only when candidates outnumber
    ``tau_g``.  ``pair_dist`` overrides the refined distance with an
    externally supplied function of two plan ids.
    """

    def __init__(
        self,
        source=None,
        qep: Optional[PhysicalPlan] = None,
        *,
        params: Optional[TipsParams] = None,
        prune: Optional[PruneThresholds] = None,
        tau_l: int = DEFAULT_JOIN_TRIGGER,
        tau_g: int = DEFAULT_SIZE_TRIGGER,
        sample_n: Optional[int] = None,
        seed: int = 0,
        pair_dist: Optional[Callable[[int, int], float]] = None,
        candidates: Optional[Iterable[int]] = None,
        viewed: Optional[Sequence[int]] = None,
        bounds: Optional[CostBounds] = None,
    ):
        if qep is None:
            raise SelectionError("a QEP plan is required")
        self.source = source
        self.qep_plan = qep
        self.qep_id = qep.plan_id
        self.params = params if params is not None else TipsParams()
        self.prune = prune if prune is not None else PruneThresholds()
        self.tau_l = tau_l
        self.tau_g = tau_g
        self.seed = seed
        self.pair_dist = pair_dist
        self._qep_digest = plan_digest(qep)
        if sample_n is None:
            sample_n = min(DEFAULT_SAMPLE_CAP, source.count()) if source else 0
        self.sample_n = sample_n

        if candidates is not None:
            chosen = set(candidates)
        elif source is None:
            raise SelectionError("either a plan source or candidates are required")
        elif _leaf_count(qep.root) > tau_l:
            chosen = set(laps(qep, source, sample_n, seed=seed))
        else:
            chosen = set(source.all_ids())
        chosen.discard(self.qep_id)
        self.candidates: list[int] = sorted(chosen)

        if bounds is None:
            if source is not None:
                costs = [source.cost(i) for i in self.candidates]
                costs.append(qep.total_cost)
                bounds = CostBounds.from_costs(costs)
            else:
                bounds = CostBounds(qep.total_cost, qep.total_cost)
        self.bounds = bounds

        if viewed is None:
            self.viewed: list[int] = [self.qep_id]
        else:
            self.viewed = list(viewed)
            if self.qep_id not in self.viewed:
                raise SelectionError("viewed must contain the QEP")
            allowed = set(self.candidates) | {self.qep_id}
            unknown = [v for v in self.viewed if v not in allowed]
            if unknown:
                raise SelectionError(f"viewed ids {unknown} are not candidates")

        self.structure_cache: dict = {}
        self.eval_count = 0
        self._gfp_done = False

    def digest(self, plan_id: int) -> PlanDigest:
        if plan_id == self.qep_id:
            return self._qep_digest
        return self.source.digest(plan_id)

    def refined(self, a: int, b: int) -> float:
        """Refined distance between two plan ids; counts evaluations."""
        self.eval_count += 1
        if self.pair_dist is not None:
            return self.pair_dist(a, b)
        return refined_dist(
            self.digest(a), self.digest(b), self.params, self._qep_digest,
            self.bounds,
        )

    def mark_viewed(self, plan_id: int) -> None:
        if plan_id != self.qep_id and plan_id not in set(self.candidates):
            raise SelectionError(f"unknown plan id {plan_id}")
        if plan_id not in self.viewed:
            self.viewed.append(plan_id)

    def ensure_pruned(self) -> None:
        """Apply structure/cost pruning once, if the space is large."""
        if self._gfp_done:
            return
        self._gfp_done = True
        if len(self.candidates) <= self.tau_g or self.source is None:
            return
        kept = gfp_prune(
            self.candidates,
            self.qep_plan,
            self.prune,
            None,
            bounds=self.bounds,
            cache=self.structure_cache,
            source=self.source,
        )
        kept.update(v for v in self.viewed if v != self.qep_id)
        self.candidates = sorted(kept)


def i_tips(state: SelectionState) -> int:
    """Unviewed candidate farthest (min refined distance) from the viewed set.

    Ties go to the smallest plan id.  Does not mutate the viewed list.
    """
    state.ensure_pruned()
    viewed_set = set(state.viewed)
    best_id: Optional[int] = None
    best_val = -math.inf
    for pid in state.candidates:
        if pid in viewed_set:
            continue
        val = min(state.refined(pid, v) for v in state.viewed)
        if val > best_val:
            best_id, best_val = pid, val
    if best_id is None:
        raise SelectionError("no remaining candidates")
    return best_id


def _check_batch_args(state: SelectionState, k: int) -> None:
    if k < 1:
        raise SelectionError("k must be at least 1")
    state.ensure_pruned()
    if k > len(state.candidates):
        raise SelectionError(
            f"k {k} exceeds candidate count {len(state.candidates)}"
        )


def b_tips_basic(state: SelectionState, k: int) -> list[int]:
    """k greedy selections, each recomputing all candidate distances."""
    _check_batch_args(state, k)
    state.viewed = [state.qep_id]
    out: list[int] = []
    for _ in range(k):
        pid = i_tips(state)
        state.mark_viewed(pid)
        out.append(pid)
    return out


def b_tips_heap(state: SelectionState, k: int) -> list[int]:
    """Same output as the basic loop via lazily revalidated cached minima.

    Each heap entry carries the viewed-set size at cache time; cached
    minima only shrink as the viewed set grows, so an entry whose stale
    value already falls below the running best can stay unexamined.
    Popped stale entries are refreshed against exactly the viewed plans
    added since their stamp.
    """
    _check_batch_args(state, k)
    state.viewed = [state.qep_id]
    heap = [
        (-state.refined(pid, state.qep_id), pid, 1) for pid in state.candidates
    ]
    heapq.heapify(heap)
    out: list[int] = []
    for _ in range(k):
        best_id: Optional[int] = None
        best_val = -math.inf
        best_stamp = 0
        held: list[tuple[float, int, int]] = []
        while heap:
            if best_id is not None and -heap[0][0] < best_val:
                break
            negval, pid, stamp = heapq.heappop(heap)
            val = -negval
            if stamp < len(state.viewed):
                for v in state.viewed[stamp:]:
                    refreshed = state.refined(pid, v)
                    if refreshed < val:
                        val = refreshed
                stamp = len(state.viewed)
            if (
                best_id is None
                or val > best_val
                or (val == best_val and pid < best_id)
            ):
                if best_id is not None:
                    held.append((-best_val, best_id, best_stamp))
                best_id, best_val, best_stamp = pid, val, stamp
            else:
                held.append((-val, pid, stamp))
        if best_id is None:
            raise SelectionError("no remaining candidates")
        out.append(best_id)
        state.mark_viewed(best_id)
        for item in held:
            heapq.heappush(heap, item)
    return out


def selection_value(state: SelectionState, selected: Iterable[int]) -> float:
    """Achieved objective: min pairwise refined distance over selected + QEP."""
    members = [state.qep_id]
    members.extend(pid for pid in selected if pid != state.qep_id)
    if len(members) < 2:
        raise SelectionError("at least one selected plan is required")
    best = math.inf
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            value = state.refined(members[i], members[j])
            if value < best:
                best = value
    return best


def brute_force_opt(
    candidates: Iterable[int],
    qep: PhysicalPlan,
    params: TipsParams,
    bounds: Optional[CostBounds],
    k: int,
    source=None,
    pair_dist: Optional[Callable[[int, int], float]] = None,
) -> tuple[set[int], float]:
    """Exact maximizer of the selection objective over all k-subsets.

    The objective includes the QEP, matching the greedy seeding.  Uses
    depth-first search with min-so-far pruning; refuses instances whose
    subset count passes the enumeration budget.
    """
    ids = sorted(set(candidates) - {qep.plan_id})
    n = len(ids)
    if k < 1:
        raise SelectionError("k must be at least 1")
    if k > n:
        raise SelectionError(f"k {k} exceeds candidate count {n}")
    if math.comb(n, k) > _BRUTE_FORCE_BUDGET:
        raise SelectionError("combinatorial budget exceeded")

    qid = qep.plan_id
    if pair_dist is None:
        if source is None:
            raise SelectionError("a plan source or pair_dist is required")
        qd = plan_digest(qep)
        digests = {pid: source.digest(pid) for pid in ids}
        digests[qid] = qd

        def pair_dist(a: int, b: int) -> float:
            return refined_dist(digests[a], digests[b], params, qd, bounds)

    everyone = ids + [qid]
    pair: dict[tuple[int, int], float] = {}
    for i in range(len(everyone)):
        for j in range(i + 1, len(everyone)):
            a, b = everyone[i], everyone[j]
            pair[(a, b)] = pair[(b, a)] = pair_dist(a, b)

    best_value = -math.inf
    best_subset: tuple[int, ...] = ()

    def search(start: int, chosen: list[int], current_min: float) -> None:
        nonlocal best_value, best_subset
        if len(chosen) == k:
            if current_min > best_value:
                best_value = current_min
                best_subset = tuple(chosen)
            return
        need = k - len(chosen)
        for i in range(start, n - need + 1):
            pid = ids[i]
            narrowed = min(current_min, pair[(pid, qid)])
            for other in chosen:
                value = pair[(pid, other)]
                if value < narrowed:
                    narrowed = value
            if narrowed > best_value:
                chosen.append(pid)
                search(i + 1, chosen, narrowed)
                chosen.pop()

    search(0, [], math.inf)
    return set(best_subset), best_value
