"""Distance and interestingness mathematics over plan digests.

Everything here is a pure function of precomputed :class:`PlanDigest`
values plus a frozen cost normalization window, so results are stable
no matter when or in what order plans are compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .planmodel import PlanDigest

__all__ = [
    "TipsParams",
    "CostBounds",
    "subtree_kernel",
    "s_dist",
    "c_dist",
    "cost_dist",
    "dist",
    "rel_polynomial",
    "rel",
    "refined_dist",
    "interestingness",
]

# Guard against floating-point overshoot when normalizing the kernel.
_KAPPA_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TipsParams:
    """Weights for the combined distance and the relevance trade-off.

    ``alpha`` weights structure, ``beta`` weights content, and the
    remainder ``1 - alpha - beta`` weights cost.  ``lam`` trades off
    relevance against raw distance in the refined distance.
    """

    alpha: float = 0.33
    beta: float = 0.33
    lam: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.alpha + self.beta > 1.0:
            raise ValueError(
                f"alpha + beta must not exceed 1, got {self.alpha + self.beta}"
            )
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")

    @property
    def cost_weight(self) -> float:
        return 1.0 - self.alpha - self.beta


@dataclass(frozen=True)
class CostBounds:
    """Min-max window used to normalize cost differences.

    Computed once over the full candidate set (QEP included) and then
    frozen, so later pruning cannot shift any distance.
    """

    cost_min: float
    cost_max: float

    def __post_init__(self) -> None:
        if self.cost_min > self.cost_max:
            raise ValueError(
                f"cost_min {self.cost_min} exceeds cost_max {self.cost_max}"
            )

    @classmethod
    def from_costs(cls, costs: Iterable[float]) -> "CostBounds":
        values = list(costs)
        if not values:
            raise ValueError("cannot derive cost bounds from an empty collection")
        return cls(cost_min=min(values), cost_max=max(values))

    @property
    def span(self) -> float:
        return self.cost_max - self.cost_min


def subtree_kernel(a: PlanDigest, b: PlanDigest) -> int:
    """Count pairs of nodes rooting identically shaped subtrees."""
    small, large = a.structure_multiset, b.structure_multiset
    if len(small) > len(large):
        small, large = large, small
    total = 0
    for key, count in small.items():
        other = large.get(key)
        if other:
            total += count * other
    return total


def s_dist(a: PlanDigest, b: PlanDigest) -> float:
    """Structural distance: sqrt(1 - normalized subtree kernel)."""
    denom = math.sqrt(a.self_kernel * b.self_kernel)
    if denom == 0.0:
        # Degenerate empty digests carry no structure to tell apart.
        return 0.0
    kappa = subtree_kernel(a, b) / denom
    if kappa > 1.0:
        kappa = 1.0
    elif kappa < _KAPPA_TOLERANCE:
        kappa = max(kappa, 0.0)
    return math.sqrt(1.0 - kappa)


def _token_edit_distance(xs: Sequence[str], ys: Sequence[str]) -> int:
    # Two-row Levenshtein; unit insert/delete/substitute weights.
    if len(xs) < len(ys):
        xs, ys = ys, xs
    previous = list(range(len(ys) + 1))
    for i, x in enumerate(xs, start=1):
        current = [i]
        for j, y in enumerate(ys, start=1):
            substitute = previous[j - 1] + (x != y)
            current.append(min(previous[j] + 1, current[j - 1] + 1, substitute))
        previous = current
    return previous[-1]


def c_dist(a: PlanDigest, b: PlanDigest) -> float:
    """Content distance: normalized edit distance over preorder tokens."""
    ed = _token_edit_distance(a.token_sequence, b.token_sequence)
    if ed == 0:
        return 0.0
    return 2.0 * ed / (len(a.token_sequence) + len(b.token_sequence) + ed)


def cost_dist(a: PlanDigest, b: PlanDigest, bounds: CostBounds) -> float:
    """Cost distance under the frozen min-max window."""
    span = bounds.span
    if span == 0.0:
        return 0.0
    return abs(a.total_cost - b.total_cost) / span


def dist(a: PlanDigest, b: PlanDigest, p: TipsParams, bounds: CostBounds) -> float:
    """Weighted combination of the three component distances."""
    return (
        p.alpha * s_dist(a, b)
        + p.beta * c_dist(a, b)
        + p.cost_weight * cost_dist(a, b, bounds)
    )


def rel_polynomial(s: float, c: float, t: float) -> float:
    """Relevance surface over the three normalized distances.

    Multilinear in each argument, so its extremes over the unit cube
    sit at the corners: exactly 1 where a plan is informative (same
    structure with different cost, or a cheap structurally or content
    different plan) and 0 elsewhere.
    """
    return (
        s + c + t
        - s * c
        - 2.0 * s * t
        - 2.0 * c * t
        + 2.0 * s * c * t
    )


def rel(plan: PlanDigest, qep: PlanDigest, bounds: CostBounds) -> float:
    """Relevance of a plan relative to the query's execution plan."""
    return rel_polynomial(
        s_dist(plan, qep),
        c_dist(plan, qep),
        cost_dist(plan, qep, bounds),
    )


def refined_dist(
    a: PlanDigest,
    b: PlanDigest,
    p: TipsParams,
    qep: PlanDigest,
    bounds: CostBounds,
) -> float:
    """Distance blended with how relevant each endpoint is to the QEP."""
    relevance_part = (rel(a, qep, bounds) + rel(b, qep, bounds)) / 2.0
    return (1.0 - p.lam) * relevance_part + p.lam * dist(a, b, p, bounds)


def interestingness(
    plans: Sequence[PlanDigest],
    p: TipsParams,
    qep: PlanDigest,
    bounds: CostBounds,
) -> float:
    """Minimum pairwise refined distance over a set of plans."""
    items = list(plans)
    if len(items) < 2:
        raise ValueError("interestingness needs at least 2 plans")
    best = math.inf
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            value = refined_dist(items[i], items[j], p, qep, bounds)
            if value < best:
                best = value
    return best
