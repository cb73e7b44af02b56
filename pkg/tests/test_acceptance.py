"""End-to-end acceptance gate.

Each test here pins one externally stated requirement for the package:
golden selection outputs, exact corner values of the relevance score, the
greedy guarantee, metric laws, oracle equality for the kernel and the edit
distance, heap/basic selection equivalence, exhaustive counting checks,
pruning and sampling exactness, and dominance over naive baselines.  Sizes,
tolerances, and time limits are part of the requirement and are asserted
inside the tests.
"""

import math
import random
import time

import pytest

from helpers import (
    build_random_memo,
    levenshtein_oracle,
    naive_subtree_kernel,
    random_binary_tree,
    random_tree,
)

from arena.metrics import (
    CostBounds,
    TipsParams,
    c_dist,
    cost_dist,
    dist,
    refined_dist,
    rel_polynomial,
    s_dist,
    subtree_kernel,
)
from arena.planmodel import PhysicalPlan, PlanNode, digest, serialize_plan
from arena.planspace import (
    MemoPlanSource,
    PruneThresholds,
    count_plans,
    gfp_prune,
    qep,
    unrank,
)
from arena.tips import (
    PlanListSource,
    SelectionState,
    b_tips_basic,
    b_tips_heap,
    brute_force_opt,
    i_tips,
    laps,
    selection_value,
)

# Distance matrix of the four-plan worked example (0 is the chosen plan).
WORKED_EXAMPLE = {
    (0, 1): 3.0,
    (0, 2): 4.0,
    (0, 3): 7.0,
    (1, 2): 5.0,
    (1, 3): 9.0,
    (2, 3): 5.0,
}


def worked_example_dist(a: int, b: int) -> float:
    if a == b:
        return 0.0
    return WORKED_EXAMPLE[(min(a, b), max(a, b))]


def dig(node: PlanNode):
    return digest(PhysicalPlan.from_root(0, node))


def leaf_plan(plan_id: int) -> PhysicalPlan:
    root = PlanNode(
        operator="SeqScan", table=f"t{plan_id}", est_cost=float(plan_id + 1), est_rows=10.0
    )
    return PhysicalPlan.from_root(plan_id, root)


def worked_example_state(viewed=None) -> SelectionState:
    plans = [leaf_plan(i) for i in range(4)]
    return SelectionState(
        source=PlanListSource(plans),
        qep=plans[0],
        pair_dist=worked_example_dist,
        viewed=viewed,
    )


def random_digest_state(rng: random.Random, n: int, max_nodes: int = 6) -> SelectionState:
    plans = [PhysicalPlan.from_root(i, random_tree(rng, max_nodes=max_nodes)) for i in range(n)]
    return SelectionState(source=PlanListSource(plans), qep=plans[0])


def test_worked_example_selection_under_one_second():
    started = time.perf_counter()
    stepped = i_tips(worked_example_state(viewed=[0, 2]))
    batch = b_tips_heap(worked_example_state(), 2)
    elapsed = time.perf_counter() - started
    assert stepped == 3
    assert batch == [3, 2]
    assert elapsed < 1.0


def test_relevance_corner_categories_exact():
    # One axis differing alone is informative, as is structure+content
    # together; a large cost gap on top of any other difference is not.
    assert rel_polynomial(0, 0, 1) == 1.0
    assert rel_polynomial(0, 1, 0) == 1.0
    assert rel_polynomial(1, 0, 0) == 1.0
    assert rel_polynomial(1, 1, 0) == 1.0
    assert rel_polynomial(0, 0, 0) == 0.0
    assert rel_polynomial(0, 1, 1) == 0.0
    assert rel_polynomial(1, 0, 1) == 0.0
    assert rel_polynomial(1, 1, 1) == 0.0


def test_greedy_two_approximation_bound():
    rng = random.Random(7)
    started = time.perf_counter()
    for _ in range(1000):
        n = rng.randint(8, 25)
        k = rng.randint(2, 5)
        state = random_digest_state(rng, n)
        selected = b_tips_heap(state, k)
        achieved = selection_value(state, selected)
        _, optimal = brute_force_opt(
            state.candidates,
            state.qep_plan,
            state.params,
            state.bounds,
            k,
            source=state.source,
        )
        assert achieved >= optimal / 2.0 - 1e-9
    assert time.perf_counter() - started < 60.0


def test_distance_metric_laws_hold():
    rng = random.Random(11)
    pool = [dig(random_tree(rng)) for _ in range(400)]
    params = TipsParams()
    for _ in range(10000):
        a, b, c = (rng.choice(pool) for _ in range(3))
        bounds = CostBounds.from_costs(
            [a.total_cost, b.total_cost, c.total_cost]
        )
        components = (
            lambda x, y: s_dist(x, y),
            lambda x, y: c_dist(x, y),
            lambda x, y: cost_dist(x, y, bounds),
            lambda x, y: dist(x, y, params, bounds),
        )
        for metric in components:
            assert metric(a, a) <= 1e-9
            assert abs(metric(a, b) - metric(b, a)) <= 1e-9
            assert metric(a, b) + metric(b, c) >= metric(a, c) - 1e-9

        def refined(x, y):
            return refined_dist(x, y, params, a, bounds)

        assert abs(refined(b, c) - refined(c, b)) <= 1e-9
        assert refined(a, b) + refined(b, c) >= refined(a, c) - 1e-9


def test_subtree_kernel_matches_naive_oracle():
    rng = random.Random(13)
    for _ in range(500):
        x = random_tree(rng, max_nodes=30, max_arity=3)
        y = random_tree(rng, max_nodes=30, max_arity=3)
        assert subtree_kernel(dig(x), dig(y)) == naive_subtree_kernel(x, y)


def test_subtree_kernel_hashing_outpaces_naive():
    rng = random.Random(17)
    pairs = [
        (random_binary_tree(rng, 100), random_binary_tree(rng, 100))
        for _ in range(3)
    ]
    started = time.perf_counter()
    naive_values = [naive_subtree_kernel(x, y) for x, y in pairs]
    naive_elapsed = time.perf_counter() - started

    started = time.perf_counter()
    hashed_values = [subtree_kernel(dig(x), dig(y)) for x, y in pairs]
    hashed_elapsed = time.perf_counter() - started

    assert hashed_values == naive_values
    assert hashed_elapsed < naive_elapsed


def test_content_distance_matches_dp_oracle():
    rng = random.Random(19)
    for _ in range(500):
        a = dig(random_tree(rng))
        b = dig(random_tree(rng))
        ed = levenshtein_oracle(a.token_sequence, b.token_sequence)
        na, nb = len(a.token_sequence), len(b.token_sequence)
        expected = 0.0 if na + nb + ed == 0 else 2.0 * ed / (na + nb + ed)
        assert c_dist(a, b) == expected

    # worked pair: a two-node filter-over-scan chain vs a lone index scan
    chain = PlanNode(
        operator="Filter",
        est_cost=1.0,
        est_rows=1.0,
        children=(
            PlanNode(operator="Table Scan", table="Table name", est_cost=1.0, est_rows=1.0),
        ),
    )
    lone = PlanNode(operator="Index Scan", table="Table name", est_cost=1.0, est_rows=1.0)
    da, db = dig(chain), dig(lone)
    assert levenshtein_oracle(da.token_sequence, db.token_sequence) == 2
    assert c_dist(da, db) == 0.8


def test_heap_selection_identical_to_basic():
    rng = random.Random(23)
    for _ in range(200):
        n = rng.randint(10, 500)
        k = rng.randint(1, min(10, n - 1))
        seed_plans = rng.randrange(1 << 30)
        plan_rng = random.Random(seed_plans)
        basic_state = random_digest_state(plan_rng, n, max_nodes=4)
        plan_rng = random.Random(seed_plans)
        heap_state = random_digest_state(plan_rng, n, max_nodes=4)
        assert b_tips_basic(basic_state, k) == b_tips_heap(heap_state, k)
        assert basic_state.viewed == heap_state.viewed


def test_heap_selection_saves_evaluations():
    seed_plans = 29
    n, k = 500, 5
    basic_state = random_digest_state(random.Random(seed_plans), n, max_nodes=4)
    heap_state = random_digest_state(random.Random(seed_plans), n, max_nodes=4)
    assert b_tips_basic(basic_state, k) == b_tips_heap(heap_state, k)
    assert heap_state.eval_count < basic_state.eval_count
    assert heap_state.eval_count < k * n


def test_plan_counting_matches_exhaustive_unranking():
    rng = random.Random(31)
    for _ in range(20):
        memo = build_random_memo(
            rng, n_tables=rng.randint(2, 4), n_relations=rng.randint(2, 4)
        )
        total = count_plans(memo)
        plans = [unrank(memo, pid) for pid in range(total)]
        rendered = {serialize_plan(p) for p in plans}
        assert len(rendered) == total
        best = min(plans, key=lambda p: p.total_cost)
        chosen = qep(memo)
        assert chosen.total_cost == best.total_cost
        assert chosen.plan_id == min(
            p.plan_id for p in plans if p.total_cost == best.total_cost
        )


def test_pruning_sentinel_is_noop():
    rng = random.Random(37)
    for _ in range(5):
        memo = build_random_memo(rng, n_tables=3, n_relations=3)
        if count_plans(memo) < 6:
            continue
        source = MemoPlanSource(memo)
        k = 3
        plain = SelectionState(source=MemoPlanSource(memo), qep=source.qep())
        pruned = SelectionState(
            source=MemoPlanSource(memo),
            qep=source.qep(),
            prune=PruneThresholds(tau_d=1.01, tau_c=1.01),
            tau_g=1,
        )
        assert b_tips_heap(plain, k) == b_tips_heap(pruned, k)


def test_pruning_equals_naive_filter():
    rng = random.Random(41)
    thresholds = (0.0, 0.2, 0.5, 0.8, 1.01)
    for _ in range(10):
        memo = build_random_memo(rng, n_tables=3, n_relations=3)
        source = MemoPlanSource(memo)
        chosen = source.qep()
        ids = source.all_ids()
        bounds = CostBounds.from_costs([source.cost(pid) for pid in ids])
        qd = digest(chosen)
        tau_d = rng.choice(thresholds)
        tau_c = rng.choice(thresholds)
        kept = gfp_prune(
            ids, chosen, PruneThresholds(tau_d=tau_d, tau_c=tau_c), memo, bounds=bounds
        )
        expected = {
            pid
            for pid in ids
            if pid == chosen.plan_id
            or not (
                s_dist(source.digest(pid), qd) > tau_d
                and cost_dist(source.digest(pid), qd, bounds) > tau_c
            )
        }
        assert kept == expected


def test_pruning_shape_cache_exact():
    rng = random.Random(43)
    for _ in range(5):
        memo = build_random_memo(rng, n_tables=3, n_relations=3)
        source = MemoPlanSource(memo)
        chosen = source.qep()
        ids = source.all_ids()
        bounds = CostBounds.from_costs([source.cost(pid) for pid in ids])
        cache: dict = {}
        gfp_prune(ids, chosen, PruneThresholds(), memo, bounds=bounds, cache=cache)
        qd = digest(chosen)
        for pid in ids:
            d = source.digest(pid)
            assert cache[d.root_shape] == s_dist(d, qd)


def test_sampling_retains_qep_structured_plans():
    rng = random.Random(47)
    for _ in range(20):
        memo = build_random_memo(
            rng, n_tables=rng.randint(3, 4), n_relations=rng.randint(3, 4)
        )
        source = MemoPlanSource(memo)
        chosen = source.qep()
        sample_n = rng.randint(0, source.count())
        seed = rng.randrange(1 << 30)
        picked = laps(chosen, source, sample_n, seed=seed)
        qd = digest(chosen)
        oracle = {
            pid
            for pid in source.all_ids()
            if source.digest(pid).root_shape == qd.root_shape
            and pid != chosen.plan_id
        }
        assert oracle.issubset(set(picked))
        assert picked == laps(chosen, source, sample_n, seed=seed)


def test_selection_dominates_baselines():
    rng = random.Random(53)
    strict_wins = 0
    instances = 100
    for _ in range(instances):
        n = rng.randint(20, 40)
        k = rng.randint(3, 4)
        state = random_digest_state(rng, n, max_nodes=8)
        greedy_value = selection_value(state, b_tips_heap(state, k))

        best_random = -math.inf
        for _ in range(30):
            draw = rng.sample(state.candidates, k)
            best_random = max(best_random, selection_value(state, draw))

        cheapest = sorted(
            state.candidates, key=lambda pid: (state.source.cost(pid), pid)
        )[:k]
        cheapest_value = selection_value(state, cheapest)

        assert greedy_value >= best_random - 1e-12
        assert greedy_value >= cheapest_value - 1e-12
        if greedy_value > best_random and greedy_value > cheapest_value:
            strict_wins += 1
    assert strict_wins >= 0.8 * instances
