import math

import numpy as np
import pytest

from choicealloc import (
    AttractionChoiceModel,
    CustomerType,
    Instance,
    PolicyState,
    Product,
    RateCurve,
    Resource,
    TabulatedChoiceModel,
    apply_purchase,
    build_value_grids,
    choice_probability,
    expected_revenue,
    fcfs_accept,
    fcfs_offer,
    marginal_value,
    opr_offer,
    pr_accept,
    prune_nonpositive,
    random_instance,
    solve_cdlp,
)
from choicealloc.cdlp import CdlpSolution


def mnl(*nu):
    return AttractionChoiceModel((0.0,) * len(nu), nu)


def plan_stub(active, x):
    """Hand-built plan carrying only the offer distribution."""
    return CdlpSolution(
        active=active, x=x, pi=(), sigma=(), objective=0.0, epsilon=0.0,
        s_star={}, certified=True, iterations=0,
    )


def two_product_instance(lam=1.0, capacity=2):
    return Instance(
        (Resource(1, capacity),),
        (Product(1, 1, 1.0), Product(2, 1, 0.5)),
        (CustomerType(1, RateCurve.constant(lam), mnl(1.0, 1.0)),),
    )


# ----------------------------------------------------------------- fcfs


def test_fcfs_offer_cdf_order():
    S1, S2 = frozenset({1}), frozenset({1, 2})
    sol = plan_stub({1: (S1, S2)}, {(1, S1): 0.3, (1, S2): 0.7})
    state = PolicyState((1,), 0.0)
    assert fcfs_offer(state, 1, sol, 0.2).assortment == S1
    assert fcfs_offer(state, 1, sol, 0.3).assortment == S2
    assert fcfs_offer(state, 1, sol, 0.99).assortment == S2


def test_fcfs_offer_residual_mass_is_empty_offer():
    S1 = frozenset({1})
    sol = plan_stub({1: (S1,)}, {(1, S1): 0.4})
    state = PolicyState((1,), 0.0)
    assert fcfs_offer(state, 1, sol, 0.5).assortment == frozenset()
    assert fcfs_offer(state, 1, plan_stub({1: ()}, {}), 0.1).assortment == frozenset()


def test_fcfs_offer_ignores_inventory():
    S1, S2 = frozenset({1}), frozenset({2})
    sol = plan_stub({1: (S1, S2)}, {(1, S1): 0.5, (1, S2): 0.5})
    for u in np.random.default_rng(0).random(50):
        a = fcfs_offer(PolicyState((5,), 0.1), 1, sol, u).assortment
        b = fcfs_offer(PolicyState((0,), 0.9), 1, sol, u).assortment
        assert a == b


def test_fcfs_offer_empirical_frequencies():
    S1, S2 = frozenset({1}), frozenset({1, 2})
    sol = plan_stub({1: (S1, S2)}, {(1, S1): 0.3, (1, S2): 0.7})
    state = PolicyState((1,), 0.0)
    rng = np.random.default_rng(7)
    draws = rng.random(100_000)
    hits = sum(1 for u in draws if fcfs_offer(state, 1, sol, u).assortment == S1)
    se = math.sqrt(0.3 * 0.7 / len(draws))
    assert abs(hits / len(draws) - 0.3) <= 3 * se


def test_fcfs_accept():
    inst = two_product_instance()
    assert fcfs_accept(PolicyState((3,), 0.5), 1, inst)
    assert not fcfs_accept(PolicyState((0,), 0.5), 1, inst)
    with pytest.raises(ValueError):
        fcfs_accept(PolicyState((1,), 0.5), 0, inst)


# ------------------------------------------------------------------- pr


def test_pr_accept_threshold_and_tie():
    inst = two_product_instance()
    # Flat demand of reward-1 products; marginal value at t=0 is ~0.63.
    grids = build_value_grids(inst, {(1, 1): 1.0}, 4000)
    state = PolicyState((1,), 0.0)
    assert pr_accept(state, 1, grids, inst, 1)         # 1.0 >= delta
    assert not pr_accept(state, 2, grids, inst, 1)     # 0.5 < delta
    assert not pr_accept(PolicyState((0,), 0.0), 1, grids, inst, 1)

    # Tie accepts: reward exactly equal to the marginal value.
    delta = marginal_value(grids[1], 1, 0.0).value
    tied = Instance(
        inst.resources,
        (Product(1, 1, delta), Product(2, 1, 0.5)),
        inst.types,
    )
    assert pr_accept(state, 1, grids, tied, 1)


def test_pr_accept_monotone_in_inventory():
    inst = two_product_instance(lam=3.0, capacity=3)
    grids = build_value_grids(inst, {(1, 1): 0.5, (1, 2): 0.5}, 4000)
    for t in (0.0, 0.3, 0.7):
        accepted_prev = False
        for c in (1, 2, 3):
            ok = pr_accept(PolicyState((c,), t), 2, grids, inst, 1)
            if accepted_prev:
                assert ok  # more stock can only relax the threshold
            accepted_prev = ok


# ------------------------------------------------------------------ opr


def test_opr_offers_positive_price_singleton():
    inst = Instance(
        (Resource(1, 1),),
        (Product(1, 1, 1.0),),
        (CustomerType(1, RateCurve.constant(0.4), mnl(1.0)),),
    )
    sol = solve_cdlp(inst)
    grids = build_value_grids(inst, sol.s_star, 2000)
    offer = opr_offer(PolicyState((1,), 0.0), 1, grids, sol, inst)
    assert offer.assortment == {1}


def test_opr_empty_when_marginal_dominates():
    inst = Instance(
        (Resource(1, 1),),
        (Product(1, 1, 1.0), Product(2, 1, 5.0)),
        (CustomerType(1, RateCurve.constant(6.0), mnl(4.0, 4.0)),),
    )
    sol = solve_cdlp(inst)
    grids = build_value_grids(inst, sol.s_star, 4000)
    # Early on the unit is worth nearly 5; the reward-1 product is withheld.
    offer = opr_offer(PolicyState((1,), 0.0), 1, grids, sol, inst)
    assert 1 not in offer.assortment


def test_opr_never_offers_stocked_out_or_expired():
    inst = Instance(
        (Resource(1, 1), Resource(2, 1, expiry=0.5)),
        (Product(1, 1, 1.0), Product(2, 2, 1.0)),
        (CustomerType(1, RateCurve.constant(1.0), mnl(1.0, 1.0)),),
    )
    sol = solve_cdlp(inst)
    grids = build_value_grids(inst, sol.s_star, 2000)
    assert 1 not in opr_offer(PolicyState((0, 1), 0.2), 1, grids, sol, inst).assortment
    assert 2 not in opr_offer(PolicyState((1, 1), 0.7), 1, grids, sol, inst).assortment
    assert opr_offer(PolicyState((0, 0), 0.2), 1, grids, sol, inst).assortment == frozenset()


def test_opr_floor_dominates_static_plan():
    # The offered assortment's marginal reward must cover both the pruned
    # fallback and the expected marginal reward of the static plan.
    rng = np.random.default_rng(21)
    for seed in range(10):
        inst = random_instance(seed, max_resources=2, max_products=5, max_types=2,
                               model_kinds=("attraction", "mixture"))
        sol = solve_cdlp(inst)
        grids = build_value_grids(inst, sol.s_star, 1500)
        for _ in range(8):
            inventory = tuple(int(rng.integers(0, r.capacity + 1)) for r in inst.resources)
            t = float(rng.uniform(0.0, 1.0))
            state = PolicyState(inventory, t)
            for k in range(1, inst.num_types + 1):
                model = inst.ctype(k).choice
                prices = {}
                for n in range(1, inst.num_products + 1):
                    l = inst.product(n).resource
                    if state.level(l) <= 0 or t >= inst.resource(l).expiry:
                        continue
                    mv = marginal_value(grids[l], state.level(l), t)
                    prices[n] = inst.reward(k, n) - mv.value
                offer = opr_offer(state, k, grids, sol, inst)
                got = expected_revenue(model, offer.assortment, prices) if offer.assortment else 0.0

                static_expectation = 0.0
                fallback_best = 0.0
                for S in sol.active.get(k, ()):
                    weight = sol.x[(k, S)]
                    visible = frozenset(n for n in S if n in prices)
                    static_expectation += weight * sum(
                        choice_probability(model, n, S) * max(prices[n], 0.0)
                        for n in visible
                    )
                    pruned = prune_nonpositive(visible, prices)
                    if pruned:
                        fallback_best = max(fallback_best, expected_revenue(model, pruned, prices))
                assert got >= fallback_best - 1e-9
                assert got >= static_expectation - 1e-9


def test_opr_rejects_non_monotone_table():
    table = TabulatedChoiceModel({
        frozenset({1}): {1: 0.2},
        frozenset({1, 2}): {1: 0.5, 2: 0.3},
        frozenset({2}): {2: 0.4},
    })
    inst = Instance(
        (Resource(1, 1),),
        (Product(1, 1, 1.0), Product(2, 1, 1.0)),
        (CustomerType(1, RateCurve.constant(1.0), table),),
    )
    sol = solve_cdlp(inst)
    grids = build_value_grids(inst, sol.s_star, 500)
    with pytest.raises(ValueError):
        opr_offer(PolicyState((1,), 0.0), 1, grids, sol, inst)


# -------------------------------------------------------- apply_purchase


def test_apply_purchase():
    inst = Instance(
        (Resource(1, 2), Resource(2, 1)),
        (Product(1, 1, 1.0), Product(2, 2, 1.0)),
        (CustomerType(1, RateCurve.constant(1.0), mnl(1.0, 1.0)),),
    )
    state = PolicyState((2, 1), 0.3)
    after = apply_purchase(state, 1, inst)
    assert after.inventory == (1, 1)
    assert apply_purchase(state, 0, inst) == state
    with pytest.raises(ValueError):
        apply_purchase(PolicyState((0, 1), 0.3), 1, inst)
