import numpy as np
import pytest

from choicealloc import (
    AttractionChoiceModel,
    BruteForceSolver,
    CustomerType,
    Instance,
    LocalSearchSolver,
    MixtureChoiceModel,
    Product,
    RateCurve,
    Resource,
    TabulatedChoiceModel,
    assortment_subproblem_bruteforce,
    assortment_subproblem_localsearch,
    assortment_subproblem_sort,
    build_master,
    dual_bound,
    master_columns,
    random_instance,
    solve_cdlp,
    solve_cdlp_enumeration,
    static_selection_probs,
)
from choicealloc.verify import DegradedSolver


def mnl(*nu):
    return AttractionChoiceModel((0.0,) * len(nu), nu)


def deterministic_taker():
    """Tabulated model with P(1, {1}) = 1."""
    return TabulatedChoiceModel({frozenset({1}): {1: 1.0}}, num_products=1)


def unit_instance(lam, capacity=1):
    return Instance(
        (Resource(1, capacity),),
        (Product(1, 1, 1.0),),
        (CustomerType(1, RateCurve.constant(lam), deterministic_taker()),),
    )


# ---------------------------------------------------------------- master LP


def test_build_master_hand_example():
    inst = unit_instance(2.0)
    H = {1: [frozenset({1})]}
    prog = build_master(inst, H)
    assert prog.objective == (2.0,)
    assert prog.rows == ((2.0,), (1.0,))
    assert prog.rhs == (1.0, 1.0)
    assert master_columns(H) == [(1, frozenset({1}))]


def test_build_master_empty_assortment_only():
    inst = unit_instance(2.0)
    sol = solve_cdlp_enumeration(
        Instance(inst.resources, inst.products,
                 (CustomerType(1, RateCurve.constant(0.0), deterministic_taker()),))
    )
    assert sol.objective == pytest.approx(0.0)
    prog = build_master(inst, {1: [frozenset()]})
    assert prog.objective == (0.0,)


def test_build_master_capacity_row_sums_types():
    inst = Instance(
        (Resource(1, 1),),
        (Product(1, 1, 1.0),),
        (
            CustomerType(1, RateCurve.constant(2.0), mnl(1.0)),
            CustomerType(2, RateCurve.constant(3.0), mnl(1.0)),
        ),
    )
    S = frozenset({1})
    prog = build_master(inst, {1: [S], 2: [S]})
    # One capacity row collecting both types at P = 1/2.
    assert prog.rows[0] == (1.0, 1.5)
    assert prog.rows[1] == (1.0, 0.0)
    assert prog.rows[2] == (0.0, 1.0)


def test_build_master_rejects_invalid_instance():
    bad = Instance(
        (Resource(1, 1),),
        (Product(1, 2, 1.0),),
        (CustomerType(1, RateCurve.constant(1.0), mnl(1.0)),),
    )
    with pytest.raises(ValueError):
        build_master(bad, {1: [frozenset()]})


# -------------------------------------------------------- subproblem: sort


def test_sort_tie_prefers_smaller_set():
    model = mnl(1.0, 1.0)
    res = assortment_subproblem_sort(model, {1: 2.0, 2: 1.0})
    assert res.assortment == {1}
    assert res.value == pytest.approx(1.0)
    assert res.guarantee == 1.0


def test_sort_drops_negative_prices():
    res = assortment_subproblem_sort(mnl(1.0, 1.0), {1: 2.0, 2: -1.0})
    assert res.assortment == {1}
    assert res.value == pytest.approx(1.0)


def test_sort_all_nonpositive_gives_empty():
    res = assortment_subproblem_sort(mnl(1.0, 1.0), {1: -0.5, 2: 0.0})
    assert res.assortment == frozenset()
    assert res.value == 0.0


def test_sort_handles_general_attraction_weights():
    # With positive mu the optimum need not be a price-ordered prefix:
    # here it is {1, 3}, skipping the mid-priced product 2.
    model = AttractionChoiceModel((0.0, 0.0, 0.25), (1.0, 1.0, 0.0))
    price = {1: 2.0, 2: 0.9, 3: 0.5}
    fast = assortment_subproblem_sort(model, price)
    slow = assortment_subproblem_bruteforce(model, price)
    assert fast.assortment == {1, 3}
    assert fast.value == pytest.approx(slow.value, abs=1e-12)
    assert fast.value == pytest.approx(2.125 / 2.25)


@pytest.mark.parametrize("case", range(200))
def test_sort_matches_bruteforce_on_random_mnl(case):
    rng = np.random.default_rng(5000 + case)
    n = int(rng.integers(1, 13))
    model = mnl(*rng.uniform(0.05, 2.0, n))
    price = {i + 1: float(rng.uniform(-1.0, 2.0)) for i in range(n)}
    fast = assortment_subproblem_sort(model, price)
    slow = assortment_subproblem_bruteforce(model, price, n_max=12)
    assert abs(fast.value - slow.value) <= 1e-9


# ------------------------------------------------- subproblem: brute force


def test_bruteforce_single_product():
    model = TabulatedChoiceModel({frozenset({1}): {1: 0.5}})
    res = assortment_subproblem_bruteforce(model, {1: 1.0})
    assert res.assortment == {1}
    assert res.value == pytest.approx(0.5)


def test_bruteforce_adversarial_table():
    # Showing the cheap product alongside raises the expensive one's share.
    model = TabulatedChoiceModel({
        frozenset({1}): {1: 0.2},
        frozenset({2}): {2: 0.9},
        frozenset({1, 2}): {1: 0.8, 2: 0.1},
    })
    res = assortment_subproblem_bruteforce(model, {1: 1.0, 2: 0.1})
    assert res.assortment == {1, 2}
    assert res.value == pytest.approx(0.8 * 1.0 + 0.1 * 0.1)


def test_bruteforce_cap():
    model = mnl(*([1.0] * 6))
    with pytest.raises(ValueError):
        assortment_subproblem_bruteforce(model, {i + 1: 1.0 for i in range(6)}, n_max=5)


# ------------------------------------------------ subproblem: local search


def test_localsearch_single_product_exact():
    res = assortment_subproblem_localsearch(mnl(1.0), {1: 2.0}, restarts=0)
    assert res.assortment == {1}
    assert res.value == pytest.approx(1.0)


def test_localsearch_empty_on_nonpositive_prices():
    res = assortment_subproblem_localsearch(mnl(1.0, 1.0), {1: -1.0, 2: 0.0}, restarts=0)
    assert res.assortment == frozenset()


def test_localsearch_near_bruteforce_on_mixtures():
    rng = np.random.default_rng(9)
    worst = 1.0
    for _ in range(30):
        n = int(rng.integers(2, 7))
        segs = []
        for w in rng.dirichlet(np.ones(2)):
            segs.append((float(w), mnl(*rng.uniform(0.1, 2.0, n))))
        model = MixtureChoiceModel(tuple(segs))
        price = {i + 1: float(rng.uniform(-0.5, 2.0)) for i in range(n)}
        ls = assortment_subproblem_localsearch(model, price, restarts=4, seed=1)
        bf = assortment_subproblem_bruteforce(model, price)
        if bf.value > 0:
            worst = min(worst, ls.value / bf.value)
        assert ls.value <= bf.value + 1e-12
    # Measured quality of the heuristic on these cases; recorded, not proven.
    assert worst >= 0.9


# ----------------------------------------------------------- solve_cdlp


def test_solve_cdlp_capacity_binding():
    sol = solve_cdlp(unit_instance(2.0))
    assert sol.objective == pytest.approx(1.0)
    assert sol.x[(1, frozenset({1}))] == pytest.approx(0.5)
    assert sol.pi[0] == pytest.approx(1.0)
    assert sol.sigma[0] == pytest.approx(0.0)
    assert sol.certified


def test_solve_cdlp_demand_binding():
    sol = solve_cdlp(unit_instance(0.5))
    assert sol.objective == pytest.approx(0.5)
    assert sol.x[(1, frozenset({1}))] == pytest.approx(1.0)
    assert sol.pi[0] == pytest.approx(0.0)


def test_solve_cdlp_zero_demand():
    sol = solve_cdlp(unit_instance(0.0))
    assert sol.objective == pytest.approx(0.0)
    assert dual_bound(sol, unit_instance(0.0)) == pytest.approx(0.0)


def test_solve_cdlp_matches_enumeration_on_random_instances():
    for seed in range(12):
        inst = random_instance(seed, max_products=6, model_kinds=("attraction", "mixture", "table"))
        enum = solve_cdlp_enumeration(inst)
        cg = solve_cdlp(inst, 0.0, BruteForceSolver())
        assert cg.objective == pytest.approx(enum.objective, rel=1e-6, abs=1e-9)
        assert cg.certified


def test_solution_support_and_feasibility_bounds():
    for seed in (3, 7, 21):
        inst = random_instance(seed)
        sol = solve_cdlp(inst)
        L, K = inst.num_resources, inst.num_types
        assert len(sol.x) <= L + K
        per_type = {k: 0.0 for k in range(1, K + 1)}
        for (k, S), v in sol.x.items():
            assert v >= 0
            per_type[k] += v
        assert all(v <= 1 + 1e-8 for v in per_type.values())
        s_star, demand = static_selection_probs(sol, inst)
        for j, r in enumerate(inst.resources):
            assert demand[j] <= r.capacity + 1e-8
        for k in range(1, K + 1):
            total = sum(p for (kk, n), p in s_star.items() if kk == k)
            assert total <= 1 + 1e-9


def test_objective_trace_monotone():
    inst = random_instance(5, max_products=6)
    sol = solve_cdlp(inst)
    trace = sol.objective_trace
    assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))


def test_static_selection_probs_hand_example():
    inst = unit_instance(2.0)
    sol = solve_cdlp(inst)
    s_star, demand = static_selection_probs(sol, inst)
    assert s_star[(1, 1)] == pytest.approx(0.5)
    assert demand[0] == pytest.approx(1.0)


def test_dual_bound_equals_objective_on_exact_solve():
    for seed in (0, 4, 9):
        inst = random_instance(seed)
        sol = solve_cdlp(inst)
        assert dual_bound(sol, inst) == pytest.approx(sol.objective, abs=1e-8)


def test_eps_solver_guarantee_precondition():
    inst = unit_instance(2.0)
    with pytest.raises(ValueError):
        solve_cdlp(inst, 0.0, LocalSearchSolver(guarantee=0.9))
    with pytest.raises(ValueError):
        solve_cdlp(inst, 0.05, DegradedSolver(0.5))  # 0.5 < 1/1.05


def test_eps_certificate_small_example():
    for seed in (1, 6, 13):
        inst = random_instance(seed, max_products=5)
        enum = solve_cdlp_enumeration(inst)
        for eps in (0.05, 0.1):
            sol = solve_cdlp(inst, eps, DegradedSolver(1.0 / (1.0 + eps)))
            assert sol.objective >= (1 - eps) * enum.objective - 1e-9
            assert dual_bound(sol, inst) >= enum.objective / (1 + eps) - 1e-8


def test_localsearch_solver_allowed_with_matching_eps():
    # guarantee 0.9 certifies eps = (1 - 0.9)/0.9; anything looser works too.
    inst = random_instance(2, max_products=5, model_kinds=("attraction", "mixture"))
    enum = solve_cdlp_enumeration(inst)
    sol = solve_cdlp(inst, 0.2, LocalSearchSolver(restarts=4, guarantee=0.9))
    assert sol.certified
    assert sol.objective >= (1 - 0.2) * enum.objective - 1e-9


def test_iteration_cap_flags_non_certified():
    inst = random_instance(8, max_products=6)
    capped = solve_cdlp(inst, max_iterations=1)
    full = solve_cdlp(inst)
    assert not capped.certified
    assert capped.objective <= full.objective + 1e-9
    assert full.certified


def test_reward_override_enters_objective():
    base = unit_instance(1.0)
    boosted = Instance(
        base.resources,
        base.products,
        (CustomerType(1, RateCurve.constant(1.0), deterministic_taker(),
                      reward_override={1: 2.0}),),
    )
    assert solve_cdlp(boosted).objective == pytest.approx(2.0 * solve_cdlp(base).objective)
