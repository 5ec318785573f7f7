"""Choice-based fluid LP (CDLP) solved by column generation.

The master LP has one variable x_k(S) per (customer type, assortment)
giving the probability of showing S to an arriving type-k customer.  Its
objective collects Lambda_k * sum_{n in S} P^k(n,S) * r_kn; one capacity
row per resource and one convexity row per type bound the plan.  Columns
are generated by per-type assortment subproblems priced at r_n - pi(l_n),
where pi are the capacity duals of the restricted master; with an exact
subproblem solver the procedure terminates at the LP optimum, and with a
solver carrying a guarantee factor gamma >= 1/(1+eps) it terminates with an
eps-optimal plan certified by the terminal duals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain, combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .choice import (
    AttractionChoiceModel,
    ChoiceModel,
    choice_probability,
    expected_revenue,
)
from .lp import LinearProgram, LpSolution, solve_lp
from .model import Instance, products_of_resource, validate_instance

__all__ = [
    "SubproblemResult",
    "CdlpSolution",
    "CdlpError",
    "master_columns",
    "build_master",
    "assortment_subproblem_sort",
    "assortment_subproblem_bruteforce",
    "assortment_subproblem_localsearch",
    "SortSolver",
    "BruteForceSolver",
    "LocalSearchSolver",
    "AutoExactSolver",
    "solve_cdlp",
    "solve_cdlp_enumeration",
    "static_selection_probs",
    "dual_bound",
]

REDUCED_COST_TOL = 1e-9
SUPPORT_TOL = 1e-9


class CdlpError(RuntimeError):
    """Raised when the master LP cannot be solved at all."""


@dataclass(frozen=True)
class SubproblemResult:
    """Outcome of one assortment-pricing subproblem.

    ``value`` is the expected priced revenue per arriving customer (the
    arrival mass is applied by the caller); ``guarantee`` is a factor
    gamma in (0, 1] certifying value >= gamma * optimum (1 for exact
    solvers).
    """

    assortment: frozenset[int]
    value: float
    guarantee: float = 1.0


@dataclass(frozen=True)
class CdlpSolution:
    """An (eps-)optimal fluid plan with its dual prices.

    ``active[k]`` lists the assortments shown to type k with positive
    probability, in ascending lexicographic order of their sorted product
    ids; ``x`` holds the display probabilities, ``pi``/``sigma`` the
    capacity and convexity duals of the final master, and ``s_star`` the
    per-(type, product) static selection probabilities implied by the plan.
    """

    active: dict[int, tuple[frozenset[int], ...]]
    x: dict[tuple[int, frozenset[int]], float]
    pi: tuple[float, ...]
    sigma: tuple[float, ...]
    objective: float
    epsilon: float
    s_star: dict[tuple[int, int], float]
    certified: bool
    iterations: int
    objective_trace: tuple[float, ...] = ()


def master_columns(H: Mapping[int, Sequence[frozenset[int]]]) -> list[tuple[int, frozenset[int]]]:
    """Variable order of the master built from ``H``: types ascending, then
    assortments in their listed order."""
    return [(k, S) for k in sorted(H) for S in H[k]]


def build_master(inst: Instance, H: Mapping[int, Sequence[frozenset[int]]]) -> LinearProgram:
    """Restricted master LP over the assortment collections ``H``."""
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.errors))
    L, K = inst.num_resources, inst.num_types
    resource_of = {p.id: p.resource for p in inst.products}
    cols = master_columns(H)

    objective = []
    rows = [[] for _ in range(L + K)]
    for k, S in cols:
        lam = inst.arrival_mass(k)
        model = inst.ctype(k).choice
        cap_coef = [0.0] * L
        obj = 0.0
        for n in sorted(S):
            p = choice_probability(model, n, S)
            obj += lam * p * inst.reward(k, n)
            cap_coef[resource_of[n] - 1] += lam * p
        objective.append(obj)
        for j in range(L):
            rows[j].append(cap_coef[j])
        for kk in range(K):
            rows[L + kk].append(1.0 if kk + 1 == k else 0.0)

    rhs = [float(r.capacity) for r in inst.resources] + [1.0] * K
    return LinearProgram(tuple(objective), tuple(tuple(r) for r in rows), tuple(rhs))


def assortment_subproblem_sort(model: AttractionChoiceModel,
                               price: Mapping[int, float]) -> SubproblemResult:
    """Exact subproblem solver for attraction-form models.

    Positive-price products are ranked by the ratio price_n * (mu_n + nu_n)
    / nu_n (descending, with nu_n = 0 ranking first); the optimum is the
    best prefix of that ranking.  For MNL (mu == 0) the ratio reduces to
    the price itself.  Ties between equal-value prefixes resolve to the
    shorter prefix; equal-rank products order by ascending id.
    """
    if not isinstance(model, AttractionChoiceModel):
        raise TypeError("the sort solver requires an attraction-form model")
    ranked = []
    for n in sorted(price):
        p = price[n]
        if p <= 0.0:
            continue
        w = model.weight(n)
        gain = p * w
        if gain <= 0.0:
            continue  # zero-weight product, can never be selected
        nu = model.nu[n - 1]
        rho = gain / nu if nu > 0.0 else math.inf
        ranked.append((-rho, n, gain, nu))
    ranked.sort()

    best_value, best_set = 0.0, frozenset()
    num, den = 0.0, model.base_weight
    prefix: list[int] = []
    for _, n, gain, nu in ranked:
        num += gain
        den += nu
        prefix.append(n)
        value = num / den
        if value > best_value:
            best_value, best_set = value, frozenset(prefix)
    return SubproblemResult(best_set, best_value, 1.0)


def _lex_subsets(ids: Sequence[int]):
    return sorted(chain.from_iterable(combinations(ids, r) for r in range(len(ids) + 1)))


def assortment_subproblem_bruteforce(model: ChoiceModel, price: Mapping[int, float],
                                     n_max: int = 20) -> SubproblemResult:
    """Exhaustive subproblem solver over all subsets of the priced products.

    Ties resolve to the lexicographically smallest product set.  Intended as
    the exact oracle for any choice model at desk scale.
    """
    ids = sorted(price)
    if len(ids) > n_max:
        raise ValueError(f"brute force capped at {n_max} products, got {len(ids)}")
    best_value, best_set = 0.0, frozenset()
    for tup in _lex_subsets(ids):
        if not tup:
            continue
        S = frozenset(tup)
        value = expected_revenue(model, S, price)
        if value > best_value:
            best_value, best_set = value, S
    return SubproblemResult(best_set, best_value, 1.0)


def assortment_subproblem_localsearch(model: ChoiceModel, price: Mapping[int, float],
                                      restarts: int = 8, seed: int = 0,
                                      guarantee: float = 0.9) -> SubproblemResult:
    """Add/drop/swap local search with random restarts.

    The reported ``guarantee`` is a configured pessimistic factor, validated
    empirically against the brute-force oracle rather than proven; callers
    requiring certified optimality must use an exact solver.
    """
    ids = sorted(price)
    value_of = lambda S: expected_revenue(model, S, price) if S else 0.0

    def ascend(S: frozenset[int]) -> tuple[float, frozenset[int]]:
        current, val = S, value_of(S)
        while True:
            best_move, best_val = None, val
            for n in ids:
                cand = current - {n} if n in current else current | {n}
                v = value_of(cand)
                if v > best_val + 1e-15:
                    best_move, best_val = cand, v
            for out in sorted(current):
                for enter in ids:
                    if enter in current:
                        continue
                    cand = (current - {out}) | {enter}
                    v = value_of(cand)
                    if v > best_val + 1e-15:
                        best_move, best_val = cand, v
            if best_move is None:
                return val, current
            current, val = best_move, best_val

    starts = [frozenset()]
    rng = np.random.default_rng(seed)
    for _ in range(max(0, restarts)):
        mask = rng.random(len(ids)) < 0.5
        starts.append(frozenset(n for n, keep in zip(ids, mask) if keep))

    best_value, best_set = 0.0, frozenset()
    for S in starts:
        v, T = ascend(S)
        if v > best_value or (v == best_value and tuple(sorted(T)) < tuple(sorted(best_set))):
            best_value, best_set = v, T
    return SubproblemResult(best_set, best_value, float(guarantee))


class SortSolver:
    """Exact subproblem solver for attraction-form models."""

    guarantee = 1.0

    def __call__(self, model, price):
        return assortment_subproblem_sort(model, price)


class BruteForceSolver:
    """Exact subproblem solver for any model, capped at ``n_max`` products."""

    guarantee = 1.0

    def __init__(self, n_max: int = 20):
        self.n_max = n_max

    def __call__(self, model, price):
        return assortment_subproblem_bruteforce(model, price, self.n_max)


class LocalSearchSolver:
    """Heuristic solver with a declared (unproven) guarantee factor."""

    def __init__(self, restarts: int = 8, seed: int = 0, guarantee: float = 0.9):
        self.restarts = restarts
        self.seed = seed
        self.guarantee = float(guarantee)

    def __call__(self, model, price):
        return assortment_subproblem_localsearch(
            model, price, restarts=self.restarts, seed=self.seed, guarantee=self.guarantee
        )


class AutoExactSolver:
    """Sort for attraction models, brute force otherwise; always exact."""

    guarantee = 1.0

    def __init__(self, n_max: int = 20):
        self.n_max = n_max

    def __call__(self, model, price):
        if isinstance(model, AttractionChoiceModel):
            return assortment_subproblem_sort(model, price)
        return assortment_subproblem_bruteforce(model, price, self.n_max)


def _initial_columns(inst: Instance) -> dict[int, list[frozenset[int]]]:
    """Empty assortment plus each type's best single-product offer at face
    rewards; any nonempty start works, this one avoids degenerate first
    masters."""
    H: dict[int, list[frozenset[int]]] = {}
    for k in range(1, inst.num_types + 1):
        model = inst.ctype(k).choice
        cols = [frozenset()]
        best_n, best_v = None, 0.0
        for n in range(1, inst.num_products + 1):
            try:
                v = choice_probability(model, n, frozenset({n})) * inst.reward(k, n)
            except ValueError:
                continue  # singleton not tabulated for this type
            if v > best_v:
                best_n, best_v = n, v
        if best_n is not None:
            cols.append(frozenset({best_n}))
        H[k] = cols
    return H


def _selection_probs(inst: Instance, active, x) -> dict[tuple[int, int], float]:
    s_star: dict[tuple[int, int], float] = {}
    for k in range(1, inst.num_types + 1):
        model = inst.ctype(k).choice
        for S in active.get(k, ()):
            weight = x[(k, S)]
            for n in S:
                s_star[(k, n)] = s_star.get((k, n), 0.0) + weight * choice_probability(model, n, S)
    return s_star


def _extract_solution(inst: Instance, H, lp_sol: LpSolution, eps: float,
                      certified: bool, iterations: int,
                      trace: tuple[float, ...]) -> CdlpSolution:
    L, K = inst.num_resources, inst.num_types
    cols = master_columns(H)
    x = {}
    for (k, S), v in zip(cols, lp_sol.primal):
        if v > SUPPORT_TOL:
            x[(k, S)] = float(v)
    active = {
        k: tuple(sorted((S for (kk, S) in x if kk == k), key=lambda S: tuple(sorted(S))))
        for k in range(1, K + 1)
    }
    pi = tuple(max(0.0, float(d)) for d in lp_sol.duals[:L])
    sigma = tuple(max(0.0, float(d)) for d in lp_sol.duals[L:L + K])
    return CdlpSolution(
        active=active,
        x=x,
        pi=pi,
        sigma=sigma,
        objective=float(lp_sol.objective_value),
        epsilon=float(eps),
        s_star=_selection_probs(inst, active, x),
        certified=certified,
        iterations=iterations,
        objective_trace=trace,
    )


def solve_cdlp(inst: Instance, eps: float = 0.0,
               solver: Callable[[ChoiceModel, Mapping[int, float]], SubproblemResult] | None = None,
               max_iterations: int | None = None) -> CdlpSolution:
    """Column generation on the fluid LP.

    With ``eps == 0`` the solver must be exact (guarantee 1); with
    ``eps > 0`` any solver whose guarantee is at least 1/(1+eps) may be
    used, and the returned plan's objective is certified to be at least
    (1-eps) times the true optimum.  Hitting the iteration cap returns the
    best plan found so far flagged ``certified=False``.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.errors))
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if solver is None:
        solver = AutoExactSolver()
    required = 1.0 if eps == 0.0 else 1.0 / (1.0 + eps)
    declared = getattr(solver, "guarantee", None)
    if declared is not None and declared < required - 1e-12:
        raise ValueError(
            f"subproblem solver guarantee {declared:g} is below the "
            f"{required:g} required for eps={eps:g}"
        )

    L, N, K = inst.num_resources, inst.num_products, inst.num_types
    if max_iterations is None:
        max_iterations = 10 * (L + K + N)
    resource_of = {p.id: p.resource for p in inst.products}

    H = _initial_columns(inst)
    seen = {k: set(cols) for k, cols in H.items()}
    trace: list[float] = []
    lp_sol = None
    certified = False
    iterations = 0

    while iterations < max_iterations:
        iterations += 1
        lp_sol = solve_lp(build_master(inst, H))
        if lp_sol.status != "optimal":
            raise CdlpError(f"master LP solve failed with status {lp_sol.status!r}")
        trace.append(float(lp_sol.objective_value))
        pi = lp_sol.duals[:L]
        sigma = lp_sol.duals[L:L + K]

        improved = False
        for k in range(1, K + 1):
            lam = inst.arrival_mass(k)
            model = inst.ctype(k).choice
            price = {n: inst.reward(k, n) - pi[resource_of[n] - 1] for n in range(1, N + 1)}
            result = solver(model, price)
            if result.guarantee < required - 1e-12:
                raise ValueError(
                    f"subproblem result guarantee {result.guarantee:g} is below "
                    f"the {required:g} required for eps={eps:g}"
                )
            if lam * result.value - sigma[k - 1] > REDUCED_COST_TOL:
                if result.assortment not in seen[k]:
                    H[k].append(result.assortment)
                    seen[k].add(result.assortment)
                    improved = True
        if not improved:
            certified = True
            break

    return _extract_solution(inst, H, lp_sol, eps, certified, iterations, tuple(trace))


def solve_cdlp_enumeration(inst: Instance, n_max: int = 12) -> CdlpSolution:
    """Exact fluid plan by enumerating every assortment for every type.

    Exponential in the product count; used as the independent oracle for
    the column-generation path.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.errors))
    N = inst.num_products
    if N > n_max:
        raise ValueError(f"enumeration capped at {n_max} products, got {N}")
    subsets = [frozenset(t) for t in _lex_subsets(range(1, N + 1))]
    H = {k: list(subsets) for k in range(1, inst.num_types + 1)}
    lp_sol = solve_lp(build_master(inst, H))
    if lp_sol.status != "optimal":
        raise CdlpError(f"enumeration LP solve failed with status {lp_sol.status!r}")
    return _extract_solution(inst, H, lp_sol, 0.0, True, 1, (float(lp_sol.objective_value),))


def static_selection_probs(sol: CdlpSolution, inst: Instance):
    """Per-(type, product) selection probabilities implied by the plan, and
    the per-resource expected demand they induce.

    s*_kn sums x_k(S) * P^k(n, S) over the active assortments containing n;
    expected demand of resource j is sum_k Lambda_k sum_{n in N_j} s*_kn.
    """
    s_star = _selection_probs(inst, sol.active, sol.x)
    expected_demand = []
    for j in range(1, inst.num_resources + 1):
        members = products_of_resource(inst, j)
        expected_demand.append(
            math.fsum(
                inst.arrival_mass(k) * s_star.get((k, n), 0.0)
                for k in range(1, inst.num_types + 1)
                for n in members
            )
        )
    return s_star, tuple(expected_demand)


def dual_bound(sol: CdlpSolution, inst: Instance) -> float:
    """Value of the terminal duals: sum_j C_j pi(j) + sum_k sigma(k).

    Equals the objective on an exact solve; on an eps run it is certified
    to be at least optimum/(1+eps).
    """
    caps = math.fsum(r.capacity * p for r, p in zip(inst.resources, sol.pi))
    return caps + math.fsum(sol.sigma)
