"""Monte Carlo harness: Poisson sample paths, policy runs, and aggregation.

Arrival paths are sampled per type segment by segment (the piecewise-
constant envelope makes thinning acceptance-free), merged in time order.
Choice randomness is a separate stream indexed by event ordinal, so every
policy replayed on the same path with the same choice seed consumes
identical draws per arrival; paired policy comparisons rely on this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace
from typing import Mapping, Sequence

import numpy as np

from .cdlp import CdlpSolution, solve_cdlp
from .choice import sample_choice
from .model import Instance, RateCurve
from .policies import PolicyState, apply_purchase, fcfs_offer, opr_offer, pr_accept
from .valuefn import ResourceValueGrid, build_value_grids

__all__ = [
    "ArrivalEvent",
    "SamplePath",
    "ReplicationReport",
    "MonteCarloReport",
    "SimulationError",
    "generate_arrivals",
    "run_policy",
    "monte_carlo",
    "hindsight_bound",
    "estimate_ratio",
    "paired_half_width",
]

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


class SimulationError(RuntimeError):
    """A policy violated one of its own invariants during a run."""


@dataclass(frozen=True)
class ArrivalEvent:
    time: float
    ctype: int


@dataclass(frozen=True)
class SamplePath:
    """One realized arrival stream, sorted by time, with per-type counts."""

    events: tuple[ArrivalEvent, ...]
    seed: object
    counts: tuple[int, ...]


@dataclass
class ReplicationReport:
    policy: str
    reward: float
    per_resource_sales: tuple[int, ...]
    trace: list[tuple] | None = None


@dataclass
class MonteCarloReport:
    policy: str
    mean: float
    half_width: float
    reps: int
    rewards: np.ndarray


def generate_arrivals(inst: Instance, seed) -> SamplePath:
    """Sample one arrival path for every customer type, deterministic in
    ``seed`` (any seed accepted by numpy's default_rng)."""
    rng = np.random.default_rng(seed)
    events: list[tuple[float, int]] = []
    counts = []
    for k in range(1, inst.num_types + 1):
        curve = inst.ctype(k).rate
        total = 0
        for i, rate in enumerate(curve.rates):
            a, b = curve.breakpoints[i], curve.breakpoints[i + 1]
            mass = rate * (b - a)
            if mass <= 0.0:
                continue
            count = int(rng.poisson(mass))
            if count:
                times = rng.uniform(a, b, count)
                events.extend((float(t), k) for t in times)
                total += count
        counts.append(total)
    events.sort(key=lambda e: e[0])
    return SamplePath(
        events=tuple(ArrivalEvent(t, k) for t, k in events),
        seed=seed,
        counts=tuple(counts),
    )


def run_policy(inst: Instance, policy: str, sol: CdlpSolution,
               grids: Mapping[int, ResourceValueGrid] | None,
               path: SamplePath, choice_seed, *,
               relaxed: bool = False, collect_trace: bool = False) -> ReplicationReport:
    """Run one policy over one sample path.

    In the default mode offers never contain stocked-out or expired
    products.  ``relaxed`` switches fcfs/pr to static substitution: the
    drawn assortment is shown unfiltered and a customer choosing an
    unavailable product simply leaves without effect.  Choice randomness is
    drawn up front, two uniforms per event ordinal (offer draw, choice
    draw), so runs with equal seeds are paired across policies.
    """
    if policy not in ("fcfs", "pr", "opr"):
        raise ValueError(f"unknown policy {policy!r}")
    if policy in ("pr", "opr") and grids is None:
        raise ValueError(f"policy {policy!r} needs value grids")

    rng = np.random.default_rng(choice_seed)
    draws = rng.random((len(path.events), 2))

    expiry = {r.id: r.expiry for r in inst.resources}
    resource_of = {p.id: p.resource for p in inst.products}
    state = PolicyState(tuple(r.capacity for r in inst.resources), 0.0)
    reward = 0.0
    sales = [0] * inst.num_resources
    trace: list[tuple] | None = [] if collect_trace else None

    for i, ev in enumerate(path.events):
        state = dc_replace(state, now=ev.time)
        k = ev.ctype
        u_offer, u_choice = draws[i]

        if policy == "opr":
            offer = opr_offer(state, k, grids, sol, inst).assortment
            bad = [n for n in offer
                   if state.level(resource_of[n]) <= 0 or ev.time >= expiry[resource_of[n]]]
            if bad:
                raise SimulationError(
                    f"opr offered unavailable products {bad} at t={ev.time:.6f}"
                )
        else:
            offer = fcfs_offer(state, k, sol, u_offer).assortment
            if not relaxed:
                offer = frozenset(
                    n for n in offer
                    if state.level(resource_of[n]) > 0 and ev.time < expiry[resource_of[n]]
                )

        n = sample_choice(inst.ctype(k).choice, offer, u_choice)
        accepted = False
        if n > 0:
            l = resource_of[n]
            available = state.level(l) > 0 and ev.time < expiry[l]
            if policy == "fcfs":
                accepted = available
            elif policy == "pr":
                accepted = available and pr_accept(state, n, grids, inst, k)
            else:
                accepted = True
            if accepted:
                reward += inst.reward(k, n)
                sales[l - 1] += 1
                state = apply_purchase(state, n, inst)

        if trace is not None:
            trace.append((
                ev.time, k, "|".join(str(m) for m in sorted(offer)), n,
                int(accepted), inst.reward(k, n) if accepted else 0.0,
            ))

    return ReplicationReport(policy, reward, tuple(sales), trace)


def _replication_rewards(inst, policy, sol, grids, reps, base_seed, relaxed, indices):
    out = []
    for r in indices:
        path = generate_arrivals(inst, (base_seed, r, 0))
        rep = run_policy(inst, policy, sol, grids, path, (base_seed, r, 1), relaxed=relaxed)
        out.append(rep.reward)
    return out


def monte_carlo(inst: Instance, policy: str, reps: int, base_seed: int, *,
                sol: CdlpSolution | None = None,
                grids: Mapping[int, ResourceValueGrid] | None = None,
                relaxed: bool = False, eps: float = 0.0, solver=None,
                grid_size: int = 10_000, workers: int = 1) -> MonteCarloReport:
    """Independent replications with seed streams indexed by replication.

    Replication r draws its arrivals from seed (base_seed, r, 0) and its
    choice stream from (base_seed, r, 1); running several policies with the
    same base seed therefore pairs them path by path and draw by draw.
    """
    if reps < 2:
        raise ValueError("at least two replications required")
    if sol is None:
        sol = solve_cdlp(inst, eps, solver)
    if grids is None and policy in ("pr", "opr"):
        grids = build_value_grids(inst, sol.s_star, grid_size)

    indices = list(range(reps))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [indices[i::workers] for i in range(workers)]
        rewards = np.empty(reps)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_replication_rewards, inst, policy, sol, grids,
                            reps, base_seed, relaxed, chunk)
                for chunk in chunks
            ]
            for chunk, fut in zip(chunks, futures):
                for r, value in zip(chunk, fut.result()):
                    rewards[r] = value
    else:
        rewards = np.array(
            _replication_rewards(inst, policy, sol, grids, reps, base_seed, relaxed, indices)
        )

    mean = float(rewards.mean())
    half = float(Z_95 * rewards.std(ddof=1) / math.sqrt(reps))
    return MonteCarloReport(policy, mean, half, reps, rewards)


def hindsight_bound(inst: Instance, path: SamplePath, solver=None) -> float:
    """Fluid optimum recomputed with the path's realized arrival counts in
    place of the expected counts; a per-path planning benchmark."""
    types = tuple(
        dc_replace(ct, rate=RateCurve.constant(float(path.counts[i])))
        for i, ct in enumerate(inst.types)
    )
    realized = dc_replace(inst, types=types)
    return solve_cdlp(realized, 0.0, solver).objective


def estimate_ratio(report: MonteCarloReport, benchmark: float) -> tuple[float, float]:
    """Mean reward as a fraction of a positive benchmark, with its CI
    half-width propagated."""
    if benchmark <= 0:
        raise ValueError("benchmark must be positive")
    return report.mean / benchmark, report.half_width / benchmark


def paired_half_width(a: Sequence[float], b: Sequence[float]) -> float:
    """95% CI half-width of the mean difference of paired samples."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.size < 2:
        raise ValueError("need at least two paired samples")
    return float(Z_95 * diff.std(ddof=1) / math.sqrt(diff.size))
