"""Per-resource value functions for threshold admission control.

For each resource the expected-future-reward surface V(c, t) solves, level
by inventory level,

    dV(c, t)/dt = - sum_classes rho(t) * max(reward - (V(c,t) - V(c-1,t)), 0)

backward from V(., 1) = 0 with V(0, .) = 0, where the demand classes are
the (customer type, product) pairs weighted by the fluid plan's static
selection probabilities.  Integration is explicit Euler on a uniform time
grid with the class arrival mass integrated exactly per step; the
right-hand side is Lipschitz with kinks from the positive part, so the
first-order monotone scheme is the appropriate tool and preserves the
monotonicity/concavity structure of the surface in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import Instance, products_of_resource

__all__ = [
    "MarginalValue",
    "ResourceValueGrid",
    "solve_resource_hjb",
    "build_value_grids",
    "marginal_value",
    "pr_total_value",
    "interval_decomposition_bound",
]

MIN_GRID = 100
MASS_BISECTION_TOL = 1e-12


@dataclass(frozen=True)
class MarginalValue:
    """Value of one inventory unit; ``infinite`` tags the out-of-stock case.

    The sentinel is an explicit flag rather than a floating-point infinity
    so it can never leak into arithmetic; consumers must branch on it.
    """

    value: float
    infinite: bool = False

    @staticmethod
    def out_of_stock() -> "MarginalValue":
        return MarginalValue(0.0, True)


@dataclass
class ResourceValueGrid:
    """Time-discretized value surface for one resource.

    ``values[c, g]`` is V(c, times[g]) for c = 0..capacity; ``class_rewards``
    and ``class_masses`` describe the effective demand classes feeding the
    resource (classes are (product, operative reward) groups, so type-level
    reward overrides stay distinct), with ``class_masses[i, g]`` the exact
    arrival mass of class i on the grid cell [times[g], times[g+1]].
    """

    resource: int
    times: np.ndarray
    values: np.ndarray
    class_rewards: np.ndarray
    class_masses: np.ndarray
    _marginals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._marginals = self.values[1:] - self.values[:-1]

    @property
    def capacity(self) -> int:
        return self.values.shape[0] - 1

    def value_at(self, c: int, t: float) -> float:
        """V(c, t) with piecewise-linear interpolation in t."""
        if not 0 <= c <= self.capacity:
            raise ValueError(f"inventory level {c} outside 0..{self.capacity}")
        return _interp_row(self.values[c], t)


def _interp_row(row: np.ndarray, t: float) -> float:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time {t} outside [0, 1]")
    pos = t * (len(row) - 1)
    i = int(pos)
    if i >= len(row) - 1:
        return float(row[-1])
    frac = pos - i
    return float(row[i] * (1.0 - frac) + row[i + 1] * frac)


def _cumulative_on_grid(curve, times: np.ndarray) -> np.ndarray:
    """Exact integral of a piecewise-constant curve from 0 to each grid time."""
    bp = np.asarray(curve.breakpoints, dtype=float)
    rates = np.asarray(curve.rates, dtype=float)
    knots = np.concatenate([[0.0], np.cumsum(rates * np.diff(bp))])
    return np.interp(times, bp, knots)


def _demand_classes(inst: Instance, s_star: Mapping[tuple[int, int], float],
                    l: int, times: np.ndarray):
    """Group the (type, product) demand classes of resource ``l`` by their
    operative reward; returns (rewards, per-cell masses)."""
    members = products_of_resource(inst, l)
    groups: dict[float, np.ndarray] = {}
    n_cells = len(times) - 1
    for k in range(1, inst.num_types + 1):
        cum = None
        for n in sorted(members):
            s = s_star.get((k, n), 0.0)
            if s <= 0.0:
                continue
            if cum is None:
                cum = _cumulative_on_grid(inst.ctype(k).rate, times)
            r = inst.reward(k, n)
            masses = s * np.diff(cum)
            if r in groups:
                groups[r] = groups[r] + masses
            else:
                groups[r] = masses
    if not groups:
        return np.zeros(0), np.zeros((0, n_cells))
    rewards = np.array(sorted(groups))
    masses = np.vstack([groups[r] for r in rewards])
    return rewards, masses


def solve_resource_hjb(inst: Instance, s_star: Mapping[tuple[int, int], float],
                       l: int, grid_size: int = 10_000) -> ResourceValueGrid:
    """Integrate the resource's value surface backward from the horizon end.

    All inventory levels advance jointly within a step; level c reads only
    the previous column of itself and level c-1, so the update is explicit.
    """
    if grid_size < MIN_GRID:
        raise ValueError(f"grid_size must be at least {MIN_GRID}")
    res = inst.resource(l)
    C = res.capacity
    times = np.linspace(0.0, 1.0, grid_size + 1)
    rewards, masses = _demand_classes(inst, s_star, l, times)
    values = np.zeros((C + 1, grid_size + 1))
    if C > 0 and rewards.size > 0:
        for g in range(grid_size, 0, -1):
            col = values[:, g]
            delta = col[1:] - col[:-1]
            gain = np.clip(rewards[:, None] - delta[None, :], 0.0, None)
            values[1:, g - 1] = col[1:] + masses[:, g - 1] @ gain
    return ResourceValueGrid(l, times, values, rewards, masses)


def build_value_grids(inst: Instance, s_star: Mapping[tuple[int, int], float],
                      grid_size: int = 10_000) -> dict[int, ResourceValueGrid]:
    """One value grid per resource (grids are independent of one another)."""
    return {
        l: solve_resource_hjb(inst, s_star, l, grid_size)
        for l in range(1, inst.num_resources + 1)
    }


def marginal_value(grid: ResourceValueGrid, c: int, t: float) -> MarginalValue:
    """Marginal value V(c, t) - V(c-1, t), interpolated linearly in t; the
    out-of-stock sentinel at c = 0."""
    if not 0 <= c <= grid.capacity:
        raise ValueError(f"inventory level {c} outside 0..{grid.capacity}")
    if c == 0:
        return MarginalValue.out_of_stock()
    return MarginalValue(_interp_row(grid._marginals[c - 1], t))


def pr_total_value(grids: Mapping[int, ResourceValueGrid],
                   inst: Instance | None = None) -> float:
    """Total planned value: sum over resources of V_l(C_l, 0).

    When ``inst`` is given, every one of its resources must have a grid.
    """
    if inst is not None:
        missing = [l for l in range(1, inst.num_resources + 1) if l not in grids]
        if missing:
            raise ValueError(f"no value grid for resources {missing}")
    return math.fsum(g.values[g.capacity, 0] for g in grids.values())


def interval_decomposition_bound(inst: Instance, s_star: Mapping[tuple[int, int], float],
                                 l: int, grid_size: int = 10_000) -> float:
    """Lower bound on V_l(C_l, 0) from a single-unit interval partition.

    The horizon is split into C_l intervals of equal expected demand mass
    for the resource; each interval runs an independent one-unit admission
    problem whose values sum to a feasible (hence lower-bounding) policy
    value.  Interval boundaries are found by bisection on the cumulative
    demand-mass function to within ``MASS_BISECTION_TOL`` in mass.
    """
    res = inst.resource(l)
    C = res.capacity
    if C == 0:
        return 0.0
    members = products_of_resource(inst, l)
    type_weight = {
        k: math.fsum(s_star.get((k, n), 0.0) for n in members)
        for k in range(1, inst.num_types + 1)
    }

    def cum_mass(t: float) -> float:
        return math.fsum(w * inst.ctype(k).rate.cumulative(t) for k, w in type_weight.items())

    total = cum_mass(1.0)
    if total <= 1e-15:
        return 0.0

    bounds = [0.0]
    for i in range(1, C):
        target = total * i / C
        lo, hi = bounds[-1], 1.0
        while True:
            mid = 0.5 * (lo + hi)
            m = cum_mass(mid)
            if abs(m - target) <= MASS_BISECTION_TOL or hi - lo < 1e-15:
                break
            if m < target:
                lo = mid
            else:
                hi = mid
        bounds.append(mid)
    bounds.append(1.0)

    value = 0.0
    for i in range(C):
        a, b = bounds[i], bounds[i + 1]
        steps = max(MIN_GRID, int(round(grid_size * (b - a))))
        times = np.linspace(a, b, steps + 1)
        rewards, masses = _demand_classes(inst, s_star, l, times)
        g = 0.0
        for j in range(steps, 0, -1):
            gains = np.clip(rewards - g, 0.0, None)
            g += float(masses[:, j - 1] @ gains) if rewards.size else 0.0
        value += g
    return value
