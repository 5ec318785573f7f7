"""Dense two-phase primal simplex for small linear programs.

Problems are maximizations of ``c @ x`` subject to ``A x <= b`` and
``x >= 0``.  The solver uses Bland's entering/leaving rule, so it cannot
cycle and is fully deterministic; degenerate optima resolve toward the
lowest variable index.  Primal and dual values are re-derived from the
final basis by a direct linear solve rather than read off the pivoted
tableau, which keeps the certificates clean of accumulated roundoff.  The
dual values are load-bearing downstream (column-generation reduced costs),
hence the insistence on exact basis duals over speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["LinearProgram", "LpSolution", "solve_lp",
           "FEASIBILITY_TOL", "OPTIMALITY_TOL", "PIVOT_TOL"]

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-11


@dataclass(frozen=True)
class LinearProgram:
    """max objective @ x  s.t.  rows @ x <= rhs,  x >= 0."""

    objective: tuple[float, ...]
    rows: tuple[tuple[float, ...], ...]
    rhs: tuple[float, ...]

    def __post_init__(self):
        obj = tuple(float(v) for v in self.objective)
        rows = tuple(tuple(float(v) for v in row) for row in self.rows)
        rhs = tuple(float(v) for v in self.rhs)
        if len(rows) != len(rhs):
            raise ValueError("one right-hand side per constraint row required")
        if any(len(row) != len(obj) for row in rows):
            raise ValueError("constraint row width must match the objective length")
        flat = list(obj) + [v for row in rows for v in row] + list(rhs)
        if any(not math.isfinite(v) for v in flat):
            raise ValueError("all coefficients must be finite")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "rhs", rhs)

    def pretty(self) -> str:
        """Human-readable dump for debugging."""
        def terms(coeffs):
            parts = [f"{v:+g} x{j + 1}" for j, v in enumerate(coeffs) if v != 0.0]
            return " ".join(parts) if parts else "0"

        lines = [f"max  {terms(self.objective)}"]
        lines += [f"s.t. {terms(row)} <= {b:g}" for row, b in zip(self.rows, self.rhs)]
        lines.append(f"     x1..x{len(self.objective)} >= 0")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome; primal/duals are meaningful only when optimal."""

    status: str  # "optimal" | "infeasible" | "unbounded" | "failed"
    primal: tuple[float, ...] = ()
    duals: tuple[float, ...] = ()
    objective_value: float = float("nan")


def _run_simplex(T, basis, cost, allowed, max_iters):
    """Primal simplex iterations on the dictionary ``T`` (rows = B^-1 [M | b]).

    Returns "optimal", "unbounded", or "failed" (iteration cap).
    """
    ncols = T.shape[1] - 1
    for _ in range(max_iters):
        cb = cost[basis]
        reduced = cost[:ncols] - cb @ T[:, :ncols]
        candidates = np.nonzero((reduced > OPTIMALITY_TOL) & allowed)[0]
        if candidates.size == 0:
            return "optimal"
        j = int(candidates[0])  # Bland: lowest eligible index
        col = T[:, j]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        i = int(ties[np.argmin([basis[r] for r in ties])])  # Bland: lowest basic var
        T[i] /= T[i, j]
        others = np.arange(T.shape[0]) != i
        T[others] -= np.outer(T[others, j], T[i])
        basis[i] = j
    return "failed"


def solve_lp(program: LinearProgram) -> LpSolution:
    """Solve a small LP; never returns a silently wrong answer (numerical
    breakdown surfaces as status "failed")."""
    m = len(program.rows)
    n = len(program.objective)
    c = np.asarray(program.objective, dtype=float)
    if m == 0:
        if np.any(c > OPTIMALITY_TOL):
            return LpSolution("unbounded")
        return LpSolution("optimal", (0.0,) * n, (), 0.0)

    A = np.asarray(program.rows, dtype=float)
    b = np.asarray(program.rhs, dtype=float)
    sign = np.where(b < 0.0, -1.0, 1.0)
    art_rows = np.nonzero(sign < 0)[0]
    n_art = art_rows.size

    # Columns of the equality system: structural, slack (coefficient = row
    # sign), then one artificial per flipped row.
    M = np.hstack([A * sign[:, None], np.diag(sign), np.zeros((m, n_art))])
    for a, i in enumerate(art_rows):
        M[i, n + m + a] = 1.0
    ncols = n + m + n_art

    T = np.hstack([M, (sign * b)[:, None]])
    basis = [n + i if sign[i] > 0 else n + m + int(np.nonzero(art_rows == i)[0][0])
             for i in range(m)]
    basis = np.array(basis, dtype=int)
    max_iters = 200 + 50 * (m + ncols)

    if n_art:
        cost1 = np.zeros(ncols)
        cost1[n + m:] = -1.0
        status = _run_simplex(T, basis, cost1, np.ones(ncols, dtype=bool), max_iters)
        if status == "failed":
            return LpSolution("failed")
        phase1 = cost1[basis] @ T[:, -1]
        if phase1 < -FEASIBILITY_TOL * (1.0 + float(np.abs(b).max())):
            return LpSolution("infeasible")
        # Drive any zero-valued artificials out of the basis when possible.
        for i in range(m):
            if basis[i] >= n + m:
                pivots = np.nonzero(np.abs(T[i, : n + m]) > PIVOT_TOL)[0]
                if pivots.size:
                    j = int(pivots[0])
                    T[i] /= T[i, j]
                    others = np.arange(m) != i
                    T[others] -= np.outer(T[others, j], T[i])
                    basis[i] = j

    cost2 = np.zeros(ncols)
    cost2[:n] = c
    allowed = np.ones(ncols, dtype=bool)
    allowed[n + m:] = False
    status = _run_simplex(T, basis, cost2, allowed, max_iters)
    if status != "optimal":
        return LpSolution(status if status == "unbounded" else "failed")

    # Refactor primal and duals from the final basis against the original data.
    B = M[:, basis]
    try:
        xb = np.linalg.solve(B, sign * b)
        w = np.linalg.solve(B.T, cost2[basis])
    except np.linalg.LinAlgError:
        return LpSolution("failed")
    x = np.zeros(ncols)
    x[basis] = xb
    primal = x[:n]
    duals = sign * w
    value = float(c @ primal)
    return LpSolution(
        "optimal",
        tuple(float(v) for v in primal),
        tuple(float(v) for v in duals),
        value,
    )
