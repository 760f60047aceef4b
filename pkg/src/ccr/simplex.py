"""Dense two-phase primal simplex with Bland's rule.

The linear programs in this package are tiny (tens of variables, a
handful of rows), so a dense tableau with a deterministic pivot rule
beats anything fancier: identical inputs produce identical pivot
sequences, bases, and argmin vertices, which is what the golden tests
need.  Bland's rule also guarantees termination under degeneracy, which
transportation-polytope problems exhibit routinely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, SolverError

# reduced-cost / pivot-element thresholds
_COST_TOL = 1e-10
_PIVOT_TOL = 1e-10
# residual artificial mass above this means the system is infeasible
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LpSolution:
    value: float
    x: np.ndarray
    basis: tuple[int, ...]
    iterations: int


def solve_min(
    c,
    A,
    b,
    *,
    row_labels: tuple[str, ...] | None = None,
    max_iterations: int | None = None,
) -> LpSolution:
    """Minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``.

    Redundant-but-consistent rows are tolerated (they are dropped after
    phase 1); inconsistent systems raise InfeasibleError naming the rows
    that kept artificial mass at the phase-1 optimum.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    labels = row_labels if row_labels is not None else tuple(f"row[{i}]" for i in range(m))
    if max_iterations is None:
        max_iterations = 200 + 50 * (n + m)

    T = np.hstack([A, b[:, None]])
    neg = T[:, -1] < 0.0
    T[neg] *= -1.0

    # phase 1: artificial start
    T = np.hstack([T[:, :n], np.eye(m), T[:, -1:]])
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    iters = _pivot_loop(T, cost1, basis, max_iterations)

    infeas = float(cost1[basis] @ T[:, -1])
    if infeas > _FEAS_TOL:
        bad = tuple(
            labels[basis[i] - n]
            for i in range(m)
            if basis[i] >= n and T[i, -1] > _FEAS_TOL
        )
        raise InfeasibleError(
            f"constraint system infeasible (residual {infeas:.3e})", rows=bad
        )

    # drive zero-level artificials out of the basis; rows that cannot
    # pivot on any structural column are redundant and get dropped
    keep = np.ones(len(basis), dtype=bool)
    for i in range(len(basis)):
        if basis[i] < n:
            continue
        row = T[i, :n]
        candidates = np.flatnonzero(np.abs(row) > _PIVOT_TOL)
        candidates = [j for j in candidates if j not in basis]
        if candidates:
            _pivot(T, i, candidates[0])
            basis[i] = candidates[0]
        else:
            keep[i] = False
    if not np.all(keep):
        T = T[keep]
        basis = [basis[i] for i in range(len(keep)) if keep[i]]

    # phase 2 on structural columns only
    T = np.hstack([T[:, :n], T[:, -1:]])
    iters += _pivot_loop(T, c, basis, max_iterations)

    x = np.zeros(n)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    return LpSolution(
        value=float(c @ x), x=x, basis=tuple(sorted(basis)), iterations=iters
    )


def feasible_point(A, b, *, row_labels=None) -> np.ndarray:
    """A feasible point of ``A @ x == b, x >= 0`` (phase 1 only)."""
    n = np.atleast_2d(np.asarray(A)).shape[1]
    sol = solve_min(np.zeros(n), A, b, row_labels=row_labels)
    return sol.x


def is_feasible(A, b) -> bool:
    try:
        feasible_point(A, b)
        return True
    except InfeasibleError:
        return False


def _pivot_loop(T: np.ndarray, cost: np.ndarray, basis: list[int], cap: int) -> int:
    n_cols = T.shape[1] - 1
    iters = 0
    while True:
        reduced = cost[:n_cols] - cost[basis] @ T[:, :n_cols]
        reduced[basis] = 0.0
        entering_candidates = np.flatnonzero(reduced < -_COST_TOL)
        if entering_candidates.size == 0:
            return iters
        j = int(entering_candidates[0])  # Bland: lowest index enters

        col = T[:, j]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise SolverError(
                "linear program is unbounded below", iterations=iters
            )
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        i = int(min(tied, key=lambda r: basis[r]))  # Bland: lowest basic leaves

        _pivot(T, i, j)
        basis[i] = j
        iters += 1
        if iters > cap:
            raise SolverError(
                f"simplex did not converge within {cap} iterations",
                iterations=iters,
            )


def _pivot(T: np.ndarray, i: int, j: int) -> None:
    T[i] /= T[i, j]
    col = T[:, j].copy()
    col[i] = 0.0
    T -= np.outer(col, T[i])
    T[:, j] = 0.0
    T[i, j] = 1.0
