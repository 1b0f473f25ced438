"""Dense two-phase simplex solver for small equality-form linear programs.

Sized for the positive-spanning test on discretized contact wrenches: a
handful of equality rows against a few dozen columns. Dantzig pricing with
an automatic switch to Bland's rule once pivots go degenerate, so cycling
cannot occur on the heavily degenerate right-hand sides these programs
have (all-zero wrench balance plus one normalization row).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(RuntimeError):
    """Simplex failed to terminate; indicates a numerically hostile input."""


@dataclass(frozen=True)
class LpResult:
    status: str
    objective: float
    solution: np.ndarray | None


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factor = tableau[:, col].copy()
    factor[row] = 0.0
    tableau -= np.outer(factor, tableau[row])


def _iterate(tableau: np.ndarray, basis: np.ndarray, max_iter: int = 20000,
             bland_after: int = 8) -> str:
    """Run simplex iterations in place until optimal or unbounded."""
    m = basis.size
    degenerate_streak = 0
    bland = False
    for _ in range(max_iter):
        costs = tableau[-1, :-1]
        if bland:
            negative = np.flatnonzero(costs < -PIVOT_TOL)
            if negative.size == 0:
                return OPTIMAL
            col = int(negative[0])
        else:
            col = int(np.argmin(costs))
            if costs[col] >= -PIVOT_TOL:
                return OPTIMAL
        column = tableau[:-1, col]
        usable = column > PIVOT_TOL
        if not usable.any():
            # A noise-level reduced cost cannot certify a real ray; stop at
            # the current vertex rather than reporting a spurious ray.
            if costs[col] >= -1e-7:
                return OPTIMAL
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[usable] = tableau[:-1, -1][usable] / column[usable]
        best = ratios.min()
        # Tie-break on the smallest basis label (Bland-compatible).
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL)
        row = int(ties[np.argmin(basis[ties])])
        if best < PIVOT_TOL:
            degenerate_streak += 1
            if degenerate_streak >= bland_after:
                bland = True
        else:
            degenerate_streak = 0
        _pivot(tableau, row, col)
        basis[row] = col
    raise LpError("simplex iteration limit exceeded")


def solve_equality_lp(c, a_eq, b_eq) -> LpResult:
    """Minimize ``c @ x`` subject to ``a_eq @ x == b_eq`` and ``x >= 0``."""
    c = np.asarray(c, float)
    a = np.array(a_eq, float, copy=True)
    b = np.array(b_eq, float, copy=True)
    m, n = a.shape
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificial basis, minimize the sum of artificials.
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n:n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[-1, :n] = -a.sum(axis=0)
    tableau[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    status = _iterate(tableau, basis)
    # The phase-1 objective is bounded below by zero, so an unbounded
    # verdict is always numerical noise; the residual decides feasibility.
    if -tableau[-1, -1] > 1e-7:
        return LpResult(INFEASIBLE, float("nan"), None)

    # Drive leftover artificials out of the basis; drop redundant rows.
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n:
            real = np.flatnonzero(np.abs(tableau[i, :n]) > PIVOT_TOL)
            if real.size:
                _pivot(tableau, i, int(real[0]))
                basis[i] = int(real[0])
            else:
                keep[i] = False
    rows = np.concatenate([np.flatnonzero(keep), [m]])
    tableau = tableau[rows][:, np.concatenate([np.arange(n), [n + m]])]
    basis = basis[keep]

    # Phase 2: original objective, priced out against the basis.
    tableau[-1, :n] = c
    tableau[-1, -1] = 0.0
    for i, bi in enumerate(basis):
        tableau[-1] -= c[bi] * tableau[i]
    status = _iterate(tableau, basis)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, float("-inf"), None)
    x = np.zeros(n)
    x[basis] = tableau[:-1, -1]
    return LpResult(OPTIMAL, float(-tableau[-1, -1]), x)


def lp_max_min_weight(wrenches) -> LpResult:
    """Maximize the minimum convex weight of a zero combination of wrenches.

    Solves ``max eps  s.t.  W lam = 0, sum(lam) = 1, lam_j >= eps`` for the
    6 x m wrench matrix ``W``. A strictly positive optimum certifies that
    the columns positively span their linear span. The returned solution is
    ``lam``, the objective is ``eps``.
    """
    w = np.asarray(wrenches, float)
    if w.ndim != 2 or w.shape[0] != 6:
        raise ValueError("wrenches must be a 6 x m matrix")
    m = w.shape[1]
    # Substitute lam = mu + eps with mu >= 0, eps = ep - en free.
    col_sum = w.sum(axis=1)
    a = np.zeros((7, m + 2))
    a[:6, :m] = w
    a[:6, m] = col_sum
    a[:6, m + 1] = -col_sum
    a[6, :m] = 1.0
    a[6, m] = m
    a[6, m + 1] = -m
    b = np.zeros(7)
    b[6] = 1.0
    c = np.zeros(m + 2)
    c[m] = -1.0
    c[m + 1] = 1.0
    res = solve_equality_lp(c, a, b)
    if res.status != OPTIMAL:
        return LpResult(res.status, res.objective, None)
    eps = float(res.solution[m] - res.solution[m + 1])
    lam = res.solution[:m] + eps
    return LpResult(OPTIMAL, eps, lam)
