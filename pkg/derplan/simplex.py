"""
Dense two-phase tableau simplex for small LPs of the form

    maximize c.x  subject to  A x <= b,  x >= 0.

Pivoting follows Bland's rule throughout, so the method terminates on
degenerate problems. An optional secondary objective is minimized over the
optimal face without leaving it.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from .errors import SolverError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-10
PHASE_ONE_TOLERANCE = 1e-9
MAX_PIVOTS = 10_000


class SimplexOutcome(NamedTuple):
    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    ray: Optional[np.ndarray] = None


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for other in range(tableau.shape[0]):
        if other != row and tableau[other, col] != 0.0:
            tableau[other] -= tableau[other, col] * tableau[row]


def _reduced_costs(costs: np.ndarray, tableau: np.ndarray, basis: list[int]) -> np.ndarray:
    """Objective row for minimizing `costs` given the current basis."""
    row = np.append(costs, 0.0)
    for index, var in enumerate(basis):
        if costs[var] != 0.0:
            row -= costs[var] * tableau[index]
    return row


def _iterate(
    tableau: np.ndarray,
    basis: list[int],
    objective_row: int,
    n_rows: int,
    allowed: np.ndarray,
) -> Optional[int]:
    """
    Pivot until no allowed column improves the objective row.

    Returns:
        Optional[int]: None at optimality, or the entering column of an
        unbounded direction.
    """
    for _ in range(MAX_PIVOTS):
        costs = tableau[objective_row, :-1]
        entering = np.flatnonzero(allowed & (costs < -PIVOT_TOLERANCE))
        if entering.size == 0:
            return None
        col = int(entering[0])
        column = tableau[:n_rows, col]
        candidates = np.flatnonzero(column > PIVOT_TOLERANCE)
        if candidates.size == 0:
            return col
        ratios = tableau[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[ratios <= best + PIVOT_TOLERANCE * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(tableau, row, col)
        basis[row] = col
    raise SolverError(f"simplex exceeded {MAX_PIVOTS} pivots")


def _ray(tableau: np.ndarray, basis: list[int], col: int, n_rows: int, n_vars: int) -> np.ndarray:
    direction = np.zeros(tableau.shape[1] - 1)
    direction[col] = 1.0
    for row in range(n_rows):
        direction[basis[row]] = -tableau[row, col]
    return direction[:n_vars]


def maximize(
    c: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    secondary: Optional[np.ndarray] = None,
) -> SimplexOutcome:
    """
    Solve max c.x s.t. a_ub x <= b_ub, x >= 0.

    Args:
        c: Objective coefficients.
        a_ub: Constraint matrix, one row per inequality.
        b_ub: Right-hand sides; negative entries are allowed.
        secondary: Optional costs minimized among the optimal vertices.

    Returns:
        SimplexOutcome: status is "optimal", "infeasible" or "unbounded".
    """
    c = np.asarray(c, dtype=float)
    n_vars = c.size
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, n_vars)
    b_ub = np.asarray(b_ub, dtype=float)
    n_rows = a_ub.shape[0]

    flipped = b_ub < 0.0
    n_art = int(flipped.sum())
    n_cols = n_vars + n_rows + n_art

    # constraint rows, then the main objective row, then the phase one row
    tableau = np.zeros((n_rows + 2, n_cols + 1))
    basis: list[int] = []
    art = n_vars + n_rows
    for row in range(n_rows):
        sign = -1.0 if flipped[row] else 1.0
        tableau[row, :n_vars] = sign * a_ub[row]
        tableau[row, n_vars + row] = sign
        tableau[row, -1] = sign * b_ub[row]
        if flipped[row]:
            tableau[row, art] = 1.0
            basis.append(art)
            art += 1
        else:
            basis.append(n_vars + row)

    main_costs = np.concatenate([-c, np.zeros(n_rows + n_art)])
    tableau[n_rows] = _reduced_costs(main_costs, tableau[:n_rows], basis)

    if n_art:
        phase_one_costs = np.zeros(n_cols)
        phase_one_costs[n_vars + n_rows:] = 1.0
        tableau[n_rows + 1] = _reduced_costs(phase_one_costs, tableau[:n_rows], basis)
        _iterate(tableau, basis, n_rows + 1, n_rows, np.ones(n_cols, dtype=bool))
        if -tableau[n_rows + 1, -1] > PHASE_ONE_TOLERANCE * max(1.0, np.abs(b_ub).max()):
            return SimplexOutcome("infeasible", None, None)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for row in range(n_rows):
            if basis[row] >= n_vars + n_rows:
                pivots = np.flatnonzero(np.abs(tableau[row, : n_vars + n_rows]) > PIVOT_TOLERANCE)
                if pivots.size == 0:
                    continue
                _pivot(tableau, row, int(pivots[0]))
                basis[row] = int(pivots[0])
            keep.append(row)
        structural = n_vars + n_rows
        tableau = np.vstack(
            [tableau[keep][:, list(range(structural)) + [n_cols]],
             tableau[n_rows][list(range(structural)) + [n_cols]]]
        )
        basis = [basis[row] for row in keep]
        n_rows = len(keep)
        n_cols = structural
    else:
        tableau = tableau[: n_rows + 1]

    entering = _iterate(tableau, basis, n_rows, n_rows, np.ones(n_cols, dtype=bool))
    if entering is not None:
        return SimplexOutcome(
            "unbounded", None, None, ray=_ray(tableau, basis, entering, n_rows, n_vars)
        )

    if secondary is not None:
        optimal_face = np.abs(tableau[n_rows, :-1]) <= PIVOT_TOLERANCE
        secondary_costs = np.concatenate([np.asarray(secondary, dtype=float), np.zeros(n_cols - n_vars)])
        tableau = np.vstack([tableau, _reduced_costs(secondary_costs, tableau[:n_rows], basis)])
        _iterate(tableau, basis, n_rows + 1, n_rows, optimal_face)

    solution = np.zeros(n_cols)
    for row, var in enumerate(basis):
        solution[var] = tableau[row, -1]
    x = solution[:n_vars]
    return SimplexOutcome("optimal", x, float(c @ x))


def farkas_certificate(a_ub: np.ndarray, b_ub: np.ndarray) -> Optional[np.ndarray]:
    """
    Certificate y >= 0 with A^T y >= 0 and b.y < 0 proving A x <= b, x >= 0 empty.

    Found by maximizing -b.y over {y >= 0 : -A^T y <= 0, sum(y) <= 1}.

    Returns:
        Optional[np.ndarray]: The certificate, or None when the system is feasible.
    """
    a_ub = np.asarray(a_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    n_rows = a_ub.shape[0]
    constraints = np.vstack([-a_ub.T, np.ones((1, n_rows))])
    limits = np.append(np.zeros(a_ub.shape[1]), 1.0)
    outcome = maximize(-b_ub, constraints, limits)
    if outcome.status != "optimal" or outcome.objective <= PHASE_ONE_TOLERANCE:
        return None
    return outcome.x
