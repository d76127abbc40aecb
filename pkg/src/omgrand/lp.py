"""Dense two-phase simplex with Bland's anti-cycling rule.

Small problems only (tens of columns, a few hundred rows); the tableau is a
plain numpy array and every pivot is a rank-one update.
"""
from dataclasses import dataclass

import numpy as np


class SimplexError(RuntimeError):
    """Iteration cap, infeasibility or unboundedness in the LP subsolver."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    pivots: int


_EPS = 1e-11


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])
    basis[row] = col


def _run_phase(T, basis, ncols, max_pivots, trace, phase):
    """Minimize the objective held in the last row of ``T`` (columns < ncols)."""
    pivots = 0
    while True:
        cost = T[-1, :ncols]
        candidates = np.flatnonzero(cost < -_EPS)
        if candidates.size == 0:
            return pivots
        col = candidates[0]
        column = T[:-1, col]
        pos = column > _EPS
        if not np.any(pos):
            raise SimplexError("LP is unbounded", trace)
        ratios = np.full(column.shape, np.inf)
        ratios[pos] = T[:-1, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = ties[np.argmin(basis[ties])]
        _pivot(T, basis, row, col)
        pivots += 1
        if len(trace) < 50:
            trace.append((phase, int(row), int(col), float(T[-1, -1])))
        if pivots > max_pivots:
            raise SimplexError(f"simplex iteration cap {max_pivots} exceeded in phase {phase}", trace)


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_pivots=20000):
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq``, ``x >= 0``."""
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=np.float64))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=np.float64))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: structural | slack (one per ub row) | artificial (as needed)
    A = np.zeros((m, n + m_ub))
    b = np.concatenate([b_ub, b_eq])
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    basis = np.empty(m, dtype=np.int64)
    need_art = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = n + i
        else:
            need_art.append(i)
    n_art = len(need_art)
    ncols = n + m_ub + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, : n + m_ub] = A
    T[:m, -1] = b
    for k, i in enumerate(need_art):
        T[i, n + m_ub + k] = 1.0
        basis[i] = n + m_ub + k
    trace = []
    pivots = 0

    if n_art:
        # phase 1 objective: sum of artificials, expressed in non-basic terms
        T[-1, :] = 0.0
        for i in need_art:
            T[-1, :] -= T[i, :]
        for k in range(n_art):
            T[-1, n + m_ub + k] = 0.0
        pivots += _run_phase(T, basis, ncols, max_pivots, trace, 1)
        if -T[-1, -1] > 1e-9 * max(1.0, np.abs(b).max()):
            raise SimplexError("LP is infeasible", trace)
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n + m_ub:
                row = T[i, : n + m_ub]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    _pivot(T, basis, i, nz[0])
                    pivots += 1
                else:
                    keep[i] = False
        T = np.vstack([T[:m][keep], T[-1:]])
        basis = basis[keep]
        T = np.delete(T, np.s_[n + m_ub: ncols], axis=1)
        ncols = n + m_ub

    # phase 2 objective row
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1, :] -= T[-1, j] * T[i, :]
    pivots += _run_phase(T, basis, ncols, max_pivots - pivots, trace, 2)

    x = np.zeros(ncols)
    x[basis] = T[:-1, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult(x=x, objective=float(c @ x), pivots=pivots)
