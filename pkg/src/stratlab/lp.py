"""Small dense linear-program solver: two-phase simplex with Bland's rule.

Problems here are tiny (commitment and dominance LPs over action simplices,
~10 variables), so a dense tableau with an anti-cycling pivot rule is exact
enough and dependency-free. Maximization convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7


@dataclass(frozen=True)
class LinearProgram:
    """maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x_j >= lb_j.

    lower_bounds entries may be None, marking a free variable.
    """

    c: tuple[float, ...]
    a_ub: tuple[tuple[float, ...], ...] = ()
    b_ub: tuple[float, ...] = ()
    a_eq: tuple[tuple[float, ...], ...] = ()
    b_eq: tuple[float, ...] = ()
    lower_bounds: tuple[float | None, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.c)
        if self.lower_bounds is None:
            object.__setattr__(self, "lower_bounds", tuple(0.0 for _ in range(n)))
        if len(self.lower_bounds) != n:
            raise InvalidArgumentError("lower_bounds length mismatches objective")
        if len(self.a_ub) != len(self.b_ub) or len(self.a_eq) != len(self.b_eq):
            raise InvalidArgumentError("constraint matrix/rhs row counts differ")
        for row in (*self.a_ub, *self.a_eq):
            if len(row) != n:
                raise InvalidArgumentError("constraint row length mismatches objective")
        for v in (*self.c, *self.b_ub, *self.b_eq, *(x for row in self.a_ub for x in row),
                  *(x for row in self.a_eq for x in row)):
            if not np.isfinite(v):
                raise InvalidArgumentError(f"non-finite LP coefficient {v!r}")
        for b in self.lower_bounds:
            if b is not None and not np.isfinite(b):
                raise InvalidArgumentError(f"non-finite lower bound {b!r}")


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: tuple[float, ...] | None
    value: float | None


def linear_program(c, a_ub=(), b_ub=(), a_eq=(), b_eq=(), lower_bounds=None) -> LinearProgram:
    """Convenience constructor from nested lists."""
    to_rows = lambda m: tuple(tuple(float(v) for v in row) for row in m)
    lb = None if lower_bounds is None else tuple(
        None if v is None else float(v) for v in lower_bounds
    )
    return LinearProgram(
        tuple(float(v) for v in c),
        to_rows(a_ub), tuple(float(v) for v in b_ub),
        to_rows(a_eq), tuple(float(v) for v in b_eq),
        lb,
    )


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    basis[row] = col


def _bland_run(tab: np.ndarray, basis: np.ndarray, ncols: int) -> str:
    """Run simplex iterations on the tableau (last row = reduced costs, maximize)."""
    m = tab.shape[0] - 1
    for _ in range(100_000):
        obj = tab[-1]
        col = -1
        for j in range(ncols):
            if obj[j] > _PIVOT_TOL:
                col = j
                break
        if col < 0:
            return OPTIMAL
        row, best_ratio, best_basis = -1, np.inf, -1
        for i in range(m):
            a = tab[i, col]
            if a > _PIVOT_TOL:
                ratio = tab[i, -1] / a
                if ratio < best_ratio - _PIVOT_TOL or (
                    abs(ratio - best_ratio) <= _PIVOT_TOL
                    and (row < 0 or basis[i] < best_basis)
                ):
                    row, best_ratio, best_basis = i, ratio, basis[i]
        if row < 0:
            return UNBOUNDED
        _pivot(tab, basis, row, col)
    raise RuntimeError("simplex failed to terminate (anti-cycling rule exhausted)")


def lp_solve(lp: LinearProgram) -> LpSolution:
    """Solve the LP; returns status, an optimal basic solution, and its objective."""
    n = len(lp.c)
    # Variable transform: finite lower bound -> shift; free -> split into u - v.
    shift = np.array([0.0 if b is None else b for b in lp.lower_bounds])
    free = [j for j, b in enumerate(lp.lower_bounds) if b is None]
    n_std = n + len(free)

    def expand(rows):
        if not rows:
            return np.zeros((0, n_std))
        base = np.array(rows, dtype=float)
        extra = -base[:, free] if free else np.zeros((base.shape[0], 0))
        return np.hstack([base, extra])

    a_ub = expand(lp.a_ub)
    a_eq = expand(lp.a_eq)
    b_ub = np.array(lp.b_ub, dtype=float) - (np.array(lp.a_ub, dtype=float) @ shift
                                             if lp.a_ub else 0.0)
    b_eq = np.array(lp.b_eq, dtype=float) - (np.array(lp.a_eq, dtype=float) @ shift
                                             if lp.a_eq else 0.0)
    c = np.concatenate([np.array(lp.c, dtype=float),
                        -np.array([lp.c[j] for j in free], dtype=float)])

    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq
    nslack = m_ub
    # Columns: [structural | slack | artificial], rhs last.
    a = np.zeros((m, n_std + nslack))
    rhs = np.zeros(m)
    a[:m_ub, :n_std] = a_ub
    a[:m_ub, n_std:n_std + nslack] = np.eye(m_ub)
    rhs[:m_ub] = b_ub
    a[m_ub:, :n_std] = a_eq
    rhs[m_ub:] = b_eq
    neg = rhs < 0
    a[neg] *= -1.0
    rhs[neg] *= -1.0

    # Rows whose slack column survived negation get it as the initial basis;
    # all other rows receive an artificial variable.
    basis = np.full(m, -1, dtype=int)
    art_rows = []
    for i in range(m_ub):
        if not neg[i]:
            basis[i] = n_std + i
        else:
            art_rows.append(i)
    art_rows.extend(range(m_ub, m))
    nart = len(art_rows)
    ncols = n_std + nslack + nart
    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :n_std + nslack] = a
    tab[:m, -1] = rhs
    for k, i in enumerate(art_rows):
        tab[i, n_std + nslack + k] = 1.0
        basis[i] = n_std + nslack + k

    if nart:
        # Phase 1: maximize -(sum of artificials).
        tab[-1, :] = 0.0
        tab[-1, n_std + nslack:ncols] = -1.0
        for i in range(m):
            if basis[i] >= n_std + nslack:
                tab[-1] += tab[i]
        status = _bland_run(tab, basis, ncols)
        # The objective row's rhs cell carries the negated phase-1 value, so a
        # positive residual means the artificials could not be driven to zero.
        if status != OPTIMAL or tab[-1, -1] > _FEAS_TOL:
            return LpSolution(INFEASIBLE, None, None)
        # Drive remaining artificials out of the basis.
        for i in range(m):
            if basis[i] >= n_std + nslack:
                piv = next(
                    (j for j in range(n_std + nslack) if abs(tab[i, j]) > _PIVOT_TOL), None
                )
                if piv is None:
                    tab[i, :] = 0.0  # redundant row
                    basis[i] = -1
                else:
                    _pivot(tab, basis, i, piv)

    # Phase 2 objective over structural+slack columns only.
    ncols2 = n_std + nslack
    tab[:, ncols2:ncols] = 0.0  # forbid artificials from re-entering
    tab[-1, :] = 0.0
    tab[-1, :n_std] = c
    for i in range(m):
        b = basis[i]
        if 0 <= b < n_std and c[b] != 0.0:
            tab[-1] -= c[b] * tab[i]
    status = _bland_run(tab, basis, ncols2)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None)

    x_std = np.zeros(n_std + nslack)
    for i in range(m):
        if basis[i] >= 0:
            x_std[basis[i]] = tab[i, -1]
    x = x_std[:n]
    for k, j in enumerate(free):
        x[j] -= x_std[n + k]
    x = x + shift
    value = float(np.dot(np.array(lp.c), x))
    return LpSolution(OPTIMAL, tuple(float(v) for v in x), value)
