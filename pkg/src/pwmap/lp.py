"""Exact rational linear programming (two-phase simplex, Bland's rule).

Small and dense on purpose: the polytopes handled here have a handful of
variables and a few dozen rows, and every decision must be exact.
"""
from __future__ import annotations

import math
from fractions import Fraction

__all__ = ["Unbounded", "ExactLP"]

_ZERO = Fraction(0)


class Unbounded(ValueError):
    """The requested objective is unbounded over the feasible set."""


class ExactLP:
    """Rows ``sum_j a_j x_j (<= | <) b`` over variables with optional bounds.

    ``bounds`` is a list of ``(lo, hi)`` pairs (use +-inf for none).  Each
    variable is rewritten as a non-negative shift or a difference of two
    non-negative parts before the tableau is built.
    """

    def __init__(self, rows, bounds):
        self.n = len(bounds)
        self.bounds = bounds
        # variable x_k = base_k + sum(sign * s_col)
        self._cols = []
        base = []
        extra_rows = []
        ncol = 0
        for k, (lo, hi) in enumerate(bounds):
            if not math.isinf(lo):
                base.append(Fraction(lo))
                self._cols.append([(ncol, 1)])
                if not math.isinf(hi):
                    extra_rows.append(({ncol: Fraction(1)}, Fraction(hi) - Fraction(lo), False))
                ncol += 1
            elif not math.isinf(hi):
                base.append(Fraction(hi))
                self._cols.append([(ncol, -1)])
                ncol += 1
            else:
                base.append(_ZERO)
                self._cols.append([(ncol, 1), (ncol + 1, -1)])
                ncol += 2
        self.base = base
        self.ncol = ncol
        self.rows = []
        self.strict = []
        for coeffs, rhs, strict in rows:
            row = {}
            r = Fraction(rhs)
            for k, a in coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs):
                a = Fraction(a)
                if not a:
                    continue
                r -= a * base[k]
                for col, sgn in self._cols[k]:
                    row[col] = row.get(col, _ZERO) + sgn * a
            self.rows.append((row, r))
            self.strict.append(bool(strict))
        for row, r, _ in extra_rows:
            self.rows.append((row, r))
            self.strict.append(False)
        self._phase1 = None

    # -- tableau machinery -----------------------------------------------

    def _build(self, with_eps: bool):
        """Tableau rows [coeffs..., rhs] and initial basis, plus artificials."""
        ncol = self.ncol + (1 if with_eps else 0)
        eps = self.ncol
        m = len(self.rows) + (1 if with_eps else 0)
        nslack = m
        width = ncol + nslack
        table, basis, arts = [], [], []
        specs = list(zip(self.rows, self.strict))
        if with_eps:
            specs.append((({eps: Fraction(1)}, Fraction(1)), False))
        for i, ((row, r), strict) in enumerate(specs):
            line = [_ZERO] * width
            for c, a in row.items():
                line[c] = a
            if with_eps and strict:
                line[eps] = Fraction(1)
            line[ncol + i] = Fraction(1)
            table.append([line, r])
        # artificial columns for negative right-hand sides
        for i, (line, r) in enumerate(table):
            if r < 0:
                table[i] = [[-v for v in line], -r]
        width_art = width
        for i, (line, r) in enumerate(table):
            if line[ncol + i] == 1:
                basis.append(ncol + i)
            else:
                basis.append(width_art)
                arts.append(width_art)
                width_art += 1
        for i, (line, r) in enumerate(table):
            line.extend([_ZERO] * (width_art - width))
            if basis[i] >= width:
                line[basis[i]] = Fraction(1)
        return [line + [r] for line, r in table], basis, arts, ncol

    @staticmethod
    def _pivot(T, basis, row, col):
        piv = T[row][col]
        prow = T[row]
        if piv != 1:
            prow = [v / piv for v in prow]
            T[row] = prow
        nz = [(j, v) for j, v in enumerate(prow) if v]
        for i, line in enumerate(T):
            if i != row:
                f = line[col]
                if f:
                    for j, v in nz:
                        line[j] -= f * v
        basis[row] = col

    @classmethod
    def _run(cls, T, basis, cost, allowed):
        """Maximize cost . x over the tableau; returns False if unbounded."""
        width = len(T[0]) - 1
        while True:
            # reduced costs: c_j - c_B B^-1 A_j
            cb = [cost.get(b, _ZERO) for b in basis]
            enter = None
            for j in range(width):
                if j not in allowed or j in basis:
                    continue
                rc = cost.get(j, _ZERO)
                for i, c in enumerate(cb):
                    if c:
                        rc -= c * T[i][j]
                if rc > 0:
                    enter = j
                    break
            if enter is None:
                return True
            leave, best = None, None
            for i, line in enumerate(T):
                a = line[enter]
                if a > 0:
                    ratio = line[-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        leave, best = i, ratio
            if leave is None:
                return False
            cls._pivot(T, basis, leave, enter)

    def _feasible_tableau(self, with_eps: bool):
        T, basis, arts, ncol = self._build(with_eps)
        width = len(T[0]) - 1
        if arts:
            cost = {a: Fraction(-1) for a in arts}
            self._run(T, basis, cost, set(range(width)))
            val = sum((T[i][-1] for i, b in enumerate(basis) if b in arts), _ZERO)
            if val != 0:
                return None
            # drive remaining artificials out of the basis
            for i, b in enumerate(basis):
                if b in arts:
                    for j in range(width):
                        if j not in arts and T[i][j] != 0:
                            self._pivot(T, basis, i, j)
                            break
        allowed = set(range(width)) - set(arts)
        return T, basis, allowed, ncol

    def _point(self, T, basis):
        s = [_ZERO] * self.ncol
        for i, b in enumerate(basis):
            if b < self.ncol:
                s[b] = T[i][-1]
        x = []
        for k in range(self.n):
            v = self.base[k]
            for col, sgn in self._cols[k]:
                v += sgn * s[col]
            x.append(v)
        return x

    # -- public ----------------------------------------------------------

    def feasible(self):
        """Exact decision; returns ``(True, witness)`` or ``(False, None)``.

        Strict rows are handled with an auxiliary slack eps <= 1 that is
        maximized; the system is feasible iff the optimum eps is positive.
        """
        if not any(self.strict):
            res = self._feasible_tableau(False)
            if res is None:
                return False, None
            T, basis, _, _ = res
            return True, self._point(T, basis)
        res = self._feasible_tableau(True)
        if res is None:
            return False, None
        T, basis, allowed, ncol = res
        eps = self.ncol
        self._run(T, basis, {eps: Fraction(1)}, allowed)
        val = _ZERO
        for i, b in enumerate(basis):
            if b == eps:
                val = T[i][-1]
        if val <= 0:
            return False, None
        return True, self._point(T, basis)

    def optimize(self, objective, maximize=True):
        """Optimum of a linear objective over the closure of the rows.

        Returns ``(value, point)`` or None when infeasible; raises
        `Unbounded` when the optimum is infinite.
        """
        if self._phase1 is None:
            self._phase1 = self._feasible_tableau(False) or False
        if self._phase1 is False:
            return None
        T0, basis0, allowed, _ = self._phase1
        T = [list(r) for r in T0]
        basis = list(basis0)
        cost = {}
        const = _ZERO
        sgn = 1 if maximize else -1
        for k, a in (objective.items() if isinstance(objective, dict) else enumerate(objective)):
            a = Fraction(a) * sgn
            const += a * self.base[k]
            for col, s in self._cols[k]:
                cost[col] = cost.get(col, _ZERO) + s * a
        if not self._run(T, basis, cost, allowed):
            raise Unbounded("objective is unbounded")
        x = self._point(T, basis)
        val = sum((Fraction(a) * x[k] for k, a in
                   (objective.items() if isinstance(objective, dict) else enumerate(objective))), _ZERO)
        return val, x
