"""Exact rational LP solver returning vertex solutions.

Bounded-variable primal simplex (two phases) on a sparse tableau. Every
variable has bounds ``[0, u]`` with ``u`` finite or infinite; upper bounds are
handled natively, so a returned solution has at most as many variables
strictly inside their bounds as there are constraint rows.

Arithmetic is exact (``gmpy2.mpq`` internally, :class:`fractions.Fraction` at
the interface). Pricing is Dantzig's rule; after a run of degenerate pivots the
solver switches to Bland's smallest-index rule until progress resumes, which
rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from gmpy2 import mpq

LE, EQ, GE = "<=", "=", ">="

OPTIMAL, FEASIBLE, INFEASIBLE, UNBOUNDED = "optimal", "feasible", "infeasible", "unbounded"

_DEGENERATE_SWITCH = 8


class LPError(ValueError):
    pass


@dataclass
class Constraint:
    coefs: dict[int, Fraction]
    sense: str
    rhs: Fraction
    name: str = ""


@dataclass
class LinearProgram:
    """min c.x  s.t. rows, 0 <= x_i <= upper_i (``None`` = unbounded)."""

    upper: list[Fraction | None] = field(default_factory=list)
    names: list[str] = field(default_factory=list)
    rows: list[Constraint] = field(default_factory=list)
    objective: dict[int, Fraction] | None = None

    @property
    def num_vars(self) -> int:
        return len(self.upper)

    def add_variable(self, upper=None, name: str | None = None) -> int:
        if upper is not None:
            upper = Fraction(upper)
            if upper < 0:
                raise LPError(f"negative upper bound {upper}")
        self.upper.append(upper)
        self.names.append(name if name is not None else f"x{len(self.upper) - 1}")
        return len(self.upper) - 1

    def add_constraint(self, coefs: Mapping[int, object], sense: str, rhs, name: str = "") -> int:
        if sense not in (LE, EQ, GE):
            raise LPError(f"unknown relation {sense!r}")
        clean = {}
        for i, a in coefs.items():
            if not 0 <= i < self.num_vars:
                raise LPError(f"coefficient index {i} out of range")
            a = Fraction(a)
            if a:
                clean[i] = clean.get(i, Fraction(0)) + a
        self.rows.append(Constraint(clean, sense, Fraction(rhs), name))
        return len(self.rows) - 1

    def set_objective(self, coefs: Mapping[int, object] | None) -> None:
        """Minimisation objective; ``None`` means feasibility only."""
        self.objective = None if coefs is None else {i: Fraction(a) for i, a in coefs.items() if a}

    def evaluate(self, values) -> list[tuple[Constraint, Fraction]]:
        """Left-hand side of every row at ``values``."""
        return [(r, sum((a * values[i] for i, a in r.coefs.items()), Fraction(0))) for r in self.rows]

    def check(self, values) -> list[str]:
        """Exact feasibility check; returns a list of problems (empty if feasible)."""
        problems = []
        for i, (x, u) in enumerate(zip(values, self.upper)):
            if x < 0 or (u is not None and x > u):
                problems.append(f"{self.names[i]} = {x} outside [0, {u}]")
        for r, lhs in self.evaluate(values):
            ok = lhs <= r.rhs if r.sense == LE else lhs >= r.rhs if r.sense == GE else lhs == r.rhs
            if not ok:
                problems.append(f"row {r.name or '?'}: {lhs} {r.sense} {r.rhs} violated")
        return problems

    def dump(self) -> str:
        """Plain-text equation listing, for debugging."""

        def term(i, a):
            return f"{'+' if a >= 0 else '-'} {abs(a)} {self.names[i]}"

        lines = []
        if self.objective:
            lines.append("min " + " ".join(term(i, a) for i, a in sorted(self.objective.items())))
        else:
            lines.append("find feasible point")
        lines.append("subject to")
        for k, r in enumerate(self.rows):
            body = " ".join(term(i, a) for i, a in sorted(r.coefs.items())) or "0"
            lines.append(f"  {r.name or 'r%d' % k}: {body} {r.sense} {r.rhs}")
        lines.append("bounds")
        for name, u in zip(self.names, self.upper):
            lines.append(f"  0 <= {name} <= {'inf' if u is None else u}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class VertexSolution:
    status: str
    values: tuple[Fraction, ...] = ()
    basis: frozenset = frozenset()
    objective: Fraction | None = None
    # positive phase-1 optimum when infeasible
    infeasibility: Fraction | None = None
    pivots: int = 0

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class _Tableau:
    """x_B(r) + sum_j T[r][j] x_j = beta_r over nonbasic j, with explicit values."""

    def __init__(self, ub: list, rows: list[dict], rhs: list, basis: list[int]):
        self.ub = ub
        self.T = rows
        self.basis = basis
        self.nvars = len(ub)
        self.x = [mpq(0)] * self.nvars
        for r, b in enumerate(basis):
            self.x[b] = rhs[r]
        self.cols: dict[int, set] = {}
        for r, row in enumerate(rows):
            for j in row:
                self.cols.setdefault(j, set()).add(r)
        self.row_of = {b: r for r, b in enumerate(basis)}
        self.pivots = 0

    def reduced_costs(self, cost: dict[int, object]) -> dict[int, object]:
        d = {j: mpq(c) for j, c in cost.items() if j not in self.row_of and c}
        for r, b in enumerate(self.basis):
            cb = cost.get(b)
            if cb:
                for j, t in self.T[r].items():
                    v = d.get(j, 0) - cb * t
                    if v:
                        d[j] = v
                    else:
                        d.pop(j, None)
        return d

    def pivot(self, r: int, q: int, d: dict) -> None:
        row = self.T[r]
        p = self.basis[r]
        t = row.pop(q)
        self.cols[q].discard(r)
        inv = 1 / t
        new = {j: a * inv for j, a in row.items()}
        new[p] = inv
        for j in row:
            self.cols[j].discard(r)
        for j in new:
            self.cols.setdefault(j, set()).add(r)
        self.T[r] = new
        for k in list(self.cols.get(q, ())):
            rk = self.T[k]
            f = rk.pop(q)
            for j, a in new.items():
                v = rk.get(j, 0) - f * a
                if v:
                    if j not in rk:
                        self.cols.setdefault(j, set()).add(k)
                    rk[j] = v
                elif j in rk:
                    del rk[j]
                    self.cols[j].discard(k)
        self.cols[q] = set()
        fq = d.pop(q, 0)
        if fq:
            for j, a in new.items():
                v = d.get(j, 0) - fq * a
                if v:
                    d[j] = v
                else:
                    d.pop(j, None)
        self.basis[r] = q
        del self.row_of[p]
        self.row_of[q] = r
        self.pivots += 1

    def run(self, d: dict, allowed) -> str:
        """Minimise with reduced costs ``d``; returns OPTIMAL or UNBOUNDED."""
        ub, x = self.ub, self.x
        degenerate = 0
        while True:
            bland = degenerate >= _DEGENERATE_SWITCH
            q, sigma, best = None, 0, None
            for j, dj in d.items():
                if not allowed(j):
                    continue
                u = ub[j]
                if dj < 0 and (u is None or x[j] < u):
                    s = 1
                elif dj > 0 and x[j] > 0:
                    s = -1
                else:
                    continue
                if bland:
                    if q is None or j < q:
                        q, sigma = j, s
                else:
                    mag = abs(dj)
                    if best is None or mag > best or (mag == best and j < q):
                        q, sigma, best = j, s, mag
            if q is None:
                return OPTIMAL

            step = None if ub[q] is None else ub[q]
            leave_r, leave_var, leave_to_upper = None, q, None
            for r in self.cols.get(q, ()):
                rate = -self.T[r][q] * sigma
                b = self.basis[r]
                if rate < 0:
                    lim = x[b] / (-rate)
                    to_upper = False
                elif ub[b] is not None:
                    lim = (ub[b] - x[b]) / rate
                    to_upper = True
                else:
                    continue
                if step is None or lim < step or (lim == step and b < leave_var):
                    step, leave_r, leave_var, leave_to_upper = lim, r, b, to_upper
            if step is None:
                return UNBOUNDED

            degenerate = degenerate + 1 if step == 0 else 0
            if step:
                x[q] = x[q] + sigma * step
                for r in self.cols.get(q, ()):
                    b = self.basis[r]
                    x[b] = x[b] - self.T[r][q] * sigma * step
            if leave_r is None:
                # bound flip of the entering variable
                x[q] = mpq(0) if sigma < 0 else ub[q]
                continue
            x[leave_var] = ub[leave_var] if leave_to_upper else mpq(0)
            self.pivot(leave_r, q, d)


def solve(lp: LinearProgram) -> VertexSolution:
    """Solve ``lp`` exactly. Feasibility-only problems run phase 1 alone."""
    n = lp.num_vars
    ub: list = [None if u is None else mpq(u.numerator, u.denominator) for u in lp.upper]
    rows: list[dict] = []
    rhs: list = []
    basis: list[int] = []
    slack_row: dict[int, int] = {}
    art_rows = []
    for k, c in enumerate(lp.rows):
        coefs = {i: mpq(a.numerator, a.denominator) for i, a in c.coefs.items()}
        b = mpq(c.rhs.numerator, c.rhs.denominator)
        sense = c.sense
        if sense == GE:
            coefs = {i: -a for i, a in coefs.items()}
            b, sense = -b, LE
        if not coefs:
            if (sense == EQ and b != 0) or (sense == LE and b < 0):
                return VertexSolution(INFEASIBLE, infeasibility=_frac(abs(b)))
            continue
        slack = len(ub)
        slack_row[slack] = k
        ub.append(None if sense == LE else mpq(0))
        coefs[slack] = mpq(1)
        if b < 0:
            coefs = {i: -a for i, a in coefs.items()}
            b = -b
        rows.append(coefs)
        rhs.append(b)
        if coefs[slack] > 0 and sense == LE:
            basis.append(slack)
        else:
            basis.append(-1)
            art_rows.append(len(rows) - 1)
    m_real = len(ub)
    for r in art_rows:
        a = len(ub)
        ub.append(None)
        basis[r] = a
    tab = _Tableau(ub, [dict(r) for r in rows], rhs, basis)
    # the basic variable's own coefficient is implicit in the tableau
    for r, b in enumerate(basis):
        if b in tab.T[r]:
            del tab.T[r][b]
            tab.cols[b].discard(r)

    def is_art(j):
        return j >= m_real

    if art_rows:
        phase1 = {basis[r]: 1 for r in art_rows}
        d = tab.reduced_costs(phase1)
        tab.run(d, lambda j: not is_art(j))
        infeas = sum((tab.x[j] for j in range(m_real, len(ub))), mpq(0))
        if infeas > 0:
            return VertexSolution(INFEASIBLE, infeasibility=_frac(infeas), pivots=tab.pivots)
        # drive zero-valued artificials out of the basis; drop redundant rows
        for r in range(len(tab.basis)):
            b = tab.basis[r]
            if b is None or not is_art(b):
                continue
            q = min((j for j in tab.T[r] if not is_art(j)), default=None)
            if q is None:
                for j in tab.T[r]:
                    tab.cols[j].discard(r)
                tab.T[r] = {}
                del tab.row_of[b]
                tab.basis[r] = None
                continue
            tab.pivot(r, q, {})
        for j in range(m_real, len(ub)):
            for r in tab.cols.pop(j, ()):
                tab.T[r].pop(j, None)

    status = FEASIBLE
    objective = None
    if lp.objective is not None:
        cost = {i: mpq(a.numerator, a.denominator) for i, a in lp.objective.items()}
        d = tab.reduced_costs(cost)
        if tab.run(d, lambda j: not is_art(j)) == UNBOUNDED:
            return VertexSolution(UNBOUNDED, pivots=tab.pivots)
        status = OPTIMAL
        objective = _frac(sum((cost[i] * tab.x[i] for i in cost), mpq(0)))
    values = tuple(_frac(tab.x[i]) for i in range(n))
    basis_ids = frozenset(
        ("x", b) if b < n else ("s", slack_row[b]) for b in tab.basis if b is not None and not is_art(b))
    return VertexSolution(status, values, basis_ids, objective, pivots=tab.pivots)


def feasible(lp: LinearProgram) -> tuple[bool, VertexSolution]:
    """Phase-1 feasibility test; the witness is a vertex of the feasible region."""
    saved = lp.objective
    lp.objective = None
    try:
        sol = solve(lp)
    finally:
        lp.objective = saved
    return sol.ok, sol

