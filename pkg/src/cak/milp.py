"""Exact mixed integer linear programming on rationals.

Two-phase primal simplex with Bland's rule over sparse rows, then branch
and bound on the integer and binary variables.  Everything is computed
in fractions.Fraction; there is no floating point and thus no tolerance
anywhere, which matters because the contract verdicts threshold exactly
at zero.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .automata import CakError, MalformedModel

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
CAP_EXCEEDED = "cap_exceeded"

DEFAULT_NODE_BUDGET = 100_000


class CapExceeded(CakError):
    """The branch and bound node budget ran out before an exact answer."""


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = CONTINUOUS
    lower: Optional[Fraction] = Fraction(0)
    upper: Optional[Fraction] = None


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple          # ((name, Fraction), ...)
    relation: str          # "<=", "=", ">="
    rhs: Fraction


class MilpModel:
    """Mutable builder for a linear model.

    Variables default to continuous and nonnegative; binaries get the
    bounds 0..1 automatically.  Numbers are converted to Fraction on the
    way in.
    """

    def __init__(self):
        self.variables: List[Variable] = []
        self._index: Dict[str, int] = {}
        self.constraints: List[Constraint] = []
        self.sense: str = "min"
        self.objective: Dict[str, Fraction] = {}

    def add_var(self, name, kind=CONTINUOUS, lower=Fraction(0), upper=None):
        if name in self._index:
            raise MalformedModel(f"duplicate variable {name!r}")
        if kind not in (CONTINUOUS, INTEGER, BINARY):
            raise MalformedModel(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lower, upper = Fraction(0), Fraction(1)
        lo = None if lower is None else Fraction(lower)
        hi = None if upper is None else Fraction(upper)
        if kind != CONTINUOUS and lo is None:
            raise MalformedModel(f"integer variable {name!r} needs a finite lower bound")
        if lo is not None and hi is not None and hi < lo:
            raise MalformedModel(f"empty bound interval for {name!r}")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, lo, hi))
        return name

    def add_constraint(self, coeffs: Dict[str, object], relation: str, rhs) -> None:
        if relation not in ("<=", "=", ">="):
            raise MalformedModel(f"unknown relation {relation!r}")
        items = []
        for name, c in coeffs.items():
            if name not in self._index:
                raise MalformedModel(f"constraint references unknown variable {name!r}")
            c = Fraction(c)
            if c:
                items.append((name, c))
        items.sort(key=lambda nc: self._index[nc[0]])
        self.constraints.append(Constraint(tuple(items), relation, Fraction(rhs)))

    def set_objective(self, sense: str, coeffs: Dict[str, object]) -> None:
        if sense not in ("min", "max"):
            raise MalformedModel(f"objective sense must be min or max, got {sense!r}")
        for name in coeffs:
            if name not in self._index:
                raise MalformedModel(f"objective references unknown variable {name!r}")
        self.sense = sense
        self.objective = {n: Fraction(c) for n, c in coeffs.items() if Fraction(c) != 0}

    def integer_names(self):
        return [v.name for v in self.variables if v.kind != CONTINUOUS]


@dataclass
class MilpOutcome:
    """Result of a solve; assignment maps every model variable to a Fraction."""

    status: str
    value: Optional[Fraction] = None
    assignment: Optional[Dict[str, Fraction]] = None
    nodes: int = 0
    duals: Optional[Dict[int, Fraction]] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def is_feasible(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)


def dump_model(model: MilpModel) -> str:
    """LP-like plain text rendering with exact rationals (n/d)."""

    def num(x: Fraction) -> str:
        return str(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

    def row(coeffs) -> str:
        parts = []
        for name, c in coeffs:
            sign = "-" if c < 0 else ("+" if parts else "")
            mag = abs(c)
            parts.append(f"{sign} {num(mag)} {name}".strip())
        return " ".join(parts) if parts else "0"

    lines = [f"{model.sense}: {row(sorted(model.objective.items(), key=lambda nc: model._index[nc[0]]))}"]
    lines.append("subject to:")
    for i, con in enumerate(model.constraints):
        lines.append(f"  c{i}: {row(con.coeffs)} {con.relation} {num(con.rhs)}")
    lines.append("bounds:")
    for v in model.variables:
        lo = "-inf" if v.lower is None else num(v.lower)
        hi = "+inf" if v.upper is None else num(v.upper)
        lines.append(f"  {lo} <= {v.name} <= {hi}  [{v.kind}]")
    return "\n".join(lines) + "\n"


class _Simplex:
    """One standardized LP instance: min c x, rows A x = b, 0 <= x <= u.

    Upper bounds are handled inside the ratio test instead of as extra
    rows: a nonbasic column may sit at either bound, and a column at its
    upper bound is stored complemented (the tableau tracks u - x), so
    nonbasic always means zero.  Pricing is by most negative reduced
    cost; after a long run of degenerate pivots it falls back to Bland's
    rule, whose bounded-variable form cannot cycle, until the objective
    moves again.
    """

    def __init__(self, model: MilpModel, overrides: Dict[str, Tuple[Optional[Fraction], Optional[Fraction]]]):
        # column layout: one or two columns per model variable (free variables
        # split), then slacks, then artificials
        self.model = model
        self.col_of: Dict[str, int] = {}
        self.neg_col_of: Dict[str, int] = {}
        self.shift: Dict[str, Fraction] = {}
        self.upper_of: Dict[int, Fraction] = {}
        ncol = 0
        for v in model.variables:
            lo, hi = v.lower, v.upper
            if v.name in overrides:
                olo, ohi = overrides[v.name]
                lo = olo if olo is not None else lo
                hi = ohi if ohi is not None else hi
            if lo is not None and hi is not None and hi < lo:
                self.infeasible_bounds = True
                return
            self.col_of[v.name] = ncol
            ncol += 1
            if lo is None:
                self.neg_col_of[v.name] = ncol
                ncol += 1
                self.shift[v.name] = Fraction(0)
            else:
                self.shift[v.name] = lo
            if hi is not None:
                self.upper_of[self.col_of[v.name]] = hi - self.shift[v.name]
        self.infeasible_bounds = False
        self.nstruct = ncol

        rows: List[Dict[int, Fraction]] = []
        rhs: List[Fraction] = []
        rels: List[str] = []
        self.row_meta = []  # (original index, flipped)
        for i, con in enumerate(model.constraints):
            row: Dict[int, Fraction] = {}
            b = con.rhs
            for name, c in con.coeffs:
                row[self.col_of[name]] = row.get(self.col_of[name], Fraction(0)) + c
                if name in self.neg_col_of:
                    row[self.neg_col_of[name]] = row.get(self.neg_col_of[name], Fraction(0)) - c
                b -= c * self.shift[name]
            rows.append(row)
            rhs.append(b)
            rels.append(con.relation)
            self.row_meta.append((i, False))

        # normalize to nonnegative right-hand sides
        for r in range(len(rows)):
            if rhs[r] < 0:
                rows[r] = {j: -c for j, c in rows[r].items()}
                rhs[r] = -rhs[r]
                rels[r] = {"<=": ">=", ">=": "<=", "=": "="}[rels[r]]
                oi, fl = self.row_meta[r]
                self.row_meta[r] = (oi, True)

        self.aux_col: List[Optional[int]] = [None] * len(rows)
        self.aux_sign: List[int] = [0] * len(rows)
        self.art_cols: set = set()
        basis: List[int] = []
        for r in range(len(rows)):
            if rels[r] == "<=":
                rows[r][ncol] = Fraction(1)
                self.aux_col[r], self.aux_sign[r] = ncol, 1
                basis.append(ncol)
                ncol += 1
            elif rels[r] == ">=":
                rows[r][ncol] = Fraction(-1)
                self.aux_col[r], self.aux_sign[r] = ncol, -1
                ncol += 1
                rows[r][ncol] = Fraction(1)
                self.art_cols.add(ncol)
                basis.append(ncol)
                ncol += 1
            else:
                rows[r][ncol] = Fraction(1)
                self.aux_col[r], self.aux_sign[r] = ncol, 1
                self.art_cols.add(ncol)
                basis.append(ncol)
                ncol += 1
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.ncol = ncol
        self.at_upper: set = set()

    def _pivot(self, r: int, col: int) -> None:
        rows, rhs = self.rows, self.rhs
        prow = rows[r]
        pval = prow[col]
        if pval != 1:
            rows[r] = prow = {j: c / pval for j, c in prow.items()}
            rhs[r] = rhs[r] / pval
        for rr in range(len(rows)):
            if rr == r:
                continue
            c = rows[rr].get(col)
            if not c:
                continue
            target = rows[rr]
            for j, pc in prow.items():
                nv = target.get(j, Fraction(0)) - c * pc
                if nv:
                    target[j] = nv
                else:
                    target.pop(j, None)
            rhs[rr] -= c * rhs[r]
        c = self.obj.get(col)
        if c:
            for j, pc in prow.items():
                nv = self.obj.get(j, Fraction(0)) - c * pc
                if nv:
                    self.obj[j] = nv
                else:
                    self.obj.pop(j, None)
            self.obj_const += c * rhs[r]
        self.basis[r] = col

    def _complement(self, col: int) -> None:
        """Swap a bounded column between its two bound representations."""
        u = self.upper_of[col]
        rows, rhs = self.rows, self.rhs
        for r in range(len(rows)):
            c = rows[r].get(col)
            if c:
                rows[r][col] = -c
                rhs[r] -= c * u
        c = self.obj.get(col)
        if c:
            self.obj[col] = -c
            self.obj_const += c * u
        if col in self.at_upper:
            self.at_upper.discard(col)
        else:
            self.at_upper.add(col)

    def _iterate(self, banned) -> str:
        rows, rhs = self.rows, self.rhs
        upper_of = self.upper_of
        stall = 0
        stall_limit = 2 * len(rows) + 16
        while True:
            entering = None
            if stall <= stall_limit:
                best_cost = None
                for j, c in self.obj.items():
                    if c < 0 and j not in banned and upper_of.get(j, 1) != 0:
                        if best_cost is None or c < best_cost or (c == best_cost and j < entering):
                            best_cost = c
                            entering = j
            else:
                # anti-cycling fallback: smallest eligible index
                for j in sorted(self.obj):
                    if self.obj[j] < 0 and j not in banned and upper_of.get(j, 1) != 0:
                        entering = j
                        break
            if entering is None:
                return OPTIMAL
            # ratio test: the entering column rises from zero until a basic
            # column hits a bound or the entering column hits its own cap
            best = upper_of.get(entering)
            leaving = None           # row index; None with finite best = bound flip
            lowside = True           # leaving basic stops at zero, not its cap
            for r in range(len(rows)):
                c = rows[r].get(entering)
                if not c:
                    continue
                if c > 0:
                    ratio = rhs[r] / c
                    down = True
                else:
                    ub = upper_of.get(self.basis[r])
                    if ub is None:
                        continue
                    ratio = (rhs[r] - ub) / c
                    down = False
                if best is None or ratio < best or (
                    ratio == best
                    and (leaving is None or self.basis[r] < self.basis[leaving])
                ):
                    best = ratio
                    leaving = r
                    lowside = down
            if best is None:
                return UNBOUNDED
            if best > 0:
                stall = 0
            else:
                stall += 1
            if leaving is None:
                self._complement(entering)
                continue
            if not lowside:
                # the leaving column stops at its cap: complement it first so
                # the pivot lands it nonbasic at zero in the other reading
                self._complement(self.basis[leaving])
            self._pivot(leaving, entering)

    def solve(self):
        """Returns (status, value, assignment, duals) for the relaxation."""
        if self.infeasible_bounds:
            return INFEASIBLE, None, None, None
        # phase 1: drive the artificials to zero
        self.obj = {}
        self.obj_const = Fraction(0)
        for j in self.art_cols:
            self.obj[j] = Fraction(1)
        for r, b in enumerate(self.basis):
            if b in self.art_cols:
                for j, c in self.rows[r].items():
                    nv = self.obj.get(j, Fraction(0)) - c
                    if nv:
                        self.obj[j] = nv
                    else:
                        self.obj.pop(j, None)
                self.obj_const += self.rhs[r]
        status = self._iterate(banned=frozenset())
        if status != OPTIMAL or self.obj_const != 0:
            # phase 1 is bounded below by zero, so non-optimal cannot happen;
            # a positive optimum means the original rows are inconsistent
            return INFEASIBLE, None, None, None
        # degenerate basic artificials must leave the basis now, else they
        # could drift positive later and the original rows would be violated
        for r in range(len(self.rows)):
            if self.basis[r] in self.art_cols:
                piv = None
                for j in sorted(self.rows[r]):
                    if j not in self.art_cols and self.rows[r][j]:
                        piv = j
                        break
                if piv is not None:
                    self._pivot(r, piv)

        # phase 2: the real objective, artificials never re-enter
        sense = self.model.sense
        self.obj = {}
        self.obj_const = Fraction(0)
        for name, c in self.model.objective.items():
            c = c if sense == "min" else -c
            j = self.col_of[name]
            if j in self.at_upper:
                self.obj[j] = self.obj.get(j, Fraction(0)) - c
                self.obj_const += c * self.upper_of[j]
            else:
                self.obj[j] = self.obj.get(j, Fraction(0)) + c
            self.obj_const += c * self.shift[name]
            if name in self.neg_col_of:
                self.obj[self.neg_col_of[name]] = -c
        for r, b in enumerate(self.basis):
            cb = self.obj.get(b)
            if cb:
                for j, c in self.rows[r].items():
                    if j == b:
                        continue
                    nv = self.obj.get(j, Fraction(0)) - cb * c
                    if nv:
                        self.obj[j] = nv
                    else:
                        self.obj.pop(j, None)
                self.obj_const += cb * self.rhs[r]
                self.obj.pop(b, None)
        status = self._iterate(banned=self.art_cols)
        if status == UNBOUNDED:
            return UNBOUNDED, None, None, None

        value_min = self.obj_const
        assignment = {}
        colval: Dict[int, Fraction] = {}
        for r, b in enumerate(self.basis):
            colval[b] = self.rhs[r]
        for v in self.model.variables:
            j = self.col_of[v.name]
            x = colval.get(j, Fraction(0))
            if j in self.at_upper:
                x = self.upper_of[j] - x
            x += self.shift[v.name]
            if v.name in self.neg_col_of:
                x -= colval.get(self.neg_col_of[v.name], Fraction(0))
            assignment[v.name] = x
        duals = None
        if sense == "min":
            duals = {}
            for r, (oi, flipped) in enumerate(self.row_meta):
                col = self.aux_col[r]
                # a slack column (+e_r, cost 0) has reduced cost -y_r; a
                # surplus column (-e_r) has +y_r
                red = self.obj.get(col, Fraction(0))
                y = -red if self.aux_sign[r] > 0 else red
                duals[oi] = -y if flipped else y
        value = value_min if sense == "min" else -value_min
        return OPTIMAL, value, assignment, duals


def _validate(model: MilpModel) -> None:
    if not isinstance(model, MilpModel):
        raise MalformedModel("expected a MilpModel")
    for v in model.variables:
        if v.kind == BINARY and (v.lower != 0 or v.upper != 1):
            raise MalformedModel(f"binary variable {v.name!r} must have bounds 0..1")


def solve_lp(model: MilpModel, overrides=None) -> MilpOutcome:
    """Solve the continuous relaxation exactly."""
    _validate(model)
    status, value, assignment, duals = _Simplex(model, overrides or {}).solve()
    return MilpOutcome(status, value, assignment, nodes=1, duals=duals)


def solve_milp(
    model: MilpModel,
    node_budget: int = DEFAULT_NODE_BUDGET,
    first_feasible: bool = False,
) -> MilpOutcome:
    """Branch and bound to an exact mixed integer optimum.

    Most fractional variable first, best relaxation bound first among
    open nodes (ties resolved newest first, so the search dives).  The
    outcome carries the number of nodes solved; when the budget runs out
    the status says so rather than returning a best-effort answer.

    With first_feasible the search stops at the first integer point and
    reports it as feasible, without proving anything about its value.
    Callers that only ask whether any integer point exists at all save
    the whole optimality proof that way.
    """
    _validate(model)
    int_names = model.integer_names()
    sense = model.sense

    def bound_key(value):
        # smaller key = more promising node
        return value if sense == "min" else -value

    root = solve_lp(model)
    if root.status in (INFEASIBLE, UNBOUNDED):
        return MilpOutcome(root.status, nodes=1)
    nodes = 1
    best: Optional[MilpOutcome] = None
    heap = []
    counter = 0
    heap.append((bound_key(root.value), -counter, root, {}))
    heapq.heapify(heap)
    while heap:
        key, _, relax, bounds = heapq.heappop(heap)
        if best is not None and key >= bound_key(best.value):
            continue
        frac_name = None
        frac_dist = None
        for name in int_names:
            x = relax.assignment[name]
            if x.denominator != 1:
                dist = abs(x - x.numerator // x.denominator - Fraction(1, 2))
                if frac_dist is None or dist < frac_dist:
                    frac_dist = dist
                    frac_name = name
        if frac_name is None:
            if first_feasible:
                return MilpOutcome(FEASIBLE, relax.value, relax.assignment, nodes=nodes)
            if best is None or bound_key(relax.value) < bound_key(best.value):
                best = MilpOutcome(OPTIMAL, relax.value, relax.assignment)
            continue
        x = relax.assignment[frac_name]
        floor = x.numerator // x.denominator
        for lo, hi in (((None), Fraction(floor)), (Fraction(floor + 1), None)):
            if nodes >= node_budget:
                return MilpOutcome(CAP_EXCEEDED, nodes=nodes)
            child_bounds = dict(bounds)
            old = child_bounds.get(frac_name, (None, None))
            nlo = old[0] if lo is None else max(lo, old[0]) if old[0] is not None else lo
            nhi = old[1] if hi is None else min(hi, old[1]) if old[1] is not None else hi
            child_bounds[frac_name] = (nlo, nhi)
            sub = solve_lp(model, overrides=child_bounds)
            nodes += 1
            if sub.status != OPTIMAL:
                continue
            if best is not None and bound_key(sub.value) >= bound_key(best.value):
                continue
            counter += 1
            heapq.heappush(heap, (bound_key(sub.value), -counter, sub, child_bounds))
    if best is None:
        return MilpOutcome(INFEASIBLE, nodes=nodes)
    return MilpOutcome(OPTIMAL, best.value, best.assignment, nodes=nodes)
