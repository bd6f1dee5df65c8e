"""Weak agreement decided through network flows.

Weak agreement relaxes the synchronous matching of requests: a trace is
in the weak set when every name's lone requests are covered by lone
offers somewhere in the trace, in any order.  Quantifying over all
accepted traces is then a counting problem, encoded here as integer
flows from the initial state to the final state of a normalized
automaton.  Balance rows alone also accept flows that pump a cycle no
run can reach; static rows gate each strongly connected component
behind its entry transitions, and the solving loop inspects each
incumbent and cuts off any stranded region it exposes, stopping on the
first incumbent that unfolds into an actual run.  All models are
solved exactly by the milp module.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from .automata import (
    IDLE,
    MATCH,
    OFFER,
    REQUEST,
    CakError,
    ContractAutomaton,
    RankTooSmall,
    classify,
    prune_not_coreachable,
    trim,
)
from . import milp
from .milp import CONTINUOUS, INTEGER, CapExceeded, MilpModel

DUMMY = "__done"


class EmptyLanguage(CakError):
    """The automaton accepts nothing, so flow analyses have no subject."""


class InfeasibleFlow(CakError):
    """A transition-count vector that no single run can realize."""


class UnknownState(CakError):
    """Flow endpoint that is not a state of the automaton."""


def in_weak_agreement(w: Sequence[tuple]) -> bool:
    """Whether lone offers cover lone requests name by name.

    Matches bind their request on the spot and count for neither side;
    order is irrelevant, which is the whole point of the weak notion.
    """
    balance: Counter = Counter()
    for label in w:
        label = tuple(label)
        if len(label) < 2:
            raise RankTooSmall("weak agreement is a property of composed traces")
        kind, name = classify(label)
        if kind == OFFER:
            balance[name] += 1
        elif kind == REQUEST:
            balance[name] -= 1
    return all(v >= 0 for v in balance.values())


def _fresh_coordinate(A: ContractAutomaton, k: int) -> str:
    used = {q[k] for q in A.states}
    name = DUMMY
    while name in used:
        name += "_"
    return name


def normalize(A: ContractAutomaton) -> ContractAutomaton:
    """Reshape to a single final state, distinct from the initial one.

    States that cannot be reached, or cannot reach a final state, are
    removed first.  When the remaining final state is not already unique,
    terminal and distinct from the initial state, reserved "__done" offer
    transitions are appended; the offer is fired by principal 1, and by
    the following principals in turn when several final states disagree
    on later coordinates.  Offers need no match, so the appendix never
    changes any weak agreement balance.
    """
    A = prune_not_coreachable(trim(A))
    if not A.finals:
        raise EmptyLanguage("no final state is reachable")

    states = set(A.states)
    transitions = set(A.transitions)
    finals = set(A.finals)
    for k in range(A.rank):
        if len(finals) == 1:
            f = next(iter(finals))
            if f != A.initial and not any(t[0] == f for t in transitions):
                break
        fresh = _fresh_coordinate(A, k)
        label = tuple("!" + DUMMY if i == k else IDLE for i in range(A.rank))
        new_finals = set()
        for f in sorted(finals):
            f2 = f[:k] + (fresh,) + f[k + 1:]
            states.add(f2)
            transitions.add((f, label, f2))
            new_finals.add(f2)
        finals = new_finals
    return ContractAutomaton(A.rank, states, A.initial, finals, transitions, A.principal_names)


def is_dummy(t: tuple) -> bool:
    """Whether a transition is part of the normalization appendix."""
    return classify(t[1]) == (OFFER, DUMMY)


@dataclass(frozen=True, eq=False)
class FlowSystem:
    """Integer flow constraints from source to dest over an automaton.

    x_vars carry one unit per traversal of a transition.  The model
    holds the per-state balance rows and one gating row per strongly
    connected component; connectivity of the flow's support to the
    source is finished off while solving, by rows added on demand for
    each stranded region an incumbent exposes.  action_index lists the
    request names whose offer-minus-request balances the deciders
    optimize, and coeffs holds the +1/-1 balance contribution of every
    transition to every such name.
    """

    automaton: ContractAutomaton
    source: tuple
    dest: tuple
    cap: int
    order: tuple
    x_vars: Dict[tuple, str]
    action_index: tuple
    coeffs: Dict[str, Dict[str, int]]
    model: MilpModel


def default_cap(A: ContractAutomaton) -> int:
    return len(A.states) + 2 * len(A.requests - {DUMMY})


def balance_row(fs: FlowSystem, name: str) -> Dict[str, int]:
    return fs.coeffs[name]


def flow_balances(fs: FlowSystem, flow: Dict[tuple, int]) -> Dict[str, int]:
    """Offer-minus-request balance of a transition-count vector, per name."""
    return {
        name: sum(row.get(fs.x_vars[t], 0) * flow.get(t, 0) for t in fs.order)
        for name, row in fs.coeffs.items()
    }


def _components(states, transitions):
    """Strongly connected components, Kosaraju style, no recursion."""
    out: Dict[tuple, list] = {}
    inc: Dict[tuple, list] = {}
    for (qs, _, qd) in transitions:
        out.setdefault(qs, []).append(qd)
        inc.setdefault(qd, []).append(qs)
    finished = []
    seen = set()
    for root in sorted(states):
        if root in seen:
            continue
        seen.add(root)
        stack = [(root, iter(out.get(root, ())))]
        while stack:
            v, it = stack[-1]
            advanced = False
            for w in it:
                if w not in seen:
                    seen.add(w)
                    stack.append((w, iter(out.get(w, ()))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                finished.append(v)
    comps = []
    assigned = set()
    for root in reversed(finished):
        if root in assigned:
            continue
        comp = {root}
        assigned.add(root)
        work = [root]
        while work:
            v = work.pop()
            for w in inc.get(v, ()):
                if w not in assigned:
                    assigned.add(w)
                    comp.add(w)
                    work.append(w)
        comps.append(frozenset(comp))
    return comps


def _flow_model(A, states, order, s, d, cap, names) -> FlowSystem:
    x_vars = {t: f"x{i}" for i, t in enumerate(order)}
    m = MilpModel()
    for t in order:
        m.add_var(x_vars[t], INTEGER, 0, cap)

    kept = set(order)
    for q in sorted(states):
        row: Dict[str, int] = {}
        for t in A.incoming[q]:
            if t in kept:
                row[x_vars[t]] = row.get(x_vars[t], 0) + 1
        for t in A.outgoing[q]:
            if t in kept:
                row[x_vars[t]] = row.get(x_vars[t], 0) - 1
        rhs = (-1 if q == s else 0) + (1 if q == d else 0)
        m.add_constraint(row, "=", rhs)

    for comp in _components(states, order):
        if s in comp:
            continue
        internal = [t for t in order if t[0] in comp and t[2] in comp]
        if not internal:
            continue
        gate = cap * len(internal)
        row = {x_vars[t]: -1 for t in internal}
        for t in order:
            if t[2] in comp and t[0] not in comp:
                row[x_vars[t]] = gate
        m.add_constraint(row, ">=", 0)

    coeffs: Dict[str, Dict[str, int]] = {}
    for name in names:
        row = {}
        for t in order:
            kind, label_name = classify(t[1])
            if label_name == name and kind != MATCH:
                row[x_vars[t]] = 1 if kind == OFFER else -1
        coeffs[name] = row
    return FlowSystem(A, s, d, cap, order, x_vars, names, coeffs, m)


def build_flow_system(
    A: ContractAutomaton, s: tuple, d: tuple, cap: Optional[int] = None
) -> FlowSystem:
    """Emit the flow model for runs from s to d.

    Balance rows give every state zero net flow except a unit deficit at
    the source and a unit surplus at the destination (both zero when s
    equals d, making the empty circulation feasible).  Every run that
    moves inside a strongly connected component away from the source
    entered it first, so per component a gating row bounds internal
    activity by scaled entry activity; the residual stranded flows are
    cut away while solving.
    """
    s, d = tuple(s), tuple(d)
    if s not in A.states or d not in A.states:
        raise UnknownState(f"flow endpoints must be states: {s!r}, {d!r}")
    if cap is None:
        cap = default_cap(A)
    order = tuple(sorted(A.transitions))
    names = tuple(sorted(A.requests - {DUMMY}))
    return _flow_model(A, A.states, order, s, d, cap, names)


def _restricted_system(
    A: ContractAutomaton, s: tuple, d: tuple, cap: int, names: tuple
) -> Optional[FlowSystem]:
    """Flow model over only the states lying on some walk from s to d.

    Runs never leave that span, so the model is exact while staying much
    smaller than the full automaton; names fixes the balance coordinate
    order so vectors from different spans stay comparable.
    """
    fwd = {s}
    work = [s]
    while work:
        q = work.pop()
        for t in A.outgoing[q]:
            if t[2] not in fwd:
                fwd.add(t[2])
                work.append(t[2])
    bwd = {d}
    work = [d]
    while work:
        q = work.pop()
        for t in A.incoming[q]:
            if t[0] not in bwd:
                bwd.add(t[0])
                work.append(t[0])
    span = fwd & bwd
    if s not in span or d not in span:
        return None
    order = tuple(sorted(t for t in A.transitions if t[0] in span and t[2] in span))
    return _flow_model(A, span, order, s, d, cap, names)


@dataclass(frozen=True, eq=False)
class WeakVerdict:
    """Outcome of a weak safety or weak agreement decision.

    gamma is the exact optimized balance; witness_flow the optimizing
    transition counts; witness_trace one accepted trace realizing them.
    action names the balance attaining gamma where one exists, and cap
    records the per-transition flow bound the verdict is exact for.
    """

    answer: bool
    gamma: Fraction
    witness_flow: Dict[tuple, int]
    witness_trace: Optional[tuple]
    action: Optional[str]
    cap: int


def _require_composition(A: ContractAutomaton) -> None:
    if A.rank < 2:
        raise RankTooSmall("weak agreement notions are defined for rank > 1")


def _solve(
    model: MilpModel, node_budget: Optional[int], first_feasible: bool = False
) -> milp.MilpOutcome:
    budget = milp.DEFAULT_NODE_BUDGET if node_budget is None else node_budget
    out = milp.solve_milp(model, node_budget=budget, first_feasible=first_feasible)
    if out.status == milp.CAP_EXCEEDED:
        raise CapExceeded(f"node budget exhausted after {out.nodes} nodes")
    return out


def _flow_of(fs: FlowSystem, assignment) -> Dict[tuple, int]:
    flow = {}
    for t in fs.order:
        v = assignment[fs.x_vars[t]]
        if v:
            flow[t] = int(v)
    return flow


def _stranded_region(fs: FlowSystem, flow: Dict[tuple, int]):
    """States the flow touches but no support walk from the source reaches.

    Balanced flow cannot cross between the reachable part and the rest,
    so the returned region contains every support transition incident to
    it and is None exactly when the flow unfolds into a run.
    """
    support = [t for t in fs.order if flow.get(t)]
    out: Dict[tuple, list] = {}
    for t in support:
        out.setdefault(t[0], []).append(t[2])
    reach = {fs.source}
    frontier = [fs.source]
    while frontier:
        q = frontier.pop()
        for r in out.get(q, ()):
            if r not in reach:
                reach.add(r)
                frontier.append(r)
    bad = {q for t in support for q in (t[0], t[2]) if q not in reach}
    return frozenset(bad) if bad else None


def _reach_row(fs: FlowSystem, region: frozenset) -> Dict[str, int]:
    """A row every run satisfies but flows stranded in region violate.

    Activity on a transition leaving a region state means a run visited
    that state, and runs start outside the region, so some transition
    entering it must have fired first: scaled by the largest possible
    internal activity, entries must dominate it.
    """
    inside = [t for t in fs.order if t[0] in region]
    big = fs.cap * len(inside)
    row = {fs.x_vars[t]: big for t in fs.order if t[2] in region and t[0] not in region}
    for t in inside:
        row[fs.x_vars[t]] = row.get(fs.x_vars[t], 0) - 1
    return row


def _solve_connected(
    fs: FlowSystem,
    node_budget: Optional[int],
    pool: Optional[list] = None,
    first_feasible: bool = False,
) -> milp.MilpOutcome:
    """Optimize fs.model over the flows that unfold into runs.

    Incumbents whose support is disconnected from the source are cut off
    by a reachability row and the model resolved.  Runs satisfy every
    added row, and the final incumbent is itself a run flow, so the
    returned optimum is exact.  The node budget is cumulative over the
    resolves, so a model that keeps relocating its stranded cycles ends
    in CapExceeded rather than an endless chase.

    Regions depend only on the automaton, the cap and the source, never
    on the objective, so callers solving many models from one source
    pass a shared pool and each region is learned once for all of them.
    """
    remaining = milp.DEFAULT_NODE_BUDGET if node_budget is None else node_budget
    regions = [] if pool is None else pool
    seen = set(regions)
    # a system solved several times only loads each pooled row once
    start = getattr(fs.model, "_loaded_regions", 0)
    for region in regions[start:]:
        fs.model.add_constraint(_reach_row(fs, region), ">=", 0)
    fs.model._loaded_regions = len(regions)
    while True:
        out = _solve(fs.model, remaining, first_feasible)
        remaining -= out.nodes
        if not out.is_feasible:
            return out
        region = _stranded_region(fs, _flow_of(fs, out.assignment))
        if region is None:
            return out
        if region in seen:
            raise InfeasibleFlow("reachability row left its region reachable")
        if remaining <= 0:
            raise CapExceeded(
                f"node budget exhausted after {len(seen)} reachability rows"
            )
        seen.add(region)
        regions.append(region)
        fs.model.add_constraint(_reach_row(fs, region), ">=", 0)
        fs.model._loaded_regions = len(regions)


def is_weakly_safe(
    A: ContractAutomaton, cap: Optional[int] = None, node_budget: Optional[int] = None
) -> WeakVerdict:
    """Minimize each name's balance over all run flows; safe iff none dips below zero.

    A negative optimum comes with the offending flow and a trace outside
    weak agreement that realizes it.
    """
    _require_composition(A)
    norm = normalize(A)
    final = next(iter(norm.finals))
    best = None
    pool: list = []
    for name in build_flow_system(norm, norm.initial, final, cap).action_index:
        fs = build_flow_system(norm, norm.initial, final, cap)
        fs.model.set_objective("min", balance_row(fs, name))
        out = _solve_connected(fs, node_budget, pool)
        if not out.is_optimal:
            raise InfeasibleFlow(f"flow system unexpectedly {out.status}")
        if best is None or out.value < best[0]:
            best = (out.value, name, _flow_of(fs, out.assignment), fs.cap)
    if best is None:
        # no requests anywhere: trivially weakly safe, report a unit run
        fs = build_flow_system(norm, norm.initial, final, cap)
        fs.model.set_objective("min", {})
        out = _solve_connected(fs, node_budget, pool)
        flow = _flow_of(fs, out.assignment)
        return WeakVerdict(True, Fraction(0), flow, flow_to_trace(norm, flow), None, fs.cap)
    gamma, name, flow, used_cap = best
    return WeakVerdict(gamma >= 0, gamma, flow, flow_to_trace(norm, flow), name, used_cap)


def admits_weak_agreement(
    A: ContractAutomaton, cap: Optional[int] = None, node_budget: Optional[int] = None
) -> WeakVerdict:
    """Maximize the least balance over run flows; admitted iff it reaches zero.

    The optimizing flow is turned back into an accepted trace, which for
    a nonnegative optimum is a trace in weak agreement.
    """
    _require_composition(A)
    norm = normalize(A)
    final = next(iter(norm.finals))
    fs = build_flow_system(norm, norm.initial, final, cap)
    if not fs.action_index:
        fs.model.set_objective("min", {})
        out = _solve_connected(fs, node_budget)
        flow = _flow_of(fs, out.assignment)
        return WeakVerdict(True, Fraction(0), flow, flow_to_trace(norm, flow), None, fs.cap)
    fs.model.add_var("gamma", CONTINUOUS, None, None)
    for name in fs.action_index:
        row = {"gamma": -1}
        row.update(balance_row(fs, name))
        m = fs.model
        m.add_constraint(row, ">=", 0)
    fs.model.set_objective("max", {"gamma": 1})
    out = _solve_connected(fs, node_budget)
    if not out.is_optimal:
        raise InfeasibleFlow(f"flow system unexpectedly {out.status}")
    gamma = out.value
    flow = _flow_of(fs, out.assignment)
    bal = flow_balances(fs, flow)
    low = min(fs.action_index, key=lambda name: bal[name])
    return WeakVerdict(gamma >= 0, gamma, flow, flow_to_trace(norm, flow), low, fs.cap)


def flow_to_trace(A: ContractAutomaton, x: Dict[tuple, int]) -> tuple:
    """Unfold a feasible flow into one accepted trace using it exactly.

    The trace is rebuilt back to front from the flow's destination,
    repeatedly consuming the lowest remaining incoming transition in
    sorted order; leftover cycle flow is spliced in at the earliest
    visit of its state.  Any remainder that cannot be placed, or a walk
    that does not start at the initial state, means the counts were not
    realizable by a single run.
    """
    remaining = {}
    net: Dict[tuple, int] = {}
    for t, v in x.items():
        t = (tuple(t[0]), tuple(t[1]), tuple(t[2]))
        if t not in A.transitions:
            raise InfeasibleFlow(f"flow on unknown transition {t!r}")
        if int(v) != v or v < 0:
            raise InfeasibleFlow(f"flow values must be nonnegative integers, got {v!r}")
        if v:
            remaining[t] = int(v)
            net[t[2]] = net.get(t[2], 0) + remaining[t]
            net[t[0]] = net.get(t[0], 0) - remaining[t]
    unbalanced = {q: n for q, n in net.items() if n}
    if not unbalanced:
        dest = A.initial
    elif set(unbalanced.values()) == {-1, 1} and unbalanced.get(A.initial) == -1:
        (dest,) = (q for q, n in unbalanced.items() if n == 1)
    else:
        raise InfeasibleFlow("not a unit flow out of the initial state")

    def walk_back_to(q):
        steps = []
        while True:
            chosen = None
            for t in A.incoming[q]:
                if remaining.get(t, 0) > 0:
                    chosen = t
                    break
            if chosen is None:
                return q, list(reversed(steps))
            remaining[chosen] -= 1
            steps.append(chosen)
            q = chosen[0]

    start, path = walk_back_to(dest)
    while any(remaining.values()):
        spliced = False
        visited = [start] + [t[2] for t in path]
        for i, q in enumerate(visited):
            if any(remaining.get(t, 0) > 0 for t in A.incoming[q]):
                back, cycle = walk_back_to(q)
                if back != q:
                    raise InfeasibleFlow("leftover flow does not close a cycle")
                path[i:i] = cycle
                spliced = True
                break
        if not spliced:
            raise InfeasibleFlow("disconnected leftover flow")
    if start != A.initial:
        raise InfeasibleFlow("flow does not start at the initial state")
    return tuple(t[1] for t in path)



@dataclass(frozen=True, eq=False)
class WeakLiabilityReport:
    """Transitions whose firing can make weak agreement unreachable.

    pairs holds (transition, 1-based principal index) for every flagged
    transition and every principal moving in it; gammas maps each
    analysed transition to its worst-case continuation balance.  Every
    negative gamma is exact, as is any value below the surplus slack;
    larger surpluses are reported saturated, since no deficit could
    ever consume them.  cap is the per-transition flow bound the
    analysis explored.
    """

    pairs: frozenset
    liable_indices: frozenset
    gammas: Dict[tuple, Fraction]
    cap: int


# how far above the worst possible prefix deficit completion surpluses
# are still tracked exactly; beyond it they cannot matter
SURPLUS_SLACK = 4


def _support_penalty(fs: FlowSystem) -> Dict[str, Fraction]:
    # breaks value ties toward fewer traversals without ever crossing
    # the unit gaps between genuine integer objective values
    eps = Fraction(1, 2 * (fs.cap * len(fs.order) + 1))
    return {fs.x_vars[t]: eps for t in fs.order}


class _LiabilityPass:
    """Shared state for one weakly_liable run.

    Frontiers, cut pools and per-endpoint verdicts are all memoized
    here, so transitions sharing endpoints pay for the hard work once.
    """

    def __init__(self, norm: ContractAutomaton, cap: Optional[int], node_budget):
        self.norm = norm
        self.final = next(iter(norm.finals))
        fs0 = build_flow_system(norm, norm.initial, self.final, cap)
        self.cap = fs0.cap
        self.names = fs0.action_index
        self.node_budget = node_budget
        counts = Counter()
        for t in fs0.order:
            kind, name = classify(t[1])
            if kind == REQUEST and name in fs0.coeffs:
                counts[name] += 1
        self.deficits = tuple(self.cap * counts[n] for n in self.names)
        self.clamps = tuple(u + SURPLUS_SLACK for u in self.deficits)
        self.big = 2 * self.cap * len(fs0.order) + 8
        self.frontiers: Dict[tuple, tuple] = {}
        self.pools: Dict[tuple, list] = {}
        self.verdicts: Dict[tuple, Optional[int]] = {}

    def pool(self, source: tuple) -> list:
        return self.pools.setdefault(source, [])

    def _completion_system(self, q: tuple) -> FlowSystem:
        """Flow model of the completions of q with one clamped balance
        variable per action name."""
        fs = _restricted_system(self.norm, q, self.final, self.cap, self.names)
        for k, name in enumerate(self.names):
            cl = f"cl{k}"
            fs.model.add_var(cl, CONTINUOUS, None, self.clamps[k])
            row = {cl: -1}
            for var, c in balance_row(fs, name).items():
                row[var] = row.get(var, 0) + c
            fs.model.add_constraint(row, ">=", 0)
        return fs

    def _tighten(self, q: tuple, point: tuple) -> tuple:
        """Largest achievable clamped balance vector above point.

        One coordinate at a time: fix what is settled, push the next as
        high as it goes.  The order is the fixed name order, so a second
        tightening of the result reproduces it and the outcome is a
        maximal point of the achievable set.
        """
        fs = self._completion_system(q)
        for k in range(len(self.names)):
            fs.model.add_constraint({f"cl{k}": 1}, ">=", point[k])
        best = point
        for k in range(len(self.names)):
            if best[k] >= self.clamps[k]:
                continue
            fs.model.set_objective("max", {f"cl{k}": 1})
            out = _solve_connected(fs, self.node_budget, self.pool(q))
            if not out.is_feasible:
                raise InfeasibleFlow("tightening lost a point it started from")
            bal = flow_balances(fs, _flow_of(fs, out.assignment))
            best = tuple(
                min(bal[n], self.clamps[i]) for i, n in enumerate(self.names)
            )
            fs.model.add_constraint({f"cl{k}": 1}, ">=", best[k])
        return best

    def frontier(self, q: tuple) -> tuple:
        """Maximal clamped balance vectors over the completions of q.

        Every completion balance is dominated by a frontier element and
        every frontier element is a completion balance, so "some
        completion covers deficit b" reduces to comparing b with
        finitely many vectors.  Balances are clamped to the worst
        possible deficit plus slack before comparing: surpluses nobody
        can consume would otherwise spawn frontier points of their own.
        Each round asks for any completion outside the boxes under the
        known points, a pure feasibility dive, and tightening then walks
        the found point up to a maximal one, so the round count is the
        size of the frontier itself.
        """
        if q in self.frontiers:
            return self.frontiers[q]
        found: list = []
        while True:
            fs = self._completion_system(q)
            done = False
            for j, f in enumerate(found):
                escapes = []
                for k in range(len(self.names)):
                    if f[k] >= self.clamps[k]:
                        continue
                    e = f"esc{j}_{k}"
                    fs.model.add_var(e, milp.BINARY)
                    escapes.append(e)
                    fs.model.add_constraint(
                        {f"cl{k}": 1, e: -(self.big + f[k] + 1)}, ">=", -self.big
                    )
                if not escapes:
                    done = True
                    break
                fs.model.add_constraint({e: 1 for e in escapes}, ">=", 1)
            if done:
                break
            fs.model.set_objective("min", _support_penalty(fs))
            out = _solve_connected(
                fs, self.node_budget, self.pool(q), first_feasible=True
            )
            if not out.is_feasible:
                break
            bal = flow_balances(fs, _flow_of(fs, out.assignment))
            seed = tuple(
                min(bal[n], self.clamps[k]) for k, n in enumerate(self.names)
            )
            found.append(self._tighten(q, seed))
        self.frontiers[q] = tuple(found)
        return self.frontiers[q]

    def admits_gamma(self, qs, cov, cont, delta, bound) -> bool:
        """Whether some coverable prefix run to qs leaves, after the extra
        delta, a best completion balance of at most bound.

        One feasibility model over the prefix flow: selector binaries
        selecting which frontier vector certifies coverage, and per
        continuation vector which coordinate stays at or below bound.
        """
        fs = _restricted_system(self.norm, self.norm.initial, qs, self.cap, self.names)
        if fs is None:
            return False
        m = fs.model
        big = self.big + max(0, -bound)
        covers = []
        for j, c in enumerate(cov):
            s = f"cov{j}"
            m.add_var(s, milp.BINARY)
            covers.append(s)
            for k, name in enumerate(self.names):
                # selected cover must lift this balance back above zero
                row = {s: -(self.big - c[k])}
                for var, co in balance_row(fs, name).items():
                    row[var] = row.get(var, 0) + co
                m.add_constraint(row, ">=", -self.big)
        m.add_constraint({s: 1 for s in covers}, ">=", 1)
        for j, c in enumerate(cont):
            drops = []
            for k, name in enumerate(self.names):
                s = f"low{j}_{k}"
                m.add_var(s, milp.BINARY)
                drops.append(s)
                row = {s: big}
                for var, co in balance_row(fs, name).items():
                    row[var] = row.get(var, 0) + co
                m.add_constraint(row, "<=", bound + big - delta[k] - c[k])
            m.add_constraint({s: 1 for s in drops}, ">=", 1)
        m.set_objective("min", _support_penalty(fs))
        out = _solve_connected(
            fs, self.node_budget, self.pool(self.norm.initial), first_feasible=True
        )
        return out.is_feasible

    def worst_gamma(self, qs, qd, delta) -> Optional[int]:
        """Exact worst continuation balance over coverable prefixes of qs.

        Found by bisecting on feasibility; None when no coverable
        prefix reaches qs at all.
        """
        cov = self.frontier(qs)
        cont = self.frontier(qd)
        if not cov or not cont:
            return None

        def feasible(bound):
            return self.admits_gamma(qs, cov, cont, delta, bound)

        if feasible(-1):
            lo = -(2 * max(self.deficits, default=0) + 2)
            hi = -1
        else:
            lo = -1
            hi = max(self.clamps, default=0) + self.big
            if not feasible(hi):
                return None
        # invariant: feasible(hi) holds, feasible(lo) does not
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        return hi


def weakly_liable(
    A: ContractAutomaton,
    cap: Optional[int] = None,
    node_budget: Optional[int] = None,
    transitions=None,
) -> WeakLiabilityReport:
    """Find the principals able to take weak agreement off the table.

    A transition is flagged when some capped prefix run reaching its
    source could still be completed with every balance nonnegative, yet
    after firing the transition the best completion leaves some balance
    negative.  Both completability and the worst continuation value are
    settled against per-state frontiers of completion balances, so each
    verdict is a handful of feasibility models over the prefix flow.

    transitions, when given, restricts the pass to those transitions;
    verdicts are identical to the full pass on the analysed subset, and
    frontiers are only computed for the states it touches.
    """
    _require_composition(A)
    norm = normalize(A)
    run = _LiabilityPass(norm, cap, node_budget)
    names = run.names
    chosen = None
    if transitions is not None:
        chosen = {(tuple(t[0]), tuple(t[1]), tuple(t[2])) for t in transitions}

    gammas: Dict[tuple, Fraction] = {}
    pairs = set()
    for t in sorted(norm.transitions):
        if is_dummy(t) or not names:
            continue
        if chosen is not None and t not in chosen:
            continue
        qs, label, qd = t
        kind, name = classify(label)
        delta = [0] * len(names)
        if kind != MATCH and name in names:
            delta[names.index(name)] = 1 if kind == OFFER else -1
        key = (qs, qd, tuple(delta))
        if key not in run.verdicts:
            run.verdicts[key] = run.worst_gamma(qs, qd, tuple(delta))
        worst = run.verdicts[key]
        if worst is None:
            continue
        gammas[t] = Fraction(worst)
        if worst < 0:
            for i, entry in enumerate(label):
                if entry != IDLE:
                    pairs.add((t, i + 1))
    indices = frozenset(i for _, i in pairs)
    return WeakLiabilityReport(frozenset(pairs), indices, gammas, run.cap)
