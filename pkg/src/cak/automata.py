"""Core contract automaton model and the composition operators.

A contract automaton of rank n describes the joint behaviour of n
principals.  Every transition label is a vector of length n holding one
basic action per principal: a request ("?name"), an offer ("!name"), or
idle ("-").  A valid label has either exactly one non-idle entry (a lone
request or offer) or exactly two, which must be complementary (a match).
States of composed automata are flat tuples with one coordinate per
principal; the rank doubles as the principal count.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Optional, Sequence

IDLE = "-"
TAU = "tau"

REQUEST = "request"
OFFER = "offer"
MATCH = "match"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class CakError(Exception):
    """Base class for every error raised by this package."""


class MalformedModel(CakError):
    """Structurally invalid automaton, label, or document."""


class EmptyComponentList(CakError):
    """Composition of zero components was requested."""


class IndexOutOfRange(CakError):
    """Principal index outside 1..rank."""


class NotPrincipal(CakError):
    """Operation requires rank-1 operands with disjoint request/offer roles."""


class CyclicLeftOperand(CakError):
    """Concatenation requires an acyclic left operand."""


class RankMismatch(CakError):
    """Trace rank differs from automaton rank."""


class RankTooSmall(CakError):
    """Agreement notions are defined for compositions only (rank > 1)."""


def is_request(entry: str) -> bool:
    return entry.startswith("?")


def is_offer(entry: str) -> bool:
    return entry.startswith("!")


def is_idle(entry: str) -> bool:
    return entry == IDLE


def action_name(entry: str) -> str:
    """Name of a non-idle entry, without its role marker."""
    return entry[1:]


def co(entry: str) -> str:
    """The complementary entry: requests flip to offers and back, idle stays."""
    if is_request(entry):
        return "!" + entry[1:]
    if is_offer(entry):
        return "?" + entry[1:]
    return entry


def _check_entry(entry: str) -> None:
    if entry == IDLE:
        return
    if not isinstance(entry, str) or len(entry) < 2 or entry[0] not in "?!":
        raise MalformedModel(f"bad action entry {entry!r}")
    if not _NAME_RE.match(entry[1:]):
        raise MalformedModel(f"bad action name in entry {entry!r}")


@lru_cache(maxsize=None)
def classify(label: tuple) -> tuple:
    """Classify a label vector as a request, offer, or match on one name.

    Returns (kind, name).  Raises MalformedModel for anything else, so a
    successful classification doubles as label validation.
    """
    active = []
    for entry in label:
        _check_entry(entry)
        if entry != IDLE:
            active.append(entry)
    if len(active) == 1:
        kind = REQUEST if is_request(active[0]) else OFFER
        return kind, action_name(active[0])
    if len(active) == 2:
        a, b = active
        if co(a) == b:
            return MATCH, action_name(a)
        raise MalformedModel(f"two non-idle entries that do not match: {label!r}")
    raise MalformedModel(f"label must have one or two non-idle entries: {label!r}")


def complementary(a: tuple, b: tuple) -> bool:
    """Whether two labels can synchronize: one requests what the other offers.

    Matches have no complement, so any match operand yields False.
    """
    ka, na = classify(a)
    kb, nb = classify(b)
    if ka == MATCH or kb == MATCH:
        return False
    return na == nb and ka != kb


def observable(w: Sequence[tuple]) -> tuple:
    """Per-step visible actions of a trace.

    Lone requests and offers show up as themselves ("?a" or "!a"); matches
    are silent and show up as the token "tau".
    """
    out = []
    for label in w:
        kind, name = classify(tuple(label))
        if kind == MATCH:
            out.append(TAU)
        elif kind == REQUEST:
            out.append("?" + name)
        else:
            out.append("!" + name)
    return tuple(out)


def _freeze_state(q) -> tuple:
    return tuple(q)


def _freeze_transition(t) -> tuple:
    q, a, q2 = t
    return (tuple(q), tuple(a), tuple(q2))


@dataclass(frozen=True)
class ContractAutomaton:
    """A finite-state automaton over vectors of principal actions.

    states, finals and transitions are stored as frozensets; the initial
    state must belong to states, transitions must connect known states,
    and every label must classify as a request, offer, or match whose
    idle coordinates leave the corresponding state coordinates untouched.
    principal_names is optional frontend metadata and takes no part in
    equality.
    """

    rank: int
    states: frozenset
    initial: tuple
    finals: frozenset
    transitions: frozenset
    principal_names: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(_freeze_state(q) for q in self.states))
        object.__setattr__(self, "initial", _freeze_state(self.initial))
        object.__setattr__(self, "finals", frozenset(_freeze_state(q) for q in self.finals))
        object.__setattr__(
            self, "transitions", frozenset(_freeze_transition(t) for t in self.transitions)
        )
        if self.principal_names is not None:
            object.__setattr__(self, "principal_names", tuple(self.principal_names))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.rank, int) or self.rank < 1:
            raise MalformedModel(f"rank must be a positive integer, got {self.rank!r}")
        for q in self.states:
            if len(q) != self.rank or not all(isinstance(c, str) and c for c in q):
                raise MalformedModel(f"state {q!r} is not a tuple of {self.rank} names")
        if self.initial not in self.states:
            raise MalformedModel(f"initial state {self.initial!r} not among states")
        if not self.finals <= self.states:
            raise MalformedModel("final states must be states")
        if self.principal_names is not None and len(self.principal_names) != self.rank:
            raise MalformedModel("principal_names length must equal rank")
        for q, a, q2 in self.transitions:
            if q not in self.states or q2 not in self.states:
                raise MalformedModel(f"transition endpoint missing from states: {(q, a, q2)!r}")
            if len(a) != self.rank:
                raise MalformedModel(f"label rank differs from automaton rank: {a!r}")
            classify(a)
            for i, entry in enumerate(a):
                # an idle principal cannot change state
                if entry == IDLE and q[i] != q2[i]:
                    raise MalformedModel(
                        f"idle coordinate {i} moves from {q[i]!r} to {q2[i]!r} in {(q, a, q2)!r}"
                    )

    @cached_property
    def requests(self) -> frozenset:
        """Names that occur somewhere as a request entry, matched or not."""
        return frozenset(
            action_name(e) for _, a, _ in self.transitions for e in a if is_request(e)
        )

    @cached_property
    def offers(self) -> frozenset:
        """Names that occur somewhere as an offer entry."""
        return frozenset(
            action_name(e) for _, a, _ in self.transitions for e in a if is_offer(e)
        )

    @cached_property
    def outgoing(self) -> dict:
        out = {q: [] for q in self.states}
        for t in sorted(self.transitions):
            out[t[0]].append(t)
        return {q: tuple(ts) for q, ts in out.items()}

    @cached_property
    def incoming(self) -> dict:
        inc = {q: [] for q in self.states}
        for t in sorted(self.transitions):
            inc[t[2]].append(t)
        return {q: tuple(ts) for q, ts in inc.items()}

    @property
    def is_principal(self) -> bool:
        """Rank 1 with disjoint request and offer roles."""
        return self.rank == 1 and not (self.requests & self.offers)

    def is_deterministic(self) -> bool:
        seen = set()
        for q, a, _ in self.transitions:
            if (q, a) in seen:
                return False
            seen.add((q, a))
        return True

    def reachable_states(self) -> frozenset:
        seen = {self.initial}
        frontier = [self.initial]
        while frontier:
            q = frontier.pop()
            for _, _, q2 in self.outgoing[q]:
                if q2 not in seen:
                    seen.add(q2)
                    frontier.append(q2)
        return frozenset(seen)

    def coreachable_states(self) -> frozenset:
        seen = set(self.finals)
        frontier = list(self.finals)
        while frontier:
            q = frontier.pop()
            for q1, _, _ in self.incoming[q]:
                if q1 not in seen:
                    seen.add(q1)
                    frontier.append(q1)
        return frozenset(seen)

    def accepts(self, w: Sequence[Sequence[str]]) -> bool:
        """Whether some run on w from the initial state ends in a final state."""
        frontier = {self.initial}
        for label in w:
            label = tuple(label)
            if len(label) != self.rank:
                raise RankMismatch(
                    f"trace label has rank {len(label)}, automaton has rank {self.rank}"
                )
            classify(label)
            frontier = {
                q2 for q in frontier for _, a, q2 in self.outgoing[q] if a == label
            }
            if not frontier:
                return False
        return bool(frontier & self.finals)


def product(components: Sequence[ContractAutomaton]) -> ContractAutomaton:
    """Compose automata, synchronizing complementary actions across components.

    From every joint state, each pair of component transitions with
    complementary labels yields a match transition; a component may move
    alone only when no other component offers (or requests) the complement
    from the current joint state.  The state set is the full cartesian
    product of the component state sets; trim() removes the unreachable
    part when it is not wanted.
    """
    comps = list(components)
    if not comps:
        raise EmptyComponentList("product of an empty component list")
    if len(comps) == 1:
        return comps[0]
    rank = sum(c.rank for c in comps)
    offsets = []
    at = 0
    for c in comps:
        offsets.append(at)
        at += c.rank

    def splice(base, off, width, piece):
        return base[:off] + tuple(piece) + base[off + width:]

    states = set()
    transitions = set()
    idle_label = (IDLE,) * rank
    for combo in itertools.product(*(sorted(c.states) for c in comps)):
        joint = tuple(x for part in combo for x in part)
        states.add(joint)
        enabled = [comps[k].outgoing[combo[k]] for k in range(len(comps))]
        for k in range(len(comps)):
            for l in range(k + 1, len(comps)):
                for _, ak, qk in enabled[k]:
                    for _, al, ql in enabled[l]:
                        if complementary(ak, al):
                            lbl = splice(idle_label, offsets[k], comps[k].rank, ak)
                            lbl = splice(lbl, offsets[l], comps[l].rank, al)
                            dst = splice(joint, offsets[k], comps[k].rank, qk)
                            dst = splice(dst, offsets[l], comps[l].rank, ql)
                            transitions.add((joint, lbl, dst))
        for k in range(len(comps)):
            for _, ak, qk in enabled[k]:
                blocked = any(
                    complementary(ak, al)
                    for l in range(len(comps))
                    if l != k
                    for _, al, _ in enabled[l]
                )
                if not blocked:
                    lbl = splice(idle_label, offsets[k], comps[k].rank, ak)
                    dst = splice(joint, offsets[k], comps[k].rank, qk)
                    transitions.add((joint, lbl, dst))

    initial = tuple(x for c in comps for x in c.initial)
    finals = {
        tuple(x for part in combo for x in part)
        for combo in itertools.product(*(sorted(c.finals) for c in comps))
    }
    names = None
    if all(c.principal_names is not None for c in comps):
        names = tuple(n for c in comps for n in c.principal_names)
    return ContractAutomaton(rank, states, initial, finals, transitions, names)


def projection(A: ContractAutomaton, i: int) -> ContractAutomaton:
    """Restrict to the i-th principal (1-based), keeping its own moves only."""
    if not 1 <= i <= A.rank:
        raise IndexOutOfRange(f"principal index {i} outside 1..{A.rank}")
    k = i - 1
    states = {(q[k],) for q in A.states}
    transitions = {
        ((q[k],), (a[k],), (q2[k],)) for q, a, q2 in A.transitions if a[k] != IDLE
    }
    finals = {(q[k],) for q in A.finals}
    names = None
    if A.principal_names is not None:
        names = (A.principal_names[k],)
    return ContractAutomaton(1, states, (A.initial[k],), finals, transitions, names)


def a_product(A1: ContractAutomaton, A2: ContractAutomaton) -> ContractAutomaton:
    """Compose down at the level of single principals.

    Both operands are split into their rank-1 projections first, so
    principals of one operand may rematch with principals of the other.
    Unlike the plain product this operator is associative.
    """
    parts = [projection(A1, i) for i in range(1, A1.rank + 1)]
    parts += [projection(A2, i) for i in range(1, A2.rank + 1)]
    return product(parts)


def trim(A: ContractAutomaton) -> ContractAutomaton:
    """Drop states unreachable from the initial state; the language is kept."""
    keep = A.reachable_states()
    return ContractAutomaton(
        A.rank,
        keep,
        A.initial,
        A.finals & keep,
        {t for t in A.transitions if t[0] in keep and t[2] in keep},
        A.principal_names,
    )


def prune_not_coreachable(A: ContractAutomaton) -> ContractAutomaton:
    """Drop states from which no final state is reachable.

    The initial state is kept even when dead so the result is still a
    well-formed automaton; in that case its language is empty.
    """
    keep = A.coreachable_states() | {A.initial}
    return ContractAutomaton(
        A.rank,
        keep,
        A.initial,
        A.finals & keep,
        {t for t in A.transitions if t[0] in keep and t[2] in keep},
        A.principal_names,
    )


def concatenate(A1: ContractAutomaton, A2: ContractAutomaton) -> ContractAutomaton:
    """Sequential composition of two principals.

    Transitions of A1 entering a final state are redirected to A2's
    initial state and acceptance is taken from A2.  When A1 accepts the
    empty word its initial state additionally mirrors A2's initial state.
    The left operand must be acyclic, which keeps the construction
    language-exact; the result is trimmed.
    """
    if A1.rank != 1 or A2.rank != 1:
        raise NotPrincipal("concatenation is defined on principals")
    if not A1.is_principal or not A2.is_principal:
        raise NotPrincipal("operands must keep request and offer roles disjoint")
    if _has_cycle(A1):
        raise CyclicLeftOperand("left operand of a concatenation must be acyclic")

    used = {q[0] for q in A1.states}
    rename = {}
    for q in sorted(A2.states):
        name = q[0]
        while name in used:
            name = name + "_r"
        rename[q] = (name,)
        used.add(name)

    states = set(A1.states) | {rename[q] for q in A2.states}
    init2 = rename[A2.initial]
    transitions = set()
    for q, a, q2 in A1.transitions:
        transitions.add((q, a, init2 if q2 in A1.finals else q2))
    for q, a, q2 in A2.transitions:
        transitions.add((rename[q], a, rename[q2]))
    finals = {rename[q] for q in A2.finals}
    if A1.initial in A1.finals:
        for q, a, q2 in A2.transitions:
            if q == A2.initial:
                transitions.add((A1.initial, a, rename[q2]))
        if A2.initial in A2.finals:
            finals.add(A1.initial)
    return trim(ContractAutomaton(1, states, A1.initial, finals, transitions))


def shortest_accepted(A: ContractAutomaton):
    """A shortest accepted trace, or None; breadth-first, sorted tie-break."""
    if A.initial in A.finals:
        return ()
    seen = {A.initial}
    frontier = [(A.initial, ())]
    while frontier:
        nxt = []
        for q, w in frontier:
            for _, a, q2 in A.outgoing[q]:
                if q2 in seen:
                    continue
                seen.add(q2)
                if q2 in A.finals:
                    return w + (a,)
                nxt.append((q2, w + (a,)))
        frontier = nxt
    return None


def _has_cycle(A: ContractAutomaton) -> bool:
    color = {}

    def visit(q):
        color[q] = 1
        for _, _, q2 in A.outgoing[q]:
            c = color.get(q2)
            if c == 1:
                return True
            if c is None and visit(q2):
                return True
        color[q] = 2
        return False

    return visit(A.initial)


def enumerate_traces(A: ContractAutomaton, max_len: int) -> set:
    """All accepted traces of length at most max_len.

    Runs are explored exhaustively, so loops blow up quickly; this is an
    oracle for small bounds, not a decision procedure.
    """
    found = set()
    stack = [(A.initial, ())]
    while stack:
        q, w = stack.pop()
        if q in A.finals:
            found.add(w)
        if len(w) < max_len:
            for _, a, q2 in A.outgoing[q]:
                stack.append((q2, w + (a,)))
    return found


def enumerate_traces_capped(A: ContractAutomaton, visit_cap: int) -> set:
    """All accepted traces using every transition at most visit_cap times.

    Terminating even on cyclic automata; the trace set matches exactly
    what a per-transition flow bound of visit_cap can express.
    """
    order = sorted(A.transitions)
    index = {t: i for i, t in enumerate(order)}
    found = set()

    def walk(q, w, counts):
        if q in A.finals:
            found.add(w)
        for t in A.outgoing[q]:
            i = index[t]
            if counts[i] < visit_cap:
                counts[i] += 1
                walk(t[2], w + (t[1],), counts)
                counts[i] -= 1

    walk(A.initial, (), [0] * len(order))
    return found


def determinize(A: ContractAutomaton) -> ContractAutomaton:
    """Subset construction for rank-1 automata; reachable part only."""
    if A.rank != 1:
        raise NotPrincipal("determinization is implemented for rank 1 only")

    def name(subset):
        return ("+".join(sorted(q[0] for q in subset)),)

    start = frozenset([A.initial])
    states = {start}
    transitions = set()
    frontier = [start]
    while frontier:
        cur = frontier.pop()
        by_label = {}
        for q in cur:
            for _, a, q2 in A.outgoing[q]:
                by_label.setdefault(a, set()).add(q2)
        for a, dst in by_label.items():
            dst = frozenset(dst)
            if dst not in states:
                states.add(dst)
                frontier.append(dst)
            transitions.add((name(cur), a, name(dst)))
    finals = {name(s) for s in states if s & A.finals}
    return ContractAutomaton(
        1,
        {name(s) for s in states},
        name(start),
        finals,
        transitions,
        A.principal_names,
    )


def canonical_key(A: ContractAutomaton):
    """Structure of the reachable part under a breadth-first renaming.

    States are numbered in BFS order with outgoing transitions visited in
    label order (ties broken by original target names, which makes the
    key exact for deterministic automata and merely consistent for
    nondeterministic ones).  Two automata with equal keys are isomorphic;
    see is_isomorphic for the complete check.
    """
    number = {A.initial: 0}
    queue = [A.initial]
    while queue:
        q = queue.pop(0)
        for _, a, q2 in sorted(A.outgoing[q], key=lambda t: (t[1], t[2])):
            if q2 not in number:
                number[q2] = len(number)
                queue.append(q2)
    transitions = sorted(
        (number[q], a, number[q2])
        for q, a, q2 in A.transitions
        if q in number and q2 in number
    )
    finals = sorted(number[q] for q in A.finals if q in number)
    return (A.rank, len(number), tuple(transitions), tuple(finals))


def is_isomorphic(A: ContractAutomaton, B: ContractAutomaton) -> bool:
    """Whether a state bijection maps one reachable part onto the other.

    Labels must be preserved exactly; only state names may differ.  The
    fast canonical key decides deterministic instances; otherwise a
    backtracking search over signature-compatible states settles it.
    """
    A = trim(A)
    B = trim(B)
    if A.rank != B.rank or len(A.states) != len(B.states):
        return False
    if len(A.transitions) != len(B.transitions) or len(A.finals) != len(B.finals):
        return False
    ka, kb = canonical_key(A), canonical_key(B)
    if ka == kb:
        return True
    if A.is_deterministic() and B.is_deterministic():
        return False

    def signature(M, q):
        return (
            q in M.finals,
            q == M.initial,
            tuple(sorted(a for _, a, _ in M.outgoing[q])),
            tuple(sorted(a for _, a, _ in M.incoming[q])),
        )

    sig_a = {q: signature(A, q) for q in A.states}
    sig_b = {}
    for q in B.states:
        sig_b.setdefault(signature(B, q), []).append(q)
    order = sorted(A.states, key=lambda q: (q != A.initial, sig_a[q], q))

    def candidates(q):
        if q == A.initial:
            return [B.initial]
        return [c for c in sig_b.get(sig_a[q], ()) if c != B.initial]

    def extend(i, mapping, used):
        if i == len(order):
            return all(mapping[q] in B.finals for q in A.finals) and all(
                (mapping[q], a, mapping[q2]) in B.transitions for q, a, q2 in A.transitions
            )
        q = order[i]
        for cand in candidates(q):
            if cand in used:
                continue
            mapping[q] = cand
            ok = all(
                (mapping[s], a, mapping[d]) in B.transitions
                for s, a, d in A.transitions
                if s in mapping and d in mapping
            )
            if ok and extend(i + 1, mapping, used | {cand}):
                return True
            del mapping[q]
        return False

    return extend(0, {}, frozenset())
