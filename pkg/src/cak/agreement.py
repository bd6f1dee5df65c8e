"""Agreement, safety, controller synthesis, and liability.

A trace of a composition is in agreement when every request in it is
matched synchronously, so its observable consists of offers and silent
steps only.  The most permissive controller of an automaton keeps
exactly the agreement part of its language; comparing the two yields
safety, emptiness of the controller decides whether agreement is
admitted at all, and the transitions cut away single out the liable
principals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

from .automata import (
    IDLE,
    REQUEST,
    ContractAutomaton,
    RankTooSmall,
    classify,
    observable,
    trim,
)


@dataclass(frozen=True, eq=False)
class MpcResult:
    """Controller synthesis outcome.

    controller has no request transitions and, except for a dead initial
    state when nothing can be controlled, no state that cannot reach a
    final state.  hanged lists the states removed in the second pruning
    step; removed_requests the transitions removed in the first.
    """

    controller: ContractAutomaton
    hanged: frozenset
    removed_requests: frozenset


@dataclass(frozen=True, eq=False)
class LiabilityReport:
    """Who can take the first step leading out of agreement.

    liable_indices holds 1-based principal indexes.  witnesses maps each
    of them to one (prefix, label) pair: a controller run reaching the
    bad state and the offending label fired there.
    """

    liable_indices: frozenset
    witnesses: Dict[int, Tuple[tuple, tuple]]


def _require_composition(A: ContractAutomaton) -> None:
    if A.rank < 2:
        raise RankTooSmall("agreement notions are defined for rank > 1")


def in_agreement(w: Sequence[tuple]) -> bool:
    """Whether every request of the trace is matched at its own step."""
    if w and len(tuple(w[0])) < 2:
        raise RankTooSmall("agreement is a property of composed traces")
    return all(not step.startswith("?") for step in observable(w))


def hanged_states(A: ContractAutomaton) -> frozenset:
    """States from which no final state is reachable."""
    return frozenset(A.states - A.coreachable_states())


def mpc(A: ContractAutomaton) -> MpcResult:
    """Most permissive controller: largest sub-automaton in agreement.

    First every request transition is dropped, then every state that can
    no longer reach a final state is removed together with its incident
    transitions, and states left unreachable by all that pruning go too.
    The language of the controller is exactly the agreement part of the
    language of A.  When the initial state itself is hanged it is kept,
    transitionless, and the controller accepts nothing.
    """
    _require_composition(A)
    removed = frozenset(t for t in A.transitions if classify(t[1])[0] == REQUEST)
    k1 = ContractAutomaton(
        A.rank,
        A.states,
        A.initial,
        A.finals,
        A.transitions - removed,
        A.principal_names,
    )
    hanged = hanged_states(k1)
    keep = (k1.states - hanged) | {A.initial}
    controller = ContractAutomaton(
        A.rank,
        keep,
        A.initial,
        k1.finals & keep,
        {t for t in k1.transitions if t[0] in keep and t[2] in keep},
        A.principal_names,
    )
    return MpcResult(trim(controller), hanged, removed)


def admits_agreement(A: ContractAutomaton) -> bool:
    """Whether some accepted trace of A is in agreement."""
    ctrl = mpc(A).controller
    return bool(ctrl.reachable_states() & ctrl.finals)


def is_safe(A: ContractAutomaton) -> bool:
    """Whether every accepted trace of A is in agreement.

    A trace carries a request exactly when its run uses a
    request-labeled transition, so safety reduces to the absence of a
    request transition lying on some accepting path.
    """
    _require_composition(A)
    reach = A.reachable_states()
    coreach = A.coreachable_states()
    return not any(
        classify(a)[0] == REQUEST and q in reach and q2 in coreach
        for q, a, q2 in A.transitions
    )


def liable(A: ContractAutomaton) -> LiabilityReport:
    """Principals able to fire a transition the controller had to remove.

    A transition of A counts when its source is reachable inside the
    controller but the transition itself is gone from it; every
    principal taking part in the label is liable.  One shortest
    controller run per principal is reported as a witness.
    """
    m = mpc(A)
    ctrl = m.controller
    prefix = {ctrl.initial: ()}
    queue = [ctrl.initial]
    while queue:
        q = queue.pop(0)
        for _, a, q2 in ctrl.outgoing[q]:
            if q2 not in prefix:
                prefix[q2] = prefix[q] + (a,)
                queue.append(q2)
    indices = set()
    witnesses: Dict[int, Tuple[tuple, tuple]] = {}
    for q, a, q2 in sorted(A.transitions):
        if q not in prefix or (q, a, q2) in ctrl.transitions:
            continue
        for i, entry in enumerate(a):
            if entry != IDLE:
                if i + 1 not in indices:
                    witnesses[i + 1] = (prefix[q], a)
                indices.add(i + 1)
    return LiabilityReport(frozenset(indices), witnesses)


def competitive(A1: ContractAutomaton, A2: ContractAutomaton) -> bool:
    """Whether both sides offer a name that either side requests."""
    return bool(A1.offers & A2.offers & (A1.requests | A2.requests))


def collaborative(A1: ContractAutomaton, A2: ContractAutomaton) -> bool:
    """Whether one side offers something the other requests."""
    return bool((A1.offers & A2.requests) | (A1.requests & A2.offers))
