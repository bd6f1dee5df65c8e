"""Reference implementations the tests trust instead of the library.

Everything here is deliberately naive: permutation backtracking,
explicit enumeration, recursive set semantics.  Slow, but obviously
correct on the small instances the suite uses, which is the point.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from cak.automata import ContractAutomaton, trim
from cak.milp import MilpModel


# ---------------------------------------------------------------- labels

def label_parts(label):
    """(request names, offer names) of the non-idle entries."""
    requests, offers = [], []
    for entry in label:
        if entry.startswith("?"):
            requests.append(entry[1:])
        elif entry.startswith("!"):
            offers.append(entry[1:])
    return requests, offers


def is_request_label(label):
    requests, offers = label_parts(label)
    return len(requests) == 1 and not offers


def is_offer_label(label):
    requests, offers = label_parts(label)
    return len(offers) == 1 and not requests


def is_match_label(label):
    requests, offers = label_parts(label)
    return len(requests) == 1 and len(offers) == 1 and requests == offers


def trace_in_agreement(w) -> bool:
    """No label of the trace is a plain request."""
    return not any(is_request_label(label) for label in w)


def trace_in_weak_agreement(w) -> bool:
    """Decide membership through an explicit injective matching.

    Lone requests and lone offers become the two sides of a bipartite
    graph with edges between equal names; the trace is in weak agreement
    iff a maximum matching saturates the requests (Kuhn's algorithm).
    """
    requests, offers = [], []
    for label in w:
        r, o = label_parts(label)
        if len(r) == 1 and not o:
            requests.append(r[0])
        elif len(o) == 1 and not r:
            offers.append(o[0])
    matched = {}          # offer slot -> request slot
    def augment(i, seen):
        for j, name in enumerate(offers):
            if name == requests[i] and j not in seen:
                seen.add(j)
                if j not in matched or augment(matched[j], seen):
                    matched[j] = i
                    return True
        return False

    return all(augment(i, set()) for i in range(len(requests)))


# ------------------------------------------------------------ isomorphism

def isomorphic(A: ContractAutomaton, B: ContractAutomaton) -> bool:
    """Exact isomorphism by backtracking over state bijections."""
    if (
        A.rank != B.rank
        or len(A.states) != len(B.states)
        or len(A.finals) != len(B.finals)
        or len(A.transitions) != len(B.transitions)
    ):
        return False
    if sorted(a for _, a, _ in A.transitions) != sorted(a for _, a, _ in B.transitions):
        return False

    a_out = {q: sorted((a, q2) for qq, a, q2 in A.transitions if qq == q) for q in A.states}
    b_out = {q: sorted((a, q2) for qq, a, q2 in B.transitions if qq == q) for q in B.states}
    a_trans = set(A.transitions)
    b_trans = set(B.transitions)

    def signature(q, outgoing, finals):
        return (q in finals, sorted(a for a, _ in outgoing[q]))

    order = sorted(A.states, key=lambda q: (q != A.initial, q))
    b_pool = sorted(B.states)

    def extend(i, mapping, used):
        if i == len(order):
            return all((mapping[q], a, mapping[q2]) in b_trans for q, a, q2 in a_trans)
        q = order[i]
        for cand in b_pool:
            if cand in used:
                continue
            if q == A.initial and cand != B.initial:
                continue
            if signature(q, a_out, A.finals) != signature(cand, b_out, B.finals):
                continue
            ok = True
            for qq, a, q2 in a_trans:
                mq = mapping.get(qq) if qq != q else cand
                m2 = mapping.get(q2) if q2 != q else cand
                if mq is not None and m2 is not None and (mq, a, m2) not in b_trans:
                    ok = False
                    break
            if not ok:
                continue
            mapping[q] = cand
            used.add(cand)
            if extend(i + 1, mapping, used):
                return True
            del mapping[q]
            used.remove(cand)
        return False

    return extend(0, {}, set())


# ---------------------------------------------------------- language sets

def language(A: ContractAutomaton, max_len: int) -> set:
    """All accepted traces of length at most max_len, by plain DFS."""
    out = {}
    for q, a, q2 in A.transitions:
        out.setdefault(q, []).append((a, q2))
    found = set()

    def walk(q, prefix):
        if q in A.finals:
            found.add(tuple(prefix))
        if len(prefix) == max_len:
            return
        for a, q2 in out.get(q, []):
            prefix.append(a)
            walk(q2, prefix)
            prefix.pop()

    walk(A.initial, [])
    return found


def regex_words(node, max_len: int) -> set:
    """Set semantics of a principal expression, capped at max_len."""
    kind = type(node).__name__
    if kind == "Atom":
        return {(node.action,)} if max_len >= 1 else set()
    if kind == "Seq":
        words = {()}
        for part in node.parts:
            step = regex_words(part, max_len)
            words = {
                u + v for u in words for v in step if len(u) + len(v) <= max_len
            }
        return words
    if kind == "Alt":
        result = set()
        for part in node.options:
            result |= regex_words(part, max_len)
        return result
    if kind == "Star":
        base = regex_words(node.inner, max_len)
        closure = {()}
        frontier = {()}
        while frontier:
            step = {
                u + v for u in frontier for v in base if len(u) + len(v) <= max_len
            }
            frontier = step - closure
            closure |= step
        return closure
    raise TypeError(f"unknown expression node {kind}")


# ------------------------------------------------- balances over traces

def trace_balances(w):
    balance = {}
    for label in w:
        requests, offers = label_parts(label)
        if len(requests) == 1 and not offers:
            balance[requests[0]] = balance.get(requests[0], 0) - 1
        elif len(offers) == 1 and not requests:
            balance[offers[0]] = balance.get(offers[0], 0) + 1
    return balance


def gamma_of_trace(w, names):
    balance = trace_balances(w)
    return min((Fraction(balance.get(name, 0)) for name in names), default=Fraction(0))


class PathBudgetExceeded(Exception):
    pass


def capped_traces(A: ContractAutomaton, cap: int, budget: int = 200_000):
    """Accepted traces using every transition at most cap times."""
    out = {}
    for t in sorted(A.transitions):
        out.setdefault(t[0], []).append(t)
    found = []
    steps = [0]

    def walk(q, usage, prefix):
        steps[0] += 1
        if steps[0] > budget:
            raise PathBudgetExceeded
        if q in A.finals:
            found.append(tuple(prefix))
        for t in out.get(q, []):
            if usage.get(t, 0) == cap:
                continue
            usage[t] = usage.get(t, 0) + 1
            prefix.append(t[1])
            walk(t[2], usage, prefix)
            prefix.pop()
            usage[t] -= 1

    walk(A.initial, {}, [])
    return found


def weak_gamma_bounds(A: ContractAutomaton, cap: int, budget: int = 200_000):
    """(min, max) of the least request balance over capped traces.

    Returns (None, None) when no accepted trace exists within the cap.
    The names ranged over are the requested actions of the automaton,
    mirroring what the flow encoding optimizes.
    """
    names = sorted(
        entry[1:]
        for _, a, _ in A.transitions
        for entry in a
        if entry.startswith("?")
    )
    names = sorted(set(names))
    gammas = [gamma_of_trace(w, names) for w in capped_traces(A, cap, budget)]
    if not gammas:
        return None, None
    return min(gammas), max(gammas)


# ------------------------------------------------------------------ MILP

def brute_force_milp(model: MilpModel):
    """Enumerate every integer point of a box-bounded pure-integer model.

    Returns (status, value) with status "optimal" or "infeasible".
    """
    names = [v.name for v in model.variables]
    ranges = []
    for v in model.variables:
        assert v.kind != "continuous" and v.lower is not None and v.upper is not None
        lo, hi = int(v.lower), int(v.upper)
        ranges.append(range(lo, hi + 1))
    best = None
    for point in itertools.product(*ranges):
        value = dict(zip(names, point))
        ok = True
        for c in model.constraints:
            total = sum(coef * value[n] for n, coef in c.coeffs)
            if c.relation == "<=" and not total <= c.rhs:
                ok = False
            elif c.relation == ">=" and not total >= c.rhs:
                ok = False
            elif c.relation == "=" and not total == c.rhs:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        score = sum(coef * value[n] for n, coef in model.objective.items())
        if best is None:
            best = score
        elif model.sense == "min":
            best = min(best, score)
        else:
            best = max(best, score)
    if best is None:
        return "infeasible", None
    return "optimal", Fraction(best)


# ------------------------------------------------------------ generators

ACTION_POOL = ("a", "b", "c", "d")


def random_principal(rng: random.Random, max_states: int = 4) -> ContractAutomaton:
    """Random trimmed principal with a nonempty language.

    Each action name is used in a single role per principal, so the
    offer/request alphabets stay disjoint as the model requires.
    """
    while True:
        n = rng.randint(1, max_states)
        states = [(f"s{i}",) for i in range(n)]
        roles = {name: rng.choice("?!") for name in ACTION_POOL}
        transitions = []
        for _ in range(rng.randint(1, 2 * n)):
            q = rng.choice(states)
            q2 = rng.choice(states)
            name = rng.choice(ACTION_POOL)
            transitions.append((q, (roles[name] + name,), q2))
        finals = {q for q in states if rng.random() < 0.4}
        if not finals:
            finals = {rng.choice(states)}
        candidate = trim(
            ContractAutomaton(1, set(states), states[0], finals, set(transitions))
        )
        if candidate.finals:
            return candidate


def random_composition(rng: random.Random, max_states: int = 8) -> ContractAutomaton:
    """Random trimmed rank-2 automaton with a nonempty language."""
    us = ("u0", "u1", "u2")
    vs = ("v0", "v1", "v2")
    while True:
        initial = ("u0", "v0")
        transitions = []
        for _ in range(rng.randint(3, 9)):
            q = (rng.choice(us), rng.choice(vs))
            q2 = (rng.choice(us), rng.choice(vs))
            name = rng.choice(ACTION_POOL)
            shape = rng.randint(0, 3)
            if shape == 0:
                label = ("?" + name, "-")
            elif shape == 1:
                label = ("-", "?" + name)
            elif shape == 2:
                label = ("!" + name, "-")
            else:
                label = ("?" + name, "!" + name)
            q2 = _respect_idle(q, q2, label)
            transitions.append((q, label, q2))
        states = {initial} | {t[0] for t in transitions} | {t[2] for t in transitions}
        finals = {q for q in states if rng.random() < 0.3}
        if not finals:
            finals = {rng.choice(sorted(states))}
        candidate = trim(ContractAutomaton(2, states, initial, finals, set(transitions)))
        if candidate.finals and len(candidate.states) <= max_states:
            return candidate


def _respect_idle(q, q2, label):
    """Idle coordinates must not move; patch the target to comply."""
    return tuple(q[i] if label[i] == "-" else q2[i] for i in range(len(label)))


def random_milp_model(rng: random.Random) -> MilpModel:
    """Box-bounded pure-integer model for brute-force comparison."""
    model = MilpModel()
    n = rng.randint(1, 4)
    for i in range(n):
        lo = rng.randint(-2, 0)
        hi = lo + rng.randint(0, 4)
        model.add_var(f"x{i}", kind="integer", lower=lo, upper=hi)
    for _ in range(rng.randint(1, 5)):
        coeffs = {f"x{i}": rng.randint(-3, 3) for i in range(n)}
        relation = rng.choice(["<=", ">=", "="])
        model.add_constraint(coeffs, relation, rng.randint(-4, 6))
    objective = {f"x{i}": rng.randint(-3, 3) for i in range(n)}
    model.set_objective(rng.choice(["min", "max"]), objective)
    return model
