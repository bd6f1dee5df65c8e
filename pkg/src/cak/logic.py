"""Provability for two Horn contract logics, decided through automata.

Each clause of a formula becomes a one-party automaton: offers publish
what a party grants, requests consume what it needs.  Composing the
clause automata and asking for (weak) agreement then answers whether the
whole formula proves the conjunction of its atoms; witnesses are traces,
not derivations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Tuple

from .automata import (
    CakError,
    ContractAutomaton,
    a_product,
    concatenate,
    determinize,
    shortest_accepted,
)
from .agreement import admits_agreement, mpc
from .flows import WeakVerdict, admits_weak_agreement

_ATOM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class InvalidFormula(CakError):
    """Formula outside the Horn fragments handled here."""


class StandardImplicationPresent(CakError):
    """Weak entailment is only decided for formulas free of plain implication."""


class NegativeAtomInZ(CakError):
    """The goal of an honouring check must be a positive tensor product."""


def _check_atom(name) -> str:
    if not isinstance(name, str) or not _ATOM_RE.match(name):
        raise InvalidFormula(f"bad atom name {name!r}")
    if name.startswith("__"):
        # reserved for internal actions such as the normalization dummy
        raise InvalidFormula(f"atom names starting with __ are reserved: {name!r}")
    return name


@dataclass(frozen=True)
class Conj:
    """Unconditional grants: every atom is offered, nothing is asked."""

    atoms: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.atoms:
            raise InvalidFormula("empty conjunction")
        for a in self.atoms:
            _check_atom(a)
        if len(set(self.atoms)) != len(self.atoms):
            raise InvalidFormula(f"repeated atom in conjunction {self.atoms!r}")


@dataclass(frozen=True)
class Impl:
    """b granted once all premises have been obtained."""

    premises: Tuple[str, ...]
    conclusion: str

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(self.premises))
        if not self.premises:
            raise InvalidFormula("implication needs at least one premise")
        for a in self.premises:
            _check_atom(a)
        _check_atom(self.conclusion)
        if len(set(self.premises)) != len(self.premises):
            raise InvalidFormula(f"repeated premise in {self.premises!r}")
        if self.conclusion in self.premises:
            raise InvalidFormula(
                f"conclusion {self.conclusion!r} cannot be one of its own premises"
            )


@dataclass(frozen=True)
class CImpl(Impl):
    """Contractual implication: b is granted up front, on credit."""


@dataclass(frozen=True)
class PclFormula:
    clauses: tuple

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if len(self.clauses) < 2:
            raise InvalidFormula("a formula is a conjunction of at least two clauses")
        for c in self.clauses:
            if not isinstance(c, (Conj, Impl)):
                raise InvalidFormula(f"not a clause: {c!r}")


def lambda_atoms(p: PclFormula) -> tuple:
    """All atoms of the formula, sorted; the goal conjunction being proved."""
    atoms = set()
    for c in p.clauses:
        if isinstance(c, Conj):
            atoms.update(c.atoms)
        else:
            atoms.update(c.premises)
            atoms.add(c.conclusion)
    return tuple(sorted(atoms))


def _subset_name(indices) -> str:
    return ",".join([str(i) for i in sorted(indices)] + ["*"])


def _pcl_clause(clause) -> ContractAutomaton:
    if isinstance(clause, Conj):
        q = (_subset_name(()),)
        loops = {(q, ("!" + a,), q) for a in clause.atoms}
        return ContractAutomaton(1, {q}, q, {q}, loops)

    n = len(clause.premises)
    states = set()
    transitions = set()
    full = frozenset(range(1, n + 1))
    for bits in range(1 << n):
        pending = frozenset(j for j in range(1, n + 1) if bits & (1 << (j - 1)))
        q = (_subset_name(pending),)
        states.add(q)
        for j in pending:
            q2 = (_subset_name(pending - {j}),)
            transitions.add((q, ("?" + clause.premises[j - 1],), q2))
        if isinstance(clause, CImpl) or not pending:
            transitions.add((q, ("!" + clause.conclusion,), q))
    initial = (_subset_name(full),)
    final = (_subset_name(()),)
    return ContractAutomaton(1, states, initial, {final}, transitions)


def translate_pcl(p: PclFormula) -> ContractAutomaton:
    """One principal per clause, composed; offers only flow once earned."""
    if not isinstance(p, PclFormula):
        raise InvalidFormula(f"expected a formula, got {p!r}")
    composed = reduce(a_product, [_pcl_clause(c) for c in p.clauses])
    assert composed.is_deterministic()
    return composed


@dataclass(frozen=True, eq=False)
class ProvabilityVerdict:
    """Yes/no plus, when provable, one trace of the agreeing run."""

    holds: bool
    witness: Optional[tuple]

    def __bool__(self):
        return self.holds


def pcl_entails_lambda(p: PclFormula) -> ProvabilityVerdict:
    """Whether the formula proves the conjunction of all its atoms."""
    A = translate_pcl(p)
    if not admits_agreement(A):
        return ProvabilityVerdict(False, None)
    return ProvabilityVerdict(True, shortest_accepted(mpc(A).controller))


def pcl_weak_entails(p: PclFormula) -> WeakVerdict:
    """Entailment for the fragment without plain implications.

    Circular contractual implications settle on credit, which is exactly
    weak agreement of the translation; with a plain implication in play
    that correspondence does not hold, so the check is refused.
    """
    for c in p.clauses:
        if isinstance(c, Impl) and not isinstance(c, CImpl):
            raise StandardImplicationPresent(
                "weak entailment is decided only without plain implications"
            )
    return admits_weak_agreement(translate_pcl(p))


@dataclass(frozen=True)
class Literal:
    """An atom to produce, or (negated) an atom to consume."""

    name: str
    negated: bool = False

    def __post_init__(self):
        _check_atom(self.name)

    def __str__(self):
        return self.name + ("~" if self.negated else "")


def _check_no_mixed_sign(literals) -> None:
    # a clause tensor may repeat a literal but never carries both a and
    # its negation; such a pair lives in two clauses, where it can match
    signs = {}
    for l in literals:
        if signs.setdefault(l.name, l.negated) != l.negated:
            raise InvalidFormula(f"{l.name!r} occurs both plainly and negated in one tensor")


@dataclass(frozen=True)
class Tensor:
    literals: Tuple[Literal, ...]

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple(self.literals))
        if not self.literals:
            raise InvalidFormula("empty tensor")
        for l in self.literals:
            if not isinstance(l, Literal):
                raise InvalidFormula(f"not a literal: {l!r}")
        _check_no_mixed_sign(self.literals)


@dataclass(frozen=True)
class HornImpl:
    """premises (positive atoms) consumed, then the conclusions delivered."""

    premises: Tuple[str, ...]
    conclusions: Tuple[Literal, ...]

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(self.premises))
        object.__setattr__(self, "conclusions", tuple(self.conclusions))
        if not self.premises or not self.conclusions:
            raise InvalidFormula("implication needs premises and conclusions")
        for a in self.premises:
            _check_atom(a)
        for l in self.conclusions:
            if not isinstance(l, Literal):
                raise InvalidFormula(f"not a literal: {l!r}")
        _check_no_mixed_sign(self.conclusions)
        overlap = set(self.premises) & {l.name for l in self.conclusions if not l.negated}
        if overlap:
            raise InvalidFormula(f"premise atoms reappear in the conclusion: {overlap}")


@dataclass(frozen=True)
class IllFormula:
    clauses: tuple

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if len(self.clauses) < 2:
            raise InvalidFormula("a compound formula has at least two clauses")
        for c in self.clauses:
            if not isinstance(c, (Tensor, HornImpl)):
                raise InvalidFormula(f"not a clause: {c!r}")


def _lit_state(pending) -> str:
    return ",".join(sorted(pending) + ["*"])


def _ill_tensor(literals) -> ContractAutomaton:
    # linear resources: every occurrence fires exactly once, so repeated
    # literals get distinct occurrence ids inside state names
    ids = {k: f"{lit}.{k}" for k, lit in enumerate(literals)}
    states = set()
    transitions = set()
    n = len(literals)
    for bits in range(1 << n):
        pending = frozenset(ids[k] for k in range(n) if bits & (1 << k))
        q = (_lit_state(pending),)
        states.add(q)
        for k in range(n):
            if ids[k] in pending:
                lit = literals[k]
                label = ("?" + lit.name,) if lit.negated else ("!" + lit.name,)
                transitions.add((q, label, (_lit_state(pending - {ids[k]}),)))
    initial = (_lit_state(frozenset(ids.values())),)
    final = (_lit_state(frozenset()),)
    return ContractAutomaton(1, states, initial, {final}, transitions)


def _ill_clause(clause) -> ContractAutomaton:
    if isinstance(clause, Tensor):
        return determinize(_ill_tensor(clause.literals))
    premises = _ill_tensor([Literal(a, True) for a in clause.premises])
    conclusions = _ill_tensor(clause.conclusions)
    return determinize(concatenate(premises, conclusions))


def translate_ill(gamma) -> ContractAutomaton:
    """One automaton per clause, composed over the whole context."""
    parts = []
    for item in gamma:
        if isinstance(item, IllFormula):
            parts.extend(_ill_clause(c) for c in item.clauses)
        elif isinstance(item, (Tensor, HornImpl)):
            parts.append(_ill_clause(item))
        else:
            raise InvalidFormula(f"not a formula or clause: {item!r}")
    if not parts:
        raise InvalidFormula("empty context")
    return reduce(a_product, parts)


def ill_honoured(gamma, Z: Optional[Tensor] = None) -> ProvabilityVerdict:
    """Whether the context proves Z with every consumption honoured.

    True when some accepted run consists of matches plus lone offers
    whose names, as a multiset, are exactly the literals of Z.  The
    translations are acyclic, so the runs can be walked exhaustively.
    """
    goal: dict = {}
    if Z is not None:
        for lit in Z.literals:
            if lit.negated:
                raise NegativeAtomInZ(f"goal must be positive, found {lit}")
            goal[lit.name] = goal.get(lit.name, 0) + 1
    A = translate_ill(gamma)

    def walk(q, budget, w):
        if q in A.finals and not any(budget.values()):
            return w
        for _, a, q2 in A.outgoing[q]:
            lone = [e for e in a if e != "-"]
            if len(lone) == 1:
                e = lone[0]
                if e.startswith("?"):
                    continue
                name = e[1:]
                if budget.get(name, 0) == 0:
                    continue
                budget[name] -= 1
                hit = walk(q2, budget, w + (a,))
                budget[name] += 1
            else:
                hit = walk(q2, budget, w + (a,))
            if hit is not None:
                return hit
        return None

    witness = walk(A.initial, dict(goal), ())
    return ProvabilityVerdict(witness is not None, witness)
