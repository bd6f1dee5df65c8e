"""Text front ends: the principal contract DSL and formula syntax.

Principals are written as extended regular expressions over actions,
`?name` for a request and `!name` for an offer, combined with `.`
(sequence), `+` (choice) and postfix `*` (repetition).  The parser goes
through a Thompson construction and epsilon elimination, so the automata
may be nondeterministic; nothing in the model requires otherwise.

Logic formulas use plain text stand-ins for the unprintable connectives:
`&`, `->`, `-->>` and `/\\` on the contract-logic side, `*`, `-o`, `~`
and `,` on the linear side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Tuple

from .automata import CakError, ContractAutomaton
from .logic import (
    CImpl,
    Conj,
    HornImpl,
    IllFormula,
    Impl,
    InvalidFormula,
    Literal,
    PclFormula,
    Tensor,
)


class SelfComplementaryPrincipal(CakError):
    """A principal may not both offer and request the same action."""


@dataclass(frozen=True)
class Atom:
    action: str

    def pretty(self) -> str:
        return self.action


@dataclass(frozen=True)
class Seq:
    parts: Tuple

    def pretty(self) -> str:
        return ".".join(
            f"({p.pretty()})" if isinstance(p, Alt) else p.pretty() for p in self.parts
        )


@dataclass(frozen=True)
class Alt:
    options: Tuple

    def pretty(self) -> str:
        return " + ".join(o.pretty() for o in self.options)


@dataclass(frozen=True)
class Star:
    inner: object

    def pretty(self) -> str:
        if isinstance(self.inner, Atom):
            return self.inner.pretty() + "*"
        return f"({self.inner.pretty()})*"


_TOKEN_RE = re.compile(r"\s*(?:(?P<act>[?!][A-Za-z_][A-Za-z0-9_]*)|(?P<op>[.+*()]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise _syntax_error(f"unexpected character {stripped[0]!r}", at)
        if m.group("act"):
            name = m.group("act")[1:]
            if name.startswith("__"):
                raise _syntax_error(f"reserved action name {name!r}", m.start("act"))
            tokens.append((m.group("act"), m.start("act")))
        else:
            tokens.append((m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


def _syntax_error(message: str, position: int) -> SyntaxError:
    err = SyntaxError(f"{message} at position {position}")
    err.offset = position
    return err


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def pos(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self):
        options = [self.term()]
        while self.peek() == "+":
            self.take()
            options.append(self.term())
        return options[0] if len(options) == 1 else Alt(tuple(options))

    def term(self):
        parts = [self.factor()]
        while self.peek() == ".":
            self.take()
            parts.append(self.factor())
        return parts[0] if len(parts) == 1 else Seq(tuple(parts))

    def factor(self):
        node = self.base()
        while self.peek() == "*":
            self.take()
            node = Star(node)
        return node

    def base(self):
        tok = self.peek()
        if tok == "(":
            self.take()
            node = self.expr()
            if self.peek() != ")":
                raise _syntax_error("expected ')'", self.pos())
            self.take()
            return node
        if tok is None or tok in ".+*()":
            raise _syntax_error("expected an action or '('", self.pos())
        return Atom(self.take()[0])


def parse_expr(text: str):
    """Parse DSL text to its expression tree."""
    p = _Parser(text)
    if not p.tokens:
        raise _syntax_error("empty expression", 0)
    node = p.expr()
    if p.i != len(p.tokens):
        raise _syntax_error(f"unexpected {p.peek()!r}", p.pos())
    return node


def _thompson(node, nfa, fresh):
    # returns (start, accept); nfa is a list of (state, action-or-None, state)
    if isinstance(node, Atom):
        s, a = fresh(), fresh()
        nfa.append((s, node.action, a))
        return s, a
    if isinstance(node, Seq):
        first = _thompson(node.parts[0], nfa, fresh)
        start, accept = first
        for part in node.parts[1:]:
            s2, a2 = _thompson(part, nfa, fresh)
            nfa.append((accept, None, s2))
            accept = a2
        return start, accept
    if isinstance(node, Alt):
        s, a = fresh(), fresh()
        for option in node.options:
            os, oa = _thompson(option, nfa, fresh)
            nfa.append((s, None, os))
            nfa.append((oa, None, a))
        return s, a
    if isinstance(node, Star):
        s, a = fresh(), fresh()
        is_, ia = _thompson(node.inner, nfa, fresh)
        nfa.append((s, None, is_))
        nfa.append((ia, None, is_))
        nfa.append((s, None, a))
        nfa.append((ia, None, a))
        return s, a
    raise TypeError(f"not an expression node: {node!r}")


def build_principal(node) -> ContractAutomaton:
    """Expression tree to a rank-1 automaton, epsilon-free and trimmed."""
    nfa = []
    counter = iter(range(1 << 30))

    def fresh():
        return next(counter)

    start, accept = _thompson(node, nfa, fresh)

    eps = {}
    act = {}
    for q, a, q2 in nfa:
        (eps if a is None else act).setdefault(q, []).append((a, q2))

    def closure(q):
        seen = {q}
        frontier = [q]
        while frontier:
            r = frontier.pop()
            for _, r2 in eps.get(r, ()):
                if r2 not in seen:
                    seen.add(r2)
                    frontier.append(r2)
        return seen

    # action edges out of each closure; reachable part only, renamed in
    # discovery order so equal expressions build identical automata
    names = {start: "s0"}
    order = [start]
    transitions = set()
    finals = set()
    i = 0
    while i < len(order):
        q = order[i]
        i += 1
        cl = closure(q)
        if accept in cl:
            finals.add((names[q],))
        moves = sorted(
            (a, r2) for r in cl for a, r2 in act.get(r, ())
        )
        for a, r2 in moves:
            if r2 not in names:
                names[r2] = f"s{len(names)}"
                order.append(r2)
            transitions.add(((names[q],), (a,), (names[r2],)))
    A = ContractAutomaton(
        1, {(names[q],) for q in order}, (names[start],), finals, transitions
    )
    if A.requests & A.offers:
        both = sorted(A.requests & A.offers)
        raise SelfComplementaryPrincipal(
            f"actions both requested and offered: {', '.join(both)}"
        )
    return A


def parse_principal(text: str) -> ContractAutomaton:
    """DSL text to a principal contract automaton."""
    return build_principal(parse_expr(text))


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"


def _formula_atoms(part: str, context: str):
    atoms = []
    for chunk in part.split("&"):
        chunk = chunk.strip()
        if not re.fullmatch(_NAME, chunk):
            raise InvalidFormula(f"bad atom {chunk!r} in {context}")
        atoms.append(chunk)
    return atoms


def parse_pcl(text: str) -> PclFormula:
    """Clauses joined by /\\ ; each `atoms`, `atoms -> b` or `atoms -->> b`."""
    clauses = []
    for part in text.split("/\\"):
        part = part.strip()
        if not part:
            raise InvalidFormula("empty clause")
        if "-->>" in part:
            left, _, right = part.partition("-->>")
            clauses.append(CImpl(tuple(_formula_atoms(left, "premises")), _one_atom(right)))
        elif "->" in part:
            left, _, right = part.partition("->")
            clauses.append(Impl(tuple(_formula_atoms(left, "premises")), _one_atom(right)))
        else:
            clauses.append(Conj(tuple(_formula_atoms(part, "conjunction"))))
    return PclFormula(tuple(clauses))


def _one_atom(part: str) -> str:
    atoms = _formula_atoms(part, "conclusion")
    if len(atoms) != 1:
        raise InvalidFormula(f"a clause concludes exactly one atom, got {atoms!r}")
    return atoms[0]


def _parse_literals(part: str, context: str):
    literals = []
    for chunk in part.split("*"):
        chunk = chunk.strip()
        negated = chunk.endswith("~")
        name = chunk[:-1].strip() if negated else chunk
        if not re.fullmatch(_NAME, name):
            raise InvalidFormula(f"bad literal {chunk!r} in {context}")
        literals.append(Literal(name, negated))
    return literals


def _group_tensor(literals):
    # one clause when legal as such; otherwise greedy left-to-right
    # grouping into maximal clauses, which never changes provability
    groups = [[]]
    for lit in literals:
        current = groups[-1]
        if any(l.name == lit.name and l.negated != lit.negated for l in current):
            groups.append([])
        groups[-1].append(lit)
    clauses = tuple(Tensor(tuple(g)) for g in groups)
    return clauses[0] if len(clauses) == 1 else IllFormula(clauses)


def parse_ill(text: str):
    """Comma-separated context; elements are tensors or `tensor -o tensor`."""
    gamma = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise InvalidFormula("empty context element")
        if "-o" in part:
            left, _, right = part.partition("-o")
            premises = _parse_literals(left, "premises")
            if any(l.negated for l in premises):
                raise InvalidFormula("implication premises must be positive atoms")
            gamma.append(
                HornImpl(
                    tuple(l.name for l in premises),
                    tuple(_parse_literals(right, "conclusions")),
                )
            )
        else:
            gamma.append(_group_tensor(_parse_literals(part, "tensor")))
    if not gamma:
        raise InvalidFormula("empty context")
    return gamma


def parse_ill_goal(text: Optional[str]) -> Optional[Tensor]:
    """The right-hand side of an honouring check; blank means empty."""
    if text is None or not text.strip():
        return None
    return Tensor(tuple(_parse_literals(text.strip(), "goal")))
