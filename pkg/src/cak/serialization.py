"""JSON documents and graph output for contract automata.

The document format is deliberately plain: states are arrays of per
principal names, labels are arrays of "?name" / "!name" / "-" entries,
and transitions spell out from / label / to.  Saving sorts everything,
so equal automata serialize to byte-identical text.
"""

from __future__ import annotations

import json
from typing import Optional

from .automata import ContractAutomaton, MalformedModel


def _as_state(raw, rank: int) -> tuple:
    if not isinstance(raw, list) or len(raw) != rank or not all(
        isinstance(e, str) for e in raw
    ):
        raise MalformedModel(f"state must be an array of {rank} strings: {raw!r}")
    return tuple(raw)


def from_document(doc) -> ContractAutomaton:
    """Build and validate an automaton from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise MalformedModel("document must be a JSON object")
    unknown = set(doc) - {"rank", "states", "initial", "finals", "transitions", "principal_names"}
    if unknown:
        raise MalformedModel(f"unknown document fields: {sorted(unknown)}")
    try:
        rank = doc["rank"]
        raw_states = doc["states"]
        raw_initial = doc["initial"]
        raw_finals = doc["finals"]
        raw_transitions = doc["transitions"]
    except KeyError as e:
        raise MalformedModel(f"missing document field {e.args[0]!r}") from None
    if not isinstance(rank, int):
        raise MalformedModel(f"rank must be an integer, got {rank!r}")
    if not isinstance(raw_states, list) or not isinstance(raw_finals, list):
        raise MalformedModel("states and finals must be arrays")
    states = {_as_state(s, rank) for s in raw_states}
    finals = {_as_state(s, rank) for s in raw_finals}
    initial = _as_state(raw_initial, rank)
    transitions = set()
    if not isinstance(raw_transitions, list):
        raise MalformedModel("transitions must be an array")
    for rt in raw_transitions:
        if not isinstance(rt, dict) or set(rt) != {"from", "label", "to"}:
            raise MalformedModel(f"transition must have from/label/to: {rt!r}")
        label = rt["label"]
        if not isinstance(label, list) or not all(isinstance(e, str) for e in label):
            raise MalformedModel(f"label must be an array of strings: {label!r}")
        transitions.add((_as_state(rt["from"], rank), tuple(label), _as_state(rt["to"], rank)))
    names = doc.get("principal_names")
    if names is not None:
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise MalformedModel("principal_names must be an array of strings")
        names = tuple(names)
    return ContractAutomaton(rank, states, initial, finals, transitions, names)


def to_document(A: ContractAutomaton) -> dict:
    doc = {
        "rank": A.rank,
        "states": [list(q) for q in sorted(A.states)],
        "initial": list(A.initial),
        "finals": [list(q) for q in sorted(A.finals)],
        "transitions": [
            {"from": list(q), "label": list(a), "to": list(q2)}
            for q, a, q2 in sorted(A.transitions)
        ],
    }
    if A.principal_names is not None:
        doc["principal_names"] = list(A.principal_names)
    return doc


def loads(text: str) -> ContractAutomaton:
    try:
        doc = json.loads(text)
    except ValueError as e:
        raise MalformedModel(f"not valid JSON: {e}") from None
    return from_document(doc)


def load(path) -> ContractAutomaton:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def saves(A: ContractAutomaton) -> str:
    return json.dumps(to_document(A), indent=2, sort_keys=True) + "\n"


def save(A: ContractAutomaton, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(saves(A))


def _node_id(q: tuple) -> str:
    return "|".join(q)


def render_dot(A: ContractAutomaton, title: Optional[str] = None) -> str:
    """Graphviz text for the automaton; deterministic node and edge order."""
    lines = ["digraph contract {", "  rankdir=LR;"]
    if title:
        lines.append(f'  label="{title}";')
    lines.append('  __start [shape=point, label=""];')
    for q in sorted(A.states):
        shape = "doublecircle" if q in A.finals else "circle"
        lines.append(f'  "{_node_id(q)}" [shape={shape}];')
    lines.append(f'  __start -> "{_node_id(A.initial)}";')
    for q, a, q2 in sorted(A.transitions):
        lines.append(f'  "{_node_id(q)}" -> "{_node_id(q2)}" [label="({",".join(a)})"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
