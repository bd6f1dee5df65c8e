"""Command line front end.

Every subcommand builds a Report: an ordered mapping rendered either as
plain lines or, with --json, as deterministic JSON (identical inputs
give byte-identical output).  Exit codes: 0 the property holds, 1 it
fails, 2 the input was unusable, 3 a solver cap was exhausted.  With
--report-dir the report is also written as CSV next to PNG figures.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from functools import reduce

from . import serialization
from .agreement import liable, mpc
from .agreement import is_safe as _is_safe
from .automata import (
    CakError,
    ContractAutomaton,
    a_product,
    enumerate_traces,
    product,
    projection,
    shortest_accepted,
)
from .dsl import parse_ill, parse_ill_goal, parse_pcl
from .flows import (
    EmptyLanguage,
    admits_weak_agreement,
    is_weakly_safe,
    normalize,
    weakly_liable,
)
from .logic import (
    ill_honoured,
    pcl_entails_lambda,
    pcl_weak_entails,
    translate_ill,
    translate_pcl,
)
from .milp import CapExceeded

HOLDS, FAILS, INPUT_ERROR, CAP_EXCEEDED = 0, 1, 2, 3


def _node_budget():
    raw = os.environ.get("CAK_NODE_BUDGET")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise CakError(f"CAK_NODE_BUDGET must be an integer, got {raw!r}") from None


def _gamma_fields(g: Fraction) -> dict:
    return {"exact": str(g), "decimal": str(float(g))}


def _trace_lines(w) -> list:
    return ["(" + ",".join(label) + ")" for label in w]


def _principal_label(A: ContractAutomaton, index: int) -> str:
    if A.principal_names is not None:
        return A.principal_names[index - 1]
    return str(index)


def _require_language(A: ContractAutomaton) -> None:
    if not (A.reachable_states() & A.finals):
        raise EmptyLanguage("no final state is reachable")


def cmd_compose(args):
    parts = [serialization.load(p) for p in args.files]
    if args.op == "product":
        composed = product(parts)
    else:
        composed = reduce(a_product, parts)
    report = {
        "operation": f"compose {args.op}",
        "rank": composed.rank,
        "states": len(composed.states),
        "transitions": len(composed.transitions),
        "automaton": serialization.to_document(composed),
    }
    return report, HOLDS, composed


def cmd_project(args):
    A = serialization.load(args.file)
    part = projection(A, args.index)
    report = {
        "operation": f"project {args.index}",
        "rank": part.rank,
        "states": len(part.states),
        "transitions": len(part.transitions),
        "automaton": serialization.to_document(part),
    }
    return report, HOLDS, part


def cmd_mpc(args):
    A = serialization.load(args.file)
    result = mpc(A)
    ctrl = result.controller
    report = {
        "operation": "mpc",
        "controller_states": len(ctrl.states),
        "controller_transitions": len(ctrl.transitions),
        "removed_requests": len(result.removed_requests),
        "hanged_states": ["|".join(q) for q in sorted(result.hanged)],
        "admits_agreement": shortest_accepted(ctrl) is not None,
        "automaton": serialization.to_document(ctrl),
    }
    return report, HOLDS, ctrl


def cmd_check(args):
    A = serialization.load(args.file)
    budget = _node_budget()
    report = {"operation": f"check {args.property}"}
    if args.property == "agreement":
        _require_language(A)
        witness = shortest_accepted(mpc(A).controller)
        holds = witness is not None
        report["answer"] = holds
        if holds:
            report["witness"] = _trace_lines(witness)
        return report, HOLDS if holds else FAILS, A
    if args.property == "safety":
        _require_language(A)
        holds = _is_safe(A)
        report["answer"] = holds
        if not holds:
            blame = liable(A)
            report["liable"] = [
                {"index": i, "name": _principal_label(A, i)}
                for i in sorted(blame.liable_indices)
            ]
            report["witnesses"] = _witness_entries(A, blame)
        return report, HOLDS if holds else FAILS, A
    if args.property == "weak-safety":
        v = is_weakly_safe(A, node_budget=budget)
    else:
        v = admits_weak_agreement(A, node_budget=budget)
    report["answer"] = v.answer
    report["gamma"] = _gamma_fields(v.gamma)
    if v.action is not None:
        report["action"] = v.action
    report["cap"] = v.cap
    if v.witness_trace is not None:
        report["witness"] = _trace_lines(v.witness_trace)
    report["balances"] = _witness_balances(v)
    return report, HOLDS if v.answer else FAILS, A


def _witness_entries(A, blame) -> list:
    entries = []
    for i in sorted(blame.witnesses):
        prefix, label = blame.witnesses[i]
        entries.append(
            {
                "index": i,
                "name": _principal_label(A, i),
                "prefix": _trace_lines(prefix),
                "transition": "(" + ",".join(label) + ")",
            }
        )
    return entries


def _witness_balances(v) -> dict:
    from .automata import OFFER, REQUEST, classify

    balance: dict = {}
    if v.witness_trace:
        for label in v.witness_trace:
            kind, name = classify(label)
            if kind == OFFER:
                balance[name] = balance.get(name, 0) + 1
            elif kind == REQUEST:
                balance[name] = balance.get(name, 0) - 1
    return {name: balance[name] for name in sorted(balance)}


def cmd_liable(args):
    A = serialization.load(args.file)
    _require_language(A)
    blame = liable(A)
    report = {
        "operation": "liable",
        "liable": [
            {"index": i, "name": _principal_label(A, i)}
            for i in sorted(blame.liable_indices)
        ],
        "witnesses": _witness_entries(A, blame),
    }
    return report, FAILS if blame.liable_indices else HOLDS, A


def cmd_weak_liable(args):
    A = serialization.load(args.file)
    rep = weakly_liable(A, cap=args.cap, node_budget=_node_budget())
    flagged = sorted({t for t, _ in rep.pairs})
    report = {
        "operation": "weak-liable",
        "liable": [
            {"index": i, "name": _principal_label(A, i)}
            for i in sorted(rep.liable_indices)
        ],
        "flagged_transitions": [
            {
                "from": "|".join(t[0]),
                "label": "(" + ",".join(t[1]) + ")",
                "to": "|".join(t[2]),
                "gamma": _gamma_fields(rep.gammas[t]),
            }
            for t in flagged
        ],
        "cap": rep.cap,
    }
    return report, FAILS if rep.pairs else HOLDS, A


def cmd_pcl(args):
    p = parse_pcl(args.formula)
    if args.mode == "entails":
        v = pcl_entails_lambda(p)
        report = {"operation": "pcl entails", "answer": v.holds}
        if v.witness is not None:
            report["witness"] = _trace_lines(v.witness)
        return report, HOLDS if v.holds else FAILS, translate_pcl(p)
    v = pcl_weak_entails(p)
    report = {
        "operation": "pcl weak-entails",
        "answer": v.answer,
        "gamma": _gamma_fields(v.gamma),
        "cap": v.cap,
    }
    if v.witness_trace is not None:
        report["witness"] = _trace_lines(v.witness_trace)
    return report, HOLDS if v.answer else FAILS, translate_pcl(p)


def cmd_ill(args):
    gamma = parse_ill(args.context)
    goal = parse_ill_goal(args.goal)
    v = ill_honoured(gamma, goal)
    report = {"operation": "ill honoured", "answer": v.holds}
    if v.witness is not None:
        report["witness"] = _trace_lines(v.witness)
    return report, HOLDS if v.holds else FAILS, translate_ill(gamma)


def cmd_traces(args):
    A = serialization.load(args.file)
    found = sorted(enumerate_traces(A, args.max_len))
    report = {
        "operation": f"traces max-len {args.max_len}",
        "count": len(found),
        "traces": [_trace_lines(w) for w in found],
    }
    return report, HOLDS, A


def _render_lines(report: dict, out) -> None:
    for key, value in report.items():
        if key == "automaton":
            continue
        if isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{key}:", file=out)
            for entry in value:
                bits = ", ".join(f"{k}={_flat(v)}" for k, v in entry.items())
                print(f"  - {bits}", file=out)
        elif isinstance(value, list):
            print(f"{key}:", file=out)
            for entry in value:
                print(f"  {_flat(entry)}", file=out)
        elif isinstance(value, dict):
            bits = ", ".join(f"{k}={_flat(v)}" for k, v in value.items())
            print(f"{key}: {bits}", file=out)
        else:
            print(f"{key}: {_flat(value)}", file=out)
    if "automaton" in report:
        print(json.dumps(report["automaton"], indent=2, sort_keys=True), file=out)


def _flat(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, list):
        return " ".join(_flat(v) for v in value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}={_flat(v)}" for k, v in value.items()) + "}"
    return str(value)


def _write_report_dir(path: str, report: dict, automaton) -> None:
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "report.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["field", "value"])
        for key, value in report.items():
            if key == "automaton":
                continue
            writer.writerow([key, _flat(value)])
    if automaton is not None:
        _draw_automaton(automaton, os.path.join(path, "automaton.png"))
    if "gamma" in report or report.get("flagged_transitions"):
        _draw_gammas(report, os.path.join(path, "gamma.png"))


def _draw_automaton(A: ContractAutomaton, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    layers = {A.initial: 0}
    frontier = [A.initial]
    while frontier:
        nxt = []
        for q in frontier:
            for _, _, q2 in A.outgoing[q]:
                if q2 not in layers:
                    layers[q2] = layers[q] + 1
                    nxt.append(q2)
        frontier = nxt
    depth = 0
    for q in sorted(A.states):
        if q not in layers:
            depth += 1
            layers[q] = depth  # disconnected states drift right anyway
    columns: dict = {}
    pos = {}
    for q in sorted(A.states, key=lambda q: (layers[q], q)):
        col = layers[q]
        row = columns.get(col, 0)
        columns[col] = row + 1
        pos[q] = (col * 2.0, -row * 1.4)

    fig, ax = plt.subplots(figsize=(max(6, 2 * (max(columns) + 1)), max(4, 1.2 * max(columns.values()))))
    for q, (x, y) in pos.items():
        ax.add_patch(plt.Circle((x, y), 0.3, fill=False, linewidth=1.2))
        if q in A.finals:
            ax.add_patch(plt.Circle((x, y), 0.36, fill=False, linewidth=1.0))
        ax.text(x, y, "|".join(q), ha="center", va="center", fontsize=7)
    x0, y0 = pos[A.initial]
    ax.annotate("", xy=(x0 - 0.32, y0), xytext=(x0 - 0.9, y0), arrowprops={"arrowstyle": "->"})
    for q, a, q2 in sorted(A.transitions):
        (x1, y1), (x2, y2) = pos[q], pos[q2]
        label = "(" + ",".join(a) + ")"
        if q == q2:
            ax.annotate(
                "",
                xy=(x1 - 0.15, y1 + 0.28),
                xytext=(x1 + 0.15, y1 + 0.28),
                arrowprops={"arrowstyle": "->", "connectionstyle": "arc3,rad=1.6"},
            )
            ax.text(x1, y1 + 0.75, label, ha="center", fontsize=6)
        else:
            ax.annotate(
                "",
                xy=(x2, y2),
                xytext=(x1, y1),
                arrowprops={"arrowstyle": "->", "shrinkA": 16, "shrinkB": 16},
            )
            ax.text((x1 + x2) / 2, (y1 + y2) / 2 + 0.12, label, ha="center", fontsize=6)
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _draw_gammas(report: dict, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if report.get("flagged_transitions"):
        labels = [
            "(" + ",".join(e["label"]) + ")" for e in report["flagged_transitions"]
        ]
        values = [float(Fraction(e["gamma"]["exact"])) for e in report["flagged_transitions"]]
        title = "continuation balance per flagged transition"
    elif report.get("balances"):
        labels = list(report["balances"])
        values = [float(v) for v in report["balances"].values()]
        title = "witness trace balance per action"
    else:
        labels = [report.get("action") or "least balance"]
        values = [float(Fraction(report["gamma"]["exact"]))]
        title = "optimized balance"
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(labels)), 3.2))
    colors = ["#b23b3b" if v < 0 else "#3b6fb2" for v in values]
    ax.bar(range(len(values)), values, color=colors)
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cak", description="analysis toolkit for contract automata"
    )
    parser.add_argument("--json", action="store_true", help="emit the report as JSON")
    parser.add_argument(
        "--report-dir", metavar="DIR", help="also write report.csv and PNG figures to DIR"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compose", help="compose automata from JSON files")
    c.add_argument("--op", choices=["product", "aproduct"], default="product")
    c.add_argument("files", nargs="+")
    c.set_defaults(run=cmd_compose)

    c = sub.add_parser("project", help="extract one principal of a composition")
    c.add_argument("-i", "--index", type=int, required=True, help="1-based principal index")
    c.add_argument("file")
    c.set_defaults(run=cmd_project)

    c = sub.add_parser("mpc", help="most permissive controller for agreement")
    c.add_argument("file")
    c.set_defaults(run=cmd_mpc)

    c = sub.add_parser("check", help="decide a property of a composition")
    c.add_argument(
        "property",
        choices=["agreement", "safety", "weak-safety", "weak-agreement"],
    )
    c.add_argument("file")
    c.set_defaults(run=cmd_check)

    c = sub.add_parser("liable", help="principals liable for losing agreement")
    c.add_argument("file")
    c.set_defaults(run=cmd_liable)

    c = sub.add_parser("weak-liable", help="principals liable for losing weak agreement")
    c.add_argument("--cap", type=int, help="per-transition flow bound")
    c.add_argument("file")
    c.set_defaults(run=cmd_weak_liable)

    c = sub.add_parser("pcl", help="contract-logic provability")
    c.add_argument("mode", choices=["entails", "weak-entails"])
    c.add_argument("formula")
    c.set_defaults(run=cmd_pcl)

    c = sub.add_parser("ill", help="linear-logic honoured sequents")
    c.add_argument("mode", choices=["honoured"])
    c.add_argument("context")
    c.add_argument("goal", nargs="?")
    c.set_defaults(run=cmd_ill)

    c = sub.add_parser("traces", help="enumerate short accepted traces")
    c.add_argument("--max-len", type=int, required=True)
    c.add_argument("file")
    c.set_defaults(run=cmd_traces)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code, automaton = args.run(args)
    except CapExceeded as e:
        report, code, automaton = {"operation": args.command, "error": str(e)}, CAP_EXCEEDED, None
    except (CakError, SyntaxError, OSError, json.JSONDecodeError) as e:
        report, code, automaton = {"operation": args.command, "error": str(e)}, INPUT_ERROR, None
    report["exit_code"] = code
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        _render_lines(report, sys.stdout)
    if args.report_dir and "error" not in report:
        _write_report_dir(args.report_dir, report, automaton)
    return code


if __name__ == "__main__":
    sys.exit(main())
