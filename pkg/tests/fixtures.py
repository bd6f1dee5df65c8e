"""Hand-coded automata shared across the suite.

Each builder returns a fresh ContractAutomaton.  The scenarios are the
toolkit's bread and butter: subscription services, toy exchanges, a
stationery shop, a hotel booking, and a small purchasing market.
"""

from __future__ import annotations

from cak.automata import ContractAutomaton


def _p(name: str) -> tuple:
    return (name,)


def subscriber() -> ContractAutomaton:
    """Offers resources any number of times, then wants a signature."""
    return ContractAutomaton(
        1,
        {_p("q0"), _p("q1")},
        _p("q0"),
        {_p("q1")},
        [
            (_p("q0"), ("!res",), _p("q0")),
            (_p("q0"), ("?sig",), _p("q1")),
        ],
    )


def registry() -> ContractAutomaton:
    """Signs once, then keeps asking for resources."""
    return ContractAutomaton(
        1,
        {_p("q0"), _p("q1")},
        _p("q0"),
        {_p("q1")},
        [
            (_p("q0"), ("!sig",), _p("q1")),
            (_p("q1"), ("?res",), _p("q1")),
        ],
    )


def subscription_composite() -> ContractAutomaton:
    """Expected shape of subscriber x registry."""
    init = ("q0", "q0")
    done = ("q1", "q1")
    return ContractAutomaton(
        2,
        {init, done},
        init,
        {done},
        [
            (init, ("!res", "-"), init),
            (init, ("?sig", "!sig"), done),
            (done, ("-", "?res"), done),
        ],
    )


def toy_requester(suffix: str = "") -> ContractAutomaton:
    q0, q1 = _p("t0" + suffix), _p("t1" + suffix)
    return ContractAutomaton(1, {q0, q1}, q0, {q1}, [(q0, ("?toy",), q1)])


def toy_donor() -> ContractAutomaton:
    q0, q1 = _p("d0"), _p("d1")
    return ContractAutomaton(1, {q0, q1}, q0, {q1}, [(q0, ("!toy",), q1)])


def ann() -> ContractAutomaton:
    """Stationery client: an order loop, then buy a book or pay for a pen."""
    return ContractAutomaton(
        1,
        {_p("q0"), _p("q1"), _p("q2"), _p("q4"), _p("q5")},
        _p("q0"),
        {_p("q2"), _p("q5")},
        [
            (_p("q0"), ("?init",), _p("q1")),
            (_p("q1"), ("!book",), _p("q2")),
            (_p("q1"), ("!pen",), _p("q4")),
            (_p("q4"), ("?cancel",), _p("q0")),
            (_p("q4"), ("!pay",), _p("q5")),
        ],
        ("Ann",),
    )


def bart() -> ContractAutomaton:
    """Stationery shop: opens orders, sells books and pens against payment."""
    return ContractAutomaton(
        1,
        {_p("q0"), _p("q1"), _p("q2"), _p("q3"), _p("q4"), _p("q5")},
        _p("q0"),
        {_p("q3"), _p("q5")},
        [
            (_p("q0"), ("!init",), _p("q1")),
            (_p("q1"), ("?book",), _p("q2")),
            (_p("q2"), ("?pay",), _p("q3")),
            (_p("q1"), ("?pen",), _p("q4")),
            (_p("q4"), ("!cancel",), _p("q0")),
            (_p("q4"), ("?pay",), _p("q5")),
        ],
        ("Bart",),
    )


def stationery_controller() -> ContractAutomaton:
    """Expected most permissive controller of the Ann/Bart composition."""
    s = {
        0: ("q0", "q0"),
        1: ("q1", "q1"),
        4: ("q4", "q4"),
        5: ("q5", "q5"),
    }
    return ContractAutomaton(
        2,
        set(s.values()),
        s[0],
        {s[5]},
        [
            (s[0], ("?init", "!init"), s[1]),
            (s[1], ("!pen", "?pen"), s[4]),
            (s[4], ("?cancel", "!cancel"), s[0]),
            (s[4], ("!pay", "?pay"), s[5]),
        ],
        ("Ann", "Bart"),
    )


def hotel() -> ContractAutomaton:
    """Hotel side of the booking scenario: room, transfer, breakfast, end."""
    return ContractAutomaton(
        1,
        {_p("h0"), _p("h1"), _p("h2"), _p("h3"), _p("h4")},
        _p("h0"),
        {_p("h4")},
        [
            (_p("h0"), ("!r",), _p("h1")),
            (_p("h1"), ("!t",), _p("h2")),
            (_p("h2"), ("!b",), _p("h3")),
            (_p("h3"), ("?e",), _p("h4")),
        ],
        ("H",),
    )


HOTEL_STATES = {
    0: ("h0", "c0"),
    1: ("h1", "c1"),
    2: ("h1", "c2"),
    3: ("h2", "c3"),
    4: ("h3", "c3"),
    5: ("h1", "c4"),
    6: ("h2", "c4"),
    7: ("h2", "c1"),
    8: ("h3", "c2"),
    9: ("h3", "c4"),
    10: ("h4", "c5"),
}


def booking() -> ContractAutomaton:
    """Hotel/client composition whose client may ask an unmet car service."""
    Q = HOTEL_STATES
    return ContractAutomaton(
        2,
        set(Q.values()),
        Q[0],
        {Q[10]},
        [
            (Q[0], ("!r", "?r"), Q[1]),
            (Q[1], ("-", "?b"), Q[2]),
            (Q[1], ("!t", "-"), Q[7]),
            (Q[2], ("!t", "?t"), Q[3]),
            (Q[2], ("-", "?c"), Q[5]),
            (Q[3], ("!b", "-"), Q[4]),
            (Q[4], ("?e", "!e"), Q[10]),
            (Q[5], ("!t", "-"), Q[6]),
            (Q[6], ("!b", "-"), Q[9]),
            (Q[7], ("!b", "?b"), Q[8]),
            (Q[8], ("-", "?c"), Q[9]),
            (Q[8], ("-", "?t"), Q[4]),
            (Q[9], ("?e", "!e"), Q[10]),
        ],
        ("H", "C"),
    )


BOOKING_BALANCED = (
    (("!r", "?r"), ("-", "?b"), ("!t", "?t"), ("!b", "-"), ("?e", "!e")),
    (("!r", "?r"), ("!t", "-"), ("!b", "?b"), ("-", "?t"), ("?e", "!e")),
)

BOOKING_UNBALANCED = (
    (("!r", "?r"), ("-", "?b"), ("-", "?c"), ("!t", "-"), ("!b", "-"), ("?e", "!e")),
    (("!r", "?r"), ("!t", "-"), ("!b", "?b"), ("-", "?c"), ("?e", "!e")),
)


def cyclist() -> ContractAutomaton:
    """Wants a bike, gives a lift to the airport."""
    return ContractAutomaton(
        1,
        {_p("a0"), _p("a1"), _p("a2")},
        _p("a0"),
        {_p("a2")},
        [
            (_p("a0"), ("?bike",), _p("a1")),
            (_p("a1"), ("!airplane",), _p("a2")),
        ],
    )


def traveller() -> ContractAutomaton:
    """Wants the lift first, hands over the bike afterwards."""
    return ContractAutomaton(
        1,
        {_p("b0"), _p("b1"), _p("b2")},
        _p("b0"),
        {_p("b2")},
        [
            (_p("b0"), ("?airplane",), _p("b1")),
            (_p("b1"), ("!bike",), _p("b2")),
        ],
    )


def bulk_seller() -> ContractAutomaton:
    """Stockpiles offers freely before a handshake."""
    return ContractAutomaton(
        1,
        {_p("p1"), _p("p2")},
        _p("p1"),
        {_p("p2")},
        [
            (_p("p1"), ("!a",), _p("p1")),
            (_p("p1"), ("!b",), _p("p1")),
            (_p("p1"), ("?sig",), _p("p2")),
        ],
    )


def bulk_buyer() -> ContractAutomaton:
    """Signs first, then consumes any number of deliveries."""
    return ContractAutomaton(
        1,
        {_p("r1"), _p("r2")},
        _p("r1"),
        {_p("r2")},
        [
            (_p("r1"), ("!sig",), _p("r2")),
            (_p("r2"), ("?a",), _p("r2")),
            (_p("r2"), ("?b",), _p("r2")),
        ],
    )


def stock_trace(n1: int, m1: int, n2: int, m2: int) -> tuple:
    """Accepted trace of bulk_seller x bulk_buyer with given multiplicities."""
    steps = []
    steps += [("!a", "-")] * n1
    steps += [("!b", "-")] * m1
    steps.append(("?sig", "!sig"))
    steps += [("-", "?a")] * n2
    steps += [("-", "?b")] * m2
    return tuple(steps)


def buyer() -> ContractAutomaton:
    """Certifies, invoices, then expects a proposal or a refusal."""
    q = {i: _p(f"b{i}") for i in range(1, 6)}
    return ContractAutomaton(
        1,
        set(q.values()),
        q[1],
        {q[4], q[5]},
        [
            (q[1], ("?cert",), q[2]),
            (q[2], ("!inv",), q[3]),
            (q[3], ("?pro",), q[4]),
            (q[3], ("?nop",), q[5]),
        ],
        ("B",),
    )


def quoting_seller() -> ContractAutomaton:
    """Answers every price enquiry with a quote or a refusal."""
    q1, q2 = _p("s1"), _p("s2")
    return ContractAutomaton(
        1,
        {q1, q2},
        q1,
        {q1},
        [
            (q1, ("?pen",), q2),
            (q2, ("!nope",), q1),
            (q2, ("!pquo",), q1),
        ],
        ("S1",),
    )


def silent_seller() -> ContractAutomaton:
    """Absorbs enquiries and never answers."""
    q1 = _p("z1")
    return ContractAutomaton(1, {q1}, q1, {q1}, [(q1, ("?pen",), q1)], ("S2",))


def _agent(transitions, name) -> ContractAutomaton:
    q = {i: _p(f"g{i}") for i in range(1, 8)}
    resolved = [(q[a], label, q[b]) for a, label, b in transitions]
    return ContractAutomaton(1, set(q.values()), q[1], {q[1]}, resolved, (name,))


def agent() -> ContractAutomaton:
    """Purchasing agent: certificate first, then an enquiry round."""
    return _agent(
        [
            (1, ("!cert",), 2),
            (2, ("?inv",), 3),
            (3, ("!pen",), 4),
            (4, ("?pquo",), 5),
            (4, ("?nope",), 6),
            (6, ("!nop",), 1),
            (5, ("!pro",), 1),
            (5, ("!pen",), 7),
            (7, ("?pquo",), 5),
            (7, ("?nope",), 6),
            (6, ("!pen",), 7),
        ],
        "A1",
    )


def stubborn_agent() -> ContractAutomaton:
    """Same agent, but it wants the invoice before showing its certificate."""
    return _agent(
        [
            (1, ("?inv",), 2),
            (2, ("!cert",), 3),
            (3, ("!pen",), 4),
            (4, ("?pquo",), 5),
            (4, ("?nope",), 6),
            (6, ("!nop",), 1),
            (5, ("!pro",), 1),
            (5, ("!pen",), 7),
            (7, ("?pquo",), 5),
            (7, ("?nope",), 6),
            (6, ("!pen",), 7),
        ],
        "A2",
    )


def market_controller() -> ContractAutomaton:
    """Expected controller of buyer x quoting x silent seller x agent."""
    q = {i: ("b", "s", "z", f"m{i}") for i in range(1, 10)}
    # state names are placeholders; only the shape matters for isomorphism
    return ContractAutomaton(
        4,
        set(q.values()),
        q[1],
        {q[7], q[8]},
        [
            (q[1], ("?cert", "-", "-", "!cert"), q[2]),
            (q[2], ("!inv", "-", "-", "?inv"), q[3]),
            (q[3], ("-", "?pen", "-", "!pen"), q[4]),
            (q[4], ("-", "!pquo", "-", "?pquo"), q[5]),
            (q[4], ("-", "!nope", "-", "?nope"), q[6]),
            (q[6], ("?nop", "-", "-", "!nop"), q[8]),
            (q[5], ("?pro", "-", "-", "!pro"), q[7]),
            (q[5], ("-", "?pen", "-", "!pen"), q[9]),
            (q[6], ("-", "?pen", "-", "!pen"), q[9]),
            (q[9], ("-", "!pquo", "-", "?pquo"), q[5]),
            (q[9], ("-", "!nope", "-", "?nope"), q[6]),
        ],
    )
