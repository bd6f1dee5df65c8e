"""Contract automata and the agreement properties decidable on them.

The core model lives in :mod:`cak.automata`; safety and agreement in
:mod:`cak.agreement`; the flow-based weak variants in :mod:`cak.flows`;
translations from contract logics in :mod:`cak.logic`.  JSON documents,
the principal expression language and the command line sit in
:mod:`cak.serialization`, :mod:`cak.dsl` and :mod:`cak.cli`.
"""

from .agreement import (
    LiabilityReport,
    MpcResult,
    admits_agreement,
    collaborative,
    competitive,
    hanged_states,
    in_agreement,
    is_safe,
    liable,
    mpc,
)
from .automata import (
    IDLE,
    CakError,
    ContractAutomaton,
    CyclicLeftOperand,
    EmptyComponentList,
    IndexOutOfRange,
    MalformedModel,
    NotPrincipal,
    RankMismatch,
    RankTooSmall,
    a_product,
    classify,
    complementary,
    concatenate,
    determinize,
    enumerate_traces,
    is_isomorphic,
    observable,
    product,
    projection,
    prune_not_coreachable,
    shortest_accepted,
    trim,
)
from .dsl import (
    SelfComplementaryPrincipal,
    parse_expr,
    parse_ill,
    parse_ill_goal,
    parse_pcl,
    parse_principal,
)
from .flows import (
    EmptyLanguage,
    FlowSystem,
    InfeasibleFlow,
    UnknownState,
    WeakLiabilityReport,
    WeakVerdict,
    admits_weak_agreement,
    build_flow_system,
    default_cap,
    flow_to_trace,
    in_weak_agreement,
    is_weakly_safe,
    normalize,
    weakly_liable,
)
from .logic import (
    CImpl,
    Conj,
    HornImpl,
    IllFormula,
    Impl,
    InvalidFormula,
    Literal,
    NegativeAtomInZ,
    PclFormula,
    ProvabilityVerdict,
    StandardImplicationPresent,
    Tensor,
    ill_honoured,
    pcl_entails_lambda,
    pcl_weak_entails,
    translate_ill,
    translate_pcl,
)
from .milp import CapExceeded, MilpModel, MilpOutcome, solve_lp, solve_milp
from .serialization import from_document, load, loads, render_dot, save, saves, to_document

__version__ = "0.1.0"

__all__ = [
    "IDLE",
    "CakError",
    "CapExceeded",
    "CImpl",
    "Conj",
    "ContractAutomaton",
    "CyclicLeftOperand",
    "EmptyComponentList",
    "EmptyLanguage",
    "FlowSystem",
    "HornImpl",
    "IllFormula",
    "Impl",
    "IndexOutOfRange",
    "InfeasibleFlow",
    "InvalidFormula",
    "LiabilityReport",
    "Literal",
    "MalformedModel",
    "MilpModel",
    "MilpOutcome",
    "MpcResult",
    "NegativeAtomInZ",
    "NotPrincipal",
    "PclFormula",
    "ProvabilityVerdict",
    "RankMismatch",
    "RankTooSmall",
    "SelfComplementaryPrincipal",
    "StandardImplicationPresent",
    "Tensor",
    "UnknownState",
    "WeakLiabilityReport",
    "WeakVerdict",
    "a_product",
    "admits_agreement",
    "admits_weak_agreement",
    "build_flow_system",
    "classify",
    "collaborative",
    "competitive",
    "complementary",
    "concatenate",
    "default_cap",
    "determinize",
    "enumerate_traces",
    "flow_to_trace",
    "from_document",
    "hanged_states",
    "ill_honoured",
    "in_agreement",
    "in_weak_agreement",
    "is_isomorphic",
    "is_safe",
    "is_weakly_safe",
    "liable",
    "load",
    "loads",
    "mpc",
    "normalize",
    "observable",
    "parse_expr",
    "parse_ill",
    "parse_ill_goal",
    "parse_pcl",
    "parse_principal",
    "pcl_entails_lambda",
    "pcl_weak_entails",
    "product",
    "projection",
    "prune_not_coreachable",
    "render_dot",
    "save",
    "saves",
    "shortest_accepted",
    "to_document",
    "translate_ill",
    "translate_pcl",
    "trim",
    "weakly_liable",
]
