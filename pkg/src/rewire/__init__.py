"""Workbench for synchronous graph computations, single-instant interventions
on them, and verification of bounded solver programs that claim to produce
minimal intervention sets for target I/O behaviors."""

from .model import (
    Alphabet,
    DefinitionError,
    IORelation,
    NodeFunction,
    RewireError,
    RunOutput,
    SimulationError,
    State,
    System,
    const_fn,
    initial_state,
    io_map,
    run,
    step,
    trace,
)
from .interventions import (
    EMPTY_SET,
    Intervened,
    Intervention,
    InterventionSet,
    affected_outputs,
    apply,
    diff_io,
)
from .goals import NO_SOLUTION, CandidateSpace, Family, IOClass
from .bruteforce import (
    ActivationResult,
    ApproxResult,
    ApproxTimeout,
    SearchSpaceError,
    k_approx_check,
    membership_oracle,
    min_for_class,
    min_interventions,
    node_ever_active,
)
from .automata import Dfa, accept_equiv, cs_to_dfa, dfa_to_cs, delivery_vectors
from .satnet import (
    SatNet,
    build_satnet_cs,
    net_state,
    pack_inputs,
    padded_inputs,
    reference_net_step,
    satlin,
)
from .solver import (
    Budget,
    MalformedProgram,
    OracleBudgetExceeded,
    SolverFault,
    SolverProgram,
    Verdict,
    decode,
    disassemble,
    encode,
    encoded_bits,
    run_solver,
    verify_re,
)
from . import networks
from .csys import (
    CsysError,
    parse_csys,
    parse_dfa,
    parse_family,
    parse_interventions,
    print_csys,
    print_dfa,
    print_interventions,
)

__all__ = [name for name in dir() if not name.startswith("_")]
