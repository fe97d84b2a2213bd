"""Deterministic finite automata, conversions between them and graph systems
in both directions, and bounded-length language equivalence checks."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .model import (
    Alphabet,
    DefinitionError,
    NodeFunction,
    System,
    trace,
)

MARKERS = ("start", "fin", "blank")


@dataclass(frozen=True)
class Dfa:
    states: tuple
    alphabet: tuple
    start: object
    delta: tuple  # sorted ((state, symbol), next_state) pairs, total
    accepting: frozenset

    @staticmethod
    def make(states, alphabet, start, delta, accepting):
        states = tuple(states)
        alphabet = tuple(alphabet)
        delta = dict(delta)
        d = Dfa(
            states,
            alphabet,
            start,
            tuple(sorted(delta.items(), key=lambda kv: (states.index(kv[0][0]), alphabet.index(kv[0][1])))),
            frozenset(accepting),
        )
        if start not in states:
            raise DefinitionError("start state is not a state")
        if not d.accepting <= set(states):
            raise DefinitionError("accepting set contains a non-state")
        table = dict(d.delta)
        for q, a in product(states, alphabet):
            if (q, a) not in table:
                raise DefinitionError(f"transition function misses ({q!r}, {a!r})")
            if table[(q, a)] not in states:
                raise DefinitionError(f"transition from ({q!r}, {a!r}) leaves the state set")
        return d

    def table(self):
        return dict(self.delta)

    def step(self, state, symbol):
        return self.table()[(state, symbol)]

    def accepts(self, word):
        table = self.table()
        q = self.start
        for a in word:
            q = table[(q, a)]
        return q in self.accepting


def dfa_to_cs(dfa: Dfa, max_input_len: int = 16) -> System:
    """Build a graph system that fires 1 exactly on accepted strings.

    One node per automaton state plus an output node.  All nodes read the
    input every step; a single awake node walks the transition graph carrying
    the freshest input symbol, everything else stays 'blank'.  The caller
    terminates input strings with a 'fin' symbol; the output fires 1 on the
    step after 'fin' reaches an accepting node.  The schedule covers input
    positions 0..max_input_len, so runs beyond that read zeros.
    """
    clash = set(dfa.alphabet) & set(MARKERS)
    if clash:
        raise DefinitionError(f"automaton alphabet collides with markers {sorted(clash)}")
    n = len(dfa.states)
    out = n
    state_id = {q: i for i, q in enumerate(dfa.states)}

    symbols = [0, 1]
    for a in dfa.alphabet:
        if a not in symbols:
            symbols.append(a)
    symbols.extend(MARKERS)
    alphabet = Alphabet.finite(symbols, zero=0)

    edges = set()
    for (q, a), q2 in dfa.delta:
        edges.add((state_id[q], state_id[q2]))
    for q in dfa.states:  # self-loops let a node see its own wake marker
        edges.add((state_id[q], state_id[q]))
    for q in dfa.accepting:
        edges.add((state_id[q], out))
    edges = tuple(sorted(edges))

    preds = {i: tuple(s for s, d in edges if d == i) for i in range(n + 1)}
    functions = []
    for q in dfa.states:
        i = state_id[q]
        rules = set()
        for pos, p in enumerate(preds[i]):
            pq = dfa.states[p]
            for a in dfa.alphabet:
                if dfa.step(pq, a) == q:
                    rules.add((pos, a))
            if p == i and q == dfa.start:
                rules.add((pos, "start"))
        functions.append(
            NodeFunction.builtin("dfa_state", len(preds[i]) + 2, frozenset(rules))
        )
    functions.append(NodeFunction.builtin("dfa_out", len(preds[out]) + 2))

    initial = ["blank"] * (n + 1)
    initial[state_id[dfa.start]] = "start"

    schedule = tuple(
        (i, t, t) for i in range(n + 1) for t in range(max_input_len + 1)
    )
    return System(
        alphabet=alphabet,
        n=n + 1,
        edges=edges,
        functions=tuple(functions),
        initial=tuple(initial),
        schedule=schedule,
        outputs=(out,),
    )


def cs_to_dfa(sys: System, cap: int = 1_000_000) -> Dfa:
    """Product automaton of a finite-alphabet system.

    States are stored-value vectors; input symbols are per-node delivery
    vectors, with the coordinate pinned to zero for nodes the schedule never
    feeds.  A vector state accepts when every output coordinate reads 1.
    """
    if sys.alphabet.kind != "finite":
        raise DefinitionError("product automaton needs a finite alphabet")
    symbols = sys.alphabet.symbols
    zero = sys.alphabet.zero
    fed = sys.fed_nodes()
    domains = [symbols if i in fed else (zero,) for i in range(sys.n)]
    n_states = len(symbols) ** sys.n
    n_inputs = 1
    for d in domains:
        n_inputs *= len(d)
    if n_states * n_inputs > cap:
        raise DefinitionError(
            f"product automaton would have {n_states} states x {n_inputs} "
            f"symbols, above the cap of {cap}"
        )

    sim = sys.simulator()
    preds = sim.preds
    fns = sim.fns
    states = tuple(product(symbols, repeat=sys.n))
    inputs = tuple(product(*domains))

    def advance(vec, dvec):
        nxt = []
        for i in range(sys.n):
            args = [vec[j] for j in preds[i]]
            args.append(vec[i])
            if sim.has_input[i]:
                args.append(dvec[i])
            nxt.append(fns[i](args))
        return tuple(nxt)

    delta = {}
    for vec in states:
        for dvec in inputs:
            delta[(vec, dvec)] = advance(vec, dvec)
    accepting = frozenset(
        vec for vec in states if all(vec[o] == 1 for o in sys.outputs)
    )
    return Dfa.make(states, inputs, tuple(sys.initial), delta, accepting)


def delivery_vectors(sys: System, input, steps):
    """Per-step delivery vectors matching the system's schedule on ``input``;
    this is how a plain input string embeds into cs_to_dfa's vector alphabet."""
    sched = {(node, t): pos for node, t, pos in sys.schedule}
    zero = sys.alphabet.zero
    fed = sys.fed_nodes()
    vecs = []
    for t in range(steps):
        vec = []
        for i in range(sys.n):
            if i in fed:
                pos = sched.get((i, t), -1)
                vec.append(input[pos] if 0 <= pos < len(input) else zero)
            else:
                vec.append(zero)
        vecs.append(tuple(vec))
    return vecs


@dataclass(frozen=True)
class EquivResult:
    equivalent: bool
    counterexample: tuple = None


def all_words(alphabet, max_len):
    for length in range(max_len + 1):
        yield from product(alphabet, repeat=length)


def accept_equiv(dfa: Dfa, sys: System, max_len: int) -> EquivResult:
    """Exhaustively compare automaton acceptance with the converted system's
    output value after the end marker, for every string up to max_len.

    Returns the shortlex-first counterexample if the two disagree.
    """
    if max_len < 0:
        raise DefinitionError("max_len must be nonnegative")
    out = sys.outputs[0]
    for word in all_words(dfa.alphabet, max_len):
        steps = len(word) + 2
        states = trace(sys, word + ("fin",), steps)
        sys_accepts = states[-1].stored[out] == 1
        if sys_accepts != dfa.accepts(word):
            return EquivResult(False, word)
    return EquivResult(True, None)
