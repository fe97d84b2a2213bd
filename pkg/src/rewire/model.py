"""Synchronous computation over finite directed graphs.

A system stores one alphabet symbol per node.  At every step each node
recomputes its value from the previous values of its in-neighbors (fed in
ascending node-id order), its own previous value, and at most one symbol of
the input string delivered through an explicit schedule.  A run is observed
through the first nonzero value each designated output node takes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class RewireError(Exception):
    """Base class for all errors raised by this package."""


class DefinitionError(RewireError):
    """A system, alphabet, schedule or intervention is structurally invalid."""


class SimulationError(RewireError):
    """A node function faulted or produced a symbol outside the alphabet."""

    def __init__(self, message, node=None, time=None):
        self.node = node
        self.time = time
        if node is not None:
            message = f"node {node} at step {time}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Alphabets


@dataclass(frozen=True)
class Alphabet:
    """Symbol set of a system; ``zero`` is the distinguished quiescent symbol."""

    kind: str  # 'finite' | 'rational'
    symbols: tuple = ()
    zero: object = 0

    @staticmethod
    def finite(symbols, zero=None):
        symbols = tuple(symbols)
        if not symbols:
            raise DefinitionError("finite alphabet needs at least one symbol")
        if len(set(symbols)) != len(symbols):
            raise DefinitionError("alphabet symbols must be distinct")
        if zero is None:
            zero = symbols[0]
        if zero not in symbols:
            raise DefinitionError("zero symbol must belong to the alphabet")
        return Alphabet("finite", symbols, zero)

    @staticmethod
    def rational():
        return Alphabet("rational", (), Fraction(0))

    def __contains__(self, sym):
        if self.kind == "finite":
            return sym in self.symbols
        return isinstance(sym, (int, Fraction)) and not isinstance(sym, bool)


# ---------------------------------------------------------------------------
# Node functions
#
# A node function is either a total lookup table over argument tuples or a
# named builtin with parameters.  The argument tuple a node sees is always
#   (in-neighbor values in ascending id order..., own previous value
#    [, scheduled input symbol])
# with the input slot present only on nodes the schedule ever feeds.

_BUILTINS = {}


def _builtin(name):
    def register(factory):
        _BUILTINS[name] = factory
        return factory

    return register


@_builtin("const")
def _const(params, arity, zero):
    (value,) = params
    return lambda args: value


@_builtin("relay")
def _relay(params, arity, zero):
    (index,) = params
    if not 0 <= index < arity:
        raise DefinitionError(f"relay index {index} out of range for arity {arity}")
    return lambda args: args[index]


@_builtin("latch")
def _latch(params, arity, zero):
    # Holds the first nonzero input symbol forever.  args[-2] is the stored
    # value, args[-1] the scheduled input.
    def fn(args):
        if args[-2] != zero:
            return args[-2]
        return args[-1]

    return fn


@_builtin("enc_input")
def _enc_input(params, arity, zero):
    # Wire-encodes the scheduled input symbol as value+1.
    return lambda args: args[-1] + 1


@_builtin("enc_input_nz")
def _enc_input_nz(params, arity, zero):
    # Like enc_input but stays quiescent on a zero input.
    def fn(args):
        d = args[-1]
        return zero if d == zero else d + 1

    return fn


@_builtin("xor_gate")
def _xor_gate(params, arity, zero):
    # XOR of two wire-encoded bits; quiescent until both inputs are live.
    i, j = params

    def fn(args):
        a, b = args[i], args[j]
        if a == zero or b == zero:
            return zero
        return ((a - 1) ^ (b - 1)) + 1

    return fn


@_builtin("pair_left")
def _pair_left(params, arity, zero):
    # Decodes (direct bit, xor bit) into the pair symbol 1 + 2a + b.
    i, j = params

    def fn(args):
        x, y = args[i], args[j]
        if x == zero or y == zero:
            return zero
        a = x - 1
        b = a ^ (y - 1)
        return 1 + 2 * a + b

    return fn


@_builtin("pair_right")
def _pair_right(params, arity, zero):
    i, j = params

    def fn(args):
        x, y = args[i], args[j]
        if x == zero or y == zero:
            return zero
        b = x - 1
        a = b ^ (y - 1)
        return 1 + 2 * a + b

    return fn


@_builtin("fft_bfly")
def _fft_bfly(params, arity, zero):
    # Radix-2 butterfly over GF(q) on wire-encoded values (field value + 1).
    q, tw, iu, iw, sub = params

    def fn(args):
        u, w = args[iu], args[iw]
        if u == zero or w == zero:
            return zero
        a, b = u - 1, w - 1
        v = (a - tw * b) % q if sub else (a + tw * b) % q
        return v + 1

    return fn


@_builtin("satlin_affine")
def _satlin_affine(params, arity, zero):
    # Saturated-linear activation of an affine form over all arguments.
    coeffs, bias = params
    if len(coeffs) != arity:
        raise DefinitionError("coefficient count must equal arity")

    def fn(args):
        acc = bias
        for c, a in zip(coeffs, args):
            if c:
                acc += c * a
        if acc < 0:
            return Fraction(0)
        if acc > 1:
            return Fraction(1)
        return Fraction(acc)

    return fn


@_builtin("affine")
def _affine(params, arity, zero):
    coeffs, bias = params
    if len(coeffs) != arity:
        raise DefinitionError("coefficient count must equal arity")

    def fn(args):
        acc = bias
        for c, a in zip(coeffs, args):
            if c:
                acc += c * a
        return Fraction(acc)

    return fn


@_builtin("diff_gate")
def _diff_gate(params, arity, zero):
    # hs - decode(cs) where the cs wire carries value+1; quiescent while the
    # cs wire is silent.
    ih, ic = params

    def fn(args):
        c = args[ic]
        if c == zero:
            return zero
        return Fraction(args[ih] - (c - 1))

    return fn


@_builtin("ratio_gate")
def _ratio_gate(params, arity, zero):
    ih, ic = params

    def fn(args):
        c = args[ic]
        if c == zero:
            return zero
        den = c - 1
        if den == 0:
            raise SimulationError("division by zero on ratio link")
        return Fraction(args[ih], 1) / den

    return fn


@_builtin("scale_wire")
def _scale_wire(params, arity, zero):
    # Re-encodes factor * source value onto a value+1 wire.
    src, factor = params

    def fn(args):
        return 1 + factor * args[src]

    return fn


@_builtin("dfa_state")
def _dfa_state(params, arity, zero):
    # One automaton state: the node captures the next input symbol when a
    # single awake in-neighbor activates it per the transition rules, and
    # stays 'blank' in every other configuration.  Reachable configurations
    # have at most one awake node; the simulator does not assume it.
    (rules,) = params
    rules = frozenset(rules)

    def fn(args):
        live = [(p, v) for p, v in enumerate(args[:-2]) if v != "blank"]
        if len(live) == 1 and live[0] in rules:
            return args[-1]
        return "blank"

    return fn


@_builtin("dfa_out")
def _dfa_out(params, arity, zero):
    # Fires 1 when the single awake predecessor transmits the end marker.
    def fn(args):
        live = [v for v in args[:-2] if v != "blank"]
        return 1 if live == ["fin"] else 0

    return fn


@dataclass(frozen=True)
class NodeFunction:
    """Update rule of one node: a total lookup table or a named builtin."""

    arity: int
    kind: str
    params: tuple = ()
    rows: tuple = ()  # table rows as ((args...), value), sorted

    @staticmethod
    def table(arity, mapping):
        rows = tuple(sorted((tuple(k), v) for k, v in dict(mapping).items()))
        for key, _ in rows:
            if len(key) != arity:
                raise DefinitionError("table row length must equal arity")
        return NodeFunction(arity, "table", (), rows)

    @staticmethod
    def builtin(kind, arity, *params):
        if kind not in _BUILTINS:
            raise DefinitionError(f"unknown builtin {kind!r}")
        return NodeFunction(arity, kind, tuple(params))

    def compile(self, zero):
        if self.kind == "table":
            lookup = dict(self.rows)

            def fn(args, _lookup=lookup):
                try:
                    return _lookup[tuple(args)]
                except KeyError:
                    raise SimulationError(f"table has no row for {tuple(args)!r}")

            return fn
        return _BUILTINS[self.kind](self.params, self.arity, zero)

    def check_total(self, alphabet, cap=4096):
        """Verify a table covers Alphabet^arity (skipped above ``cap`` rows)."""
        if self.kind != "table" or alphabet.kind != "finite":
            return True
        need = len(alphabet.symbols) ** self.arity
        if need > cap:
            return True
        if len(self.rows) != need:
            return False
        return all(v in alphabet for _, v in self.rows)


def const_fn(arity, value):
    return NodeFunction.builtin("const", arity, value)


# ---------------------------------------------------------------------------
# Systems


@dataclass(frozen=True)
class System:
    """A computational system on a directed graph with node ids 0..n-1."""

    alphabet: Alphabet
    n: int
    edges: tuple  # (src, dst) pairs, sorted, no duplicates
    functions: tuple  # one NodeFunction per node
    initial: tuple  # one symbol per node
    schedule: tuple  # (node, time, position) triples, sorted
    outputs: tuple  # sorted node ids, nonempty

    def __post_init__(self):
        if self.n <= 0:
            raise DefinitionError("system needs at least one node")
        object.__setattr__(self, "edges", tuple(sorted(set(self.edges))))
        object.__setattr__(self, "schedule", tuple(sorted(self.schedule)))
        object.__setattr__(self, "outputs", tuple(sorted(set(self.outputs))))
        for s, d in self.edges:
            if not (0 <= s < self.n and 0 <= d < self.n):
                raise DefinitionError(f"edge ({s}, {d}) references a missing node")
        if not self.outputs:
            raise DefinitionError("output set must be nonempty")
        if any(not 0 <= o < self.n for o in self.outputs):
            raise DefinitionError("output set references a missing node")
        if len(self.functions) != self.n or len(self.initial) != self.n:
            raise DefinitionError("need one function and one initial value per node")
        for sym in self.initial:
            if sym not in self.alphabet:
                raise DefinitionError(f"initial value {sym!r} outside the alphabet")
        seen = set()
        for node, time, pos in self.schedule:
            if not 0 <= node < self.n or time < 0 or pos < 0:
                raise DefinitionError(f"bad schedule entry {(node, time, pos)}")
            if (node, time) in seen:
                raise DefinitionError(
                    f"node {node} is scheduled twice at time {time}"
                )
            seen.add((node, time))
        fed = {node for node, _, _ in self.schedule}
        indeg = [0] * self.n
        for _, d in self.edges:
            indeg[d] += 1
        for i, fn in enumerate(self.functions):
            want = indeg[i] + 1 + (1 if i in fed else 0)
            if fn.arity != want:
                raise DefinitionError(
                    f"node {i}: function arity {fn.arity}, expected {want}"
                )
            if not fn.check_total(self.alphabet):
                raise DefinitionError(f"node {i}: table is not total")

    def in_neighbors(self, node):
        return tuple(s for s, d in self.edges if d == node)

    def fed_nodes(self):
        return frozenset(node for node, _, _ in self.schedule)

    def with_outputs(self, outputs):
        from dataclasses import replace

        return replace(self, outputs=tuple(sorted(set(outputs))))

    def simulator(self):
        sim = self.__dict__.get("_sim")
        if sim is None:
            sim = Simulator(self)
            object.__setattr__(self, "_sim", sim)
        return sim

    def _run_parts(self):
        return self, None

    def default_horizon(self, input):
        return len(input) + self.n + len(self.edges)


@dataclass(frozen=True)
class State:
    """Stored values at one instant plus the first-fire record per output."""

    stored: tuple
    time: int
    fired: tuple  # sorted (node, symbol, time) triples, write-once

    def value(self, node):
        return self.stored[node]

    def first_fire(self, node):
        for n, sym, t in self.fired:
            if n == node:
                return sym, t
        return None


@dataclass(frozen=True)
class RunOutput:
    """First nonzero symbol per output node, and whether all of them fired."""

    fired: tuple  # sorted (node, symbol) pairs
    complete: bool

    def value(self, node):
        for n, sym in self.fired:
            if n == node:
                return sym
        return None

    def as_dict(self):
        return dict(self.fired)


@dataclass(frozen=True)
class IORelation:
    """Observed outputs of a system over an ordered probe list."""

    probes: tuple
    horizon: int
    results: tuple

    def result(self, probe):
        return self.results[self.probes.index(probe)]


class Simulator:
    """Compiled stepper for one system; overrides patch (node, time) slots."""

    def __init__(self, sys):
        self.sys = sys
        self.zero = sys.alphabet.zero
        self.n = sys.n
        fed = sys.fed_nodes()
        self.preds = [()] * sys.n
        for i in range(sys.n):
            self.preds[i] = sys.in_neighbors(i)
        self.has_input = [i in fed for i in range(sys.n)]
        self.fns = [fn.compile(self.zero) for fn in sys.functions]
        self.sched = {(node, t): pos for node, t, pos in sys.schedule}
        self.outputs = sys.outputs
        self.finite = sys.alphabet.kind == "finite"
        self.symbols = frozenset(sys.alphabet.symbols)

    def _step_values(self, cur, t, input, overrides):
        zero = self.zero
        sched = self.sched
        nxt = [None] * self.n
        for i in range(self.n):
            args = [cur[j] for j in self.preds[i]]
            args.append(cur[i])
            if self.has_input[i]:
                pos = sched.get((i, t), -1)
                args.append(input[pos] if 0 <= pos < len(input) else zero)
            fn = self.fns[i]
            if overrides is not None:
                fn = overrides.get((i, t), fn)
            try:
                v = fn(args)
            except SimulationError as exc:
                raise SimulationError(str(exc), node=i, time=t) from None
            if self.finite:
                if v not in self.symbols:
                    raise SimulationError(
                        f"produced {v!r} outside the alphabet", node=i, time=t
                    )
            nxt[i] = v
        return nxt

    def run(self, input, horizon, overrides=None):
        if horizon < 1:
            raise DefinitionError("horizon must be at least 1")
        zero = self.zero
        cur = list(self.sys.initial)
        fire = {}
        outs = self.outputs
        want = len(outs)
        for o in outs:  # outputs may fire on their initial value
            if cur[o] != zero:
                fire[o] = cur[o]
        for t in range(horizon):
            if len(fire) == want:
                break
            cur = self._step_values(cur, t, input, overrides)
            for o in outs:
                if o not in fire and cur[o] != zero:
                    fire[o] = cur[o]
        return RunOutput(tuple(sorted(fire.items())), len(fire) == want)

    def trace(self, input, steps, overrides=None):
        zero = self.zero
        cur = list(self.sys.initial)
        fire = {}
        for o in self.outputs:
            if cur[o] != zero:
                fire[o] = (cur[o], 0)
        states = [State(tuple(cur), 0, _fired_tuple(fire))]
        for t in range(steps):
            cur = self._step_values(cur, t, input, overrides)
            for o in self.outputs:
                if o not in fire and cur[o] != zero:
                    fire[o] = (cur[o], t + 1)
            states.append(State(tuple(cur), t + 1, _fired_tuple(fire)))
        return states


def _fired_tuple(fire):
    return tuple(sorted((n, sym, t) for n, (sym, t) in fire.items()))


def _parts(target):
    parts = getattr(target, "_run_parts", None)
    if parts is None:
        raise DefinitionError(f"{target!r} is not a simulatable system")
    return parts()


def step(target, state, input):
    """Advance a system (or intervened handle) by one synchronous step."""
    sys, overrides = _parts(target)
    sim = sys.simulator()
    cur = sim._step_values(list(state.stored), state.time, input, overrides)
    fire = {n: (sym, t) for n, sym, t in state.fired}
    for o in sim.outputs:
        if o not in fire and cur[o] != sim.zero:
            fire[o] = (cur[o], state.time + 1)
    return State(tuple(cur), state.time + 1, _fired_tuple(fire))


def initial_state(target):
    sys, _ = _parts(target)
    sim = sys.simulator()
    fire = {}
    for o in sim.outputs:
        if sys.initial[o] != sim.zero:
            fire[o] = (sys.initial[o], 0)
    return State(tuple(sys.initial), 0, _fired_tuple(fire))


def run(target, input, horizon=None):
    """Run on one input string until every output fired or the horizon hit."""
    sys, overrides = _parts(target)
    if horizon is None:
        horizon = sys.default_horizon(input)
    return sys.simulator().run(tuple(input), horizon, overrides)


def trace(target, input, steps):
    """Full state trajectory for ``steps`` steps (index t = state at time t)."""
    sys, overrides = _parts(target)
    return sys.simulator().trace(tuple(input), steps, overrides)


def io_map(target, probes, horizon):
    """Observed input/output relation over an ordered, duplicate-free probe list."""
    probes = tuple(tuple(p) for p in probes)
    if not probes:
        raise DefinitionError("probe list must be nonempty")
    if len(set(probes)) != len(probes):
        raise DefinitionError("duplicate probe")
    if horizon < 1:
        raise DefinitionError("horizon must be at least 1")
    sys, overrides = _parts(target)
    sim = sys.simulator()
    results = tuple(sim.run(p, horizon, overrides) for p in probes)
    return IORelation(probes, horizon, results)
