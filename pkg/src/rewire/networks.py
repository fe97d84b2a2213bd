"""Concrete systems shipped with the workbench, their goal families, and the
solver programs published for them.

Wire conventions (documented per builder): quiescence is the symbol 0, so
values that may legitimately be zero travel wires encoded as value + 1 and
are decoded at the consuming node.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import (
    Alphabet,
    DefinitionError,
    NodeFunction,
    System,
    const_fn,
    io_map,
)
from .goals import CandidateSpace, Family, IOClass
from .solver import Budget, SolverProgram, run_solver


def _asm(lines):
    """Assemble instruction lines with ('label', name) pseudo-ops and
    symbolic JMP/JZ targets into a SolverProgram."""
    labels = {}
    instrs = []
    for line in lines:
        if line[0] == "label":
            labels[line[1]] = len(instrs)
        else:
            instrs.append(line)
    out = []
    for idx, instr in enumerate(instrs):
        if instr[0] in ("JMP", "JZ") and isinstance(instr[1], str):
            out.append((instr[0], labels[instr[1]] - (idx + 1)))
        else:
            out.append(instr)
    return SolverProgram(tuple(out))


def _relay_catalog(sys):
    """Per-node replacement catalog: one relay per in-neighbor."""
    catalogs = {}
    for v in range(sys.n):
        preds = sys.in_neighbors(v)
        arity = sys.functions[v].arity
        catalogs[v] = tuple(
            (("relay", src), NodeFunction.builtin("relay", arity, pos))
            for pos, src in enumerate(preds)
        )
    return catalogs


def _const_catalog(sys, symbols):
    catalogs = {}
    for v in range(sys.n):
        arity = sys.functions[v].arity
        catalogs[v] = tuple(
            (("const", sym), const_fn(arity, sym)) for sym in symbols
        )
    return catalogs


# ---------------------------------------------------------------------------
# Grid relay network: a message enters at (0,0) and relays down the diagonal.


def line_node(n, row, col):
    return row * n + col


def build_line(n, alphabet_size=10) -> System:
    """n x n grid of relay nodes, 4-neighbor links in both directions plus a
    one-way chain down the diagonal.  The input symbol is loaded at (0,0) at
    step 0 and hops (k,k) -> (k+1,k+1); the corner (n-1,n-1) is the output.
    Off-diagonal nodes idle at 0 until an intervention gives them a relay
    role.  Messages are nonzero symbols below ``alphabet_size``.
    """
    if n < 2:
        raise DefinitionError("grid needs n >= 2")
    if alphabet_size < 2:
        raise DefinitionError("alphabet needs at least one nonzero message")
    edges = set()
    for r in range(n):
        for c in range(n):
            for r2, c2 in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= r2 < n and 0 <= c2 < n:
                    edges.add((line_node(n, r, c), line_node(n, r2, c2)))
    for k in range(n - 1):
        edges.add((line_node(n, k, k), line_node(n, k + 1, k + 1)))
    edges = tuple(sorted(edges))

    indeg = [0] * (n * n)
    for _, d in edges:
        indeg[d] += 1

    functions = []
    for r in range(n):
        for c in range(n):
            v = line_node(n, r, c)
            if v == 0:
                functions.append(NodeFunction.builtin("relay", indeg[v] + 2, indeg[v] + 1))
            elif r == c:
                # the diagonal predecessor has the smallest id of all preds
                functions.append(NodeFunction.builtin("relay", indeg[v] + 1, 0))
            else:
                functions.append(const_fn(indeg[v] + 1, 0))

    return System(
        alphabet=Alphabet.finite(tuple(range(alphabet_size))),
        n=n * n,
        edges=edges,
        functions=tuple(functions),
        initial=(0,) * (n * n),
        schedule=((0, 0, 0),),
        outputs=(line_node(n, n - 1, n - 1),),
    )


@dataclass(frozen=True)
class GridGeometry:
    n: int

    def path_to_diagonal(self, i, j):
        """min(i, j) and the node path from the diagonal out to (i, j)."""
        n = self.n
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"cell ({i}, {j}) outside the {n} x {n} grid")
        lo = min(i, j)
        if i >= j:
            path = tuple(line_node(n, k, j) for k in range(j, i + 1))
        else:
            path = tuple(line_node(n, i, c) for c in range(i, j + 1))
        return lo, path


def line_family(n, message=3):
    """One destination class per grid cell: the cell's first output must be
    the probed message.  The candidate catalog holds every relay role; the
    observed system reports every node."""
    sys = build_line(n)
    if message not in sys.alphabet or message == 0:
        raise DefinitionError("message must be a nonzero alphabet symbol")
    observed = sys.with_outputs(range(n * n))
    ids = tuple((i, j) for i in range(n) for j in range(n))
    classes = {
        (i, j): IOClass((i, j), "destination", line_node(n, i, j))
        for i, j in ids
    }
    space = CandidateSpace(
        nodes=tuple(range(n * n)),
        times=tuple(range(n + 1)),
        catalogs=_relay_catalog(sys),
    )
    fam = Family(
        ids=ids,
        classes=classes,
        probes=((message,),),
        horizon=n + 1,
        space=space,
        geometry=GridGeometry(n),
        sys_params=(n,),
    )
    return observed, fam


def line_solver(limit) -> SolverProgram:
    """Reroute the message from the diagonal to the requested cell with one
    relay per hop; declare no solution when the hop count exceeds the limit."""
    return _asm([
        ("INPUT", 0),
        ("INPUT", 1),
        ("DIAG",),
        ("STORE", 0),          # path, diagonal entry first
        ("STORE", 1),          # lo = min(i, j)
        ("PUSH", limit),
        ("LOAD", 0),
        ("LEN",),
        ("PUSH", 1),
        ("SUB",),              # hop count |i - j|
        ("LT",),               # limit < hops ?
        ("JZ", "fits"),
        ("NOSOL",),
        ("label", "fits"),
        ("PUSH", 1),
        ("STORE", 2),          # k = 1
        ("label", "loop"),
        ("LOAD", 0),
        ("LEN",),
        ("LOAD", 2),
        ("EQ",),
        ("JZ", "body"),
        ("HALT",),
        ("label", "body"),
        ("LOAD", 0),
        ("LOAD", 2),
        ("GET",),              # node = path[k]
        ("LOAD", 1),
        ("LOAD", 2),
        ("ADD",),              # time = lo + k
        ("LOAD", 0),
        ("LOAD", 2),
        ("PUSH", 1),
        ("SUB",),
        ("GET",),              # src = path[k - 1]
        ("EMITR",),
        ("LOAD", 2),
        ("PUSH", 1),
        ("ADD",),
        ("STORE", 2),
        ("JMP", "loop"),
    ])


def solve_line(p, n, limit=None):
    """Run the shipped grid solver for destination ``p`` = (i, j)."""
    if limit is None:
        limit = 2 * n
    observed, fam = line_family(n)
    return run_solver(line_solver(limit), p, observed, fam, Budget(0))


# ---------------------------------------------------------------------------
# Two-source coded relay: both sinks decode both bits through one shared
# XOR link.


BF_S1, BF_S2, BF_MID, BF_T1, BF_T2 = range(5)


def build_butterfly() -> System:
    """Sources read raw bits (a, b) at steps 0 and 1 and put them on the
    wires as bit + 1; the middle node XORs them; each sink combines its
    direct wire with the XOR wire and fires the pair symbol 1 + 2a + b.
    """
    edges = (
        (BF_S1, BF_MID), (BF_S1, BF_T1),
        (BF_S2, BF_MID), (BF_S2, BF_T2),
        (BF_MID, BF_T1), (BF_MID, BF_T2),
    )
    functions = (
        NodeFunction.builtin("enc_input", 2),
        NodeFunction.builtin("enc_input", 2),
        NodeFunction.builtin("xor_gate", 3, 0, 1),
        NodeFunction.builtin("pair_left", 3, 0, 1),
        NodeFunction.builtin("pair_right", 3, 0, 1),
    )
    return System(
        alphabet=Alphabet.finite((0, 1, 2, 3, 4)),
        n=5,
        edges=edges,
        functions=functions,
        initial=(0,) * 5,
        schedule=((BF_S1, 0, 0), (BF_S1, 1, 0), (BF_S2, 0, 1), (BF_S2, 1, 1)),
        outputs=(BF_T1, BF_T2),
    )


BF_PROBES = ((0, 0), (0, 1), (1, 0), (1, 1))


def butterfly_family():
    """Three classes of changed behavior: only the first sink moved (1),
    only the second (2), or both (3)."""
    sys = build_butterfly()
    horizon = 5
    base = io_map(sys, BF_PROBES, horizon)
    payloads = {1: frozenset({BF_T1}), 2: frozenset({BF_T2}), 3: frozenset({BF_T1, BF_T2})}
    classes = {
        p: IOClass(p, "affected_exact", payloads[p], base) for p in (1, 2, 3)
    }
    space = CandidateSpace(
        nodes=tuple(range(5)),
        times=tuple(range(4)),
        catalogs=_const_catalog(sys, (0, 1, 2)),
        const_symbols=(0, 1, 2),
    )
    return sys, Family(
        ids=(1, 2, 3),
        classes=classes,
        probes=BF_PROBES,
        horizon=horizon,
        space=space,
    )


def butterfly_solver() -> SolverProgram:
    """One intervention per class: pin the freshest copy of the wire feeding
    only the targeted sink(s) to the encoded zero bit at its delivery step."""
    return _asm([
        ("INPUT", 0),
        ("PUSH", 1),
        ("SUB",),    # class 1 -> source 1's sink-facing slot, 2 -> source 2's,
        ("PUSH", 1),  # 3 -> the XOR node; all at step 1
        ("PUSH", 1),  # catalog constant index 1 = wire symbol 1
        ("EMITC",),
        ("HALT",),
    ])


def solve_butterfly(p):
    sys, fam = butterfly_family()
    return run_solver(butterfly_solver(), p, sys, fam, Budget(0))


# ---------------------------------------------------------------------------
# Layered transform network over GF(q).


def fft_node(n, stage, row):
    return stage * n + row


def bit_reverse(value, bits):
    out = 0
    for _ in range(bits):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


def fft_encode(values, q):
    """Field vector -> wire symbols (value + 1); 0 stays the quiescent symbol."""
    return tuple(v % q + 1 for v in values)


def fft_decode(symbol):
    return symbol - 1


def build_fft(n, q, omega) -> System:
    """Decimation-in-time transform network: stages 0..m on n rows, stage s
    pairing rows that differ in bit s-1.  Stage 0 loads the (encoded) input
    in bit-reversed row order at step 0; every node re-encodes its field
    value as value + 1 and stays quiescent until both operands are live, so
    each stage holds its result for exactly one step and the outputs (stage
    m) fire even when the transform value is the field zero.
    """
    m = n.bit_length() - 1
    if n < 2 or 1 << m != n:
        raise DefinitionError("row count must be a power of two, at least 2")
    if pow(omega, n, q) != 1 or pow(omega, n // 2, q) == 1:
        raise DefinitionError(f"{omega} does not have multiplicative order {n} mod {q}")

    edges = []
    functions = []
    schedule = []
    for r in range(n):
        functions.append(NodeFunction.builtin("relay", 2, 1))
        schedule.append((fft_node(n, 0, r), 0, bit_reverse(r, m)))
    for s in range(1, m + 1):
        half = 1 << (s - 1)
        for r in range(n):
            v = fft_node(n, s, r)
            edges.append((fft_node(n, s - 1, r), v))
            edges.append((fft_node(n, s - 1, r ^ half), v))
            e = (r % half) * (n // (2 * half))
            tw = pow(omega, e, q)
            sub = bool((r >> (s - 1)) & 1)
            # args arrive (lower row, higher row, self); the lower row is the
            # minuend in both butterfly halves
            functions.append(NodeFunction.builtin("fft_bfly", 3, q, tw, 0, 1, sub))

    return System(
        alphabet=Alphabet.finite(tuple(range(q + 1))),
        n=(m + 1) * n,
        edges=tuple(edges),
        functions=tuple(functions),
        initial=(0,) * ((m + 1) * n),
        schedule=tuple(schedule),
        outputs=tuple(fft_node(n, m, r) for r in range(n)),
    )


@dataclass(frozen=True)
class FftGeometry:
    n: int
    m: int

    def step_left(self, node):
        stage, row = divmod(node, self.n)
        if stage < 1:
            raise ValueError("already at the input stage")
        return fft_node(self.n, stage - 1, row)

    def descendant_rows(self, node):
        stage, row = divmod(node, self.n)
        block = 1 << stage
        return tuple(range(row % block, self.n, block))


def _fft_probes(n, q):
    probes = [fft_encode([1 if i == j else 0 for i in range(n)], q) for j in range(n)]
    probes.append(fft_encode([1] * n, q))
    probes.append(fft_encode(list(range(1, n + 1)), q))
    return tuple(probes)


def fft_family(n, q, omega, extra_ids=()):
    """One class per reachable changed-output pattern (the residue classes of
    rows downstream of each node) plus a few unreachable patterns."""
    sys = build_fft(n, q, omega)
    m = n.bit_length() - 1
    horizon = m + 2
    probes = _fft_probes(n, q)
    base = io_map(sys, probes, horizon)

    ids = []
    for s in range(m + 1):
        block = 1 << s
        for r0 in range(block):
            rows = frozenset(range(r0, n, block))
            if rows not in ids:
                ids.append(rows)
    bad = [
        frozenset({0, 1, 2}),
        frozenset(range(min(5, n))),
        frozenset({0, 2, 3}) if n >= 4 else frozenset({0, 1}),
        frozenset({0, 3}) if n >= 4 else frozenset({1}),
    ]
    for rows in tuple(extra_ids) + tuple(bad):
        rows = frozenset(rows)
        if rows not in ids:
            ids.append(rows)

    classes = {
        rows: IOClass(
            rows,
            "affected_exact",
            frozenset(fft_node(n, m, r) for r in rows),
            base,
        )
        for rows in ids
    }
    space = CandidateSpace(
        nodes=tuple(range((m + 1) * n)),
        times=tuple(range(m + 1)),
        catalogs=_const_catalog(sys, (0, 1)),
        const_symbols=(0, 1),
    )
    return sys, Family(
        ids=tuple(ids),
        classes=classes,
        probes=probes,
        horizon=horizon,
        space=space,
        geometry=FftGeometry(n, m),
        sys_params=(n, m),
    )


def fft_solver() -> SolverProgram:
    """If the changed-output pattern has 2^k rows, walk k stages left from
    its least row and ask the oracle whether silencing that node lands in
    the requested class; otherwise no single intervention can work."""
    return _asm([
        ("INPUT", 0),
        ("LEN",),
        ("LOG2",),
        ("STORE", 0),          # k, or -1 if not a power of two
        ("LOAD", 0),
        ("PUSH", 0),
        ("LT",),
        ("JZ", "pow2"),
        ("NOSOL",),
        ("label", "pow2"),
        ("SYSP", 1),
        ("STORE", 2),          # stage = m
        ("SYSP", 1),
        ("SYSP", 0),
        ("MUL",),
        ("INPUT", 0),
        ("MINEL",),
        ("ADD",),
        ("STORE", 1),          # candidate = output node of the least row
        ("label", "walk"),
        ("LOAD", 0),
        ("JZ", "probe"),
        ("LOAD", 1),
        ("LEFT",),
        ("STORE", 1),
        ("LOAD", 2),
        ("PUSH", 1),
        ("SUB",),
        ("STORE", 2),
        ("LOAD", 0),
        ("PUSH", 1),
        ("SUB",),
        ("STORE", 0),
        ("JMP", "walk"),
        ("label", "probe"),
        ("LOAD", 1),
        ("LOAD", 2),           # intervene at the stage's delivery step
        ("PUSH", 0),           # catalog constant index 0 = silence
        ("EMITC",),
        ("INPUT", 0),
        ("ORACLE",),
        ("JZ", "miss"),
        ("HALT",),
        ("label", "miss"),
        ("NOSOL",),
    ])


def solve_fft(rows, sys=None, fam=None, budget=None):
    if sys is None or fam is None:
        sys, fam = fft_family(8, 17, 2)
    if budget is None:
        budget = Budget(1)
    return run_solver(fft_solver(), frozenset(rows), sys, fam, budget)


# ---------------------------------------------------------------------------
# Reward routing toy: a driver signal and a suppressor signal combine on two
# outgoing links by difference, or by difference and ratio.


RW_HS, RW_ANC, RW_CS_PFC, RW_CS_OFC, RW_PFC, RW_OFC = range(6)

RW_PROBES = ((Fraction(4), Fraction(1)), (Fraction(6), Fraction(2)))


def build_reward(variant) -> System:
    """Six rational nodes: the driver (0) latches probe signal h; the
    ancestor (1) forwards probe signal c onto a value+1 wire; two relays
    (2, 3) carry it to the links; link 4 fires h - c and link 5 fires h - c
    or h / c depending on the variant.  Probes use positive h and c, and the
    ratio variant rejects c = 0 with a simulation error.

    The driver feeds the ancestor and both relays so that replacement
    functions installed there can compute fractions of h locally.
    """
    if variant not in ("difference", "ratio"):
        raise DefinitionError("variant must be 'difference' or 'ratio'")
    edges = (
        (RW_HS, RW_ANC), (RW_HS, RW_CS_PFC), (RW_HS, RW_CS_OFC),
        (RW_HS, RW_PFC), (RW_HS, RW_OFC),
        (RW_ANC, RW_CS_PFC), (RW_ANC, RW_CS_OFC),
        (RW_CS_PFC, RW_PFC), (RW_CS_OFC, RW_OFC),
    )
    second_link = "diff_gate" if variant == "difference" else "ratio_gate"
    functions = (
        NodeFunction.builtin("latch", 2),
        NodeFunction.builtin("enc_input_nz", 3),
        NodeFunction.builtin("relay", 3, 1),
        NodeFunction.builtin("relay", 3, 1),
        NodeFunction.builtin("diff_gate", 3, 0, 1),
        NodeFunction.builtin(second_link, 3, 0, 1),
    )
    return System(
        alphabet=Alphabet.rational(),
        n=6,
        edges=edges,
        functions=functions,
        initial=(Fraction(0),) * 6,
        schedule=((RW_HS, 0, 0), (RW_ANC, 1, 1)),
        outputs=(RW_PFC, RW_OFC),
    )


def reward_family(variant, gammas=(Fraction(0), Fraction(1, 4), Fraction(1, 2))):
    """One class per damping factor: both links must fire exactly
    (1 - gamma) * h on every probe."""
    sys = build_reward(variant)
    gammas = tuple(Fraction(g) for g in gammas)
    if any(not 0 <= g < 1 for g in gammas):
        raise DefinitionError("damping factors must lie in [0, 1)")
    classes = {g: IOClass(g, "gamma_target", g) for g in gammas}

    catalogs = {}
    consts = [Fraction(0)] + [Fraction(1) / (1 - g) for g in gammas]
    for v in range(sys.n):
        arity = sys.functions[v].arity
        entries = []
        if RW_HS in sys.in_neighbors(v):
            pos = sys.in_neighbors(v).index(RW_HS)
            for g in gammas:
                entries.append(
                    (("scale", RW_HS, g), NodeFunction.builtin("scale_wire", arity, pos, g))
                )
        for value in consts:
            entries.append((("constf", value), const_fn(arity, 1 + value)))
        catalogs[v] = tuple(entries)

    space = CandidateSpace(
        nodes=tuple(range(sys.n)),
        times=tuple(range(4)),
        catalogs=catalogs,
    )
    return sys, Family(
        ids=gammas,
        classes=classes,
        probes=RW_PROBES,
        horizon=5,
        space=space,
    )


def reward_solver(variant) -> SolverProgram:
    """Difference variant: one scaled tap on the ancestor.  Ratio variant:
    a scaled tap on the first relay and the matching constant on the second."""
    if variant == "difference":
        return _asm([
            ("PUSH", RW_ANC),
            ("PUSH", 1),
            ("PUSH", RW_HS),
            ("INPUT", 0),
            ("INPUT", 1),
            ("EMITS",),
            ("HALT",),
        ])
    if variant == "ratio":
        return _asm([
            ("PUSH", RW_CS_PFC),
            ("PUSH", 2),
            ("PUSH", RW_HS),
            ("INPUT", 0),
            ("INPUT", 1),
            ("EMITS",),
            ("PUSH", RW_CS_OFC),
            ("PUSH", 2),
            ("INPUT", 1),
            ("INPUT", 1),
            ("INPUT", 0),
            ("SUB",),
            ("EMITF",),    # constant den/(den - num) = 1/(1 - gamma)
            ("HALT",),
        ])
    raise DefinitionError("variant must be 'difference' or 'ratio'")


def solve_reward(variant, gamma):
    sys, fam = reward_family(variant)
    gamma = Fraction(gamma)
    if gamma not in fam.classes:
        sys, fam = reward_family(variant, gammas=(gamma,))
    return run_solver(reward_solver(variant), gamma, sys, fam, Budget(0))
