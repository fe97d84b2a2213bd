"""Loop-bounded bytecode programs that output intervention sets, their
canonical binary encoding (whose bit length is the measured description
size), the interpreter with its oracle-call budget, and the verifier that
checks a program's answers for class membership and minimality.

Encoding v1
-----------
A program is the concatenation of its instructions; there is no header and
no separate constant pool, so the one-instruction HALT program is a single
byte.  Each instruction is an opcode byte followed by its operands:

    unsigned operands   LEB128 varints (7-bit groups, low first, high bit
                        marks continuation)
    signed operands     zigzag-mapped (n >= 0 -> 2n, n < 0 -> -2n-1), then
                        LEB128

Opcodes (operand kinds in parentheses):

    0x00 HALT           return the emitted intervention set
    0x01 NOSOL          declare that no solution exists
    0x02 PUSH (s)       push an inline integer constant
    0x03 INPUT (u)      push component k of the encoded class index
    0x04 SYSP (u)       push runtime system parameter k
    0x05 LOAD (u)       push register k
    0x06 STORE (u)      pop into register k
    0x07 DUP  0x08 POP  0x09 SWAP
    0x0A ADD  0x0B SUB  0x0C MUL  0x0D NEG  0x0E ABS  0x0F MIN  0x10 MAX
    0x11 LT   0x12 EQ   (push 1/0)
    0x13 JMP (s)        relative jump, delta counted from the next instruction
    0x14 JZ  (s)        pop; jump if zero
    0x15 LEN  0x16 MINEL  0x17 GET     tuple length / least element / index
    0x18 LOG2           exact log2 of a positive power of two, else -1
    0x19 LEFT           graph primitive: same-row step one stage left
    0x1A DIAG           graph primitive: pop j, i; push min(i, j), then the
                        node path from the diagonal out to (i, j), inclusive
    0x1B DESC           graph primitive: output rows downstream of a node
    0x1C EMITR          pop src, time, node; emit a relay-from-src entry
    0x1D EMITC          pop symidx, time, node; emit catalog constant
    0x1E EMITS          pop den, num, src, time, node; emit a scaled tap
    0x1F EMITF          pop den, num, time, node; emit a constant num/den
    0x20 ORACLE         pop a class index; ask whether the currently emitted
                        set lands in that class; push 1/0 (budgeted)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import DefinitionError, RewireError
from .interventions import Intervention, InterventionSet
from .goals import NO_SOLUTION, Family
from .bruteforce import membership_oracle, min_for_class

OPS = {
    "HALT": (0x00, ""),
    "NOSOL": (0x01, ""),
    "PUSH": (0x02, "s"),
    "INPUT": (0x03, "u"),
    "SYSP": (0x04, "u"),
    "LOAD": (0x05, "u"),
    "STORE": (0x06, "u"),
    "DUP": (0x07, ""),
    "POP": (0x08, ""),
    "SWAP": (0x09, ""),
    "ADD": (0x0A, ""),
    "SUB": (0x0B, ""),
    "MUL": (0x0C, ""),
    "NEG": (0x0D, ""),
    "ABS": (0x0E, ""),
    "MIN": (0x0F, ""),
    "MAX": (0x10, ""),
    "LT": (0x11, ""),
    "EQ": (0x12, ""),
    "JMP": (0x13, "s"),
    "JZ": (0x14, "s"),
    "LEN": (0x15, ""),
    "MINEL": (0x16, ""),
    "GET": (0x17, ""),
    "LOG2": (0x18, ""),
    "LEFT": (0x19, ""),
    "DIAG": (0x1A, ""),
    "DESC": (0x1B, ""),
    "EMITR": (0x1C, ""),
    "EMITC": (0x1D, ""),
    "EMITS": (0x1E, ""),
    "EMITF": (0x1F, ""),
    "ORACLE": (0x20, ""),
}
_BY_CODE = {code: (name, kinds) for name, (code, kinds) in OPS.items()}

STEP_LIMIT = 4096
STACK_LIMIT = 256
REGISTERS = 8


class MalformedProgram(RewireError):
    """Bytecode that does not decode or validate."""


class SolverFault(RewireError):
    """The interpreter stopped a program: bad operand, bad emit, overrun."""

    def __init__(self, kind, message):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


class OracleBudgetExceeded(SolverFault):
    def __init__(self, limit):
        super().__init__("oracle-budget", f"call {limit + 1} exceeds the budget of {limit}")
        self.limit = limit


@dataclass
class Budget:
    """Oracle-call allowance; faults deterministically on call limit+1."""

    limit: int
    used: int = 0

    def use(self):
        if self.used >= self.limit:
            raise OracleBudgetExceeded(self.limit)
        self.used += 1


@dataclass(frozen=True)
class SolverProgram:
    """Validated instruction tuple; see the module docstring for encoding v1."""

    instructions: tuple

    def __post_init__(self):
        instrs = tuple(tuple(i) for i in self.instructions)
        object.__setattr__(self, "instructions", instrs)
        for instr in instrs:
            if not instr or instr[0] not in OPS:
                raise MalformedProgram(f"unknown instruction {instr!r}")
            _, kinds = OPS[instr[0]]
            ops = instr[1:]
            if len(ops) != len(kinds):
                raise MalformedProgram(f"{instr[0]} takes {len(kinds)} operand(s)")
            for kind, op in zip(kinds, ops):
                if not isinstance(op, int) or isinstance(op, bool):
                    raise MalformedProgram(f"operand {op!r} is not an integer")
                if kind == "u" and op < 0:
                    raise MalformedProgram(f"{instr[0]} operand must be nonnegative")


def _uvarint(n):
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        out.append(b | 0x80 if n else b)
        if not n:
            return bytes(out)


def _zigzag(n):
    return (n << 1) if n >= 0 else ((-n << 1) - 1)


def _unzigzag(z):
    return (z >> 1) if not z & 1 else -((z + 1) >> 1)


def encode(prog: SolverProgram) -> bytes:
    out = bytearray()
    for instr in prog.instructions:
        code, kinds = OPS[instr[0]]
        out.append(code)
        for kind, op in zip(kinds, instr[1:]):
            out += _uvarint(op if kind == "u" else _zigzag(op))
    return bytes(out)


def decode(blob: bytes) -> SolverProgram:
    instrs = []
    i = 0
    while i < len(blob):
        code = blob[i]
        i += 1
        if code not in _BY_CODE:
            raise MalformedProgram(f"unknown opcode 0x{code:02X} at byte {i - 1}")
        name, kinds = _BY_CODE[code]
        ops = []
        for kind in kinds:
            val = 0
            shift = 0
            while True:
                if i >= len(blob):
                    raise MalformedProgram("truncated operand")
                b = blob[i]
                i += 1
                val |= (b & 0x7F) << shift
                shift += 7
                if not b & 0x80:
                    break
            ops.append(val if kind == "u" else _unzigzag(val))
        instrs.append((name, *ops))
    return SolverProgram(tuple(instrs))


def encoded_bits(prog: SolverProgram) -> int:
    """Bit length of the canonical encoding; this is the description-size
    measurement a claim's bound is checked against."""
    return 8 * len(encode(prog))


def disassemble(prog: SolverProgram) -> str:
    return "\n".join(" ".join(str(x) for x in instr) for instr in prog.instructions)


def _tuple_arg(value, what):
    if not isinstance(value, tuple):
        raise SolverFault("type", f"{what} needs a tuple, got {value!r}")
    return value


def _int_arg(value, what):
    if not isinstance(value, int) or isinstance(value, bool):
        raise SolverFault("type", f"{what} needs an integer, got {value!r}")
    return value


def run_solver(prog: SolverProgram, p, sys, fam: Family, budget: Budget):
    """Interpret a program on class index ``p``.

    Returns an InterventionSet or NO_SOLUTION.  Every emitted intervention
    must name an entry of the family's candidate catalog; oracle calls are
    answered against the family's classes and count against the budget.
    """
    if p not in fam.classes:
        raise DefinitionError(f"unknown class index {p!r}")
    code = prog.instructions
    inputs = fam.encode_p(p)
    params = fam.sys_params
    space = fam.space
    geometry = fam.geometry
    stack = []
    regs = [0] * REGISTERS
    emitted = []  # (node, time, label, fn)

    def pop(what="operand"):
        if not stack:
            raise SolverFault("stack", f"stack underflow reading {what}")
        return stack.pop()

    def push(v):
        if len(stack) >= STACK_LIMIT:
            raise SolverFault("stack", "stack overflow")
        stack.append(v)

    def emit(node, time, label):
        node = _int_arg(node, "emit node")
        time = _int_arg(time, "emit time")
        if node not in space.nodes:
            raise SolverFault("emit", f"node {node} is outside the candidate space")
        if time not in space.times:
            raise SolverFault("emit", f"time {time} is outside the candidate space")
        fn = space.lookup(node, label)
        if fn is None:
            raise SolverFault("emit", f"catalog of node {node} has no entry {label!r}")
        if any(n == node and t == time for n, t, _, _ in emitted):
            raise SolverFault("emit", f"slot ({node}, {time}) emitted twice")
        emitted.append((node, time, label, fn))

    def current_set():
        return InterventionSet(
            tuple(Intervention(n, t, fn) for n, t, _, fn in emitted)
        )

    def need_geometry(op):
        if geometry is None:
            raise SolverFault("geometry", f"{op} needs a family with geometry")
        return geometry

    pc = 0
    steps = 0
    while True:
        steps += 1
        if steps > STEP_LIMIT:
            raise SolverFault("step-limit", f"exceeded {STEP_LIMIT} interpreted steps")
        if not 0 <= pc < len(code):
            raise SolverFault("control", f"program counter {pc} out of range")
        instr = code[pc]
        op = instr[0]
        nxt = pc + 1

        if op == "HALT":
            return current_set()
        if op == "NOSOL":
            return NO_SOLUTION
        if op == "PUSH":
            push(instr[1])
        elif op == "INPUT":
            if instr[1] >= len(inputs):
                raise SolverFault("input", f"class index has no component {instr[1]}")
            push(inputs[instr[1]])
        elif op == "SYSP":
            if instr[1] >= len(params):
                raise SolverFault("input", f"no system parameter {instr[1]}")
            push(params[instr[1]])
        elif op == "LOAD":
            if instr[1] >= REGISTERS:
                raise SolverFault("register", f"no register {instr[1]}")
            push(regs[instr[1]])
        elif op == "STORE":
            if instr[1] >= REGISTERS:
                raise SolverFault("register", f"no register {instr[1]}")
            regs[instr[1]] = pop()
        elif op == "DUP":
            v = pop()
            push(v)
            push(v)
        elif op == "POP":
            pop()
        elif op == "SWAP":
            b, a = pop(), pop()
            push(b)
            push(a)
        elif op in ("ADD", "SUB", "MUL", "MIN", "MAX", "LT", "EQ"):
            b, a = pop(), pop()
            if op == "EQ":
                push(1 if a == b else 0)
            else:
                a = _int_arg(a, op)
                b = _int_arg(b, op)
                if op == "ADD":
                    push(a + b)
                elif op == "SUB":
                    push(a - b)
                elif op == "MUL":
                    push(a * b)
                elif op == "MIN":
                    push(min(a, b))
                elif op == "MAX":
                    push(max(a, b))
                else:
                    push(1 if a < b else 0)
        elif op == "NEG":
            push(-_int_arg(pop(), op))
        elif op == "ABS":
            push(abs(_int_arg(pop(), op)))
        elif op == "JMP":
            nxt = pc + 1 + instr[1]
        elif op == "JZ":
            if pop() == 0:
                nxt = pc + 1 + instr[1]
        elif op == "LEN":
            push(len(_tuple_arg(pop(), op)))
        elif op == "MINEL":
            t = _tuple_arg(pop(), op)
            if not t:
                raise SolverFault("type", "MINEL of an empty tuple")
            push(min(t))
        elif op == "GET":
            i = _int_arg(pop(), "GET index")
            t = _tuple_arg(pop(), "GET")
            if not 0 <= i < len(t):
                raise SolverFault("type", f"GET index {i} out of range")
            push(t[i])
        elif op == "LOG2":
            v = _int_arg(pop(), op)
            if v >= 1 and v & (v - 1) == 0:
                push(v.bit_length() - 1)
            else:
                push(-1)
        elif op == "LEFT":
            node = _int_arg(pop(), op)
            try:
                push(need_geometry(op).step_left(node))
            except (ValueError, AttributeError) as exc:
                raise SolverFault("geometry", str(exc)) from None
        elif op == "DIAG":
            j = _int_arg(pop(), op)
            i = _int_arg(pop(), op)
            try:
                lo, path = need_geometry(op).path_to_diagonal(i, j)
            except (ValueError, AttributeError) as exc:
                raise SolverFault("geometry", str(exc)) from None
            push(lo)
            push(tuple(path))
        elif op == "DESC":
            node = _int_arg(pop(), op)
            try:
                push(tuple(need_geometry(op).descendant_rows(node)))
            except (ValueError, AttributeError) as exc:
                raise SolverFault("geometry", str(exc)) from None
        elif op == "EMITR":
            src = pop("relay source")
            time = pop("time")
            node = pop("node")
            emit(node, time, ("relay", _int_arg(src, "relay source")))
        elif op == "EMITC":
            symidx = _int_arg(pop("symbol index"), "EMITC")
            time = pop("time")
            node = pop("node")
            if not 0 <= symidx < len(space.const_symbols):
                raise SolverFault("emit", f"no catalog constant {symidx}")
            emit(node, time, ("const", space.const_symbols[symidx]))
        elif op == "EMITS":
            den = _int_arg(pop("denominator"), "EMITS")
            num = _int_arg(pop("numerator"), "EMITS")
            src = _int_arg(pop("source"), "EMITS")
            time = pop("time")
            node = pop("node")
            if den == 0:
                raise SolverFault("emit", "zero denominator in scaled tap")
            emit(node, time, ("scale", src, Fraction(num, den)))
        elif op == "EMITF":
            den = _int_arg(pop("denominator"), "EMITF")
            num = _int_arg(pop("numerator"), "EMITF")
            time = pop("time")
            node = pop("node")
            if den == 0:
                raise SolverFault("emit", "zero denominator in constant")
            emit(node, time, ("constf", Fraction(num, den)))
        elif op == "ORACLE":
            idx = pop("oracle class index")
            try:
                p2 = fam.decode_p(idx)
            except DefinitionError as exc:
                raise SolverFault("oracle", str(exc)) from None
            budget.use()
            push(1 if membership_oracle(sys, current_set(), p2, fam) else 0)
        else:  # pragma: no cover - table and dispatch stay in sync
            raise SolverFault("control", f"unhandled opcode {op}")
        pc = nxt


REASONS = (
    "EncodingTooLarge",
    "BudgetExceeded",
    "WrongClass",
    "NotMinimal",
    "MissedSolution",
    "RuntimeFault",
)


@dataclass(frozen=True)
class PRecord:
    p: object
    answer: object  # InterventionSet, NO_SOLUTION, or an error string
    brute_min: object = None
    oracle_calls: int = 0
    note: str = ""


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str = None
    records: tuple = ()

    def __bool__(self):
        return self.accepted


def verify_re(prog: SolverProgram, sys, fam: Family, limit, max_bits, queries,
              cap=10_000_000) -> Verdict:
    """Check a solver program against a claim with intervention-set limit
    ``limit``, description bound ``max_bits`` and oracle budget ``queries``.

    The program's encoding must fit the bound.  For every class index, its
    answer set must land in the class (recomputed from a fresh simulation,
    not interpreter bookkeeping), respect the limit, and match the exhaustive
    minimum over the family's candidate space; a declared no-solution must
    match the exhaustive search finding nothing within the limit.
    """
    bits = encoded_bits(prog)
    if bits > max_bits:
        return Verdict(
            False,
            "EncodingTooLarge",
            (PRecord(None, f"{bits} bits > {max_bits}"),),
        )
    records = []
    for p in fam.ids:
        budget = Budget(queries)
        try:
            answer = run_solver(prog, p, sys, fam, budget)
        except OracleBudgetExceeded as exc:
            records.append(PRecord(p, str(exc), oracle_calls=budget.used))
            return Verdict(False, "BudgetExceeded", tuple(records))
        except SolverFault as exc:
            records.append(PRecord(p, str(exc), oracle_calls=budget.used))
            return Verdict(False, "RuntimeFault", tuple(records))
        if answer is NO_SOLUTION:
            best = min_for_class(sys, p, fam, limit, cap=cap)
            record = PRecord(p, NO_SOLUTION, best, budget.used)
            if best is not NO_SOLUTION:
                records.append(record)
                return Verdict(False, "MissedSolution", tuple(records))
            records.append(record)
            continue
        if len(answer) > limit:
            records.append(PRecord(p, answer, None, budget.used))
            return Verdict(False, "NotMinimal", tuple(records))
        # Minimality of a size-c answer is settled by searching sizes 0..c.
        best = min_for_class(sys, p, fam, min(limit, len(answer)), cap=cap)
        record = PRecord(p, answer, best, budget.used)
        if not membership_oracle(sys, answer, p, fam):
            records.append(record)
            return Verdict(False, "WrongClass", tuple(records))
        if best is NO_SOLUTION or len(answer) > len(best):
            records.append(record)
            return Verdict(False, "NotMinimal", tuple(records))
        records.append(record)
    return Verdict(True, None, tuple(records))
