"""Line-oriented text formats with positional diagnostics.

``.csys`` documents describe a system; canonical form is what print_csys
emits, and parse(print(sys)) reproduces the system structurally.  Rationals
are written num/den in lowest terms with a positive denominator.  Companion
formats cover automata, intervention lists and goal families; all are
whitespace-tokenized, one directive per line, ``#`` starts a comment.
"""
from __future__ import annotations

from fractions import Fraction

from .model import Alphabet, DefinitionError, NodeFunction, RewireError, System, io_map
from .automata import Dfa
from .goals import CandidateSpace, Family, IOClass
from .interventions import Intervention, InterventionSet


class CsysError(RewireError):
    """Parse failure with a location and a stable diagnostic code."""

    def __init__(self, code, message, line=0, col=1):
        self.code = code
        self.line = line
        self.col = col
        super().__init__(f"line {line}, col {col}: {code}: {message}")


def _sym_token(sym):
    if isinstance(sym, bool):
        raise DefinitionError("booleans are not symbols")
    if isinstance(sym, int):
        return str(sym)
    if isinstance(sym, Fraction):
        if sym.denominator == 1:
            return str(sym.numerator)
        return f"{sym.numerator}/{sym.denominator}"
    tok = str(sym)
    if not tok or any(ch.isspace() for ch in tok) or tok.startswith("#"):
        raise DefinitionError(f"symbol {sym!r} cannot be written as a token")
    return tok


def _parse_sym(tok):
    try:
        return int(tok)
    except ValueError:
        pass
    if "/" in tok:
        num, _, den = tok.partition("/")
        try:
            return Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            pass
    return tok


def _parse_int(tok, what, err):
    try:
        return int(tok)
    except ValueError:
        raise err("bad-int", f"{what} must be an integer, got {tok!r}") from None


def _parse_frac(tok, what, err):
    val = _parse_sym(tok)
    if isinstance(val, bool) or not isinstance(val, (int, Fraction)):
        raise err("bad-rational", f"{what} must be a rational, got {tok!r}")
    return Fraction(val)


class _Lines:
    """Tokenized nonblank lines with 1-based positions for diagnostics."""

    def __init__(self, text):
        self.rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            toks = body.split()
            if toks:
                col = len(body) - len(body.lstrip()) + 1
                self.rows.append((lineno, col, toks))

    def __iter__(self):
        return iter(self.rows)


def _fn_param_tokens(fn):
    kind = fn.kind
    if kind == "const":
        return [_sym_token(fn.params[0])]
    if kind == "relay":
        return [str(fn.params[0])]
    if kind in ("latch", "enc_input", "enc_input_nz", "dfa_out"):
        return []
    if kind in ("xor_gate", "pair_left", "pair_right", "diff_gate", "ratio_gate"):
        return [str(fn.params[0]), str(fn.params[1])]
    if kind == "fft_bfly":
        q, tw, iu, iw, sub = fn.params
        return [str(q), str(tw), str(iu), str(iw), "1" if sub else "0"]
    if kind in ("satlin_affine", "affine"):
        coeffs, bias = fn.params
        return [_sym_token(Fraction(c)) for c in coeffs] + [_sym_token(Fraction(bias))]
    if kind == "scale_wire":
        src, factor = fn.params
        return [str(src), _sym_token(Fraction(factor))]
    if kind == "dfa_state":
        (rules,) = fn.params
        out = [str(len(rules))]
        for pos, sym in sorted(rules, key=lambda r: (r[0], _sym_token(r[1]))):
            out.append(str(pos))
            out.append(_sym_token(sym))
        return out
    raise DefinitionError(f"builtin {kind!r} has no text form")


def _fn_from_tokens(kind, arity, toks, err):
    def ints(n):
        if len(toks) != n:
            raise err("bad-params", f"{kind} takes {n} parameter(s)")
        return [_parse_int(t, "parameter", err) for t in toks]

    if kind == "const":
        if len(toks) != 1:
            raise err("bad-params", "const takes one symbol")
        return NodeFunction.builtin("const", arity, _parse_sym(toks[0]))
    if kind == "relay":
        return NodeFunction.builtin("relay", arity, *ints(1))
    if kind in ("latch", "enc_input", "enc_input_nz", "dfa_out"):
        ints(0)
        return NodeFunction.builtin(kind, arity)
    if kind in ("xor_gate", "pair_left", "pair_right", "diff_gate", "ratio_gate"):
        return NodeFunction.builtin(kind, arity, *ints(2))
    if kind == "fft_bfly":
        q, tw, iu, iw, sub = ints(5)
        return NodeFunction.builtin("fft_bfly", arity, q, tw, iu, iw, bool(sub))
    if kind in ("satlin_affine", "affine"):
        if len(toks) != arity + 1:
            raise err("bad-params", f"{kind} takes {arity} coefficients and a bias")
        vals = [_parse_frac(t, "coefficient", err) for t in toks]
        return NodeFunction.builtin(kind, arity, tuple(vals[:-1]), vals[-1])
    if kind == "scale_wire":
        if len(toks) != 2:
            raise err("bad-params", "scale_wire takes an index and a factor")
        src = _parse_int(toks[0], "index", err)
        return NodeFunction.builtin("scale_wire", arity, src, _parse_frac(toks[1], "factor", err))
    if kind == "dfa_state":
        if not toks:
            raise err("bad-params", "dfa_state needs a rule count")
        count = _parse_int(toks[0], "rule count", err)
        rest = toks[1:]
        if len(rest) != 2 * count:
            raise err("bad-params", f"expected {count} (position, symbol) rule pairs")
        rules = frozenset(
            (_parse_int(rest[2 * i], "position", err), _parse_sym(rest[2 * i + 1]))
            for i in range(count)
        )
        return NodeFunction.builtin("dfa_state", arity, rules)
    raise err("unknown-builtin", f"unknown builtin {kind!r}")


# ---------------------------------------------------------------------------
# .csys documents


def print_csys(sys: System) -> str:
    lines = ["csys v1"]
    if sys.alphabet.kind == "rational":
        lines.append("alphabet rational")
    else:
        syms = [sys.alphabet.zero] + [
            s for s in sys.alphabet.symbols if s != sys.alphabet.zero
        ]
        lines.append("alphabet finite " + " ".join(_sym_token(s) for s in syms))

    names = {}
    order = []
    for fn in sys.functions:
        if fn not in names:
            names[fn] = f"f{len(names)}"
            order.append(fn)
    for i in range(sys.n):
        lines.append(
            f"node {i} init {_sym_token(sys.initial[i])} fn {names[sys.functions[i]]}"
        )
    for s, d in sys.edges:
        lines.append(f"edge {s} {d}")
    for node, t, pos in sys.schedule:
        lines.append(f"input {node} {t} {pos}")
    for o in sys.outputs:
        lines.append(f"output {o}")
    for fn in order:
        if fn.kind == "table":
            lines.append(f"fn {names[fn]} table {fn.arity}")
            for key, val in fn.rows:
                row = " ".join(_sym_token(s) for s in key)
                lines.append(f"row {row} -> {_sym_token(val)}")
        else:
            toks = " ".join(_fn_param_tokens(fn))
            suffix = f" {toks}" if toks else ""
            lines.append(f"fn {names[fn]} builtin {fn.arity} {fn.kind}{suffix}")
    return "\n".join(lines) + "\n"


def parse_csys(text: str) -> System:
    rows = list(_Lines(text))
    if not rows or rows[0][2] != ["csys", "v1"]:
        raise CsysError("bad-header", "document must start with 'csys v1'",
                        rows[0][0] if rows else 1)

    alphabet = None
    nodes = {}  # id -> (init, fn name, line)
    edges = []
    inputs = []
    outputs = []
    fns = {}  # name -> NodeFunction or ('table', arity, rows)
    current_table = None

    for lineno, col, toks in rows[1:]:
        def err(code, message, _l=lineno, _c=col):
            return CsysError(code, message, _l, _c)

        head = toks[0]
        if head == "row":
            if current_table is None:
                raise err("stray-row", "table row outside a table definition")
            name, arity, table_rows = current_table
            if "->" not in toks:
                raise err("bad-row", "table row needs '->'")
            sep = toks.index("->")
            key = tuple(_parse_sym(t) for t in toks[1:sep])
            val = [_parse_sym(t) for t in toks[sep + 1:]]
            if len(key) != arity or len(val) != 1:
                raise err("bad-row", f"row must map {arity} symbols to one symbol")
            table_rows.append((key, val[0]))
            continue
        current_table = None

        if head == "alphabet":
            if alphabet is not None:
                raise err("duplicate-alphabet", "alphabet declared twice")
            if toks[1:2] == ["rational"]:
                alphabet = Alphabet.rational()
            elif len(toks) >= 3 and toks[1] == "finite":
                syms = tuple(_parse_sym(t) for t in toks[2:])
                try:
                    alphabet = Alphabet.finite(syms)  # zero = first symbol
                except DefinitionError as exc:
                    raise err("bad-alphabet", str(exc)) from None
            else:
                raise err("bad-alphabet", "expected 'finite <symbols>' or 'rational'")
        elif head == "node":
            if len(toks) != 6 or toks[2] != "init" or toks[4] != "fn":
                raise err("bad-node", "expected 'node <id> init <symbol> fn <name>'")
            ident = _parse_int(toks[1], "node id", err)
            if ident in nodes:
                raise err("duplicate-node", f"node {ident} declared twice")
            nodes[ident] = (_parse_sym(toks[3]), toks[5], lineno, col)
        elif head == "edge":
            if len(toks) != 3:
                raise err("bad-edge", "expected 'edge <src> <dst>'")
            edges.append(
                (_parse_int(toks[1], "edge source", err),
                 _parse_int(toks[2], "edge target", err), lineno, col)
            )
        elif head == "input":
            if len(toks) != 4:
                raise err("bad-input", "expected 'input <node> <time> <position>'")
            inputs.append(
                (_parse_int(toks[1], "node", err), _parse_int(toks[2], "time", err),
                 _parse_int(toks[3], "position", err), lineno, col)
            )
        elif head == "output":
            if len(toks) != 2:
                raise err("bad-output", "expected 'output <node>'")
            outputs.append((_parse_int(toks[1], "node", err), lineno, col))
        elif head == "fn":
            if len(toks) < 4:
                raise err("bad-fn", "expected 'fn <name> table|builtin ...'")
            name = toks[1]
            if name in fns:
                raise err("duplicate-fn", f"function {name!r} defined twice")
            arity = _parse_int(toks[3], "arity", err)
            if toks[2] == "table":
                fns[name] = ("table", arity, [])
                current_table = (name, arity, fns[name][2])
            elif toks[2] == "builtin":
                if len(toks) < 5:
                    raise err("bad-fn", "builtin needs a kind")
                try:
                    fns[name] = _fn_from_tokens(toks[4], arity, toks[5:], err)
                except DefinitionError as exc:
                    raise err("bad-fn", str(exc)) from None
            else:
                raise err("bad-fn", "function body must be 'table' or 'builtin'")
        else:
            raise err("unknown-directive", f"unknown directive {head!r}")

    if alphabet is None:
        raise CsysError("missing-alphabet", "document declares no alphabet")
    if not nodes:
        raise CsysError("missing-nodes", "document declares no nodes")
    n = len(nodes)
    if sorted(nodes) != list(range(n)):
        raise CsysError("non-dense-nodes", "node ids must be exactly 0..n-1")
    for src, dst, lineno, col in edges:
        if src not in nodes or dst not in nodes:
            raise CsysError("dangling-edge",
                            f"edge ({src}, {dst}) references an undeclared node",
                            lineno, col)
    for node, t, pos, lineno, col in inputs:
        if node not in nodes:
            raise CsysError("dangling-input",
                            f"schedule entry references undeclared node {node}",
                            lineno, col)
    if not outputs:
        raise CsysError("empty-outputs", "document declares no output nodes")
    for node, lineno, col in outputs:
        if node not in nodes:
            raise CsysError("dangling-output",
                            f"output references undeclared node {node}", lineno, col)

    functions = []
    for i in range(n):
        init, fname, lineno, col = nodes[i]
        if fname not in fns:
            raise CsysError("unknown-fn", f"node {i} references unknown function "
                            f"{fname!r}", lineno, col)
        body = fns[fname]
        if isinstance(body, tuple) and body[0] == "table":
            _, arity, table_rows = body
            try:
                body = NodeFunction.table(arity, dict(table_rows))
            except DefinitionError as exc:
                raise CsysError("bad-table", str(exc), lineno, col) from None
            fns[fname] = body
        functions.append(body)

    try:
        return System(
            alphabet=alphabet,
            n=n,
            edges=tuple((s, d) for s, d, _, _ in edges),
            functions=tuple(functions),
            initial=tuple(nodes[i][0] for i in range(n)),
            schedule=tuple((nd, t, pos) for nd, t, pos, _, _ in inputs),
            outputs=tuple(o for o, _, _ in outputs),
        )
    except DefinitionError as exc:
        msg = str(exc)
        code = "arity-mismatch" if "arity" in msg else (
            "non-total-table" if "total" in msg else "bad-system")
        raise CsysError(code, msg) from None


# ---------------------------------------------------------------------------
# Automaton files


def print_dfa(dfa: Dfa) -> str:
    def tok(sym):
        if isinstance(sym, tuple):
            return ",".join(_sym_token(s) for s in sym)
        return _sym_token(sym)

    lines = ["dfa v1"]
    lines.append("states " + " ".join(tok(q) for q in dfa.states))
    lines.append("alphabet " + " ".join(tok(a) for a in dfa.alphabet))
    lines.append("start " + tok(dfa.start))
    lines.append("accept" + "".join(" " + tok(q) for q in dfa.states if q in dfa.accepting))
    for (q, a), q2 in dfa.delta:
        lines.append(f"delta {tok(q)} {tok(a)} {tok(q2)}")
    return "\n".join(lines) + "\n"


def parse_dfa(text: str) -> Dfa:
    states = alphabet = start = accept = None
    delta = {}
    for lineno, col, toks in _Lines(text):
        def err(code, message, _l=lineno, _c=col):
            return CsysError(code, message, _l, _c)

        head = toks[0]
        if head == "dfa":
            if toks != ["dfa", "v1"]:
                raise err("bad-header", "expected 'dfa v1'")
        elif head == "states":
            states = tuple(_parse_sym(t) for t in toks[1:])
        elif head == "alphabet":
            alphabet = tuple(_parse_sym(t) for t in toks[1:])
        elif head == "start":
            if len(toks) != 2:
                raise err("bad-start", "expected 'start <state>'")
            start = _parse_sym(toks[1])
        elif head == "accept":
            accept = frozenset(_parse_sym(t) for t in toks[1:])
        elif head == "delta":
            if len(toks) != 4:
                raise err("bad-delta", "expected 'delta <state> <symbol> <state>'")
            delta[(_parse_sym(toks[1]), _parse_sym(toks[2]))] = _parse_sym(toks[3])
        else:
            raise err("unknown-directive", f"unknown directive {head!r}")
    if states is None or alphabet is None or start is None:
        raise CsysError("missing-section", "automaton needs states, alphabet and start")
    try:
        return Dfa.make(states, alphabet, start, delta, accept or frozenset())
    except DefinitionError as exc:
        raise CsysError("bad-dfa", str(exc)) from None


# ---------------------------------------------------------------------------
# Intervention list files: one 'at <node> <time> <builtin> <params...>' per
# line, with 'relay-from <node>' as a convenience body.


def parse_interventions(text: str, sys: System) -> InterventionSet:
    items = []
    for lineno, col, toks in _Lines(text):
        def err(code, message, _l=lineno, _c=col):
            return CsysError(code, message, _l, _c)

        if toks[0] == "interventions":
            if toks != ["interventions", "v1"]:
                raise err("bad-header", "expected 'interventions v1'")
            continue
        if toks[0] != "at" or len(toks) < 4:
            raise err("bad-intervention", "expected 'at <node> <time> <fn...>'")
        node = _parse_int(toks[1], "node", err)
        time = _parse_int(toks[2], "time", err)
        if not 0 <= node < sys.n:
            raise err("dangling-node", f"no node {node}")
        arity = sys.functions[node].arity
        if toks[3] == "relay-from":
            if len(toks) != 5:
                raise err("bad-intervention", "relay-from takes one node")
            src = _parse_int(toks[4], "source", err)
            preds = sys.in_neighbors(node)
            if src not in preds:
                raise err("bad-intervention", f"{src} is not an in-neighbor of {node}")
            fn = NodeFunction.builtin("relay", arity, preds.index(src))
        else:
            try:
                fn = _fn_from_tokens(toks[3], arity, toks[4:], err)
            except DefinitionError as exc:
                raise err("bad-intervention", str(exc)) from None
        items.append(Intervention(node, time, fn))
    try:
        return InterventionSet(tuple(items))
    except DefinitionError as exc:
        raise CsysError("duplicate-slot", str(exc)) from None


def print_interventions(zs: InterventionSet) -> str:
    lines = ["interventions v1"]
    for z in zs:
        toks = " ".join(_fn_param_tokens(z.replacement))
        suffix = f" {toks}" if toks else ""
        lines.append(f"at {z.node} {z.time} {z.replacement.kind}{suffix}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Family files: probes, per-class predicates, and the candidate space.


def _parse_id(tok):
    if "," in tok:
        return tuple(int(t) for t in tok.split(","))
    val = _parse_sym(tok)
    if isinstance(val, Fraction):
        return val
    if isinstance(val, int):
        return val
    raise DefinitionError(f"bad class id {tok!r}")


def parse_family(text: str, sys: System):
    """Returns (observed system, Family).  The 'observe' directive widens the
    output set the family's probes are read through."""
    horizon = None
    observe = None
    probes = []
    class_specs = []
    space_nodes = None
    space_times = None
    want_relay = False
    const_syms = []

    for lineno, col, toks in _Lines(text):
        def err(code, message, _l=lineno, _c=col):
            return CsysError(code, message, _l, _c)

        head = toks[0]
        if head == "family":
            if toks != ["family", "v1"]:
                raise err("bad-header", "expected 'family v1'")
        elif head == "horizon":
            horizon = _parse_int(toks[1], "horizon", err)
        elif head == "observe":
            observe = "all" if toks[1:] == ["all"] else [
                _parse_int(t, "node", err) for t in toks[1:]
            ]
        elif head == "probe":
            probes.append(tuple(_parse_sym(t) for t in toks[1:]))
        elif head == "class":
            if len(toks) < 3:
                raise err("bad-class", "expected 'class <id> <mode> ...'")
            try:
                ident = _parse_id(toks[1])
            except DefinitionError as exc:
                raise err("bad-class", str(exc)) from None
            class_specs.append((ident, toks[2], toks[3:], err))
        elif head == "space":
            if toks[1:2] == ["nodes"]:
                space_nodes = "all" if toks[2:] == ["all"] else [
                    _parse_int(t, "node", err) for t in toks[2:]
                ]
            elif toks[1:2] == ["times"] and len(toks) == 4:
                space_times = range(
                    _parse_int(toks[2], "time", err),
                    _parse_int(toks[3], "time", err) + 1,
                )
            elif toks[1:3] == ["catalog", "relay"]:
                want_relay = True
            elif len(toks) >= 4 and toks[1:3][0] == "catalog" and toks[2] == "const":
                const_syms.extend(_parse_sym(t) for t in toks[3:])
            else:
                raise err("bad-space", "unknown space directive")
        else:
            raise err("unknown-directive", f"unknown directive {head!r}")

    if horizon is None or not probes or not class_specs:
        raise CsysError("missing-section", "family needs horizon, probes and classes")

    observed = sys
    if observe == "all":
        observed = sys.with_outputs(range(sys.n))
    elif observe:
        observed = sys.with_outputs(observe)

    base = io_map(observed, probes, horizon)
    classes = {}
    ids = []
    for ident, mode, toks, err in class_specs:
        if mode == "destination":
            cls = IOClass(ident, "destination", _parse_int(toks[0], "node", err))
        elif mode == "exact-base":
            cls = IOClass(ident, "exact", base)
        elif mode in ("affected-exact", "affected-subset"):
            nodes = frozenset(_parse_int(t, "node", err) for t in toks)
            cls = IOClass(ident, mode.replace("-", "_"), nodes, base)
        elif mode == "gamma":
            cls = IOClass(ident, "gamma_target", _parse_frac(toks[0], "gamma", err))
        else:
            raise err("bad-class", f"unknown class mode {mode!r}")
        classes[ident] = cls
        ids.append(ident)

    nodes = tuple(range(observed.n)) if space_nodes in ("all", None) else tuple(space_nodes)
    times = tuple(space_times if space_times is not None else range(horizon))
    catalogs = {v: () for v in nodes}
    if want_relay:
        from .networks import _relay_catalog

        rc = _relay_catalog(observed)
        catalogs = {v: catalogs[v] + rc.get(v, ()) for v in nodes}
    if const_syms:
        from .networks import _const_catalog

        cc = _const_catalog(observed, tuple(const_syms))
        catalogs = {v: catalogs[v] + cc.get(v, ()) for v in nodes}

    space = CandidateSpace(
        nodes=nodes,
        times=times,
        catalogs=catalogs,
        const_symbols=tuple(const_syms),
    )
    fam = Family(
        ids=tuple(ids),
        classes=classes,
        probes=tuple(probes),
        horizon=horizon,
        space=space,
    )
    return observed, fam
