"""Ground-truth decision procedures on finite instances: membership of an
intervened system's I/O in a target class, exhaustive minimal-intervention
search, node-activation search, and multiplicative approximation checks."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .model import DefinitionError, RewireError, SimulationError, io_map, run
from .interventions import Intervention, InterventionSet, apply
from .goals import NO_SOLUTION, CandidateSpace, Family, IOClass


class SearchSpaceError(RewireError):
    """The enumeration was refused because it exceeds the configured cap."""

    def __init__(self, total, cap):
        self.total = total
        self.cap = cap
        super().__init__(
            f"search would enumerate {total} intervention sets, above the cap "
            f"of {cap}; shrink the candidate space or raise the cap"
        )


def membership_oracle(sys, zs: InterventionSet, p, fam: Family) -> bool:
    """Does the intervened system's I/O relation belong to class ``p``?

    A simulation fault under the candidate interventions (a table miss, a
    division by zero, an out-of-alphabet symbol) counts as non-membership.
    """
    cls = fam.io_class(p)
    try:
        io = io_map(apply(sys, zs), fam.probes, fam.horizon)
    except SimulationError:
        return False
    return cls.test(io)


def min_interventions(sys, target: IOClass, limit, space: CandidateSpace,
                      probes=None, horizon=None, cap=10_000_000):
    """Smallest intervention set (by cardinality, then lexicographic order of
    (node, time, catalog index)) whose I/O lands in ``target``; NO_SOLUTION
    if nothing of size <= limit works."""
    if probes is None or horizon is None:
        raise DefinitionError("min_interventions needs probes and a horizon")
    total = space.count_sets(limit)
    if total > cap:
        raise SearchSpaceError(total, cap)
    entries = space.entries()
    sim = sys.simulator()
    zero = sys.alphabet.zero
    compiled = [(n, t, fn.compile(zero), fn) for n, t, _, _, fn in entries]
    probes = tuple(tuple(p) for p in probes)
    for size in range(limit + 1):
        for combo in combinations(range(len(compiled)), size):
            slots = [(compiled[i][0], compiled[i][1]) for i in combo]
            if len(set(slots)) != size:
                continue
            overrides = {
                (compiled[i][0], compiled[i][1]): compiled[i][2] for i in combo
            }
            try:
                results = tuple(sim.run(p, horizon, overrides) for p in probes)
            except SimulationError:
                continue
            from .model import IORelation

            if target.test(IORelation(probes, horizon, results)):
                return InterventionSet(
                    tuple(
                        Intervention(compiled[i][0], compiled[i][1], compiled[i][3])
                        for i in combo
                    )
                )
    return NO_SOLUTION


def min_for_class(sys, p, fam: Family, limit, cap=10_000_000):
    """min_interventions against a family class, using the family's probes,
    horizon and candidate space."""
    return min_interventions(
        sys, fam.io_class(p), limit, fam.space,
        probes=fam.probes, horizon=fam.horizon, cap=cap,
    )


@dataclass(frozen=True)
class ActivationResult:
    active: bool
    witness: tuple = None
    closed: bool = False  # False verdicts only: search space provably exhausted


def node_ever_active(sys, node, max_input_len, horizon):
    """Does any input string of length <= max_input_len make ``node`` store a
    nonzero value within the horizon?

    Inputs are enumerated in shortlex order over the declared symbol order,
    so a positive answer carries the least witness.  A negative answer is
    marked ``closed`` when longer inputs could not be read (every scheduled
    position was covered) and every explored trajectory revisited a state
    after the schedule ran out, i.e. the bound genuinely exhausted the space.
    """
    if sys.alphabet.kind != "finite":
        raise DefinitionError("activation search needs a finite alphabet")
    if not 0 <= node < sys.n:
        raise DefinitionError(f"missing node {node}")
    symbols = sys.alphabet.symbols
    zero = sys.alphabet.zero
    sim = sys.simulator()
    max_pos = max((pos for _, _, pos in sys.schedule), default=-1)
    max_time = max((t for _, t, _ in sys.schedule), default=-1)
    # Strings longer than any readable position add nothing.
    eff_len = min(max_input_len, max_pos + 1)
    all_cycled = True
    for length in range(eff_len + 1):
        for word in product(symbols, repeat=length):
            cur = list(sys.initial)
            if cur[node] != zero:
                return ActivationResult(True, word)
            seen = {tuple(cur)}
            cycled = False
            for t in range(horizon):
                cur = sim._step_values(cur, t, word, None)
                if cur[node] != zero:
                    return ActivationResult(True, word)
                if t >= max_time:
                    key = tuple(cur)
                    if key in seen:
                        cycled = True
                        break
                    seen.add(key)
            all_cycled = all_cycled and cycled
    closed = all_cycled and max_input_len >= max_pos + 1
    return ActivationResult(False, None, closed)


class ApproxTimeout(RewireError):
    """The system produced no output on a probe within the horizon."""

    def __init__(self, probe):
        self.probe = probe
        super().__init__(f"no output within the horizon on probe {probe!r}")


@dataclass(frozen=True)
class ApproxResult:
    ok: bool
    counterexample: tuple = None


def k_approx_check(sys, reference, k, probes, horizon):
    """Is |reference(x)| / k <= |sys(x)| <= k * |reference(x)| on every probe?

    ``sys`` must have a single output node; returns the first violating
    probe otherwise.  Probes on which the system never fires raise
    ApproxTimeout so silence is reported distinctly from a bad magnitude.
    """
    k = Fraction(k)
    if k < 1:
        raise DefinitionError("approximation factor must be at least 1")
    if len(sys.outputs) != 1:
        raise DefinitionError("approximation check needs a single output node")
    out_node = sys.outputs[0]
    for probe in probes:
        probe = tuple(probe)
        res = run(sys, probe, horizon)
        if not res.complete:
            raise ApproxTimeout(probe)
        got = abs(Fraction(res.value(out_node)))
        want = abs(Fraction(reference(probe)))
        if not (want / k <= got <= k * want):
            return ApproxResult(False, probe)
    return ApproxResult(True, None)
