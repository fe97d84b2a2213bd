"""Single-instant replacements of node functions, and I/O relation diffs.

An intervention swaps one node's update rule at exactly one step.  A set of
them is applied as an overlay on a base system; the base is never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import DefinitionError, NodeFunction, System, io_map


@dataclass(frozen=True)
class Intervention:
    node: int
    time: int
    replacement: NodeFunction

    def __post_init__(self):
        if self.time < 0:
            raise DefinitionError("intervention time must be nonnegative")


@dataclass(frozen=True)
class InterventionSet:
    """Canonically ordered set of interventions, one per (node, time) slot."""

    items: tuple

    def __post_init__(self):
        items = tuple(sorted(self.items, key=lambda z: (z.node, z.time)))
        object.__setattr__(self, "items", items)
        slots = [(z.node, z.time) for z in items]
        if len(set(slots)) != len(slots):
            raise DefinitionError("two interventions share a (node, time) slot")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @staticmethod
    def of(*items):
        return InterventionSet(tuple(items))


EMPTY_SET = InterventionSet(())


@dataclass(frozen=True)
class Intervened:
    """Simulatable handle: the base system with an intervention overlay."""

    base: System
    interventions: InterventionSet

    def _run_parts(self):
        compiled = self.__dict__.get("_compiled")
        if compiled is None:
            zero = self.base.alphabet.zero
            compiled = {
                (z.node, z.time): z.replacement.compile(zero)
                for z in self.interventions
            }
            object.__setattr__(self, "_compiled", compiled)
        return self.base, compiled


def apply(sys: System, zs: InterventionSet) -> Intervened:
    """Overlay an intervention set on a system; validates nodes and arities."""
    for z in zs:
        if not 0 <= z.node < sys.n:
            raise DefinitionError(f"intervention on missing node {z.node}")
        want = sys.functions[z.node].arity
        if z.replacement.arity != want:
            raise DefinitionError(
                f"replacement at node {z.node} has arity "
                f"{z.replacement.arity}, expected {want}"
            )
    return Intervened(sys, zs)


def diff_io(a, b):
    """All disagreements between two I/O relations over the same probes.

    Returns (probe, output node, before, after) rows, ordered by probe then
    node; a missing first-fire shows up as None.  Empty means equal.
    """
    if a.probes != b.probes or a.horizon != b.horizon:
        raise DefinitionError("relations cover different probes or horizons")
    rows = []
    for probe, ra, rb in zip(a.probes, a.results, b.results):
        da, db = ra.as_dict(), rb.as_dict()
        for node in sorted(set(da) | set(db)):
            before, after = da.get(node), db.get(node)
            if before != after:
                rows.append((probe, node, before, after))
    return rows


def affected_outputs(rows):
    """Output nodes that appear in a diff_io result."""
    return frozenset(node for _, node, _, _ in rows)
