"""Target classes of I/O behavior, indexed families of them, and the finite
replacement catalogs that intervention searches range over."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb

from .model import DefinitionError, IORelation, NodeFunction
from .interventions import affected_outputs, diff_io


class NoSolutionType:
    """Singleton answer for 'no intervention set within the limit works'."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_SOLUTION"

    def __bool__(self):
        return False


NO_SOLUTION = NoSolutionType()


@dataclass(frozen=True)
class IOClass:
    """Decidable predicate over I/O relations, expressed as data.

    Modes:
      exact            -- equals the payload relation
      affected_exact   -- differs from ``base`` on exactly the payload nodes
      affected_subset  -- differs from ``base``, only on payload nodes
      destination      -- payload node fires each probe's first symbol
      gamma_target     -- every output fires (1 - gamma) * probe[0], exactly
    """

    id: object
    mode: str
    payload: object = None
    base: IORelation = None

    def test(self, io: IORelation) -> bool:
        if self.mode == "exact":
            return io == self.payload
        if self.mode in ("affected_exact", "affected_subset"):
            rows = diff_io(self.base, io)
            if not rows:
                return False
            hit = affected_outputs(rows)
            if self.mode == "affected_exact":
                return hit == self.payload
            return hit <= self.payload
        if self.mode == "destination":
            return all(
                res.value(self.payload) == probe[0]
                for probe, res in zip(io.probes, io.results)
            )
        if self.mode == "gamma_target":
            gamma = self.payload
            for probe, res in zip(io.probes, io.results):
                if not res.complete:
                    return False
                want = (1 - gamma) * probe[0]
                if any(sym != want for _, sym in res.fired):
                    return False
            return True
        raise DefinitionError(f"unknown class mode {self.mode!r}")


@dataclass(frozen=True)
class CandidateSpace:
    """Finite universe of single interventions: nodes x times x catalog.

    ``catalogs`` maps a node id to an ordered tuple of (label, NodeFunction)
    replacement entries; labels are self-describing keys like
    ('relay', src), ('const', symbol), ('scale', src, Fraction) or
    ('constf', Fraction), shared between solver emits and exhaustive search.
    """

    nodes: tuple
    times: tuple
    catalogs: dict
    const_symbols: tuple = ()

    def entries(self):
        """All (node, time, label, fn) candidates in lexicographic order."""
        out = []
        for node in sorted(self.nodes):
            catalog = self.catalogs.get(node, ())
            for time in sorted(self.times):
                for idx, (label, fn) in enumerate(catalog):
                    out.append((node, time, idx, label, fn))
        out.sort(key=lambda e: (e[0], e[1], e[2]))
        return out

    def lookup(self, node, label):
        for lab, fn in self.catalogs.get(node, ()):
            if lab == label:
                return fn
        return None

    def count_sets(self, max_size):
        n = len(self.entries())
        return sum(comb(n, k) for k in range(max_size + 1))


@dataclass(frozen=True)
class Family:
    """Indexed collection of I/O classes sharing probes, horizon and catalog.

    ``ids`` fixes the evaluation order; classes need not be disjoint.
    ``sys_params`` is the runtime parameter vector solver programs may read,
    and ``geometry`` backs their graph-traversal primitives.
    """

    ids: tuple
    classes: dict
    probes: tuple
    horizon: int
    space: CandidateSpace
    geometry: object = None
    sys_params: tuple = ()

    def __post_init__(self):
        if self.horizon < 1:
            raise DefinitionError("family horizon must be at least 1")
        missing = [p for p in self.ids if p not in self.classes]
        if missing:
            raise DefinitionError(f"family has no class for ids {missing}")

    def io_class(self, p):
        try:
            return self.classes[p]
        except KeyError:
            raise DefinitionError(f"unknown class index {p!r}") from None

    def encode_p(self, p):
        """Index -> flat tuple of VM values (ints and int-tuples)."""
        if isinstance(p, bool):
            raise DefinitionError("bad class index")
        if isinstance(p, int):
            return (p,)
        if isinstance(p, Fraction):
            return (p.numerator, p.denominator)
        if isinstance(p, frozenset):
            return (tuple(sorted(p)),)
        if isinstance(p, tuple):
            return p
        raise DefinitionError(f"cannot encode class index {p!r}")

    def decode_p(self, values):
        """One VM value (or tuple of them) -> a known class index."""
        candidates = [values]
        if isinstance(values, tuple):
            candidates.append(frozenset(values))
        for cand in candidates:
            if cand in self.classes:
                return cand
        raise DefinitionError(f"no class matches oracle index {values!r}")


def singleton_sets(space):
    """Candidate slots as (node, time, label) keys, lexicographically."""
    return [(n, t, lab) for n, t, _, lab, _ in space.entries()]
