"""Saturating-linear recurrent nets over exact rationals, and their embedding
into graph systems.

A net of size N updates its state as  x' = clamp(A x + d*b + v*b2 + c)
componentwise, where d is the data track and v the validation track of the
input stream and clamp saturates into [0, 1].  The embedding adds two relay
nodes that feed the tracks to every net node, which delays the stream by one
step relative to the bare recurrence; see ``padded_inputs``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import Alphabet, DefinitionError, NodeFunction, System


def satlin(x):
    """Saturated-linear activation: 0 below 0, identity on [0, 1], 1 above."""
    x = Fraction(x)
    if x < 0:
        return Fraction(0)
    if x > 1:
        return Fraction(1)
    return x


def _frac_vec(values, n, what):
    vec = tuple(Fraction(v) for v in values)
    if len(vec) != n:
        raise DefinitionError(f"{what} must have {n} entries")
    return vec


@dataclass(frozen=True)
class SatNet:
    """Exact-rational net parameters: weights A, input gains b and b2, bias c."""

    n: int
    weights: tuple  # N rows of N rationals
    data_gain: tuple  # b
    valid_gain: tuple  # b2
    bias: tuple  # c

    @staticmethod
    def make(weights, data_gain, valid_gain, bias):
        n = len(weights)
        rows = tuple(_frac_vec(row, n, "weight row") for row in weights)
        return SatNet(
            n,
            rows,
            _frac_vec(data_gain, n, "data gain"),
            _frac_vec(valid_gain, n, "validation gain"),
            _frac_vec(bias, n, "bias"),
        )


def reference_net_step(net: SatNet, x, d, v):
    """One exact step of the bare recurrence; the oracle the embedding is
    validated against."""
    x = tuple(Fraction(xi) for xi in x)
    if len(x) != net.n:
        raise DefinitionError(f"state must have {net.n} entries")
    d, v = Fraction(d), Fraction(v)
    out = []
    for i in range(net.n):
        acc = net.bias[i] + d * net.data_gain[i] + v * net.valid_gain[i]
        row = net.weights[i]
        for j in range(net.n):
            if row[j]:
                acc += row[j] * x[j]
        out.append(satlin(acc))
    return tuple(out)


def build_satnet_cs(net: SatNet, initial=None) -> System:
    """Embed a net into a graph system over the rational alphabet.

    Net nodes are 0..N-1 (fully connected, self-coupling through the stored
    value); node N relays the data track and node N+1 the validation track,
    reading interleaved input positions (2t, 2t+1) at step t.  Every net node
    is an output.
    """
    n = net.n
    data_node, valid_node = n, n + 1
    if initial is None:
        initial = (Fraction(0),) * n
    initial = _frac_vec(initial, n, "initial state")

    edges = [(j, i) for i in range(n) for j in range(n) if j != i]
    edges += [(data_node, i) for i in range(n)]
    edges += [(valid_node, i) for i in range(n)]

    functions = []
    for i in range(n):
        # argument order: net nodes j != i ascending, data, valid, self
        coeffs = [net.weights[i][j] for j in range(n) if j != i]
        coeffs += [net.data_gain[i], net.valid_gain[i], net.weights[i][i]]
        functions.append(
            NodeFunction.builtin("satlin_affine", n + 2, tuple(coeffs), net.bias[i])
        )
    functions.append(NodeFunction.builtin("relay", 2, 1))  # data relay
    functions.append(NodeFunction.builtin("relay", 2, 1))  # valid relay

    # Enough schedule slots for any reasonable trace length.
    max_steps = 128
    schedule = []
    for t in range(max_steps):
        schedule.append((data_node, t, 2 * t))
        schedule.append((valid_node, t, 2 * t + 1))

    return System(
        alphabet=Alphabet.rational(),
        n=n + 2,
        edges=tuple(edges),
        functions=tuple(functions),
        initial=initial + (Fraction(0), Fraction(0)),
        schedule=tuple(schedule),
        outputs=tuple(range(n)),
    )


def pack_inputs(pairs):
    """Interleave (data, valid) pairs into the two-track input string."""
    flat = []
    for d, v in pairs:
        flat.append(Fraction(d))
        flat.append(Fraction(v))
    return tuple(flat)


def padded_inputs(pairs):
    """Input stream as the embedded system consumes it: the relays deliver
    nothing on the first step, so the recurrence sees (0, 0) then ``pairs``."""
    return [(Fraction(0), Fraction(0))] + [
        (Fraction(d), Fraction(v)) for d, v in pairs
    ]


def net_state(state, n):
    """Net-node slice of an embedded system state vector."""
    return tuple(state.stored[:n])
