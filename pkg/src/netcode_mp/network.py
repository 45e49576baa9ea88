"""Directed acyclic networks carrying scalar linear (or stochastic) network codes.

A link's inputs ``inc(l)`` are the sources sitting at ``tail(l)`` followed by
the links whose head is ``tail(l)``, both in declaration order.  Deterministic
links compute ``y_l = sum_e c[l, e] * y_e``; stochastic links draw ``y_l`` from
a :class:`ChannelTable` given the realised inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from .galois import (
    FieldError,
    FieldSpec,
    Matrix,
    Vector,
    format_vector,
    index_vector,
    parse_vector,
    vec_add,
    vec_scale,
    vector_index,
)

TABLE_ENTRY_LIMIT = 10**6


class NetworkError(ValueError):
    """Usage error against a network (missing symbols, unknown ids, ...)."""


class ParseError(NetworkError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Link:
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class Source:
    id: str
    node: str


@dataclass(frozen=True)
class ChannelTable:
    """Conditional distribution ``C_l(y_l | inputs)``.

    ``probs`` has one axis per input (in ``inc(l)`` order) and a final axis
    for the output, every axis indexed by symbol position in F^n.
    """

    link: str
    probs: np.ndarray

    def __post_init__(self) -> None:
        if self.probs.size > TABLE_ENTRY_LIMIT:
            raise NetworkError(f"channel table for {self.link} has {self.probs.size} entries (limit {TABLE_ENTRY_LIMIT})")
        if np.any(self.probs < 0):
            raise NetworkError(f"channel table for {self.link} has negative entries")
        rows = self.probs.sum(axis=-1)
        if not np.allclose(rows, 1.0, rtol=0, atol=1e-9):
            raise NetworkError(f"channel table for {self.link} has rows not summing to 1")

    def row(self, inputs: Sequence[int]) -> np.ndarray:
        return self.probs[tuple(inputs)]


@dataclass(frozen=True)
class Observation:
    """Symbols ``y_j*`` seen by one sink on its incoming links."""

    sink: str
    values: tuple[tuple[str, Vector], ...]

    @property
    def links(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.values)

    def as_dict(self) -> dict[str, Vector]:
        return dict(self.values)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    subjects: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True, eq=False)
class Network:
    field: FieldSpec
    dim: int
    nodes: tuple[str, ...]
    sources: tuple[Source, ...]
    links: tuple[Link, ...]
    coefficients: Mapping[tuple[str, str], int] = field(default_factory=dict)
    channels: Mapping[str, ChannelTable] = field(default_factory=dict)
    zero_links: frozenset[str] = frozenset()
    sinks: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        src_at: dict[str, list[str]] = {}
        for s in self.sources:
            src_at.setdefault(s.node, []).append(s.id)
        into: dict[str, list[str]] = {}
        for l in self.links:
            into.setdefault(l.head, []).append(l.id)
        inc = {l.id: tuple(src_at.get(l.tail, ())) + tuple(into.get(l.tail, ())) for l in self.links}
        object.__setattr__(self, "_inc", inc)
        object.__setattr__(self, "_link", {l.id: l for l in self.links})
        object.__setattr__(self, "_source", {s.id: s for s in self.sources})

    # -- lookups
    def inc(self, link_id: str) -> tuple[str, ...]:
        return self._inc[link_id]

    def link(self, link_id: str) -> Link:
        try:
            return self._link[link_id]
        except KeyError:
            raise NetworkError(f"unknown link {link_id!r}") from None

    def has_link(self, link_id: str) -> bool:
        return link_id in self._link

    def has_source(self, source_id: str) -> bool:
        return source_id in self._source

    @property
    def source_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sources)

    @property
    def link_ids(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.links)

    @property
    def alphabet_size(self) -> int:
        return self.field.q**self.dim

    def coef(self, link_id: str, input_id: str) -> int:
        return self.coefficients.get((link_id, input_id), 0)

    def is_stochastic(self, link_id: str) -> bool:
        return link_id in self.channels

    @property
    def deterministic(self) -> bool:
        return not self.channels

    def sink_node(self, sink: str) -> str:
        links = self.sinks.get(sink)
        if links:
            return self.link(links[0]).head
        if sink in self.nodes:
            return sink
        raise NetworkError(f"unknown sink {sink!r}")

    def link_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.link_ids)
        for l in self.links:
            for e in self.inc(l.id):
                if e in self._link:
                    g.add_edge(e, l.id)
        return g

    def topological_links(self) -> list[str]:
        order = {lid: i for i, lid in enumerate(self.link_ids)}
        try:
            return list(nx.lexicographical_topological_sort(self.link_graph(), key=order.__getitem__))
        except nx.NetworkXUnfeasible:
            raise NetworkError("network has a directed cycle") from None

    def with_coefficients(self, coefficients: Mapping[tuple[str, str], int]) -> Network:
        return replace(self, coefficients=dict(coefficients))


# --------------------------------------------------------------------------
# validation

def validate(net: Network) -> list[Diagnostic]:
    """Structural checks; returns an empty list for a valid network."""
    diags: list[Diagnostic] = []
    nodes = set(net.nodes)
    seen: set[str] = set()
    for kind, ids in (("source", net.source_ids), ("link", net.link_ids)):
        for i in ids:
            if i in seen:
                diags.append(Diagnostic("duplicate-id", f"{kind} id {i} used twice", (i,)))
            seen.add(i)
    for s in net.sources:
        if s.node not in nodes:
            diags.append(Diagnostic("unknown-node", f"source {s.id} at unknown node {s.node}", (s.id,)))
    for l in net.links:
        for end in (l.tail, l.head):
            if end not in nodes:
                diags.append(Diagnostic("unknown-node", f"link {l.id} touches unknown node {end}", (l.id,)))

    try:
        cycle = nx.find_cycle(net.link_graph())
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        witness = tuple(u for u, _ in cycle)
        diags.append(Diagnostic("cycle", "directed cycle through links " + " -> ".join(witness + witness[:1]), witness))

    for (l, e), c in net.coefficients.items():
        if not net.has_link(l):
            diags.append(Diagnostic("coefficient-domain", f"coefficient on unknown link {l}", (l, e)))
        elif e not in net.inc(l):
            diags.append(Diagnostic("coefficient-domain", f"{e} is not an input of link {l}", (l, e)))
        elif not 0 <= c < net.field.q:
            diags.append(Diagnostic("coefficient-domain", f"coefficient {c} on ({l}, {e}) outside {net.field}", (l, e)))

    for l in net.links:
        if l.id in net.channels:
            ch = net.channels[l.id]
            shape = (net.alphabet_size,) * (len(net.inc(l.id)) + 1)
            if ch.probs.shape != shape:
                diags.append(Diagnostic("channel", f"channel table for {l.id} has shape {ch.probs.shape}, expected {shape}", (l.id,)))
            continue
        if not net.inc(l.id):
            if l.id not in net.zero_links:
                diags.append(Diagnostic("no-input", f"link {l.id} has no inputs at node {l.tail}", (l.id,)))
            continue
        if l.id not in net.zero_links and not any(net.coef(l.id, e) for e in net.inc(l.id)):
            diags.append(Diagnostic("dead-link", f"link {l.id} has no nonzero coefficient and is not marked zero", (l.id,)))

    if not cycle:
        ancestors_ok = _reaches_source(net)
        for sink, links in net.sinks.items():
            heads = {net.link(j).head for j in links if net.has_link(j)}
            for j in links:
                if not net.has_link(j):
                    diags.append(Diagnostic("sink", f"sink {sink} observes unknown link {j}", (sink, j)))
                elif not ancestors_ok.get(j, False):
                    diags.append(Diagnostic("disconnected", f"observed link {j} is not connected to any source", (sink, j)))
            if len(heads) > 1:
                diags.append(Diagnostic("sink", f"sink {sink} observes links ending at different nodes {sorted(heads)}", (sink,)))
    return diags


def _reaches_source(net: Network) -> dict[str, bool]:
    out: dict[str, bool] = {}
    for lid in net.topological_links():
        out[lid] = any(net.has_source(e) or out.get(e, False) for e in net.inc(lid))
    return out


# --------------------------------------------------------------------------
# encoding

def _check_sources(net: Network, src: Mapping[str, Sequence[int]]) -> None:
    missing = [s for s in net.source_ids if s not in src]
    if missing:
        raise NetworkError(f"missing source values for {', '.join(missing)}")
    for s in net.source_ids:
        if len(src[s]) != net.dim:
            raise NetworkError(f"source {s} has length {len(src[s])}, expected {net.dim}")


def _linear_output(net: Network, lid: str, sym: Mapping[str, Vector]) -> Vector:
    F = net.field
    acc: Vector = (0,) * net.dim
    for e in net.inc(lid):
        c = net.coef(lid, e)
        if c:
            assert e in sym, f"{e} read before it was assigned"
            acc = vec_add(F, acc, vec_scale(F, c, sym[e]))
    return acc


def encode(net: Network, src: Mapping[str, Sequence[int]]) -> dict[str, Vector]:
    """Symbols on every source and link, evaluated in topological order."""
    _check_sources(net, src)
    if net.channels:
        raise NetworkError("network has stochastic links; use encode_stochastic")
    sym: dict[str, Vector] = {s: tuple(src[s]) for s in net.source_ids}
    for lid in net.topological_links():
        sym[lid] = _linear_output(net, lid, sym)
    return sym


def encode_stochastic(net: Network, src: Mapping[str, Sequence[int]], seed: int = 0) -> dict[str, Vector]:
    _check_sources(net, src)
    rng = np.random.default_rng(seed)
    q, n = net.field.q, net.dim
    sym: dict[str, Vector] = {s: tuple(src[s]) for s in net.source_ids}
    for lid in net.topological_links():
        if lid in net.channels:
            inputs = [vector_index(sym[e], q) for e in net.inc(lid)]
            row = net.channels[lid].row(inputs)
            sym[lid] = index_vector(int(rng.choice(len(row), p=row)), q, n)
        else:
            sym[lid] = _linear_output(net, lid, sym)
    return sym


def encode_batch(net: Network, src: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Vectorised :func:`encode`; every source maps to an ``(N, n)`` int array."""
    F = net.field
    sym = {s: np.asarray(src[s], dtype=np.int64) for s in net.source_ids}
    N = next(iter(sym.values())).shape[0] if sym else 1
    for lid in net.topological_links():
        acc = np.zeros((N, net.dim), dtype=np.int64)
        for e in net.inc(lid):
            c = net.coef(lid, e)
            if c:
                acc = F.vadd(acc, F.vmul(np.int64(c), sym[e]))
        sym[lid] = acc
    return sym


def global_transfer_matrix(net: Network, obs_links: Sequence[str]) -> Matrix:
    """Rows indexed by ``obs_links``, columns by sources: observed = A @ sources."""
    if net.channels:
        raise NetworkError("transfer matrix is undefined for stochastic links")
    F = net.field
    K = len(net.sources)
    gk: dict[str, tuple[int, ...]] = {s: tuple(int(i == j) for j in range(K)) for i, s in enumerate(net.source_ids)}
    for lid in net.topological_links():
        acc: tuple[int, ...] = (0,) * K
        for e in net.inc(lid):
            c = net.coef(lid, e)
            if c:
                acc = vec_add(F, acc, vec_scale(F, c, gk[e]))
        gk[lid] = acc
    for j in obs_links:
        net.link(j)
    return tuple(gk[j] for j in obs_links)


def random_code(net: Network, field: FieldSpec | None = None, seed: int = 0) -> Network:
    """Same topology with uniformly random nonzero coefficients on every (l, e)."""
    F = field or net.field
    if F.q < 2:
        raise FieldError("need q >= 2")
    rng = np.random.default_rng(seed)
    coefs = {}
    for l in net.links:
        for e in net.inc(l.id):
            coefs[(l.id, e)] = int(rng.integers(1, F.q))
    return replace(net, field=F, coefficients=coefs, channels={})


def symmetric_channel(net: Network, link_id: str, flip: float) -> ChannelTable:
    """Linear combination of the link's inputs, replaced by a uniformly chosen
    different symbol with probability ``flip``."""
    F, n = net.field, net.dim
    A = net.alphabet_size
    inputs = net.inc(link_id)
    probs = np.zeros((A,) * len(inputs) + (A,))
    for combo in itertools.product(range(A), repeat=len(inputs)):
        acc: Vector = (0,) * n
        for e, idx in zip(inputs, combo):
            acc = vec_add(F, acc, vec_scale(F, net.coef(link_id, e), index_vector(idx, F.q, n)))
        out = vector_index(acc, F.q)
        row = np.full(A, flip / (A - 1)) if A > 1 else np.zeros(A)
        row[out] = 1.0 - flip
        probs[combo] = row
    return ChannelTable(link_id, probs)


def observe(net: Network, sink: str, symbols: Mapping[str, Vector]) -> Observation:
    """The observation a sink makes when the network carries ``symbols``."""
    if sink not in net.sinks:
        raise NetworkError(f"unknown sink {sink!r}")
    return Observation(sink, tuple((j, tuple(symbols[j])) for j in net.sinks[sink]))


# --------------------------------------------------------------------------
# text format

_STAGES = {"field": 0, "dim": 1, "node": 2, "source": 3, "link": 4, "coef": 5, "zero": 5, "channel": 5, "sink": 6}


def parse_network(text: str) -> Network:
    F: FieldSpec | None = None
    dim = None
    nodes: list[str] = []
    sources: list[Source] = []
    links: list[Link] = []
    coefs: dict[tuple[str, str], int] = {}
    zeros: set[str] = set()
    chan_specs: list[tuple[int, str, float]] = []
    sinks: dict[str, tuple[str, ...]] = {}
    stage = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *args = line.split()
        if word not in _STAGES:
            raise ParseError(lineno, f"unknown directive {word!r}")
        if _STAGES[word] < stage:
            raise ParseError(lineno, f"directive {word!r} out of order (expected field, dim, node, source, link, coef, sink)")
        stage = _STAGES[word]
        try:
            if word == "field":
                F = FieldSpec.parse(" ".join(args))
            elif word == "dim":
                (d,) = args
                dim = int(d)
                if dim < 1:
                    raise ValueError("dim must be >= 1")
            elif word == "node":
                nodes.extend(args)
            elif word == "source":
                sid, at, node = args
                if at != "@":
                    raise ValueError("expected 'source ID @ NODE'")
                sources.append(Source(sid, node))
            elif word == "link":
                lid, tail, head = args
                links.append(Link(lid, tail, head))
            elif word == "coef":
                lid, eid, val = args
                if F is None:
                    raise ValueError("field must be declared first")
                c = int(val)
                if not 0 <= c < F.q:
                    raise ValueError(f"coefficient {c} outside {F}")
                coefs[(lid, eid)] = c
            elif word == "zero":
                zeros.update(args)
            elif word == "channel":
                lid, kind, p = args
                if kind != "symmetric":
                    raise ValueError(f"unknown channel kind {kind!r}")
                chan_specs.append((lineno, lid, float(p)))
            elif word == "sink":
                sid, kw, *obs = args
                if kw != "observes" or not obs:
                    raise ValueError("expected 'sink ID observes LINK...'")
                sinks[sid] = tuple(obs)
        except (ValueError, FieldError) as exc:
            raise ParseError(lineno, str(exc)) from None
    if F is None:
        raise ParseError(0, "missing 'field' directive")
    net = Network(F, dim or 1, tuple(nodes), tuple(sources), tuple(links), coefs, {}, frozenset(zeros), sinks)
    if chan_specs:
        channels = {}
        for lineno, lid, p in chan_specs:
            if not net.has_link(lid):
                raise ParseError(lineno, f"channel on unknown link {lid}")
            try:
                channels[lid] = symmetric_channel(net, lid, p)
            except NetworkError as exc:
                raise ParseError(lineno, str(exc)) from None
        net = replace(net, channels=channels)
    return net


def load_network(path: str | Path) -> Network:
    return parse_network(Path(path).read_text())


def dump_network(net: Network) -> str:
    """Text form of a deterministic network (channel tables are not serialised)."""
    out = [f"field {net.field}", f"dim {net.dim}", "node " + " ".join(net.nodes)]
    out += [f"source {s.id} @ {s.node}" for s in net.sources]
    out += [f"link {l.id} {l.tail} {l.head}" for l in net.links]
    for l in net.links:
        for e in net.inc(l.id):
            if (l.id, e) in net.coefficients:
                out.append(f"coef {l.id} {e} {net.coefficients[(l.id, e)]}")
    if net.zero_links:
        out.append("zero " + " ".join(sorted(net.zero_links)))
    out += [f"sink {s} observes {' '.join(ls)}" for s, ls in net.sinks.items()]
    return "\n".join(out) + "\n"


def parse_observations(text: str, net: Network, sink: str | None = None) -> Observation:
    """Lines ``obs LINK = VEC`` plus an optional ``sink NAME`` line."""
    values: list[tuple[str, Vector]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *rest = line.split(None, 1)
        try:
            if word == "sink":
                sink = sink or rest[0].strip()
            elif word == "obs":
                lhs, rhs = rest[0].split("=", 1)
                lid = lhs.strip()
                if not net.has_link(lid):
                    raise ValueError(f"observation on unknown link {lid}")
                values.append((lid, parse_vector(rhs, net.field, net.dim)))
            else:
                raise ValueError(f"unknown directive {word!r}")
        except (ValueError, IndexError) as exc:
            raise ParseError(lineno, str(exc)) from None
    if sink is None:
        heads = {net.link(l).head for l, _ in values}
        matches = [s for s, ls in net.sinks.items() if set(ls) >= {l for l, _ in values}]
        sink = matches[0] if matches else (heads.pop() if len(heads) == 1 else "sink")
    return Observation(sink, tuple(values))


def format_observations(obs: Observation) -> str:
    return f"sink {obs.sink}\n" + "".join(f"obs {l} = {format_vector(v)}\n" for l, v in obs.values)
