"""Network-code factor graphs and the transforms applied before decoding.

One variable per source and per link; one factor ``phi_<l>`` per link tying
``Y_l`` to its inputs, and one degree-1 factor ``psi_<j>`` per observed link.
Transforms (simplify, prune, cluster) return new graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import networkx as nx
import numpy as np

from .galois import FieldSpec, Vector, vector_index
from .network import Network, NetworkError, Observation

TABLE_GUARD = 10**6


class CapacityError(RuntimeError):
    """A table or enumeration would exceed its configured guard."""


@dataclass(frozen=True)
class Variable:
    id: str
    field: FieldSpec
    n: int

    @property
    def alphabet_size(self) -> int:
        return self.field.q**self.n

    @property
    def label(self) -> str:
        return f"{self.field}^{self.n}"


@dataclass(frozen=True)
class LinearConstraint:
    """``delta(y_out - sum_i c_i y_i)``."""

    output: str
    terms: tuple[tuple[str, int], ...]
    kind = "linear"

    @property
    def scope(self) -> tuple[str, ...]:
        return (self.output,) + tuple(v for v, _ in self.terms)

    def homogeneous(self, F: FieldSpec) -> dict[str, int]:
        """Coefficients ``a`` of the same constraint written as ``sum_v a_v y_v = 0``."""
        out = {self.output: 1}
        for v, c in self.terms:
            out[v] = F.neg(c)
        return out


@dataclass(frozen=True, eq=False)
class Table:
    """Nonnegative table over ``scope`` (one axis per variable, symbol-index order)."""

    scope: tuple[str, ...]
    values: np.ndarray
    kind = "table"

    def __eq__(self, other) -> bool:
        return isinstance(other, Table) and self.scope == other.scope and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.scope, self.values.tobytes()))


@dataclass(frozen=True)
class ObservationDelta:
    var: str
    value: Vector
    kind = "obs"

    @property
    def scope(self) -> tuple[str, ...]:
        return (self.var,)


@dataclass(frozen=True)
class ClusterOf:
    """Product of ``parts`` with the ``internal`` variables summed out."""

    parts: tuple[Factor, ...]
    internal: tuple[Variable, ...]
    kind = "cluster"

    @property
    def scope(self) -> tuple[str, ...]:
        hidden = {v.id for v in self.internal}
        return tuple(dict.fromkeys(v for p in self.parts for v in p.variables if v not in hidden))


Payload = Union[LinearConstraint, Table, ObservationDelta, ClusterOf]


@dataclass(frozen=True)
class Factor:
    id: str
    payload: Payload

    @property
    def variables(self) -> tuple[str, ...]:
        return self.payload.scope

    @property
    def kind(self) -> str:
        return self.payload.kind


@dataclass(frozen=True)
class FactorGraph:
    variables: tuple[Variable, ...]
    factors: tuple[Factor, ...]
    _var: dict = field(init=False, repr=False, compare=False)
    _fac: dict = field(init=False, repr=False, compare=False)
    _adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        var = {v.id: v for v in self.variables}
        fac = {f.id: f for f in self.factors}
        if len(var) != len(self.variables) or len(fac) != len(self.factors):
            raise ValueError("duplicate variable or factor id")
        adj: dict[str, list[str]] = {v.id: [] for v in self.variables}
        for f in self.factors:
            scope = f.variables
            if len(set(scope)) != len(scope):
                raise ValueError(f"factor {f.id} lists a variable twice")
            for v in scope:
                if v not in var:
                    raise ValueError(f"factor {f.id} touches unknown variable {v}")
                adj[v].append(f.id)
        object.__setattr__(self, "_var", var)
        object.__setattr__(self, "_fac", fac)
        object.__setattr__(self, "_adj", adj)

    def var(self, vid: str) -> Variable:
        return self._var[vid]

    def factor(self, fid: str) -> Factor:
        return self._fac[fid]

    def has_var(self, vid: str) -> bool:
        return vid in self._var

    def has_factor(self, fid: str) -> bool:
        return fid in self._fac

    def var_factors(self, vid: str) -> list[str]:
        return self._adj[vid]

    def edges(self) -> list[tuple[str, str]]:
        return [(f.id, v) for f in self.factors for v in f.variables]

    @property
    def var_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variables)

    @property
    def factor_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(("v", v.id) for v in self.variables)
        g.add_nodes_from(("f", f.id) for f in self.factors)
        g.add_edges_from((("f", f), ("v", v)) for f, v in self.edges())
        return g

    def export(self) -> str:
        """Plain adjacency text: variables, factors, then edges, in insertion order."""
        lines = [f"var {v.id} {v.label}" for v in self.variables]
        lines += [f"factor {f.id} {f.kind}" for f in self.factors]
        lines += [f"edge {f} {v}" for f, v in self.edges()]
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# construction

def factor_id(link_id: str) -> str:
    return f"phi_{link_id}"


def obs_factor_id(link_id: str) -> str:
    return f"psi_{link_id}"


def build_ncfg(net: Network, obs: Observation | None = None) -> FactorGraph:
    """Network code factor graph for one sink's observations.

    Zero coefficients are kept as explicit terms so the graph mirrors the
    topology; :func:`simplify` removes them.
    """
    F, n = net.field, net.dim
    variables = [Variable(s, F, n) for s in net.source_ids] + [Variable(l, F, n) for l in net.link_ids]
    factors = []
    for l in net.link_ids:
        inc = net.inc(l)
        if net.is_stochastic(l):
            probs = net.channels[l].probs
            payload: Payload = Table((l,) + inc, np.moveaxis(probs, -1, 0).copy())
        else:
            payload = LinearConstraint(l, tuple((e, net.coef(l, e)) for e in inc))
        factors.append(Factor(factor_id(l), payload))
    if obs is not None:
        for j, value in obs.values:
            if not net.has_link(j):
                raise NetworkError(f"observation on unknown link {j!r}")
            if len(value) != n:
                raise NetworkError(f"observed value on {j} has length {len(value)}, expected {n}")
            factors.append(Factor(obs_factor_id(j), ObservationDelta(j, tuple(value))))
    return FactorGraph(tuple(variables), tuple(factors))


# --------------------------------------------------------------------------
# transforms

def simplify(g: FactorGraph) -> FactorGraph:
    """Drop zero-coefficient terms from every linear constraint."""
    out = []
    for f in g.factors:
        p = f.payload
        if isinstance(p, LinearConstraint) and any(c == 0 for _, c in p.terms):
            f = Factor(f.id, LinearConstraint(p.output, tuple((v, c) for v, c in p.terms if c)))
        out.append(f)
    return FactorGraph(g.variables, tuple(out))


def _unsafe_variables(g: FactorGraph) -> set[str]:
    """Variables whose marginal with everything upstream summed out may be non-uniform.

    A variable is safe when nothing generates it (a source), or its linear
    generator has a nonzero term on a safe input: adding an independent
    uniform symbol scaled by a unit keeps the sum uniform.
    """
    gen: dict[str, Payload] = {}
    for f in g.factors:
        p = f.payload
        if isinstance(p, LinearConstraint):
            gen.setdefault(p.output, p)
        elif isinstance(p, Table):
            gen.setdefault(p.scope[0], p)
    state: dict[str, bool] = {}

    def safe(v: str) -> bool:
        if v in state:
            return state[v]
        state[v] = False  # guards against cycles in malformed graphs
        p = gen.get(v)
        if p is None:
            ok = True
        elif isinstance(p, LinearConstraint):
            ok = any(c != 0 and safe(u) for u, c in p.terms)
        else:
            ok = False
        state[v] = ok
        return ok

    return {v.id for v in g.variables if not safe(v.id)}


def _generators(g: FactorGraph) -> dict[str, str]:
    out: dict[str, str] = {}
    for f in g.factors:
        p = f.payload
        if isinstance(p, (LinearConstraint, Table)):
            out.setdefault(p.scope[0], f.id)
    return out


def prune(g: FactorGraph, targets: Sequence[str], diagnostics: list[str] | None = None) -> FactorGraph:
    """Keep nodes lying on some simple path from an observation factor to a target.

    Kept factors keep all their variables.  The generating factor of a kept
    variable is also kept when dropping it would lose a non-uniform prior
    (stochastic tables, constant-zero links).
    """
    for t in targets:
        if not g.has_var(t):
            raise KeyError(f"unknown target variable {t!r}")
    G = g.to_networkx()
    sigma, tau = ("s", "obs"), ("s", "target")
    G.add_edges_from((sigma, ("f", f.id)) for f in g.factors if isinstance(f.payload, ObservationDelta))
    G.add_edges_from((tau, ("v", t)) for t in targets)
    on_path: set = set()
    if sigma in G and tau in G and nx.has_path(G, sigma, tau):
        on_path = _nodes_on_simple_paths(G, sigma, tau)
    if diagnostics is not None and sigma in G:
        reach = nx.node_connected_component(G, sigma)
        for t in targets:
            if ("v", t) not in reach:
                diagnostics.append(f"target {t} is not connected to any observation; its support stays full")

    keep_f = {fid for kind, fid in on_path if kind == "f"}
    keep_v = {vid for kind, vid in on_path if kind == "v"} | set(targets)
    unsafe = _unsafe_variables(g)
    gen = {v: f for v, f in _generators(g).items() if v in unsafe}
    changed = True
    while changed:
        changed = False
        for fid in list(keep_f):
            for v in g.factor(fid).variables:
                if v not in keep_v:
                    keep_v.add(v)
                    changed = True
        for v in list(keep_v):
            if v in gen and gen[v] not in keep_f:
                keep_f.add(gen[v])
                changed = True
    return FactorGraph(tuple(v for v in g.variables if v.id in keep_v),
                       tuple(f for f in g.factors if f.id in keep_f))


def _nodes_on_simple_paths(G: nx.Graph, a, b) -> set:
    """Vertices on at least one simple a-b path: the blocks along the block-cut tree path."""
    comp = G.subgraph(nx.node_connected_component(G, a))
    blocks = [frozenset(b_) for b_ in nx.biconnected_components(comp)]
    cuts = set(nx.articulation_points(comp))
    T = nx.Graph()
    member: dict = {}
    for i, blk in enumerate(blocks):
        T.add_node(("B", i))
        for x in blk:
            if x in cuts:
                T.add_edge(("B", i), ("C", x))
            else:
                member[x] = ("B", i)

    def tree_node(x):
        return ("C", x) if x in cuts else member[x]

    path = nx.shortest_path(T, tree_node(a), tree_node(b))
    out: set = set()
    for kind, idx in path:
        if kind == "B":
            out |= blocks[idx]
    return out - {a, b}


def cluster(g: FactorGraph, partition: Sequence[Sequence[str]], keep: Iterable[str] = ()) -> FactorGraph:
    """Merge each group of two or more factors into one :class:`ClusterOf` factor.

    A variable becomes internal to a cluster when every factor touching it is
    in the group, it is not in ``keep`` and it is not observed.  Groups of a
    single factor are left as they are.
    """
    seen: set[str] = set()
    for group in partition:
        for fid in group:
            if not g.has_factor(fid):
                raise KeyError(f"unknown factor {fid!r}")
            if fid in seen:
                raise ValueError(f"factor {fid} appears in more than one group")
            seen.add(fid)
    keep = set(keep)
    observed = {f.payload.var for f in g.factors if isinstance(f.payload, ObservationDelta)}
    first_of: dict[str, int] = {}
    merged: dict[int, Factor] = {}
    internal_ids: set[str] = set()
    for gi, group in enumerate(partition):
        if len(group) < 2:
            continue
        members = [f for f in g.factors if f.id in set(group)]
        ids = {f.id for f in members}
        scope = list(dict.fromkeys(v for f in members for v in f.variables))
        internal = tuple(g.var(v) for v in scope
                         if v not in keep and v not in observed and set(g.var_factors(v)) <= ids)
        internal_ids |= {v.id for v in internal}
        merged[gi] = Factor("+".join(f.id for f in members), ClusterOf(tuple(members), internal))
        for f in members:
            first_of[f.id] = gi
    factors = []
    emitted: set[int] = set()
    for f in g.factors:
        gi = first_of.get(f.id)
        if gi is None:
            factors.append(f)
        elif gi not in emitted:
            factors.append(merged[gi])
            emitted.add(gi)
    return FactorGraph(tuple(v for v in g.variables if v.id not in internal_ids), tuple(factors))


def default_clustering(net: Network, g: FactorGraph) -> list[list[str]]:
    """Group the link factors present in ``g`` by the tail node of their link."""
    groups = []
    for node in net.nodes:
        group = [factor_id(l.id) for l in net.links if l.tail == node and g.has_factor(factor_id(l.id))]
        if group:
            groups.append(group)
    return groups


@dataclass(frozen=True)
class CycleReport:
    is_tree: bool
    cycle: tuple[str, ...] | None = None


def find_cycles(g: FactorGraph) -> CycleReport:
    """Forest test on the undirected graph, with one cycle as alternating node ids."""
    G = g.to_networkx()
    try:
        edges = nx.find_cycle(G)
    except nx.NetworkXNoCycle:
        return CycleReport(True)
    return CycleReport(False, tuple(u[1] for u, _ in edges))


# --------------------------------------------------------------------------
# tables and enumeration

def _digit_grid(A: int, q: int, n: int) -> np.ndarray:
    idx = np.arange(A)
    out = np.empty((A, n), dtype=np.int64)
    for k in range(n - 1, -1, -1):
        out[:, k] = idx % q
        idx = idx // q
    return out


def _to_index(digits: np.ndarray, q: int) -> np.ndarray:
    idx = np.zeros(digits.shape[:-1], dtype=np.int64)
    for k in range(digits.shape[-1]):
        idx = idx * q + digits[..., k]
    return idx


def materialize(g: FactorGraph, payload: Payload, guard: int = TABLE_GUARD) -> np.ndarray:
    """Dense nonnegative table over ``payload.scope``."""
    sizes = [g.var(v).alphabet_size for v in payload.scope]
    total = int(np.prod(sizes, dtype=object)) if sizes else 1
    if total > guard:
        raise CapacityError(f"table with {total} entries exceeds guard {guard}")
    if isinstance(payload, Table):
        return payload.values
    if isinstance(payload, ObservationDelta):
        v = g.var(payload.var)
        t = np.zeros(v.alphabet_size)
        t[vector_index(payload.value, v.field.q)] = 1.0
        return t
    if isinstance(payload, LinearConstraint):
        out = g.var(payload.output)
        F, n, A = out.field, out.n, out.alphabet_size
        digits = _digit_grid(A, F.q, n)
        k = len(payload.terms)
        t = np.zeros((A,) * (k + 1))
        grids = np.indices((A,) * k).reshape(k, -1) if k else np.zeros((0, 1), dtype=np.int64)
        acc = np.zeros((grids.shape[1], n), dtype=np.int64)
        for axis, (_, c) in enumerate(payload.terms):
            if c:
                acc = F.vadd(acc, F.vmul(np.int64(c), digits[grids[axis]]))
        t[(_to_index(acc, F.q),) + tuple(grids)] = 1.0
        return t
    if isinstance(payload, ClusterOf):
        names = list(dict.fromkeys(v for p in payload.parts for v in p.variables))
        inner = {v.id: v for v in payload.internal}
        sub = FactorGraph(tuple(inner[v] if v in inner else g.var(v) for v in names), payload.parts)
        allsizes = [sub.var(v).alphabet_size for v in names]
        if int(np.prod(allsizes, dtype=object)) > guard:
            raise CapacityError(f"cluster enumeration exceeds guard {guard}")
        pos = {v: i for i, v in enumerate(names)}
        operands = []
        for p in payload.parts:
            operands += [materialize(sub, p.payload, guard), [pos[v] for v in p.variables]]
        return np.einsum(*operands, [pos[v] for v in payload.scope], optimize=True)
    raise TypeError(f"unknown payload {payload!r}")


def enumerate_marginals(g: FactorGraph, guard: int = 2**20) -> dict[str, np.ndarray]:
    """Unnormalised marginals of the global product by visiting every assignment."""
    sizes = [v.alphabet_size for v in g.variables]
    total = int(np.prod(sizes, dtype=object)) if sizes else 1
    if total > guard:
        raise CapacityError(f"{total} assignments exceed enumeration guard {guard}")
    grid = np.indices(sizes).reshape(len(sizes), -1) if sizes else np.zeros((0, 1), dtype=np.int64)
    col = {v.id: i for i, v in enumerate(g.variables)}
    weight = np.ones(grid.shape[1])
    for f in g.factors:
        t = materialize(g, f.payload)
        weight = weight * t[tuple(grid[col[v]] for v in f.variables)]
    return {v.id: np.bincount(grid[col[v.id]], weights=weight, minlength=v.alphabet_size) for v in g.variables}


def table_support(values: np.ndarray, F: FieldSpec, n: int) -> frozenset[Vector]:
    """Symbols (as vectors) where a 1-D table is positive."""
    digits = _digit_grid(len(values), F.q, n)
    return frozenset(tuple(int(x) for x in digits[i]) for i in np.flatnonzero(values > 0))


def all_symbols(F: FieldSpec, n: int) -> list[Vector]:
    return list(itertools.product(range(F.q), repeat=n))
