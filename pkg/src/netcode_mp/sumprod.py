"""Message passing on factor graphs: a schedule-driven engine plus the
real-valued sum-product instance over dense tables.

The engine knows nothing about message contents.  An *algebra* object
supplies the two update rules (product at variables, sum of products at
factors), the initial message and a residual; :mod:`netcode_mp.support`
plugs the support/coset algebra into the same engine.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Mapping, Protocol, Sequence

import numpy as np

from .factorgraph import (
    TABLE_GUARD,
    CapacityError,
    ClusterOf,
    Factor,
    FactorGraph,
    LinearConstraint,
    ObservationDelta,
    Payload,
    Table,
    Variable,
    _digit_grid,
    _to_index,
    find_cycles,
    materialize,
)
from .galois import FieldSpec, vector_index


@dataclass
class Schedule:
    """``two-pass`` (forests only), ``flooding``, or ``auto`` (two-pass when the graph is a forest)."""

    mode: str = "auto"
    max_iterations: int = 1000
    tol: float = 1e-12
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("auto", "two-pass", "flooding"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")


@dataclass
class RunReport:
    mode: str = ""
    iterations: int = 0
    converged: bool = False
    max_residual: float = 0.0
    contradiction: bool = False
    messages: int = 0
    shrinkages: int = 0
    monotone: bool = True
    over_approximated: bool = False
    explicit_messages: int = 0

    def lines(self) -> list[str]:
        return [
            f"iterations={self.iterations}",
            f"converged={str(self.converged).lower()}",
            f"max_residual={self.max_residual:.3g}",
            f"contradiction={str(self.contradiction).lower()}",
        ]


class Algebra(Protocol):
    def initial(self, var: Variable) -> Any: ...
    def var_update(self, var: Variable, incoming: Sequence[Any]) -> Any: ...
    def factor_update(self, factor: Factor, incoming: Mapping[str, Any], out_var: str) -> Any: ...
    def belief(self, var: Variable, incoming: Sequence[Any]) -> Any: ...
    def residual(self, old: Any, new: Any) -> float: ...
    def is_contradiction(self, msg: Any) -> bool: ...


Messages = dict[tuple[str, str, str], Any]
Observer = Callable[[int, Messages, Messages], None]


def propagate(g: FactorGraph, algebra: Algebra, schedule: Schedule | None = None,
              observer: Observer | None = None) -> tuple[dict[str, Any], RunReport, Messages]:
    """Run the algebra over ``g``; returns beliefs, report and the final messages.

    Message keys are ``("v", var, factor)`` for variable-to-factor and
    ``("f", factor, var)`` for factor-to-variable messages.
    """
    schedule = schedule or Schedule()
    mode = schedule.mode
    if mode == "auto":
        mode = "two-pass" if find_cycles(g).is_tree else "flooding"
    elif mode == "two-pass" and not find_cycles(g).is_tree:
        raise ValueError("two-pass schedule requires a cycle-free factor graph")
    report = RunReport(mode=mode)
    if mode == "two-pass":
        msgs = _two_pass(g, algebra, report)
    else:
        msgs = _flooding(g, algebra, schedule, report, observer)
    beliefs = {}
    for v in g.variables:
        beliefs[v.id] = algebra.belief(v, [msgs[("f", f, v.id)] for f in g.var_factors(v.id)])
    report.contradiction = report.contradiction or any(algebra.is_contradiction(b) for b in beliefs.values())
    return beliefs, report, msgs


def _compute(g: FactorGraph, algebra: Algebra, key: tuple[str, str, str], msgs: Messages) -> Any:
    kind, src, dst = key
    if kind == "v":
        var = g.var(src)
        return algebra.var_update(var, [msgs[("f", f, src)] for f in g.var_factors(src) if f != dst])
    fac = g.factor(src)
    return algebra.factor_update(fac, {u: msgs[("v", u, src)] for u in fac.variables if u != dst}, dst)


def _two_pass(g: FactorGraph, algebra: Algebra, report: RunReport) -> Messages:
    """Each directed edge is computed exactly once, as soon as its inputs exist."""
    nbr: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for v in g.variables:
        nbr[("v", v.id)] = [("f", f) for f in g.var_factors(v.id)]
    for f in g.factors:
        nbr[("f", f.id)] = [("v", u) for u in f.variables]
    got: dict[tuple[str, str], set] = {node: set() for node in nbr}
    sent: set[tuple] = set()
    queue: deque = deque()

    def release(node) -> None:
        missing = [x for x in nbr[node] if x not in got[node]]
        if len(missing) == 1:
            targets = missing
        elif not missing:
            targets = nbr[node]
        else:
            return
        for x in targets:
            if (node, x) not in sent:
                sent.add((node, x))
                queue.append((node, x))

    for node in nbr:
        release(node)
    msgs: Messages = {}
    while queue:
        (k1, a), (k2, b) = queue.popleft()
        key = (k1, a, b)
        msgs[key] = _compute(g, algebra, key, msgs)
        report.messages += 1
        if algebra.is_contradiction(msgs[key]):
            report.contradiction = True
        got[(k2, b)].add((k1, a))
        release((k2, b))
    expected = 2 * len(g.edges())
    assert len(msgs) == expected, f"two-pass computed {len(msgs)} of {expected} messages"
    report.iterations = 1
    report.converged = True
    return msgs


def _flooding(g: FactorGraph, algebra: Algebra, schedule: Schedule, report: RunReport,
              observer: Observer | None) -> Messages:
    keys: list[tuple[str, str, str]] = []
    msgs: Messages = {}
    for f, v in g.edges():
        init = algebra.initial(g.var(v))
        msgs[("v", v, f)] = init
        msgs[("f", f, v)] = init
        keys += [("v", v, f), ("f", f, v)]
    order = list(keys)
    if schedule.seed is not None:
        np.random.default_rng(schedule.seed).shuffle(order)
    for it in range(1, schedule.max_iterations + 1):
        new: Messages = {}
        for key in order:
            new[key] = _compute(g, algebra, key, msgs)
        report.messages += len(order)
        residual = max((algebra.residual(msgs[k], new[k]) for k in keys), default=0.0)
        if observer is not None:
            observer(it, msgs, new)
        msgs = new
        report.iterations = it
        report.max_residual = residual
        if any(algebra.is_contradiction(m) for m in msgs.values()):
            report.contradiction = True
        if residual <= schedule.tol:
            report.converged = True
            break
    return msgs


# --------------------------------------------------------------------------
# real-valued sum-product over tables

@lru_cache(maxsize=64)
def _group_tables(F: FieldSpec, n: int) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Index tables for F^n: ``add[i, j]`` and ``scale[c][i]``."""
    A = F.q**n
    if A * A > TABLE_GUARD:
        raise CapacityError(f"alphabet of size {A} too large for table convolution")
    digits = _digit_grid(A, F.q, n)
    add = _to_index(F.vadd(digits[:, None, :], digits[None, :, :]), F.q)
    scale = {c: _to_index(F.vmul(np.int64(c), digits), F.q) for c in range(F.q)}
    return add, scale


def _normalize(m: np.ndarray) -> np.ndarray:
    z = m.sum()
    return m / z if z > 0 else np.zeros_like(m)


def var_update(incoming: Sequence[np.ndarray], size: int | None = None) -> np.ndarray:
    """Pointwise product of the incoming messages, normalised; uniform if none."""
    if not incoming:
        if size is None:
            raise ValueError("size is required when there are no incoming messages")
        return np.full(size, 1.0 / size)
    sizes = {len(m) for m in incoming}
    if len(sizes) != 1 or (size is not None and sizes != {size}):
        raise ValueError(f"incoming messages disagree on alphabet size: {sorted(sizes)}")
    out = np.ones(len(incoming[0]))
    for m in incoming:
        out = out * m
    return _normalize(out)


def _linear_message(g: FactorGraph, p: LinearConstraint, incoming: Mapping[str, np.ndarray], out_var: str) -> np.ndarray:
    var = g.var(out_var)
    F, n, A = var.field, var.n, var.alphabet_size
    add, scale = _group_tables(F, n)
    a = p.homogeneous(F)
    # distribution of S = sum_{j != out} a_j y_j
    dist = np.zeros(A)
    dist[0] = 1.0
    for u, m in incoming.items():
        c = a[u]
        if c == 0:
            dist = dist * m.sum()
            continue
        shifted = np.zeros(A)
        shifted[scale[c]] = m
        dist = np.bincount(add.ravel(), weights=np.outer(dist, shifted).ravel(), minlength=A)
    ar = a[out_var]
    if ar == 0:
        return _normalize(np.full(A, dist[0]))
    out = np.zeros(A)
    out[scale[F.neg(F.inv(ar))]] = dist  # y_out = -a_out^{-1} S
    return _normalize(out)


def _table_message(values: np.ndarray, scope: Sequence[str], incoming: Mapping[str, np.ndarray], out_var: str) -> np.ndarray:
    operands: list = [values, list(range(len(scope)))]
    for i, u in enumerate(scope):
        if u != out_var:
            operands += [incoming[u], [i]]
    return _normalize(np.einsum(*operands, [scope.index(out_var)]))


def factor_update(g: FactorGraph, payload: Payload, incoming: Mapping[str, np.ndarray], out_var: str,
                  guard: int = TABLE_GUARD, cache: dict | None = None) -> np.ndarray:
    """Sum over the other neighbours of factor value times their messages."""
    missing = [u for u in payload.scope if u != out_var and u not in incoming]
    if missing:
        raise ValueError(f"missing incoming messages from {missing}")
    if isinstance(payload, ObservationDelta):
        var = g.var(out_var)
        out = np.zeros(var.alphabet_size)
        out[vector_index(payload.value, var.field.q)] = 1.0
        return out
    if isinstance(payload, LinearConstraint):
        return _linear_message(g, payload, incoming, out_var)
    if isinstance(payload, ClusterOf):
        key = id(payload)
        if cache is not None and key in cache:
            values = cache[key]
        else:
            values = materialize(g, payload, guard)
            if cache is not None:
                cache[key] = values
        return _table_message(values, payload.scope, incoming, out_var)
    if isinstance(payload, Table):
        if payload.values.size > guard:
            raise CapacityError(f"table with {payload.values.size} entries exceeds guard {guard}")
        return _table_message(payload.values, payload.scope, incoming, out_var)
    raise TypeError(f"unknown payload {payload!r}")


@dataclass
class TableAlgebra:
    g: FactorGraph
    guard: int = TABLE_GUARD
    _cache: dict = field(default_factory=dict)

    def initial(self, var: Variable) -> np.ndarray:
        return np.full(var.alphabet_size, 1.0 / var.alphabet_size)

    def var_update(self, var: Variable, incoming: Sequence[np.ndarray]) -> np.ndarray:
        return var_update(incoming, var.alphabet_size)

    def factor_update(self, factor: Factor, incoming: Mapping[str, np.ndarray], out_var: str) -> np.ndarray:
        return factor_update(self.g, factor.payload, incoming, out_var, self.guard, self._cache)

    def belief(self, var: Variable, incoming: Sequence[np.ndarray]) -> np.ndarray:
        return var_update(incoming, var.alphabet_size)

    def residual(self, old: np.ndarray, new: np.ndarray) -> float:
        return float(np.max(np.abs(old - new))) if len(old) else 0.0

    def is_contradiction(self, msg: np.ndarray) -> bool:
        return not msg.any()


def run(g: FactorGraph, schedule: Schedule | None = None, guard: int = TABLE_GUARD,
        observer: Observer | None = None) -> tuple[dict[str, np.ndarray], RunReport]:
    """Sum-product beliefs (normalised marginals) for every variable."""
    beliefs, report, _ = propagate(g, TableAlgebra(g, guard), schedule, observer)
    return beliefs, report
