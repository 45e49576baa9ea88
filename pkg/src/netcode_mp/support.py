"""Support passing: sum-product where only the nonzero sets of messages move.

For deterministic linear codes every message is a coset ``y* + W`` of F^n.
At a variable the outgoing support is the intersection of the incoming ones.
At a linear constraint ``sum_v a_v y_v = 0`` the support sent to ``y_r`` is
``-a_r^{-1} sum_j a_j y*_j + sum_j W_j``.  Scaling by a nonzero field element
maps a subspace onto itself, so only the representatives get rescaled.
Stochastic tables fall back to explicit symbol sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

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
    Variable,
    materialize,
    table_support,
)
from .galois import (
    Coset,
    FieldSpec,
    OpCounter,
    Subspace,
    Vector,
    coset_hull,
    coset_intersect,
    index_vector,
    solve,
    subspace_sum,
    vec_axpy,
    vec_scale,
    vector_index,
)
from .sumprod import Observer, RunReport, Schedule, TableAlgebra, propagate

SET_GUARD = 4096


class _Empty:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "EMPTY"


EMPTY = _Empty()


@dataclass(frozen=True)
class ExplicitSet:
    symbols: frozenset[Vector]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("ExplicitSet must be nonempty; use EMPTY")


SupportMessage = Union[Coset, ExplicitSet, _Empty]


class DecodeFailure(RuntimeError):
    """The observations are inconsistent: some support came out empty."""


def _from_symbols(symbols: Iterable[Vector]) -> SupportMessage:
    s = frozenset(symbols)
    return ExplicitSet(s) if s else EMPTY


def support_size(msg: SupportMessage) -> int:
    if msg is EMPTY:
        return 0
    if isinstance(msg, Coset):
        return msg.size
    return len(msg.symbols)


def as_symbols(msg: SupportMessage, guard: int = SET_GUARD) -> frozenset[Vector] | None:
    """Enumerate a message, or ``None`` if a coset is larger than ``guard``."""
    if msg is EMPTY:
        return frozenset()
    if isinstance(msg, ExplicitSet):
        return msg.symbols
    if msg.size > guard:
        return None
    return frozenset(msg.elements())


def hull(msg: SupportMessage, F: FieldSpec, n: int) -> Coset | None:
    if msg is EMPTY:
        return None
    if isinstance(msg, Coset):
        return msg
    return coset_hull(F, n, sorted(msg.symbols))


def is_subset(a: SupportMessage, b: SupportMessage) -> bool:
    if a is EMPTY:
        return True
    if b is EMPTY:
        return False
    if isinstance(a, Coset) and isinstance(b, Coset):
        return a.issubset(b)
    if isinstance(b, Coset):
        return all(b.contains(x) for x in a.symbols)
    sa = as_symbols(a, guard=1 << 62)
    return sa <= b.symbols


# --------------------------------------------------------------------------
# update rules

@dataclass
class _Flags:
    over_approximated: bool = False
    explicit: int = 0


def support_var_update(incoming: Sequence[SupportMessage], F: FieldSpec, n: int,
                       ops: OpCounter | None = None, guard: int = SET_GUARD,
                       flags: _Flags | None = None) -> SupportMessage:
    """Intersection of the incoming supports; full space when there are none."""
    if not incoming:
        return Coset.full(F, n)
    if any(m is EMPTY for m in incoming):
        return EMPTY
    if all(isinstance(m, Coset) for m in incoming):
        acc = incoming[0]
        for m in incoming[1:]:
            acc = coset_intersect(acc, m, ops)
            if acc is None:
                return EMPTY
        return acc
    sets = [as_symbols(m, guard) for m in incoming]
    if all(s is not None for s in sets):
        out = sets[0]
        for s in sets[1:]:
            out = out & s
        if flags is not None:
            flags.explicit += 1
        return _from_symbols(out)
    # a coset too large to enumerate meets an explicit set: intersect affine hulls
    if flags is not None:
        flags.over_approximated = True
    return support_var_update([hull(m, F, n) for m in incoming], F, n, ops, guard, flags)


def _linear_closed_form(p: LinearConstraint, incoming: Mapping[str, Coset], out_var: str,
                        F: FieldSpec, n: int, ops: OpCounter | None) -> SupportMessage:
    a = p.homogeneous(F)
    ar = a[out_var]
    active = [(u, a[u], m) for u, m in incoming.items() if a[u] != 0]
    if ar == 0:
        # y_r does not enter the constraint: full if the rest is satisfiable
        rest = _affine_combination(active, F, n, ops)
        return Coset.full(F, n) if rest.space.contains(rest.rep) else EMPTY
    if any(m.space.is_full for _, _, m in active):
        return Coset.full(F, n)
    space = subspace_sum([m.space for _, _, m in active] or [Subspace.zero(F, n)], ops)
    rep: Vector = (0,) * n
    for _, c, m in active:
        rep = vec_axpy(F, rep, c, m.rep, ops)
    f = F.neg(F.inv(ar))
    if f != 1:
        if ops is not None:
            ops.mul += 1
        rep = vec_scale(F, f, rep, ops)
    return Coset.make(rep, space, ops)


def _affine_combination(terms, F: FieldSpec, n: int, ops: OpCounter | None) -> Coset:
    space = subspace_sum([m.space for _, _, m in terms] or [Subspace.zero(F, n)], ops)
    rep: Vector = (0,) * n
    for _, c, m in terms:
        rep = vec_axpy(F, rep, c, m.rep, ops)
    return Coset.make(rep, space, ops)


def _cluster_closed_form(g: FactorGraph, p: ClusterOf, incoming: Mapping[str, Coset], out_var: str,
                         F: FieldSpec, n: int, ops: OpCounter | None) -> SupportMessage:
    """Project the affine solution set of the cluster's equations onto ``out_var``.

    Unknowns: the recipient and every internal variable directly (n
    coordinates each), and every other external variable through the
    coordinates of its incoming coset, ``y_j = r_j + sum_m t_m b_m``.
    """
    offset: dict[str, int] = {}
    width = 0
    for v in (out_var,) + tuple(v.id for v in p.internal):
        offset[v] = width
        width += n
    for u, m in incoming.items():
        offset[u] = width
        width += m.dim
    rows: list[list[int]] = []
    rhs: list[int] = []
    for part in p.parts:
        pl = part.payload
        if isinstance(pl, LinearConstraint):
            coeffs, const = pl.homogeneous(F), (0,) * n
        else:
            coeffs, const = {pl.var: 1}, pl.value
        for k in range(n):
            row = [0] * width
            b = const[k]
            for v, c in coeffs.items():
                if c == 0:
                    continue
                if v in incoming:
                    m = incoming[v]
                    if m.rep[k]:
                        b = F.sub(b, F.mul(c, m.rep[k]))
                        if ops is not None:
                            ops.mul += 1
                            ops.add += 1
                    for i, basis_row in enumerate(m.space.basis):
                        if basis_row[k]:
                            row[offset[v] + i] = F.add(row[offset[v] + i], F.mul(c, basis_row[k]))
                            if ops is not None:
                                ops.mul += 1
                                ops.add += 1
                else:
                    row[offset[v] + k] = F.add(row[offset[v] + k], c)
            rows.append(row)
            rhs.append(b)
    sol = solve(F, rows, rhs, ops, ncols=width)
    if sol is None:
        return EMPTY
    lo = offset[out_var]
    rep = sol.rep[lo:lo + n]
    space = Subspace.span(F, n, [r[lo:lo + n] for r in sol.space.basis], ops)
    return Coset.make(rep, space, ops)


def _enumerated(g: FactorGraph, payload: Payload, incoming: Mapping[str, SupportMessage], out_var: str,
                guard: int, table_guard: int) -> SupportMessage:
    """Union of factor images over every combination drawn from the incoming supports."""
    values = materialize(g, payload, table_guard)
    scope = payload.scope
    index_lists = []
    for u in scope:
        var = g.var(u)
        if u == out_var:
            index_lists.append(np.arange(var.alphabet_size))
            continue
        syms = as_symbols(incoming[u], guard)
        if syms is None:
            raise CapacityError(f"support of {u} too large to enumerate (guard {guard})")
        index_lists.append(np.array(sorted(vector_index(s, var.field.q) for s in syms), dtype=np.int64))
    sub = values[np.ix_(*index_lists)] > 0
    k = scope.index(out_var)
    other_axes = tuple(i for i in range(len(scope)) if i != k)
    mask = sub.any(axis=other_axes) if other_axes else sub
    var = g.var(out_var)
    return _from_symbols(index_vector(int(i), var.field.q, var.n) for i in np.flatnonzero(mask))


def support_factor_update(g: FactorGraph, payload: Payload, incoming: Mapping[str, SupportMessage], out_var: str,
                          ops: OpCounter | None = None, guard: int = SET_GUARD,
                          table_guard: int = TABLE_GUARD, flags: _Flags | None = None) -> SupportMessage:
    """Support of the factor-to-variable message given the incoming supports."""
    var = g.var(out_var)
    F, n = var.field, var.n
    missing = [u for u in payload.scope if u != out_var and u not in incoming]
    if missing:
        raise ValueError(f"missing incoming messages from {missing}")
    if any(m is EMPTY for m in incoming.values()):
        return EMPTY
    if isinstance(payload, ObservationDelta):
        return Coset.point(F, payload.value)
    all_cosets = all(isinstance(m, Coset) for m in incoming.values())
    if isinstance(payload, LinearConstraint):
        if all_cosets:
            return _linear_closed_form(payload, incoming, out_var, F, n, ops)
        sizes = [support_size(m) for m in incoming.values()]
        if int(np.prod(sizes, dtype=object)) * var.alphabet_size <= guard * var.alphabet_size:
            if flags is not None:
                flags.explicit += 1
            return _linear_by_enumeration(payload, incoming, out_var, F, n, guard)
        if flags is not None:
            flags.over_approximated = True
        return _linear_closed_form(payload, {u: hull(m, F, n) for u, m in incoming.items()}, out_var, F, n, ops)
    if isinstance(payload, ClusterOf):
        linear = all(isinstance(p.payload, (LinearConstraint, ObservationDelta)) for p in payload.parts)
        if linear and all_cosets:
            return _cluster_closed_form(g, payload, incoming, out_var, F, n, ops)
    if flags is not None:
        flags.explicit += 1
    return _enumerated(g, payload, incoming, out_var, guard, table_guard)


def _linear_by_enumeration(p: LinearConstraint, incoming: Mapping[str, SupportMessage], out_var: str,
                           F: FieldSpec, n: int, guard: int) -> SupportMessage:
    a = p.homogeneous(F)
    ar = a[out_var]
    others = list(incoming)
    sets = [sorted(as_symbols(incoming[u], guard)) for u in others]
    out: set[Vector] = set()
    for combo in itertools.product(*sets):
        s: Vector = (0,) * n
        for u, y in zip(others, combo):
            s = vec_axpy(F, s, a[u], y)
        if ar == 0:
            if not any(s):
                return Coset.full(F, n)
            continue
        out.add(vec_scale(F, F.neg(F.inv(ar)), s))
    return _from_symbols(out)


@dataclass
class SupportAlgebra:
    g: FactorGraph
    ops: OpCounter | None = None
    guard: int = SET_GUARD
    table_guard: int = TABLE_GUARD
    flags: _Flags = field(default_factory=_Flags)

    def initial(self, var: Variable) -> SupportMessage:
        return Coset.full(var.field, var.n)

    def var_update(self, var: Variable, incoming: Sequence[SupportMessage]) -> SupportMessage:
        if len(incoming) <= 1:
            return incoming[0] if incoming else Coset.full(var.field, var.n)
        return support_var_update(incoming, var.field, var.n, self.ops, self.guard, self.flags)

    def factor_update(self, factor: Factor, incoming: Mapping[str, SupportMessage], out_var: str) -> SupportMessage:
        return support_factor_update(self.g, factor.payload, incoming, out_var, self.ops, self.guard,
                                     self.table_guard, self.flags)

    def belief(self, var: Variable, incoming: Sequence[SupportMessage]) -> SupportMessage:
        return self.var_update(var, incoming)

    def residual(self, old: SupportMessage, new: SupportMessage) -> float:
        return 0.0 if old == new else 1.0

    def is_contradiction(self, msg: SupportMessage) -> bool:
        return msg is EMPTY


def run_support(g: FactorGraph, schedule: Schedule | None = None, ops: OpCounter | None = None,
                guard: int = SET_GUARD, table_guard: int = TABLE_GUARD, check_monotone: bool = True,
                observer: Observer | None = None) -> tuple[dict[str, SupportMessage], RunReport]:
    """Support of every variable's marginal (exact on trees, a superset otherwise).

    Messages start at the full alphabet.  Under flooding every iteration is
    checked to only shrink messages; a strict change counts as one shrinkage.
    """
    schedule = schedule or Schedule()
    if schedule.mode != "two-pass":
        schedule = Schedule(schedule.mode, schedule.max_iterations, 0.0, schedule.seed)
    algebra = SupportAlgebra(g, ops, guard, table_guard)
    state = {"shrinks": 0, "monotone": True}

    def watch(it: int, old, new) -> None:
        for key, m in new.items():
            if m != old[key]:
                state["shrinks"] += 1
                if check_monotone and not is_subset(m, old[key]):
                    state["monotone"] = False
        if observer is not None:
            observer(it, old, new)

    beliefs, report, _ = propagate(g, algebra, schedule, watch)
    report.shrinkages = state["shrinks"]
    report.monotone = state["monotone"]
    report.over_approximated = algebra.flags.over_approximated
    report.explicit_messages = algebra.flags.explicit
    if ops is not None:
        ops.messages += report.messages
        ops.iterations += report.iterations
    return beliefs, report


# --------------------------------------------------------------------------
# decoding helpers

@dataclass(frozen=True)
class AmbiguousCoset:
    """The observations leave a target undetermined within ``coset``."""

    coset: Coset
    exact: bool = True

    @property
    def dim(self) -> int:
        return self.coset.dim


def extract_decode(supports: Mapping[str, SupportMessage], targets: Iterable[str]) -> dict[str, Vector | AmbiguousCoset]:
    out: dict[str, Vector | AmbiguousCoset] = {}
    for t in targets:
        m = supports[t]
        if m is EMPTY:
            raise DecodeFailure(f"support of {t} is empty: observations are inconsistent")
        if isinstance(m, Coset):
            out[t] = m.rep if m.dim == 0 else AmbiguousCoset(m)
        elif len(m.symbols) == 1:
            out[t] = next(iter(m.symbols))
        else:
            pts = sorted(m.symbols)
            h = coset_hull(m_field(supports, t, pts), len(pts[0]), pts)
            out[t] = AmbiguousCoset(h, exact=h.size == len(pts))
    return out


def m_field(supports, t, pts) -> FieldSpec:
    # explicit sets carry no field; any coset message in the map shares it
    for m in supports.values():
        if isinstance(m, Coset):
            return m.field
    return FieldSpec(2) if max(max(p) for p in pts) < 2 else _smallest_prime_above(max(max(p) for p in pts))


def _smallest_prime_above(x: int) -> FieldSpec:
    q = x + 1
    while True:
        try:
            return FieldSpec(q)
        except ValueError:
            q += 1


@dataclass
class EquivalenceReport:
    passed: bool
    iterations: int
    checked: int
    first_divergence: str | None = None


def equivalence_check(g: FactorGraph, schedule: Schedule | None = None, seed: int | None = 0,
                      rtol: float = 1e-9) -> EquivalenceReport:
    """Run tables and cosets side by side under flooding and compare every message.

    At each iteration, the positive set of every table message must equal the
    coset message and the table must be constant on it.  ``seed`` shuffles
    the order messages are computed within an iteration.
    """
    schedule = schedule or Schedule()
    t_hist: list[dict] = []
    s_hist: list[dict] = []
    propagate(g, SupportAlgebra(g), Schedule("flooding", schedule.max_iterations, 0.0, seed),
              lambda it, old, new: s_hist.append(new))
    # float tables may jitter in the last bits instead of settling exactly, so
    # run them one round past the support fixpoint rather than to convergence
    propagate(g, TableAlgebra(g), Schedule("flooding", len(s_hist) + 1, 0.0, seed),
              lambda it, old, new: t_hist.append(new))
    rounds = max(len(t_hist), len(s_hist))
    checked = 0
    for k in range(rounds):
        tm = t_hist[min(k, len(t_hist) - 1)]
        sm = s_hist[min(k, len(s_hist) - 1)]
        for key, cos in sm.items():
            var = g.var(key[1] if key[0] == "v" else key[2])
            table = tm[key]
            pos = table_support(table, var.field, var.n)
            if not isinstance(cos, (Coset, _Empty)):
                return EquivalenceReport(False, k + 1, checked, f"iteration {k + 1} {key}: left the coset representation")
            expected = as_symbols(cos, guard=1 << 62)
            if pos != expected:
                return EquivalenceReport(False, k + 1, checked, f"iteration {k + 1} {key}: supports differ")
            vals = table[table > 0]
            if vals.size and vals.max() - vals.min() > rtol * vals.max():
                return EquivalenceReport(False, k + 1, checked, f"iteration {k + 1} {key}: not constant on support")
            checked += 1
    return EquivalenceReport(True, rounds, checked)
