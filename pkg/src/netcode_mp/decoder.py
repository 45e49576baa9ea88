"""End-to-end decoding: the message-passing pipeline, the Gaussian
elimination baseline, brute-force oracles, and the chain benchmark."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .factorgraph import (
    TABLE_GUARD,
    CapacityError,
    FactorGraph,
    build_ncfg,
    cluster,
    default_clustering,
    find_cycles,
    prune,
    simplify,
)
from .galois import (
    Coset,
    FieldSpec,
    OpCounter,
    Subspace,
    Vector,
    format_vector,
    index_vector,
    rank,
    solve_system,
    vec_add,
    vec_scale,
    vector_index,
)
from .network import Network, NetworkError, Observation, encode, global_transfer_matrix, observe, random_code
from .sumprod import RunReport, Schedule, run
from .support import SET_GUARD, AmbiguousCoset, DecodeFailure, extract_decode, run_support
from .topologies import chain

__all__ = [
    "DecodeOptions", "DecodeResult", "TargetResult", "OpCounter",
    "decode_mp", "decode_gaussian", "oracle_marginal_support", "oracle_posterior",
    "bench_chain", "format_bench_csv", "BenchRow", "same_solution", "invertible_chain", "loglog_slope",
]

ENUM_GUARD = 2**20


@dataclass
class DecodeOptions:
    prune: bool = True
    simplify: bool = True
    cluster: Union[str, Sequence[Sequence[str]]] = "auto"  # "auto", "off" or explicit groups of factor ids
    schedule: Schedule = field(default_factory=Schedule)
    set_guard: int = SET_GUARD
    table_guard: int = TABLE_GUARD

    def __post_init__(self) -> None:
        if isinstance(self.cluster, str) and self.cluster not in ("auto", "off"):
            raise ValueError(f"cluster must be 'auto', 'off' or a partition, got {self.cluster!r}")


@dataclass
class TargetResult:
    target: str
    status: str  # decoded | ambiguous | contradiction
    value: Vector | None = None
    coset: Coset | None = None
    posterior: np.ndarray | None = None

    @property
    def ambiguity_dim(self) -> int:
        return self.coset.dim if self.coset is not None else 0

    def line(self) -> str:
        value = format_vector(self.value) if self.value is not None else "-"
        return f"target={self.target} status={self.status} value={value} ambiguity_dim={self.ambiguity_dim}"


@dataclass
class DecodeResult:
    targets: dict[str, TargetResult]
    counters: OpCounter = field(default_factory=OpCounter)
    log: list[str] = field(default_factory=list)
    report: RunReport | None = None
    tags: set[str] = field(default_factory=set)
    graph: FactorGraph | None = None

    @property
    def contradiction(self) -> bool:
        return any(t.status == "contradiction" for t in self.targets.values())

    def values(self) -> dict[str, Vector | None]:
        return {k: t.value for k, t in self.targets.items()}

    def cosets(self) -> dict[str, Coset | None]:
        return {k: t.coset for k, t in self.targets.items()}

    def lines(self) -> list[str]:
        out = [t.line() for t in self.targets.values()]
        out += [f"posterior={t.target}:" + ",".join(f"{x:.6g}" for x in t.posterior)
                for t in self.targets.values() if t.posterior is not None]
        if self.report is not None:
            out += self.report.lines()
        out.append(f"field_mul={self.counters.mul} field_add={self.counters.add} messages={self.counters.messages}")
        return out


def _default_targets(net: Network, targets: Sequence[str] | None) -> list[str]:
    targets = list(targets) if targets else list(net.source_ids)
    for t in targets:
        if not (net.has_source(t) or net.has_link(t)):
            raise NetworkError(f"unknown target {t!r}")
    return targets


def prepare_graph(net: Network, obs: Observation | None, targets: Sequence[str],
                  opts: DecodeOptions, log: list[str] | None = None, tags: set[str] | None = None) -> FactorGraph:
    """Build the factor graph and apply the transforms selected in ``opts``."""
    log = log if log is not None else []
    tags = tags if tags is not None else set()
    g = build_ncfg(net, obs)
    log.append(f"build: {len(g.variables)} variables, {len(g.factors)} factors")
    if opts.simplify:
        g = simplify(g)
        log.append(f"simplify: {len(g.edges())} edges")
    if opts.prune:
        notes: list[str] = []
        g = prune(g, targets, notes)
        log.append(f"prune: {len(g.variables)} variables, {len(g.factors)} factors")
        log.extend(f"prune: {n}" for n in notes)
    cyc = find_cycles(g)
    if not cyc.is_tree:
        log.append("graph has cycles: " + " - ".join(cyc.cycle))
        partition = None
        if opts.cluster == "auto":
            partition = default_clustering(net, g)
        elif not isinstance(opts.cluster, str):
            partition = [list(grp) for grp in opts.cluster if all(g.has_factor(f) for f in grp)]
        if partition is not None:
            g = cluster(g, partition, keep=targets)
            cyc = find_cycles(g)
            log.append(f"cluster: {len(g.factors)} factors, {'acyclic' if cyc.is_tree else 'still cyclic'}")
        if not cyc.is_tree:
            tags.add("superset-possible")
    return g


def decode_mp(net: Network, obs: Observation | None, targets: Sequence[str] | None = None,
              opts: DecodeOptions | None = None) -> DecodeResult:
    """Decode by message passing: supports for deterministic codes, posteriors otherwise."""
    opts = opts or DecodeOptions()
    targets = _default_targets(net, targets)
    log: list[str] = []
    tags: set[str] = set()
    g = prepare_graph(net, obs, targets, opts, log, tags)
    ops = OpCounter()
    if net.deterministic:
        supports, report = run_support(g, opts.schedule, ops, opts.set_guard, opts.table_guard)
        if report.over_approximated:
            tags.add("superset-possible")
        log.append(f"support passing: {report.mode}, {report.messages} messages")
        result = DecodeResult({}, ops, log, report, tags, g)
        try:
            decoded = extract_decode(supports, targets)
        except DecodeFailure as exc:
            log.append(f"contradiction: {exc}")
            for t in targets:
                result.targets[t] = TargetResult(t, "contradiction")
            return result
        for t in targets:
            d = decoded[t]
            if isinstance(d, AmbiguousCoset):
                result.targets[t] = TargetResult(t, "ambiguous", d.coset.rep, d.coset)
            else:
                result.targets[t] = TargetResult(t, "decoded", d, Coset.point(net.field, d))
        return result

    beliefs, report = run(g, opts.schedule, opts.table_guard)
    ops.messages += report.messages
    ops.iterations += report.iterations
    log.append(f"sum-product: {report.mode}, {report.messages} messages")
    result = DecodeResult({}, ops, log, report, tags, g)
    q, n = net.field.q, net.dim
    for t in targets:
        b = beliefs[t]
        if not b.any():
            result.targets[t] = TargetResult(t, "contradiction", posterior=b)
            continue
        best = index_vector(int(np.argmax(b)), q, n)
        status = "decoded" if np.count_nonzero(b > 0) == 1 else "ambiguous"
        result.targets[t] = TargetResult(t, status, best, None, b)
    return result


# --------------------------------------------------------------------------
# Gaussian elimination baseline

def _target_rows(net: Network, targets: Sequence[str]) -> dict[str, tuple[int, ...]]:
    K = len(net.sources)
    out = {}
    links = [t for t in targets if net.has_link(t)]
    rows = dict(zip(links, global_transfer_matrix(net, links))) if links else {}
    for t in targets:
        if net.has_source(t):
            i = net.source_ids.index(t)
            out[t] = tuple(int(i == j) for j in range(K))
        else:
            out[t] = rows[t]
    return out


def decode_gaussian(net: Network, obs: Observation, targets: Sequence[str] | None = None) -> DecodeResult:
    """Solve ``A x = y`` by elimination and project the solution set onto each target.

    Only the solve is counted, not the construction of ``A``.
    """
    targets = _default_targets(net, targets)
    F, n = net.field, net.dim
    obs_links = obs.links if obs is not None else ()
    A = global_transfer_matrix(net, obs_links)
    B = [tuple(v) for _, v in obs.values] if obs is not None else []
    K = len(net.sources)
    ops = OpCounter()
    res = solve_system(F, A, B, ops, ncols=K) if A else (tuple((0,) * n for _ in range(K)), Subspace.full(F, K))
    result = DecodeResult({}, ops, [f"gaussian: {len(A)} x {K} system"])
    if res is None:
        for t in targets:
            result.targets[t] = TargetResult(t, "contradiction")
        return result
    X0, kernel = res
    for t, g_row in _target_rows(net, targets).items():
        rep: Vector = (0,) * n
        for c, x in zip(g_row, X0):
            if c:
                rep = vec_add(F, rep, vec_scale(F, c, x))
        # each coordinate is solved independently; the kernel moves the target iff g . b != 0
        free = any(sum_products(F, g_row, b) for b in kernel.basis)
        space = Subspace.full(F, n) if free else Subspace.zero(F, n)
        coset = Coset.make(rep, space)
        status = "decoded" if coset.dim == 0 else "ambiguous"
        result.targets[t] = TargetResult(t, status, coset.rep, coset)
    return result


def sum_products(F: FieldSpec, a: Sequence[int], b: Sequence[int]) -> int:
    acc = 0
    for x, y in zip(a, b):
        if x and y:
            acc = F.add(acc, F.mul(x, y))
    return acc


def same_solution(a: DecodeResult, b: DecodeResult) -> bool:
    """Per-target solution sets agree (both contradictions count as agreement)."""
    if a.contradiction or b.contradiction:
        return a.contradiction and b.contradiction
    if set(a.targets) != set(b.targets):
        return False
    return all(a.targets[t].coset == b.targets[t].coset for t in a.targets)


# --------------------------------------------------------------------------
# brute-force oracles

def _source_grid(net: Network, guard: int) -> dict[str, np.ndarray]:
    K, q, n = len(net.sources), net.field.q, net.dim
    total = q ** (n * K)
    if total > guard:
        raise CapacityError(f"{total} source assignments exceed guard {guard}")
    idx = np.arange(total, dtype=np.int64)
    out = {}
    A = q**n
    for s in reversed(net.source_ids):
        sym = idx % A
        idx = idx // A
        digits = np.empty((total, n), dtype=np.int64)
        for k in range(n - 1, -1, -1):
            digits[:, k] = sym % q
            sym = sym // q
        out[s] = digits
    return {s: out[s] for s in net.source_ids}


def _sym_index(a: np.ndarray, q: int) -> np.ndarray:
    idx = np.zeros(a.shape[0], dtype=np.int64)
    for k in range(a.shape[1]):
        idx = idx * q + a[:, k]
    return idx


def _enumerate_weights(net: Network, obs: Observation | None, guard: int) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Symbol indices of every variable over all joint assignments, and their weights.

    Sources are uniform; each stochastic link multiplies the assignment count
    by the alphabet size and weights by its channel probability.
    """
    q, n, A = net.field.q, net.dim, net.alphabet_size
    n_stoch = len(net.channels)
    total = q ** (n * len(net.sources)) * A**n_stoch
    if total > guard:
        raise CapacityError(f"{total} joint assignments exceed guard {guard}")
    grid = _source_grid(net, guard)
    sym = {s: _sym_index(v, q) for s, v in grid.items()}
    N = next(iter(sym.values())).shape[0] if sym else 1
    weight = np.ones(N)
    F = net.field
    for lid in net.topological_links():
        if lid in net.channels:
            reps = A
            sym = {k: np.repeat(v, reps) for k, v in sym.items()}
            weight = np.repeat(weight, reps)
            out = np.tile(np.arange(A, dtype=np.int64), N)
            N *= reps
            probs = net.channels[lid].probs
            weight = weight * probs[tuple(sym[e] for e in net.inc(lid)) + (out,)]
            sym[lid] = out
        else:
            acc = np.zeros((N, n), dtype=np.int64)
            for e in net.inc(lid):
                c = net.coef(lid, e)
                if c:
                    acc = F.vadd(acc, F.vmul(np.int64(c), _digits_of(sym[e], q, n)))
            sym[lid] = _sym_index(acc, q)
    if obs is not None:
        for j, v in obs.values:
            weight = weight * (sym[j] == vector_index(v, q))
    return sym, weight


def _digits_of(idx: np.ndarray, q: int, n: int) -> np.ndarray:
    out = np.empty((idx.shape[0], n), dtype=np.int64)
    for k in range(n - 1, -1, -1):
        out[:, k] = idx % q
        idx = idx // q
    return out


def oracle_marginal_support(net: Network, obs: Observation | None, targets: Sequence[str] | None = None,
                            guard: int = ENUM_GUARD) -> dict[str, frozenset[Vector]]:
    """Target values consistent with the observations, found by visiting every assignment."""
    targets = _default_targets(net, targets)
    sym, weight = _enumerate_weights(net, obs, guard)
    q, n = net.field.q, net.dim
    keep = weight > 0
    return {t: frozenset(index_vector(int(i), q, n) for i in np.unique(sym[t][keep])) for t in targets}


def oracle_posterior(net: Network, obs: Observation | None, targets: Sequence[str] | None = None,
                     guard: int = ENUM_GUARD) -> dict[str, np.ndarray]:
    """Normalised posterior marginals of the targets (all zeros if the observation is impossible)."""
    targets = _default_targets(net, targets)
    sym, weight = _enumerate_weights(net, obs, guard)
    A = net.alphabet_size
    out = {}
    for t in targets:
        m = np.bincount(sym[t], weights=weight, minlength=A)
        z = m.sum()
        out[t] = m / z if z > 0 else m
    return out


# --------------------------------------------------------------------------
# chain benchmark

@dataclass(frozen=True)
class BenchRow:
    K: int
    mp_mul: int
    mp_add: int
    mp_msgs: int
    ge_mul: int
    ge_add: int
    agree: bool = True

    @property
    def mp_ops(self) -> int:
        return self.mp_mul + self.mp_add

    @property
    def ge_ops(self) -> int:
        return self.ge_mul + self.ge_add


def invertible_chain(K: int, F: FieldSpec, seed: int, max_tries: int = 1000) -> Network:
    """Chain topology with a random nonzero code whose transfer matrix is invertible."""
    base = chain(K, F)
    sink = base.sinks["t"]
    for r in range(max_tries):
        sub = int(np.random.SeedSequence([seed, K, r]).generate_state(1)[0])
        net = random_code(base, F, seed=sub)
        if rank(F, global_transfer_matrix(net, sink)) == K:
            return net
    raise RuntimeError(f"no invertible chain code found for K={K} after {max_tries} tries")


def bench_chain(Ks: Sequence[int] = (4, 8, 16, 32), field: FieldSpec | None = None, seed: int = 0,
                repetitions: int = 1) -> list[BenchRow]:
    """Operation counts of clustered support passing versus elimination on the chain.

    Counters are averaged (rounded down) over ``repetitions`` random codes.
    """
    F = field or FieldSpec(2, 4)
    rows = []
    for K in Ks:
        if K < 2:
            raise ValueError("K must be >= 2")
        tot = np.zeros(5, dtype=np.int64)
        agree = True
        for rep in range(repetitions):
            net = invertible_chain(K, F, seed * 1000 + rep)
            rng = np.random.default_rng([seed, K, rep])
            src = {s: tuple(int(x) for x in rng.integers(0, F.q, net.dim)) for s in net.source_ids}
            obs = observe(net, "t", encode(net, src))
            mp = decode_mp(net, obs)
            ge = decode_gaussian(net, obs)
            agree &= same_solution(mp, ge) and all(mp.targets[s].value == src[s] for s in src)
            tot += [mp.counters.mul, mp.counters.add, mp.counters.messages, ge.counters.mul, ge.counters.add]
        tot //= repetitions
        rows.append(BenchRow(K, *(int(x) for x in tot), agree=agree))
    return rows


BENCH_HEADER = "K,mp_mul,mp_add,mp_msgs,ge_mul,ge_add"


def format_bench_csv(rows: Sequence[BenchRow]) -> str:
    lines = [BENCH_HEADER]
    lines += [f"{r.K},{r.mp_mul},{r.mp_add},{r.mp_msgs},{r.ge_mul},{r.ge_add}" for r in rows]
    return "\n".join(lines) + "\n"


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
