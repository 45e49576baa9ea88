"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import itertools
import time
from dataclasses import replace

import numpy as np

from netcode_mp.decoder import (
    bench_chain,
    decode_gaussian,
    decode_mp,
    invertible_chain,
    loglog_slope,
    oracle_marginal_support,
    oracle_posterior,
    same_solution,
)
from netcode_mp.factorgraph import build_ncfg, cluster, default_clustering, find_cycles, prune, simplify
from netcode_mp.galois import Coset, FieldSpec, rank
from netcode_mp.network import ChannelTable, encode, encode_stochastic, global_transfer_matrix, observe, symmetric_channel
from netcode_mp.sumprod import Schedule, propagate, run
from netcode_mp.support import EMPTY, SupportAlgebra, equivalence_check, run_support
from netcode_mp.topologies import butterfly, chain, random_network

from conftest import FIXTURES, random_sources, record

TREE_FIELDS = [FieldSpec(2), FieldSpec(3), FieldSpec(2, 2), FieldSpec(2, 4)]
ENUM_GUARD = 2**20

# coset-closure tallies gathered while criteria 1-3 run
CLOSURE = {"messages": 0, "violations": 0, "runs": 0}


def as_set(msg):
    return set() if msg is EMPTY else set(msg.elements())


def tally_closure(messages) -> None:
    CLOSURE["runs"] += 1
    for m in messages:
        CLOSURE["messages"] += 1
        if not (isinstance(m, Coset) or m is EMPTY):
            CLOSURE["violations"] += 1


def deterministic_instances(want_tree: bool, count: int, max_links: int = 10):
    """Random deterministic instances with q in {2,3,4,16}, n in {1,2}, filtered on NCFG shape."""
    seed = 0
    found = 0
    while found < count:
        seed += 1
        rng = np.random.default_rng([seed, int(want_tree)])
        F = TREE_FIELDS[seed % 4]
        n = 1 + (seed // 4) % 2
        max_sources = max(1, min(3, int(np.log2(ENUM_GUARD) // (n * np.log2(F.q)))))
        K = int(rng.integers(1, max_sources + 1))
        L = int(rng.integers(max(K, 2), max_links + 1))
        net = random_network(int(rng.integers(2**31)), F, n, K, L)
        obs = observe(net, "t", encode(net, random_sources(net, rng)))
        g = simplify(build_ncfg(net, obs))
        if find_cycles(g).is_tree != want_tree:
            continue
        found += 1
        yield net, obs, g


def test_criterion_1_tree_exactness():
    n_inst = mismatches = 0
    fields_seen, dims_seen = set(), set()
    for net, obs, g in deterministic_instances(True, 200):
        truth = oracle_marginal_support(net, obs, list(g.var_ids), ENUM_GUARD)
        supports, report = run_support(g)
        _, _, msgs = propagate(g, SupportAlgebra(g))
        tally_closure(msgs.values())
        tally_closure(supports.values())
        n_inst += 1
        fields_seen.add(net.field.q)
        dims_seen.add(net.dim)
        mismatches += sum(as_set(supports[v]) != truth[v] for v in truth)
    ok = n_inst >= 200 and mismatches == 0 and fields_seen == {2, 3, 4, 16} and dims_seen == {1, 2}
    record(1, "tree exactness", ok, f"{n_inst} acyclic instances, q in {sorted(fields_seen)}, {mismatches} mismatching supports")
    assert ok


def test_criterion_2_cyclic_convergence_and_soundness():
    n_inst = violations = 0
    strict = 0
    for net, obs, g in deterministic_instances(False, 100):
        truth = oracle_marginal_support(net, obs, list(g.var_ids), ENUM_GUARD)
        seen = []
        supports, report = run_support(g, Schedule("flooding", max_iterations=10_000),
                                       observer=lambda it, old, new: seen.extend(new.values()))
        tally_closure(seen)
        bound = net.dim * 2 * len(g.edges())
        sound = all(as_set(supports[v]) >= truth[v] for v in truth)
        strict += any(as_set(supports[v]) != truth[v] for v in truth)
        n_inst += 1
        violations += (not report.monotone) + (not report.converged) + (report.shrinkages > bound) + (not sound)
    ok = n_inst >= 100 and violations == 0
    record(2, "cyclic monotone convergence and soundness", ok,
           f"{n_inst} cyclic instances, {violations} violations, {strict} with strict supersets")
    assert ok


def test_criterion_3_sumproduct_support_equivalence():
    n_inst = divergences = checked = cyclic = 0
    seed = 0
    small = [FieldSpec(2), FieldSpec(3), FieldSpec(2, 2), FieldSpec(5)]
    while n_inst < 100:
        seed += 1
        rng = np.random.default_rng([seed, 3])
        F = small[seed % 4]
        n = 2 if F.q == 2 and seed % 2 else 1
        net = random_network(seed, F, n, int(rng.integers(1, 4)), int(rng.integers(2, 9)))
        g = simplify(build_ncfg(net, observe(net, "t", encode(net, random_sources(net, rng)))))
        seen = []
        propagate(g, SupportAlgebra(g), Schedule("flooding", 1000, 0.0, seed),
                  lambda it, old, new: seen.extend(new.values()))
        tally_closure(seen)
        rep = equivalence_check(g, seed=seed)
        n_inst += 1
        cyclic += not find_cycles(g).is_tree
        checked += rep.checked
        divergences += not rep.passed
    ok = n_inst >= 100 and divergences == 0
    record(3, "sum-product / support equivalence", ok,
           f"{n_inst} instances ({cyclic} cyclic), {checked} message comparisons, {divergences} divergences")
    assert ok


def test_criterion_4_coset_closure():
    if CLOSURE["runs"] == 0:  # run standalone: replay smaller versions of 1-3
        for _, _, g in itertools.islice(deterministic_instances(True, 20), 20):
            tally_closure(propagate(g, SupportAlgebra(g))[2].values())
        for _, _, g in itertools.islice(deterministic_instances(False, 10), 10):
            seen = []
            propagate(g, SupportAlgebra(g), Schedule("flooding"), lambda it, o, n: seen.extend(n.values()))
            tally_closure(seen)
    ok = CLOSURE["violations"] == 0 and CLOSURE["messages"] > 0
    record(4, "coset closure", ok, f"{CLOSURE['messages']} messages over {CLOSURE['runs']} runs, {CLOSURE['violations']} outside coset form")
    assert ok


def test_criterion_5_butterfly():
    net = butterfly()
    problems = []
    for sink in ("t1", "t2"):
        for a, b in itertools.product(range(2), repeat=2):
            src = {"s1": (a,), "s2": (b,)}
            obs = observe(net, sink, encode(net, src))
            if not find_cycles(build_ncfg(net, obs)).is_tree:
                problems.append(f"{sink} graph cyclic")
            if decode_mp(net, obs).values() != src:
                problems.append(f"{sink} failed on {a}{b}")
    obs = observe(net, "t1", encode(net, {"s1": (1,), "s2": (0,)}))
    pruned = prune(simplify(build_ncfg(net, obs)), ["s1", "s2"]).export()
    if pruned != (FIXTURES / "butterfly_t1_pruned.golden").read_text():
        problems.append("pruned t1 export differs from golden")
    ok = not problems
    record(5, "butterfly golden", ok, "cycle-free, 8/8 decodes, pruned export matches" if ok else "; ".join(problems))
    assert ok


def test_criterion_6_chain_clustering():
    problems = []
    fields = [FieldSpec(2, 4), FieldSpec(7), FieldSpec(2, 8)]
    for r in range(50):
        K = 2 + r % 15
        F = fields[r % 3]
        net = invertible_chain(K, F, seed=r)
        src = random_sources(net, np.random.default_rng([r, 6]))
        obs = observe(net, "t", encode(net, src))
        g = simplify(build_ncfg(net, obs))
        if find_cycles(g).is_tree:
            problems.append(f"K={K} NCFG unexpectedly acyclic")
        c = cluster(g, default_clustering(net, g), keep=net.source_ids)
        if not find_cycles(c).is_tree:
            problems.append(f"K={K} still cyclic after clustering")
        mp = decode_mp(net, obs)
        ge = decode_gaussian(net, obs)
        if not same_solution(mp, ge) or mp.values() != src or mp.tags:
            problems.append(f"K={K} r={r} decode mismatch")
    ok = not problems
    record(6, "chain clustering", ok, "50 invertible codes, K in 2..16, all equal to elimination" if ok else "; ".join(problems[:3]))
    assert ok


def test_criterion_7_complexity_separation():
    t0 = time.perf_counter()
    rows = bench_chain([4, 8, 16, 32], FieldSpec(2, 4), seed=0)
    elapsed = time.perf_counter() - t0
    Ks = [r.K for r in rows]
    mp_slope = loglog_slope(Ks, [r.mp_ops for r in rows])
    ge_slope = loglog_slope(Ks, [r.ge_ops for r in rows])
    last = rows[-1]
    ok = (0.8 <= mp_slope <= 1.3 and 2.5 <= ge_slope <= 3.3 and last.mp_ops < last.ge_ops
          and elapsed < 60 and all(r.agree for r in rows))
    record(7, "complexity separation", ok,
           f"mp slope {mp_slope:.2f}, gaussian slope {ge_slope:.2f}, K=32 mp {last.mp_ops} vs ge {last.ge_ops}, {elapsed:.1f}s")
    assert ok


def stochastic_instances(count: int):
    seed = 0
    found = 0
    while found < count:
        seed += 1
        rng = np.random.default_rng([seed, 8])
        F = [FieldSpec(2), FieldSpec(3), FieldSpec(2, 2)][seed % 3]
        n = 2 if F.q == 2 and seed % 4 == 0 else 1
        net = random_network(seed, F, n, int(rng.integers(1, 3)), int(rng.integers(2, 7)))
        channels = {}
        for l in net.link_ids:
            if rng.random() < 0.5:
                if rng.random() < 0.5:
                    channels[l] = symmetric_channel(net, l, float(rng.uniform(0.05, 0.45)))
                else:
                    A = net.alphabet_size
                    rows = (A,) * len(net.inc(l))
                    channels[l] = ChannelTable(l, rng.dirichlet(np.ones(A), size=rows))
        if not channels:
            continue
        net = replace(net, channels=channels)
        total = F.q ** (n * len(net.sources)) * net.alphabet_size ** len(channels)
        if total > 2**16:
            continue
        obs = observe(net, "t", encode_stochastic(net, random_sources(net, rng), seed=seed))
        g = build_ncfg(net, obs)
        if not find_cycles(g).is_tree:
            continue
        found += 1
        yield net, obs, g


def test_criterion_8_stochastic_posteriors():
    n_inst = 0
    worst = 0.0
    for net, obs, g in stochastic_instances(50):
        want = oracle_posterior(net, obs, list(g.var_ids), guard=2**16)
        beliefs, _ = run(g)
        worst = max(worst, max(float(np.abs(beliefs[v] - want[v]).max()) for v in want))
        res = decode_mp(net, obs)
        worst = max(worst, max(float(np.abs(res.targets[s].posterior - want[s]).max()) for s in net.source_ids))
        n_inst += 1
    ok = n_inst >= 50 and worst <= 1e-9
    record(8, "stochastic posterior exactness", ok, f"{n_inst} acyclic noisy instances, max abs error {worst:.1e}")
    assert ok


def test_criterion_9_singular_codes():
    n_inst = mismatches = skipped = 0
    seed = 0
    while n_inst < 50:
        seed += 1
        rng = np.random.default_rng([seed, 9])
        if seed % 3 == 0:
            F = [FieldSpec(2), FieldSpec(3)][seed % 2]
            net = chain(int(rng.integers(2, 7)), F)  # all-ones chain: o_i and m_i coincide
        else:
            F = TREE_FIELDS[seed % 4]
            net = random_network(seed, F, 1 + seed % 2, int(rng.integers(2, 5)), int(rng.integers(2, 10)),
                                 n_obs=int(rng.integers(1, 4)))
        A = global_transfer_matrix(net, net.sinks["t"])
        if rank(net.field, A) == len(net.sources):
            continue
        obs = observe(net, "t", encode(net, random_sources(net, rng)))
        mp = decode_mp(net, obs)
        if mp.tags:  # residual cycles: only a superset is promised
            skipped += 1
            continue
        ge = decode_gaussian(net, obs)
        n_inst += 1
        mismatches += not same_solution(mp, ge)
    ok = n_inst >= 50 and mismatches == 0
    record(9, "singular-code baseline agreement", ok,
           f"{n_inst} rank-deficient instances, {mismatches} coset mismatches, {skipped} skipped with residual cycles")
    assert ok
