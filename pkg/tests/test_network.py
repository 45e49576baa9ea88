from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netcode_mp.galois import FieldSpec, matvec, rank, vec_add, vec_scale
from netcode_mp.network import (
    ChannelTable,
    Link,
    Network,
    NetworkError,
    ParseError,
    Source,
    dump_network,
    encode,
    encode_batch,
    encode_stochastic,
    global_transfer_matrix,
    load_network,
    parse_network,
    parse_observations,
    random_code,
    symmetric_channel,
    validate,
)
from netcode_mp.topologies import butterfly, chain, random_network

from conftest import FIXTURES, random_sources


def test_butterfly_fixture_matches_builtin():
    net = load_network(FIXTURES / "butterfly.net")
    assert validate(net) == []
    ref = butterfly()
    assert net.link_ids == ref.link_ids
    assert all(net.inc(l) == ref.inc(l) for l in net.link_ids)
    assert dict(net.coefficients) == dict(ref.coefficients)
    assert net.sinks == ref.sinks


def test_inc_lists_sources_then_links():
    net = butterfly()
    assert net.inc("l1") == ("s1",)
    assert net.inc("l3") == ("l1", "l2")
    assert chain(3).inc("m1") == ("s1", "s2")
    assert chain(3).inc("o2") == ("s3", "m1")


def test_butterfly_encoding():
    sym = encode(butterfly(), {"s1": (1,), "s2": (0,)})
    assert sym["l3"] == (1,)
    assert (sym["l5"], sym["l8"]) == ((1,), (1,))


def test_butterfly_transfer_matrix():
    net = butterfly()
    assert global_transfer_matrix(net, ["l5", "l8"]) == ((1, 0), (1, 1))
    for a in range(2):
        for b in range(2):
            sym = encode(net, {"s1": (a,), "s2": (b,)})
            assert matvec(net.field, ((1, 0), (1, 1)), (a, b)) == sym["l5"] + sym["l8"]


def test_identity_relay():
    net = Network(FieldSpec(3), 1, ("a", "b"), (Source("s", "a"),), (Link("l", "a", "b"),), {("l", "s"): 1})
    assert encode(net, {"s": (2,)})["l"] == (2,)
    assert global_transfer_matrix(net, ["l"]) == ((1,),)


def test_chain_transfer_factors_into_local_blocks():
    F = FieldSpec(5)
    K = 4
    net = random_code(chain(K, F), F, seed=3)
    A = global_transfer_matrix(net, [f"o{i}" for i in range(1, K + 1)])
    # lane i and source s_{i+1} are mixed at node n_i by a 2x2 block on rows (i, i+1)
    M = [tuple(int(r == c) for c in range(K)) for r in range(K)]
    for i in range(1, K):
        lane = "s1" if i == 1 else f"m{i - 1}"
        out2 = f"m{i}" if i < K - 1 else f"o{K}"
        blk = [[net.coef(f"o{i}", lane), net.coef(f"o{i}", f"s{i + 1}")],
               [net.coef(out2, lane), net.coef(out2, f"s{i + 1}")]]
        B = [list(int(r == c) for c in range(K)) for r in range(K)]
        for a in range(2):
            for b in range(2):
                B[i - 1 + a][i - 1 + b] = blk[a][b]
        assert sum(1 for row in B for x in row if x) <= K + 2
        M = [tuple(sum_mul(F, B[r], [M[k][c] for k in range(K)]) for c in range(K)) for r in range(K)]
    assert A == tuple(M)


def sum_mul(F, row, col):
    acc = 0
    for x, y in zip(row, col):
        acc = F.add(acc, F.mul(x, y))
    return acc


@given(st.integers(0, 10**6))
def test_encode_is_linear_and_matches_transfer_matrix(seed):
    F = [FieldSpec(2), FieldSpec(3), FieldSpec(2, 2), FieldSpec(2, 4)][seed % 4]
    net = random_network(seed, F, dim=1 + seed % 2, n_sources=3, n_links=7)
    rng = np.random.default_rng(seed)
    x, y = random_sources(net, rng), random_sources(net, rng)
    c = int(rng.integers(0, F.q))
    ex, ey = encode(net, x), encode(net, y)
    xy = {s: vec_add(F, x[s], y[s]) for s in x}
    cx = {s: vec_scale(F, c, x[s]) for s in x}
    exy, ecx = encode(net, xy), encode(net, cx)
    for l in net.link_ids:
        assert exy[l] == vec_add(F, ex[l], ey[l])
        assert ecx[l] == vec_scale(F, c, ex[l])
    obs = net.sinks["t"]
    A = global_transfer_matrix(net, obs)
    for k in range(net.dim):
        col = tuple(x[s][k] for s in net.source_ids)
        assert matvec(F, A, col) == tuple(ex[j][k] for j in obs)


def test_encode_batch_matches_encode():
    F = FieldSpec(3)
    net = random_network(11, F, dim=2, n_sources=2, n_links=6)
    rng = np.random.default_rng(0)
    rows = [random_sources(net, rng) for _ in range(20)]
    batch = encode_batch(net, {s: np.array([r[s] for r in rows]) for s in net.source_ids})
    for i, r in enumerate(rows):
        sym = encode(net, r)
        for l in net.link_ids:
            assert tuple(int(v) for v in batch[l][i]) == sym[l]


def test_encode_requires_every_source():
    with pytest.raises(NetworkError, match="s2"):
        encode(butterfly(), {"s1": (1,)})


def test_validate_reports_cycle_with_witness():
    net = load_network(FIXTURES / "cycle.net")
    diags = validate(net)
    cyc = [d for d in diags if d.kind == "cycle"]
    assert cyc and set(cyc[0].subjects) == {"l1", "l2"}


def test_validate_coefficient_domain():
    net = butterfly()
    bad = net.with_coefficients({**net.coefficients, ("l5", "s2"): 1})
    assert any(d.kind == "coefficient-domain" for d in validate(bad))


def test_validate_disconnected_observation():
    net = Network(FieldSpec(2), 1, ("a", "b", "t"), (Source("s", "a"),),
                  (Link("l1", "a", "t"), Link("l2", "b", "t")), {("l1", "s"): 1},
                  zero_links=frozenset({"l2"}), sinks={"t": ("l1", "l2")})
    assert [d.kind for d in validate(net)] == ["disconnected"]


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as exc:
        load_network(FIXTURES / "bad_directive.net")
    assert exc.value.lineno == 5
    with pytest.raises(ParseError, match="out of order"):
        parse_network("field GF(2)\nnode a\ndim 1\n")
    with pytest.raises(ParseError, match="outside"):
        parse_network("field GF(2)\nnode a b\nsource s @ a\nlink l a b\ncoef l s 2\n")


def test_dump_parse_roundtrip():
    net = random_code(chain(5, FieldSpec(7)), seed=1)
    back = parse_network(dump_network(net))
    assert dump_network(back) == dump_network(net)
    assert global_transfer_matrix(back, back.sinks["t"]) == global_transfer_matrix(net, net.sinks["t"])


def test_observation_parsing():
    net = butterfly()
    obs = parse_observations((FIXTURES / "butterfly_t1.obs").read_text(), net)
    assert obs.sink == "t1"
    assert obs.as_dict() == {"l5": (1,), "l8": (1,)}
    with pytest.raises(ParseError):
        parse_observations("obs l99 = 1\n", net)


def test_random_code_deterministic_and_nonzero():
    F = FieldSpec(2, 4)
    a, b = random_code(butterfly(F), F, seed=5), random_code(butterfly(F), F, seed=5)
    assert dict(a.coefficients) == dict(b.coefficients)
    assert all(c != 0 for c in a.coefficients.values())
    assert set(random_code(chain(2), seed=9).coefficients.values()) == {1}


def test_random_gf16_butterfly_mostly_invertible():
    F = FieldSpec(2, 4)
    ok = 0
    for seed in range(100):
        net = random_code(butterfly(F), F, seed=seed)
        ok += all(rank(F, global_transfer_matrix(net, net.sinks[t])) == 2 for t in ("t1", "t2"))
    assert ok >= 85


def test_degenerate_channels_reproduce_encode():
    F = FieldSpec(3)
    net = random_network(4, F, dim=1, n_sources=2, n_links=5)
    src = random_sources(net, np.random.default_rng(1))
    noisy = replace(net, channels={l: symmetric_channel(net, l, 0.0) for l in net.link_ids})
    assert encode_stochastic(noisy, src, seed=123) == encode(net, src)


def test_flip_rate_half():
    net = Network(FieldSpec(2), 1, ("a", "b"), (Source("s", "a"),), (Link("l", "a", "b"),), {("l", "s"): 1})
    noisy = replace(net, channels={"l": symmetric_channel(net, "l", 0.5)})
    flips = sum(encode_stochastic(noisy, {"s": (0,)}, seed=k)["l"] != (0,) for k in range(10_000))
    assert abs(flips / 10_000 - 0.5) <= 0.02


def test_stochastic_encoding_is_seeded():
    net = load_network(FIXTURES / "stochastic.net")
    runs = {tuple(encode_stochastic(net, {"s1": (1,)}, seed=7).items()) for _ in range(3)}
    assert len(runs) == 1
    with pytest.raises(NetworkError):
        encode(net, {"s1": (1,)})
    with pytest.raises(NetworkError):
        global_transfer_matrix(net, ["l2"])


def test_channel_table_validation():
    with pytest.raises(NetworkError, match="summing"):
        ChannelTable("l", np.array([[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(NetworkError, match="negative"):
        ChannelTable("l", np.array([[1.5, -0.5], [0.5, 0.5]]))
