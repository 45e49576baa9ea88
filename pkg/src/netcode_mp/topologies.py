"""Canned networks (butterfly, two-source relay, the staircase chain) and a
seeded random DAG generator used by tests and experiment scripts."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .galois import FieldSpec
from .network import Link, Network, Source, random_code

GF2 = FieldSpec(2)


def butterfly(field: FieldSpec = GF2, dim: int = 1, coefficients: dict | None = None) -> Network:
    """Two sources at a and b, coding node c, bottleneck c->d.

    Sink t1 (node f) sees l5 (= y1 relayed through e) and l8; sink t2 (node g)
    sees l6 (= y2) and l7.  All coefficients default to 1.
    """
    links = (
        Link("l1", "a", "c"), Link("l2", "b", "c"), Link("l3", "c", "d"),
        Link("l4", "a", "e"), Link("l5", "e", "f"), Link("l6", "b", "g"),
        Link("l7", "d", "g"), Link("l8", "d", "f"),
    )
    net = Network(field, dim, tuple("abcdefg"), (Source("s1", "a"), Source("s2", "b")), links,
                  sinks={"t1": ("l5", "l8"), "t2": ("l6", "l7")})
    if coefficients is None:
        coefficients = {(l.id, e): 1 for l in links for e in net.inc(l.id)}
    return net.with_coefficients(coefficients)


def relay(field: FieldSpec = GF2, coef_l3_s2: int = 0) -> Network:
    """Both sources at u; the receiver t observes l4 (via relay r) and l5.

    With ``coef_l3_s2 = 0`` the symbol on l3 is a function of s1 alone.
    """
    links = (Link("l3", "u", "r"), Link("l4", "r", "t"), Link("l5", "v", "t"),
             Link("l6", "u", "v"), Link("l7", "r", "v"))
    net = Network(field, 1, ("u", "r", "v", "t"), (Source("s1", "u"), Source("s2", "u")), links,
                  sinks={"t": ("l4", "l5")})
    coefs = {(l.id, e): 1 for l in links for e in net.inc(l.id)}
    coefs[("l3", "s2")] = coef_l3_s2
    return net.with_coefficients(coefs)


def chain(K: int, field: FieldSpec = GF2, dim: int = 1) -> Network:
    """Staircase network whose transfer matrix factors as B_{K-1} ... B_1.

    Node n_i mixes lane i (arriving on m_{i-1}, or source s1 at n_1) with the
    source s_{i+1}; it emits the finished lane i on o_i towards the sink t and
    the updated lane i+1 on m_i.  The last node emits o_{K-1} and o_K.
    Coefficients default to 1; use :func:`random_code` for a random code.
    """
    if K < 2:
        raise ValueError("chain needs K >= 2")
    nodes = tuple(f"n{i}" for i in range(1, K)) + ("t",)
    sources = [Source("s1", "n1")] + [Source(f"s{i + 1}", f"n{i}") for i in range(1, K)]
    links = []
    for i in range(1, K):
        links.append(Link(f"o{i}", f"n{i}", "t"))
        if i < K - 1:
            links.append(Link(f"m{i}", f"n{i}", f"n{i + 1}"))
        else:
            links.append(Link(f"o{K}", f"n{i}", "t"))
    net = Network(field, dim, nodes, tuple(sources), tuple(links),
                  sinks={"t": tuple(f"o{i}" for i in range(1, K + 1))})
    return net.with_coefficients({(l.id, e): 1 for l in links for e in net.inc(l.id)})


def random_network(seed: int, field: FieldSpec, dim: int = 1, n_sources: int = 2, n_links: int = 6,
                   n_obs: int | None = None, share_source_node: float = 0.3, new_node: float = 0.5) -> Network:
    """Random DAG with a random nonzero code and a single sink ``t``.

    ``n_obs`` of the links end at the sink node; the rest are placed between
    intermediate nodes.  Every link's tail already holds a source or an
    incoming link, so every symbol traces back to the sources.
    """
    rng = np.random.default_rng(seed)
    if n_obs is None:
        n_obs = int(rng.integers(1, n_sources + 2))
    n_obs = max(1, min(n_obs, n_links))
    order: list[str] = []
    sources = []
    for k in range(n_sources):
        if order and rng.random() < share_source_node:
            node = order[int(rng.integers(len(order)))]
        else:
            node = f"v{len(order)}"
            order.append(node)
        sources.append(Source(f"s{k + 1}", node))
    active = list(dict.fromkeys(s.node for s in sources))
    links = []
    for k in range(n_links - n_obs):
        tail = active[int(rng.integers(len(active)))]
        later = order[order.index(tail) + 1:]
        if not later or rng.random() < new_node:
            head = f"v{len(order)}"
            order.append(head)
        else:
            head = later[int(rng.integers(len(later)))]
        links.append(Link(f"l{k + 1}", tail, head))
        if head not in active:
            active.append(head)
    obs = []
    for k in range(n_links - n_obs, n_links):
        tail = active[int(rng.integers(len(active)))]
        links.append(Link(f"l{k + 1}", tail, "t"))
        obs.append(f"l{k + 1}")
    net = Network(field, dim, tuple(order) + ("t",), tuple(sources), tuple(links), sinks={"t": tuple(obs)})
    return random_code(net, field, seed=int(rng.integers(2**31)))


def with_field(net: Network, field: FieldSpec) -> Network:
    return replace(net, field=field)
