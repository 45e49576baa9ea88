"""``netcode-mp`` command line: validate, encode, decode, graph, bench.

Exit codes: 0 success, 1 validation or decode failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .decoder import (
    DecodeOptions,
    bench_chain,
    decode_gaussian,
    decode_mp,
    format_bench_csv,
    oracle_marginal_support,
    same_solution,
)
from .factorgraph import CapacityError, build_ncfg, cluster, default_clustering, find_cycles, prune, simplify
from .galois import FieldError, FieldSpec, format_vector, index_vector, parse_vector
from .network import (
    Network,
    NetworkError,
    Observation,
    encode,
    encode_stochastic,
    load_network,
    parse_observations,
    validate,
)
from .sumprod import Schedule
from .topologies import butterfly, chain, relay, with_field

STAGES = ("raw", "simplified", "pruned", "clustered")


class UsageError(Exception):
    pass


def _csv(text: str) -> list[str]:
    return [t for t in text.split(",") if t]


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in _csv(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _field(text: str) -> FieldSpec:
    try:
        return FieldSpec.parse(text)
    except (FieldError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netcode-mp", description="Decode network codes by message passing.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, net_required=True):
        src = sp.add_mutually_exclusive_group(required=net_required)
        src.add_argument("--net", help="network description file")
        src.add_argument("--topology", choices=("butterfly", "relay", "chain"), help="built-in network instead of --net")
        sp.add_argument("--K", type=_ints, default=[4], help="chain length for --topology chain (first value)")
        sp.add_argument("--field", type=_field, help="override the network's field, e.g. GF(2^4)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("validate", help="check a network file")
    common(sp)

    sp = sub.add_parser("encode", help="print the symbol on every link")
    common(sp)
    sp.add_argument("--source", action="append", default=[], metavar="ID=VEC", help="source value, e.g. s1=1,0")
    sp.add_argument("--sources", metavar="PATH", help="file with lines 'ID = VEC'")

    def pipeline(sp):
        sp.add_argument("--obs", help="observation file (lines 'obs LINK = VEC')")
        sp.add_argument("--observe", action="append", default=[], metavar="LINK=VEC")
        sp.add_argument("--sink", help="sink whose observations are used")
        sp.add_argument("--targets", type=_csv, default=[], help="comma-separated variable ids (default: all sources)")
        sp.add_argument("--no-prune", action="store_true")
        sp.add_argument("--no-simplify", action="store_true")
        sp.add_argument("--cluster", default="auto", help="auto, off, or a file with one group of factor ids per line")
        sp.add_argument("--schedule", choices=("auto", "two-pass", "flooding"), default="auto")
        sp.add_argument("--max-iterations", type=int, default=1000)

    sp = sub.add_parser("decode", help="decode sources from a sink's observations")
    common(sp)
    pipeline(sp)
    sp.add_argument("--baseline", action="store_true", help="also run Gaussian elimination and compare")
    sp.add_argument("--oracle", action="store_true", help="cross-check against brute-force enumeration")

    sp = sub.add_parser("graph", help="export the factor graph after a transform stage")
    common(sp)
    pipeline(sp)
    sp.add_argument("--stage", default="raw", help="raw, simplified, pruned or clustered")

    sp = sub.add_parser("bench", help="operation counts on the chain network")
    sp.add_argument("--topology", choices=("chain",), default="chain")
    sp.add_argument("--K", type=_ints, default=[4, 8, 16, 32])
    sp.add_argument("--field", type=_field, default=FieldSpec(2, 4))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--out")
    return p


# --------------------------------------------------------------------------
# helpers

def _load(args) -> Network:
    if args.net:
        net = load_network(args.net)
    elif args.topology == "butterfly":
        net = butterfly()
    elif args.topology == "relay":
        net = relay()
    else:
        net = chain(args.K[0])
    if args.field is not None:
        net = with_field(net, args.field)
    return net


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _parse_sources(args, net: Network) -> dict[str, tuple[int, ...]]:
    pairs: list[tuple[str, str]] = []
    if args.sources:
        for raw in _read(args.sources).splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("src "):
                line = line[4:]
            if "=" not in line:
                raise NetworkError(f"bad source line {raw!r}")
            k, v = line.split("=", 1)
            pairs.append((k.strip(), v.strip()))
    for item in args.source:
        if "=" not in item:
            raise UsageError(f"--source expects ID=VEC, got {item!r}")
        k, v = item.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    src = {}
    for k, v in pairs:
        if not net.has_source(k):
            raise NetworkError(f"unknown source {k!r}")
        src[k] = parse_vector(v, net.field, net.dim)
    return src


def _observation(args, net: Network, require_values: bool = True) -> Observation:
    if args.obs:
        obs = parse_observations(_read(args.obs), net, args.sink)
    else:
        vals = []
        for item in args.observe:
            if "=" not in item:
                raise UsageError(f"--observe expects LINK=VEC, got {item!r}")
            k, v = item.split("=", 1)
            if not net.has_link(k.strip()):
                raise NetworkError(f"observation on unknown link {k.strip()!r}")
            vals.append((k.strip(), parse_vector(v, net.field, net.dim)))
        obs = Observation(args.sink or "sink", tuple(vals))
    if not obs.values and args.sink:
        if args.sink not in net.sinks:
            raise NetworkError(f"unknown sink {args.sink!r}")
        if require_values:
            raise UsageError("decode needs observed values (--obs or --observe)")
        # structure only: the graph does not depend on observed values
        obs = Observation(args.sink, tuple((j, (0,) * net.dim) for j in net.sinks[args.sink]))
    return obs


def _options(args) -> DecodeOptions:
    if args.cluster in ("auto", "off"):
        clus = args.cluster
    else:
        clus = [line.split() for line in _read(args.cluster).splitlines() if line.split() and not line.startswith("#")]
    sched = Schedule(args.schedule, args.max_iterations, seed=args.seed)
    return DecodeOptions(prune=not args.no_prune, simplify=not args.no_simplify, cluster=clus, schedule=sched)


# --------------------------------------------------------------------------
# commands

def cmd_validate(args) -> tuple[list[str], int]:
    net = _load(args)
    diags = validate(net)
    if not diags:
        return [f"valid: {len(net.sources)} sources, {len(net.links)} links, {net.field}^{net.dim}"], 0
    return [str(d) for d in diags], 1


def cmd_encode(args) -> tuple[list[str], int]:
    net = _load(args)
    src = _parse_sources(args, net)
    if net.deterministic:
        sym = encode(net, src)
    else:
        sym = encode_stochastic(net, src, seed=args.seed)
    return [f"link={l} value={format_vector(sym[l])}" for l in net.link_ids], 0


def cmd_decode(args) -> tuple[list[str], int]:
    net = _load(args)
    obs = _observation(args, net)
    opts = _options(args)
    targets = args.targets or None
    res = decode_mp(net, obs, targets, opts)
    lines = res.lines()
    lines += [f"log={entry}" for entry in res.log]
    if res.tags:
        lines.append("tags=" + ",".join(sorted(res.tags)))
    code = 1 if res.contradiction else 0
    if args.baseline:
        if not net.deterministic:
            lines.append("baseline=skipped (stochastic network)")
        else:
            ge = decode_gaussian(net, obs, targets)
            agree = same_solution(res, ge)
            lines.append(f"baseline={'agree' if agree else 'disagree'} ge_mul={ge.counters.mul} ge_add={ge.counters.add}")
            code = code or (0 if agree else 1)
    if args.oracle:
        try:
            want = oracle_marginal_support(net, obs, list(res.targets))
        except CapacityError as exc:
            lines.append(f"oracle=skipped ({exc})")
        else:
            ok = True
            for t, r in res.targets.items():
                got = frozenset(r.coset.elements()) if r.coset is not None else (frozenset() if r.status == "contradiction" else None)
                if got is None and r.posterior is not None:
                    got = frozenset(tuple(v) for v in _positive(net, r.posterior))
                exact = not res.tags
                ok &= (got == want[t]) if exact else (got is not None and got >= want[t])
            lines.append(f"oracle={'agree' if ok else 'disagree'}")
            code = code or (0 if ok else 1)
    return lines, code


def _positive(net: Network, belief):
    return [index_vector(i, net.field.q, net.dim) for i in range(len(belief)) if belief[i] > 0]


def cmd_graph(args) -> tuple[list[str], int]:
    if args.stage not in STAGES:
        raise UsageError(f"unknown stage {args.stage!r}; choose from {', '.join(STAGES)}")
    net = _load(args)
    obs = _observation(args, net, require_values=False)
    targets = args.targets or list(net.source_ids)
    g = build_ncfg(net, obs)
    if args.stage in ("simplified", "pruned", "clustered") and not args.no_simplify:
        g = simplify(g)
    if args.stage in ("pruned", "clustered") and not args.no_prune:
        g = prune(g, targets)
    if args.stage == "clustered":
        g = _cluster_stage(net, g, targets, _options(args))
    return g.export().splitlines(), 0


def _cluster_stage(net: Network, g, targets: list[str], opts: DecodeOptions):
    if find_cycles(g).is_tree or opts.cluster == "off":
        return g
    partition = default_clustering(net, g) if opts.cluster == "auto" else opts.cluster
    return cluster(g, partition, keep=targets)


def cmd_bench(args) -> tuple[list[str], int]:
    if any(k < 2 for k in args.K):
        raise UsageError("--K values must be >= 2")
    rows = bench_chain(args.K, args.field, args.seed, args.reps)
    code = 0 if all(r.agree for r in rows) else 1
    return format_bench_csv(rows).splitlines(), code


COMMANDS = {"validate": cmd_validate, "encode": cmd_encode, "decode": cmd_decode, "graph": cmd_graph, "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        lines, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"netcode-mp: error: {exc}", file=sys.stderr)
        return 2
    except (NetworkError, FieldError, CapacityError, ValueError, KeyError) as exc:
        print(f"netcode-mp: {exc}", file=sys.stderr)
        return 1
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
