"""Decoding network codes by message passing on their factor graphs."""

from .galois import Coset, FieldSpec, OpCounter, Subspace
from .network import Network, encode, load_network, observe, parse_network, validate
from .factorgraph import build_ncfg, cluster, default_clustering, find_cycles, prune, simplify
from .sumprod import Schedule, run
from .support import extract_decode, run_support
from .decoder import DecodeOptions, bench_chain, decode_gaussian, decode_mp, oracle_marginal_support

__all__ = [
    "Coset", "FieldSpec", "OpCounter", "Subspace",
    "Network", "encode", "load_network", "observe", "parse_network", "validate",
    "build_ncfg", "cluster", "default_clustering", "find_cycles", "prune", "simplify",
    "Schedule", "run", "extract_decode", "run_support",
    "DecodeOptions", "bench_chain", "decode_gaussian", "decode_mp", "oracle_marginal_support",
]
__version__ = "0.1.0"
