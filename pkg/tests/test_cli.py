from netcode_mp.cli import main
from netcode_mp.factorgraph import Factor, FactorGraph, LinearConstraint, Variable, find_cycles
from netcode_mp.galois import FieldSpec

from conftest import FIXTURES


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_exit_codes(capsys):
    assert run_cli(capsys, "validate", "--net", FIXTURES / "butterfly.net")[0] == 0
    code, out, _ = run_cli(capsys, "validate", "--net", FIXTURES / "cycle.net")
    assert code == 1 and "l1" in out and "l2" in out
    code, _, err = run_cli(capsys, "validate", "--net", FIXTURES / "bad_directive.net")
    assert code == 1 and "line 5" in err


def test_encode_identity_relay(capsys, tmp_path):
    net = tmp_path / "relay.net"
    net.write_text("field GF(2)\ndim 1\nnode a b\nsource s @ a\nlink l1 a b\ncoef l1 s 1\n")
    code, out, _ = run_cli(capsys, "encode", "--net", net, "--source", "s=1")
    assert code == 0 and out == "link=l1 value=1\n"


def test_encode_matches_golden(capsys):
    code, out, _ = run_cli(capsys, "encode", "--net", FIXTURES / "butterfly.net", "--source", "s1=1", "--source", "s2=0")
    assert code == 0
    assert out == (FIXTURES / "butterfly_encode_10.golden").read_text()
    code, out2, _ = run_cli(capsys, "encode", "--net", FIXTURES / "butterfly.net", "--sources", FIXTURES / "butterfly_sources.txt")
    assert out2 == out


def test_encode_missing_source(capsys):
    code, _, err = run_cli(capsys, "encode", "--net", FIXTURES / "butterfly.net", "--source", "s1=1")
    assert code == 1 and "s2" in err


def test_stochastic_encode_is_reproducible(capsys):
    args = ("encode", "--net", FIXTURES / "stochastic.net", "--source", "s1=2", "--seed", "11")
    first = run_cli(capsys, *args)[1]
    assert all(run_cli(capsys, *args)[1] == first for _ in range(3))


def test_decode_butterfly(capsys):
    code, out, _ = run_cli(capsys, "decode", "--net", FIXTURES / "butterfly.net", "--obs", FIXTURES / "butterfly_t1.obs",
                           "--baseline", "--oracle")
    assert code == 0
    lines = out.splitlines()
    assert "target=s1 status=decoded value=1 ambiguity_dim=0" in lines
    assert "target=s2 status=decoded value=0 ambiguity_dim=0" in lines
    assert any(l.startswith("baseline=agree") for l in lines)
    assert "oracle=agree" in lines
    for key in ("iterations", "converged", "max_residual", "contradiction"):
        assert any(l.startswith(key + "=") for l in lines)


def test_decode_tampered_is_a_contradiction(capsys):
    code, out, _ = run_cli(capsys, "decode", "--net", FIXTURES / "repetition.net", "--obs", FIXTURES / "repetition.obs")
    assert code == 0 and "target=s1 status=decoded value=1 ambiguity_dim=0" in out
    code, out, _ = run_cli(capsys, "decode", "--net", FIXTURES / "repetition.net", "--obs", FIXTURES / "repetition_tampered.obs")
    assert code == 1 and "status=contradiction" in out and "contradiction=true" in out


def test_decode_underdetermined(capsys):
    code, out, _ = run_cli(capsys, "decode", "--net", FIXTURES / "butterfly.net", "--obs", FIXTURES / "butterfly_t1_partial.obs",
                           "--baseline")
    assert code == 0
    assert "target=s2 status=ambiguous value=0 ambiguity_dim=1" in out
    assert "baseline=agree" in out


def test_decode_cluster_file_and_off(capsys, tmp_path):
    groups = tmp_path / "groups.txt"
    groups.write_text("phi_o1 phi_m1\nphi_o2 phi_o3\n")
    base = ("decode", "--net", FIXTURES / "chain3.net", "--observe", "o1=1", "--observe", "o2=0", "--observe", "o3=0",
            "--targets", "s3")
    code, out, _ = run_cli(capsys, *base, "--cluster", groups, "--baseline")
    assert code == 0 and "baseline=agree" in out and "superset-possible" not in out
    code, out, _ = run_cli(capsys, *base, "--cluster", "off")
    assert code == 0 and "tags=superset-possible" in out


def test_decode_stochastic_prints_posterior(capsys):
    code, out, _ = run_cli(capsys, "decode", "--net", FIXTURES / "stochastic.net", "--sink", "t", "--observe", "l2=1", "--oracle")
    assert code == 0 and "posterior=s1:" in out and "oracle=agree" in out


def test_graph_stages(capsys):
    args = ("graph", "--net", FIXTURES / "butterfly.net", "--sink", "t1")
    raw1 = run_cli(capsys, *args, "--stage", "raw")[1]
    raw2 = run_cli(capsys, *args, "--stage", "raw")[1]
    assert raw1 == raw2
    pruned = run_cli(capsys, *args, "--stage", "pruned")[1]
    assert pruned == (FIXTURES / "butterfly_t1_pruned.golden").read_text()
    assert set(raw1.splitlines()) - set(pruned.splitlines()) == {
        "var l6 GF(2)^1", "var l7 GF(2)^1", "factor phi_l6 linear", "factor phi_l7 linear",
        "edge phi_l6 l6", "edge phi_l6 s2", "edge phi_l7 l7", "edge phi_l7 l3",
    }
    code, _, err = run_cli(capsys, *args, "--stage", "sideways")
    assert code == 2 and "stage" in err


def parse_export(text):
    """Rebuild a bare graph from the export text so the cycle test runs on what was printed."""
    F = FieldSpec(2)
    variables, factors, edges = [], [], {}
    for line in text.splitlines():
        kind, *rest = line.split()
        if kind == "var":
            variables.append(Variable(rest[0], F, 1))
        elif kind == "factor":
            factors.append(rest[0])
        else:
            edges.setdefault(rest[0], []).append(rest[1])
    fs = tuple(Factor(f, LinearConstraint(edges[f][0], tuple((v, 1) for v in edges[f][1:]))) for f in factors)
    return FactorGraph(tuple(variables), fs)


def test_graph_chain_clustered_is_acyclic(capsys):
    args = ("graph", "--net", FIXTURES / "chain3.net", "--sink", "t")
    raw = run_cli(capsys, *args, "--stage", "raw")[1]
    clustered = run_cli(capsys, *args, "--stage", "clustered")[1]
    assert not find_cycles(parse_export(raw)).is_tree
    assert find_cycles(parse_export(clustered)).is_tree
    assert "cluster" in clustered


def test_bench_csv(capsys, tmp_path):
    out = tmp_path / "bench.csv"
    code, _, _ = run_cli(capsys, "bench", "--K", "2,4", "--field", "GF(16)", "--out", out)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "K,mp_mul,mp_add,mp_msgs,ge_mul,ge_add"
    assert [l.split(",")[0] for l in lines[1:]] == ["2", "4"]


def test_usage_errors(capsys):
    assert run_cli(capsys, "frobnicate")[0] == 2
    assert run_cli(capsys, "decode")[0] == 2
    assert run_cli(capsys, "bench", "--K", "four")[0] == 2
    assert run_cli(capsys, "decode", "--net", FIXTURES / "butterfly.net", "--obs", FIXTURES / "nope.obs")[0] == 2
