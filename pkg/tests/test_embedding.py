from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from calpkit import instances
from calpkit.embedding import (Embedding, REmbedding, assignment_to_rembedding, cost_C, cost_CC, edge_usage,
                               validate_embedding, validate_rembedding)
from calpkit.oracle import enumerate_rembeddings


def test_first_implementation_costs():
    net, dag = instances.fig1()
    first, second = instances.fig1_columns()
    assert cost_C(net, dag, first) == 6
    assert cost_CC(net, dag, first) == 7
    assert (cost_C(net, dag, second), cost_CC(net, dag, second)) == (7, 8)


def test_usage_counts_on_fig2():
    net, dag = instances.fig2()
    e1, e2 = instances.fig2_columns()
    r1 = edge_usage(net, dag, e1).r
    r2 = edge_usage(net, dag, e2).r
    assert r1[("x", "z")] == 2
    assert r1[("s2", "y")] == 0
    assert all(v == 1 for v in r2.values())


@pytest.mark.parametrize("fix", ["fig1", "fig2"])
def test_fixture_columns_are_valid(fix):
    net, dag = instances.FIXTURES[fix]()
    cols = instances.fig1_columns() if fix == "fig1" else instances.fig2_columns()
    for emb in cols:
        assert validate_embedding(net, dag, emb).ok
        if emb.is_restricted:
            assert validate_rembedding(net, dag, emb).ok


def _mutate(emb, g, paths):
    d = dict(emb.paths)
    d[g] = paths
    return Embedding(d)


def test_each_rule_is_detected():
    net, dag = instances.fig2()
    e1, e2 = instances.fig2_columns()
    cases = {
        "source_start": _mutate(e1, "g1", [("x",)]),
        "sink_end": _mutate(e1, "g9", [("z",)]),
        "endpoint_mismatch": _mutate(e1, "g7", [("z",)]),
        "endpoint_unused": _mutate(e1, "g6", [("x", "z"), ("x", "z", "y")]),
        "shared_end": _mutate(e2, "g2", [("s2", "x"), ("s2", "y", "s3", "x")]),
        "bad_path": _mutate(e1, "g1", [("s1", "t")]),
        "missing_edge": Embedding({k: v for k, v in e1.paths.items() if k != "g9"}),
        "unknown_edge": _mutate(e1, "nope", [("x",)]),
    }
    for code, emb in cases.items():
        assert code in validate_embedding(net, dag, emb).codes(), code


def test_start_apart_paths_must_be_disjoint():
    net, dag = instances.fig2()
    _, e2 = instances.fig2_columns()
    # w5 computed at x and y; the copy from y runs through x
    bad = _mutate(e2, "g6", [("x", "z"), ("y", "s3", "x")])
    assert "not_disjoint" in validate_embedding(net, dag, bad).codes()


def test_rembedding_rejects_multiple_paths():
    net, dag = instances.fig2()
    _, e2 = instances.fig2_columns()
    assert "multiple_paths" in validate_rembedding(net, dag, e2).codes()
    with pytest.raises(ValueError):
        REmbedding(e2.paths)


def _check_sandwich(net, dag):
    D = max(1, dag.max_out_degree)
    n = 0
    for remb in enumerate_rembeddings(net, dag, limit=3000):
        c, cc = cost_C(net, dag, remb), cost_CC(net, dag, remb)
        assert c <= cc <= D * c
        n += 1
    return n


@given(st.integers(0, 10_000))
def test_cost_sandwich_on_random_instances(seed):
    net, dag = instances.random_instance(seed, n_range=(2, 4), inner_range=(1, 2))
    assert _check_sandwich(net, dag) > 0


def test_cost_sandwich_exact_on_fractions():
    net, dag = instances.fig2()
    prices = {e: Fraction(i + 1, 3) for i, e in enumerate(net.edges)}
    e1, _ = instances.fig2_columns()
    c, cc = cost_C(net, dag, e1, prices), cost_CC(net, dag, e1, prices)
    assert isinstance(c, Fraction) and c <= cc <= 2 * c


def test_assignment_roundtrip():
    net, dag = instances.fig1()
    first, _ = instances.fig1_columns()
    mu = first.assignment(dag)
    assert mu["w5"] == "x" and mu["w8"] == "z"
    remb = assignment_to_rembedding(net, dag, mu)
    assert validate_rembedding(net, dag, remb).ok
    assert cost_CC(net, dag, remb) <= cost_CC(net, dag, first)


def test_assignment_must_pin():
    net, dag = instances.fig1()
    mu = {v: "t" for v in dag.nodes}
    with pytest.raises(ValueError):
        assignment_to_rembedding(net, dag, mu)
