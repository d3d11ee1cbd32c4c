import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from calpkit.embedding import cost_C, validate_embedding, validate_rembedding
from calpkit.graphs import validate_computation_dag, validate_instance
from calpkit.oracle import mincost_c_exact
from calpkit.reductions import (NODES, S1, S2, T, brute_force_maxcut, build_maxcut_instance, canonical_minimum,
                                canonicalize_embedding, certify_cost_bound, certify_gadget, cut_size,
                                embedding_from_sites, embedding_to_maxcut, gadget_cost, maxcut_to_embedding)

K4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
K33 = [(a, b) for a in "abc" for b in "xyz"]
PRISM = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)]


@pytest.fixture(scope="module")
def k4():
    return build_maxcut_instance(K4)


@pytest.fixture(scope="module")
def one():
    return build_maxcut_instance([("x", "y")], require_cubic=False)


def test_k4_construction(k4):
    dag = k4.dag
    assert len(dag.sources) == 48
    assert len(dag.in_edges[dag.sink]) == 24
    assert max(dag.edge_weight(e) for e in dag.edges) == 9
    assert validate_computation_dag(dag).ok
    assert validate_instance(k4.net, dag, shared_sources=True).ok
    assert all(w == 1 for w in k4.net.weight.values())


def test_single_gadget_counts(one):
    dag = one.dag
    assert len(dag.sources) == 8
    # x, y, a, d split into two primed copies each
    assert len(one.parent) == 8
    assert len(dag.nodes) == 8 + 2 + 4 + 8 + 1
    weights = {v: dag.node_weight[v] for v in ("H_x", "H_y", "a0", "b0", "c0", "d0")}
    # z = h * max(l) + 1: two unit out-edges for x and y, a unit and a weight-4 edge for a and d
    assert weights == {"H_x": 3, "H_y": 3, "a0": 9, "b0": 4, "c0": 4, "d0": 9}


def test_non_cubic_rejected():
    with pytest.raises(ValueError):
        build_maxcut_instance([(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        build_maxcut_instance([(0, 1), (1, 0)], require_cubic=False)


@pytest.mark.parametrize("cut,cost", [({"x"}, 27), ({"y"}, 27), ({"x", "y"}, 28), (set(), 28)])
def test_single_gadget_templates(one, cut, cost):
    remb, c = maxcut_to_embedding(cut, one)
    assert c == cost
    assert validate_rembedding(one.net, one.dag, remb).ok


def test_gadget_table():
    table = certify_gadget()
    assert table["ok"]
    assert table["split_min"] == 27
    assert table["same_side_min"] == 28
    assert table["class_minimum"]["S1/t"] > 27


def test_single_gadget_exact_optimum(one, monkeypatch):
    # unrestricted search over all 3^14 placements of the free vertices
    monkeypatch.setenv("CALPKIT_BUDGET", "36")
    emb, cost = mincost_c_exact(one.net, one.dag)
    assert cost == 27
    V1, _, k = embedding_to_maxcut(emb, one)
    assert k == 1


def test_gadget_table_matches_full_cost(one):
    # the collapsed per-gadget accounting equals cost_C on every canonical placement
    g = one.gadgets[0]
    rng = random.Random(0)
    for combo in rng.sample(list(itertools.product(NODES, repeat=6)), 60):
        place = {g[r]: {p} for r, p in zip(["x", "y", "a", "b", "c", "d"], combo)}
        for p, u in one.parent.items():
            place[p] = place[u]
        emb = embedding_from_sites(one, place)
        assert cost_C(one.net, one.dag, emb) == gadget_cost(one, 0, {v: next(iter(s)) for v, s in place.items()})


@pytest.mark.parametrize("edges", [K4, K33, PRISM], ids=["K4", "K33", "prism"])
def test_canonical_minimum_is_28m_minus_maxcut(edges):
    inst = build_maxcut_instance(edges)
    best, V1 = brute_force_maxcut(inst.vertices, inst.edges)
    canon, _ = canonical_minimum(inst)
    assert canon == 28 * inst.m - best
    _, cost = maxcut_to_embedding(V1, inst)
    assert cost == canon


def test_k4_vertex_weight(k4):
    assert k4.dag.node_weight["H_0"] == 7


def test_k4_values(k4):
    assert brute_force_maxcut(k4.vertices, k4.edges)[0] == 4
    assert canonical_minimum(k4)[0] == 164


def test_cut_round_trip(k4):
    for r in range(len(k4.vertices) + 1):
        for V1 in itertools.combinations(k4.vertices, r):
            remb, cost = maxcut_to_embedding(V1, k4)
            assert cost == 28 * 6 - cut_size(k4.edges, V1)
            W1, W2, k = embedding_to_maxcut(remb, k4)
            assert k >= 28 * 6 - cost
            assert W1 | W2 == set(k4.vertices) and not W1 & W2


def test_all_at_s1_gives_empty_cut(k4):
    mu = {v: S1 for v in k4.dag.free_vertices}
    emb = embedding_from_sites(k4, {v: {p} for v, p in mu.items()})
    V1, V2, k = embedding_to_maxcut(emb, k4)
    assert k == 0 and V2 == set()


def test_negative_certificate(k4):
    rep = certify_cost_bound(k4, 163)
    assert rep["implied_cut"] == 5 and rep["max_cut"] == 4 and not rep["consistent"]
    assert certify_cost_bound(k4, 164)["consistent"]


def test_canonical_embedding_unchanged(k4):
    remb, cost = maxcut_to_embedding({"0", "1"}, k4)
    again, c2 = canonicalize_embedding(remb, k4)
    assert c2 == cost and again.key() == remb.key()


def _base_sites(inst, cut):
    remb, _ = maxcut_to_embedding(cut, inst)
    mu = remb.assignment(inst.dag)
    return {v: {mu[v]} for v in inst.dag.free_vertices}


def test_duplicated_a_moves_to_sink_node(one):
    place = _base_sites(one, {"y"})
    for v in ("a0", "a0>b0", "a0>omega"):
        place[v] = {S2, T}
    place["b0"] = {S2}
    emb = embedding_from_sites(one, place)
    before = cost_C(one.net, one.dag, emb)
    remb, after = canonicalize_embedding(emb, one)
    assert before - after >= 3
    assert remb.assignment(one.dag)["a0"] == T


def test_split_vertex_is_unified(k4):
    place = _base_sites(k4, {"0", "1"})
    # put H_0's copies feeding one of its gadgets on the other side
    for p, u in k4.parent.items():
        if u == "H_0" and p.endswith(">a0"):
            place[p] = {S2}
    emb = embedding_from_sites(k4, place)
    before = cost_C(k4.net, k4.dag, emb)
    remb, after = canonicalize_embedding(emb, k4)
    assert after <= before - 6
    mu = remb.assignment(k4.dag)
    assert all(mu[p] == mu[u] for p, u in k4.parent.items())


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_canonicalize_never_increases_cost(seed):
    inst = build_maxcut_instance(K4)
    rng = random.Random(seed)
    cut = {v for v in inst.vertices if rng.random() < 0.5}
    place = _base_sites(inst, cut)
    free = inst.dag.free_vertices
    for v in rng.sample(free, rng.randint(1, 25)):
        place[v] = set(rng.sample(NODES, rng.randint(1, 3)))
    emb = embedding_from_sites(inst, place)
    assert validate_embedding(inst.net, inst.dag, emb).ok
    before = cost_C(inst.net, inst.dag, emb)
    remb, after = canonicalize_embedding(emb, inst)
    assert after <= before
    assert validate_rembedding(inst.net, inst.dag, remb).ok
    assert embedding_to_maxcut(emb, inst)[2] >= 28 * inst.m - before
