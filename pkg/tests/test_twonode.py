import itertools
import math
import random

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from calpkit.embedding import cost_C, validate_embedding
from calpkit.graphs import ComputationDag, NetworkGraph
from calpkit.instances import random_two_node_instance
from calpkit.twonode import (brute_force_two_node, build_2cut_instance, delta, embedding_to_cut, h_value,
                             solve_2cut, solve_two_node)

SEEDS = range(30)


def _three_way_brute(inst):
    """Every vertex into J1, J2 or neither: the defining minimisation."""
    others = [v for v in inst.nodes if v not in (inst.j1, inst.j2)]
    best = math.inf
    for combo in itertools.product((0, 1, 2), repeat=len(others)):
        A = {inst.j1} | {v for v, c in zip(others, combo) if c == 1}
        B = {inst.j2} | {v for v, c in zip(others, combo) if c == 2}
        best = min(best, delta(inst, A) + delta(inst, B))
    return best


def _nx_inner_cut(inst, A):
    big = inst.finite_total() + 1
    g = nx.DiGraph()
    g.add_nodes_from(inst.nodes + ["__sink"])
    for (i, j), w in inst.edges.items():
        g.add_edge(i, j, capacity=big if math.isinf(w) else w)
    for a in A | {inst.j1}:
        g.add_edge(a, "__sink", capacity=big * 10)
    return nx.minimum_cut_value(g, inst.j2, "__sink")


@pytest.mark.parametrize("seed", SEEDS)
def test_cut_embedding_matches_brute_force(seed):
    net, dag = random_two_node_instance(seed)
    emb, cost, sol = solve_two_node(net, dag)
    bf, _ = brute_force_two_node(net, dag)
    assert cost == bf == sol.weight
    assert validate_embedding(net, dag, emb).ok
    assert cost_C(net, dag, emb) == cost
    assert embedding_to_cut(net, dag, emb).weight == cost


@pytest.mark.parametrize("seed", range(8))
def test_cut_matches_three_way_enumeration(seed):
    net, dag = random_two_node_instance(seed, n_vertices_range=(3, 5))
    inst = build_2cut_instance(net, dag)
    assert solve_2cut(inst).weight == _three_way_brute(inst)
    if len(inst.nodes) <= 14:
        assert solve_2cut(inst, exhaustive=True).weight == solve_2cut(inst).weight


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_h_inner_cut_matches_networkx(seed, pick):
    net, dag = random_two_node_instance(seed, n_vertices_range=(3, 7))
    inst = build_2cut_instance(net, dag)
    rng = random.Random(pick)
    forced = {j for j, w in inst.out[inst.j1] if math.isinf(w)}
    banned = {j for j, w in inst.out[inst.j2] if math.isinf(w)} | {inst.j2}
    A = forced | {v for v in inst.nodes if v not in banned | {inst.j1} and rng.random() < 0.5}
    assert h_value(inst, A) == delta(inst, A | {inst.j1}) + _nx_inner_cut(inst, A)


@pytest.mark.parametrize("seed", SEEDS)
def test_h_is_submodular(seed):
    net, dag = random_two_node_instance(seed)
    inst = build_2cut_instance(net, dag)
    others = [v for v in inst.nodes if v not in (inst.j1, inst.j2)]
    rng = random.Random(seed)
    for _ in range(100):
        Y = {v for v in others if rng.random() < 0.5}
        Z = {v for v in others if rng.random() < 0.5}
        assert h_value(inst, Y) + h_value(inst, Z) >= h_value(inst, Y | Z) + h_value(inst, Y & Z)


def test_everything_at_the_sink_is_free_when_sources_are_there():
    net = NetworkGraph(["n1", "n2"], [("n1", "n2", 1, 5)], ["n2", "n2"], "n2")
    dag = ComputationDag(["a", "b", "c", "t"], [("a", "c"), ("b", "c"), ("c", "t")], ["a", "b"], "t")
    emb, cost, _ = solve_two_node(net, dag)
    assert cost == 0


def test_split_sources_pay_the_cheaper_side():
    net = NetworkGraph(["n1", "n2"], [("n1", "n2", 1, 1)], ["n1", "n2"], "n2")
    dag = ComputationDag(["a", "b", "c", "t"], [("a", "c"), ("b", "c"), ("c", "t")], ["a", "b"], "t",
                         {"a": 3, "b": 1, "c": 2})
    _, cost, _ = solve_two_node(net, dag)
    # c at n2 ships a (3); c at n1 ships b and c (1 + 2)
    assert cost == 3


def test_needs_two_nodes():
    net = NetworkGraph(["a", "b", "c"], [("a", "b", 1, 1), ("b", "c", 1, 1)], ["a"], "c")
    dag = ComputationDag(["s", "t"], [("s", "t")], ["s"], "t")
    with pytest.raises(ValueError):
        build_2cut_instance(net, dag)
