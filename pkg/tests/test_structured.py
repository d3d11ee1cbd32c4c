import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from calpkit import instances
from calpkit.embedding import cost_CC, validate_rembedding
from calpkit.oracle import mincost_cc_exact
from calpkit.structured import (dag_layers, layered_dp_mincost_cc, spanning_tree_approx_mincost_cc,
                                tree_dp_mincost_cc, weighted_cycle_load)


def _fraction_prices(net, rng):
    return {e: Fraction(rng.randint(1, 6), rng.randint(1, 4)) for e in net.edges}


@given(st.integers(0, 10_000))
def test_tree_dp_is_exact(seed):
    net, dag = instances.random_instance(seed, tree=True, inner_range=(1, 4))
    prices = _fraction_prices(net, random.Random(seed))
    remb, cost = tree_dp_mincost_cc(net, dag, prices)
    assert validate_rembedding(net, dag, remb).ok
    assert cost == mincost_cc_exact(net, dag, prices)[1]


@given(st.integers(0, 10_000))
def test_layered_dp_is_exact(seed):
    rng = random.Random(seed)
    kappa = rng.randint(1, 3)
    dag = instances.random_layered_dag(rng, kappa, [rng.randint(1, 3) for _ in range(rng.randint(1, 2))])
    net = instances.random_network(rng, rng.randint(kappa + 1, 4), kappa, 1)
    prices = _fraction_prices(net, rng)
    remb, cost = layered_dp_mincost_cc(net, dag, prices)
    assert validate_rembedding(net, dag, remb).ok
    assert cost == mincost_cc_exact(net, dag, prices)[1]


def test_tree_dp_rejects_shared_vertices():
    net, dag = instances.fig1()
    with pytest.raises(ValueError):
        tree_dp_mincost_cc(net, dag)


def test_fixture_layered_values():
    net, dag = instances.fft4()
    assert layered_dp_mincost_cc(net, dag)[1] == 16
    net, dag = instances.correlation()
    assert layered_dp_mincost_cc(net, dag)[1] == 5
    assert [len(layer) for layer in dag_layers(dag)] == [3, 2, 1, 1]


def test_fft4_spanning_tree():
    net, dag = instances.fft4()
    res = spanning_tree_approx_mincost_cc(net, dag, tree=instances.fft4_tree())
    assert res.info.F == 4
    assert res.cost == 20
    assert res.cost <= (1 + res.info.F) * 16


@given(st.integers(0, 10_000))
def test_spanning_tree_bound(seed):
    net, dag = instances.random_instance(seed, n_range=(2, 5), inner_range=(1, 4), extra_dag=(0, 3))
    res = spanning_tree_approx_mincost_cc(net, dag)
    opt = mincost_cc_exact(net, dag)[1]
    assert validate_rembedding(net, dag, res.rembedding).ok
    assert res.tree_cost <= opt
    assert res.cost <= res.ratio_bound * res.tree_cost
    if len(set(dag.edge_weight(e) for e in dag.edges)) == 1:
        assert res.ratio_bound == 1 + res.info.F
        assert res.cost <= (1 + res.info.F) * opt
    assert res.cost == cost_CC(net, dag, res.rembedding)


def test_cycle_load_unit_weights_equals_F():
    _, dag = instances.correlation()
    info = spanning_tree_approx_mincost_cc(*instances.correlation()).info
    assert weighted_cycle_load(dag, info) == info.F
