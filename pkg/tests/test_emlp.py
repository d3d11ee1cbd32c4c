import math
import statistics

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import wasserstein_distance

from calpkit import instances
from calpkit.embedding import cost_CC, validate_rembedding
from calpkit.emlp import ckr_round, em_distance, emlp_mincost_cc, solve_earthmover_lp
from calpkit.oracle import mincost_cc_exact


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6), st.integers(0, 1000))
def test_em_distance_on_a_line_matches_scipy(weights, shift):
    n = len(weights)
    a = np.array(weights) / sum(weights)
    b = np.roll(a, shift % n)
    pos = np.arange(n, dtype=float)
    d = np.abs(pos[:, None] - pos[None, :])
    cost, flow = em_distance(a, b, d)
    assert cost == pytest.approx(wasserstein_distance(pos, pos, a, b), abs=1e-7)
    assert flow.sum(axis=1) == pytest.approx(a, abs=1e-7)
    assert flow.sum(axis=0) == pytest.approx(b, abs=1e-7)


@pytest.mark.parametrize("name", sorted(instances.FIXTURES))
def test_lp_is_a_lower_bound_on_fixtures(name):
    net, dag = instances.FIXTURES[name]()
    placement, lp = solve_earthmover_lp(net, dag)
    opt = mincost_cc_exact(net, dag)[1]
    assert lp <= opt + 1e-7
    for v, x in placement.x.items():
        assert x.sum() == pytest.approx(1.0)


@given(st.integers(0, 10_000))
def test_rounding_is_valid_and_above_lp(seed):
    net, dag = instances.random_instance(seed, n_range=(2, 5), inner_range=(1, 3))
    placement, lp = solve_earthmover_lp(net, dag)
    assert lp <= mincost_cc_exact(net, dag)[1] + 1e-7
    for s in range(5):
        mu, remb, cost = ckr_round(placement, s)
        assert validate_rembedding(net, dag, remb).ok
        assert cost >= lp - 1e-7
        assert cost == cost_CC(net, dag, remb)


def test_rounding_is_seeded():
    net, dag = instances.fig1()
    placement, _ = solve_earthmover_lp(net, dag)
    assert ckr_round(placement, 7)[0] == ckr_round(placement, 7)[0]


@pytest.mark.parametrize("name", sorted(instances.FIXTURES))
def test_mean_rounded_cost_is_logarithmic(name):
    net, dag = instances.FIXTURES[name]()
    placement, _ = solve_earthmover_lp(net, dag)
    opt = mincost_cc_exact(net, dag)[1]
    mean = statistics.fmean(float(ckr_round(placement, s)[2]) for s in range(200))
    assert mean <= 4 * math.log(max(net.n, 2)) * opt


def test_best_of_roundings():
    net, dag = instances.fig2()
    remb, cost, lp = emlp_mincost_cc(net, dag, seed=3)
    assert lp <= cost and validate_rembedding(net, dag, remb).ok
