"""Earthmover LP relaxation of the placement problem and randomized rounding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .embedding import REmbedding, assignment_to_rembedding, cost_CC, pinned
from .graphs import ComputationDag, DistanceMatrix, NetworkGraph, all_pairs_shortest

TOL = 1e-9


def _metric(d):
    if isinstance(d, DistanceMatrix):
        return np.array(d.matrix(), dtype=float)
    return np.asarray(d, dtype=float)


def em_distance(a, b, d):
    """Optimal transport cost between distributions a and b under metric d.

    Returns (cost, flow) with flow[u, v] the mass moved from u to v.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    D = _metric(d)
    n = len(a)
    if len(b) != n or D.shape != (n, n):
        raise ValueError("distributions and metric must share one support")
    rows, cols = [], []
    for u in range(n):
        for v in range(n):
            k = u * n + v
            rows += [u, n + v]
            cols += [k, k]
    A = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(2 * n, n * n))
    res = linprog(D.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise ValueError(f"transport problem failed: {res.message}")
    return float(res.fun), res.x.reshape(n, n)


@dataclass
class FractionalPlacement:
    net: NetworkGraph
    dag: ComputationDag
    dist: DistanceMatrix
    x: dict          # vertex -> probability vector over net.nodes
    y: dict          # edge id -> n x n joint table

    def is_integral(self, tol: float = TOL) -> bool:
        return all(np.all((v < tol) | (v > 1 - tol)) for v in self.x.values())

    def to_json(self) -> dict:
        return {"nodes": list(self.net.nodes),
                "x": {a: [float(t) for t in v] for a, v in self.x.items()},
                "y": {g: [[float(t) for t in row] for row in m] for g, m in self.y.items()}}


def solve_earthmover_lp(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                        dist: Optional[DistanceMatrix] = None):
    """Relaxation: fractional placements coupled along every DAG edge by a transport plan."""
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    D = _metric(dist)
    if not np.all(np.isfinite(D)):
        raise ValueError("earthmover relaxation needs a connected network")
    n = net.n
    verts = list(dag.nodes)
    vi = {v: i for i, v in enumerate(verts)}
    nx = len(verts) * n
    ny = len(dag.edges) * n * n
    pins = pinned(net, dag)

    def xcol(v, u):
        return vi[v] * n + u

    def ycol(k, u, w):
        return nx + k * n * n + u * n + w

    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for v in verts:
        for u in range(n):
            rows.append(r); cols.append(xcol(v, u)); vals.append(1.0)
        rhs.append(1.0)
        r += 1
    for k, e in enumerate(dag.edges):
        for u in range(n):
            for w in range(n):
                rows.append(r); cols.append(ycol(k, u, w)); vals.append(1.0)
            rows.append(r); cols.append(xcol(e.tail, u)); vals.append(-1.0)
            rhs.append(0.0)
            r += 1
        for w in range(n):
            for u in range(n):
                rows.append(r); cols.append(ycol(k, u, w)); vals.append(1.0)
            rows.append(r); cols.append(xcol(e.head, w)); vals.append(-1.0)
            rhs.append(0.0)
            r += 1
    A = coo_matrix((vals, (rows, cols)), shape=(r, nx + ny))
    c = np.zeros(nx + ny)
    for k, e in enumerate(dag.edges):
        c[nx + k * n * n: nx + (k + 1) * n * n] = float(dag.edge_weight(e)) * D.ravel()
    bounds = [(0.0, 1.0)] * nx + [(0.0, None)] * ny
    for v, node in pins.items():
        for u in range(n):
            bounds[xcol(v, u)] = (1.0, 1.0) if net.nodes[u] == node else (0.0, 0.0)
    res = linprog(c, A_eq=A, b_eq=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise ValueError(f"earthmover LP failed: {res.message}")
    sol = res.x
    x = {v: np.clip(sol[vi[v] * n:(vi[v] + 1) * n], 0.0, 1.0) for v in verts}
    y = {e.id: sol[nx + k * n * n: nx + (k + 1) * n * n].reshape(n, n) for k, e in enumerate(dag.edges)}
    return FractionalPlacement(net, dag, dist, x, y), float(res.fun)


def ckr_round(placement: FractionalPlacement, rng_seed: int = 0):
    """Round with one shared threshold and vertex permutation.

    Each vertex goes to the first network node in the permutation whose
    transport distance from the vertex's distribution is at most delta times
    the smallest such distance.
    """
    net, dag = placement.net, placement.dag
    D = _metric(placement.dist)
    rng = np.random.default_rng(rng_seed)
    delta = 1.0 + rng.random()
    perm = rng.permutation(net.n)
    mu = pinned(net, dag)
    for v in dag.nodes:
        if v in mu:
            continue
        to_point = placement.x[v] @ D          # d_EM(x_v, point mass at u) for every u
        bound = delta * to_point.min() + TOL
        for u in perm:
            if to_point[u] <= bound:
                mu[v] = net.nodes[int(u)]
                break
    remb = assignment_to_rembedding(net, dag, mu, dist=placement.dist)
    return mu, remb, cost_CC(net, dag, remb, placement.dist.prices)


def emlp_mincost_cc(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                    seed: int = 0, trials: int = 8, dist: Optional[DistanceMatrix] = None):
    """Best of several roundings: returns (REmbedding, cost, lp_value)."""
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    placement, lp_value = solve_earthmover_lp(net, dag, dist=dist)
    best = None
    for t in range(trials):
        _, remb, cost = ckr_round(placement, seed + t)
        if best is None or cost < best[1]:
            best = (remb, cost)
    return best[0], best[1], lp_value
