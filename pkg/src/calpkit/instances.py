"""Worked fixtures and seeded random instance generators."""

from __future__ import annotations

import random
from fractions import Fraction

from .embedding import Embedding, REmbedding
from .graphs import ComputationDag, DagEdge, NetworkGraph

# the nine-vertex schema shared by the first two worked examples:
# x1*(x2+x3) + x4*(x2+x3)
_EXAMPLE_DAG_EDGES = [
    ("g1", "w1", "w6"), ("g2", "w2", "w5"), ("g3", "w3", "w5"), ("g4", "w4", "w7"),
    ("g5", "w5", "w6"), ("g6", "w5", "w7"), ("g7", "w6", "w8"), ("g8", "w7", "w8"),
    ("g9", "w8", "w9"),
]


def example_dag(weights=None) -> ComputationDag:
    nodes = [f"w{i}" for i in range(1, 10)]
    return ComputationDag(nodes, [DagEdge(i, u, v) for i, u, v in _EXAMPLE_DAG_EDGES],
                          ["w1", "w2", "w3", "w4"], "w9", weights or {})


def fig1():
    """Nine-node network with unit capacities and prices."""
    edges = [("s1", "a"), ("a", "t"), ("s1", "z"), ("z", "t"), ("s4", "a"), ("s4", "z"),
             ("z", "x"), ("s2", "x"), ("x", "s3"), ("s3", "y"), ("y", "t"), ("s2", "y")]
    net = NetworkGraph(["s1", "s2", "s3", "s4", "a", "z", "x", "y", "t"],
                       [(u, v, 1, 1) for u, v in edges], ["s1", "s2", "s3", "s4"], "t")
    return net, example_dag()


def fig1_columns() -> list:
    first = REmbedding({
        "g1": ("s1", "z"), "g2": ("s2", "x"), "g3": ("s3", "x"), "g4": ("s4", "z"),
        "g5": ("x", "z"), "g6": ("x", "z"), "g7": ("z",), "g8": ("z",), "g9": ("z", "t"),
    })
    second = REmbedding({
        "g1": ("s1", "a", "t"), "g2": ("s2", "y"), "g3": ("s3", "y"), "g4": ("s4", "a", "t"),
        "g5": ("y", "t"), "g6": ("y", "t"), "g7": ("t",), "g8": ("t",), "g9": ("t",),
    })
    return [first, second]


def fig2():
    caps = [("s1", "x", "3/2"), ("s2", "x", "3/2"), ("s2", "y", 1), ("s3", "x", "3/2"),
            ("s3", "y", 1), ("s4", "y", "3/2"), ("x", "z", 2), ("y", "z", "3/2"), ("z", "t", "3/2")]
    net = NetworkGraph(["s1", "s2", "s3", "s4", "x", "y", "z", "t"],
                       [(u, v, Fraction(c), 1) for u, v, c in caps], ["s1", "s2", "s3", "s4"], "t")
    return net, example_dag()


def fig2_columns() -> list:
    e1 = REmbedding({
        "g1": ("s1", "x"), "g2": ("s2", "x"), "g3": ("s3", "x"), "g4": ("s4", "y", "z"),
        "g5": ("x",), "g6": ("x", "z"), "g7": ("x", "z"), "g8": ("z",), "g9": ("z", "t"),
    })
    e2 = Embedding({
        "g1": [("s1", "x")], "g2": [("s2", "x"), ("s2", "y")], "g3": [("s3", "x"), ("s3", "y")],
        "g4": [("s4", "y")], "g5": [("x",)], "g6": [("y",)], "g7": [("x", "z")],
        "g8": [("y", "z")], "g9": [("z", "t")],
    })
    return [e1, e2]


def fft4_dag() -> ComputationDag:
    """Four-point butterfly feeding a collector and the output vertex."""
    src = ["x1", "x2", "x3", "x4"]
    mid = ["b1", "b2", "b3", "b4"]
    low = ["c1", "c2", "c3", "c4"]
    edges = []
    for i in range(4):
        edges.append((src[i], mid[i]))
    for a, b in ((0, 1), (1, 0), (3, 2), (2, 3)):
        edges.append((src[a], mid[b]))
    for i in range(4):
        edges.append((mid[i], low[i]))
    for a, b in ((0, 2), (1, 3), (2, 0), (3, 1)):
        edges.append((mid[a], low[b]))
    for c in low:
        edges.append((c, "sum"))
    edges.append(("sum", "out"))
    weights = {v: 2 for v in src}
    return ComputationDag(src + mid + low + ["sum", "out"],
                          [DagEdge(f"{u}->{v}", u, v) for u, v in edges], src, "out", weights)


def fft4_tree() -> list:
    """Vertical edges plus the collector edges."""
    tree = [f"x{i}->b{i}" for i in range(1, 5)] + [f"b{i}->c{i}" for i in range(1, 5)]
    tree += [f"c{i}->sum" for i in range(1, 5)] + ["sum->out"]
    return tree


def fft4():
    edges = [("s1", "s2", 2, 1), ("s2", "s3", 1, 2), ("s3", "s4", 2, 1), ("s4", "s1", 1, 2),
             ("s1", "t", 1, 2), ("s2", "t", 2, 1), ("s3", "t", 1, 3), ("s4", "t", 1, 1)]
    net = NetworkGraph(["s1", "s2", "s3", "s4", "t"], edges, ["s1", "s2", "s3", "s4"], "t")
    return net, fft4_dag()


def correlation_dag(k: int = 3) -> ComputationDag:
    """Layered schema for sum_i x_i * x_{i+1}."""
    src = [f"x{i}" for i in range(1, k + 1)]
    prods = [f"p{i}" for i in range(1, k)]
    edges = []
    for i, p in enumerate(prods):
        edges += [(src[i], p), (src[i + 1], p)]
    edges += [(p, "sum") for p in prods]
    edges.append(("sum", "out"))
    return ComputationDag(src + prods + ["sum", "out"],
                          [DagEdge(f"{u}->{v}", u, v) for u, v in edges], src, "out")


def correlation(k: int = 3):
    names = [f"s{i}" for i in range(1, k + 1)]
    edges = [(names[i], names[i + 1], 1, i + 1) for i in range(k - 1)]
    edges += [(s, "t", 1, 2) for s in names]
    net = NetworkGraph(names + ["t"], edges, names, "t")
    return net, correlation_dag(k)


FIXTURES = {"fig1": fig1, "fig2": fig2, "fft4": fft4, "correlation": correlation}


# ---------------------------------------------------------------- random ----

_CAPS = [Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)]


def random_network(rng: random.Random, n: int, kappa: int, extra_edges: int = 1,
                   max_price: int = 3, caps=None, sink_is_source: bool = False) -> NetworkGraph:
    """Random spanning tree plus a few chords; sources on distinct nodes."""
    caps = caps or _CAPS
    nodes = [f"n{i}" for i in range(n)]
    pairs = set()
    for i in range(1, n):
        j = rng.randrange(i)
        pairs.add((j, i))
    others = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in pairs]
    rng.shuffle(others)
    pairs.update(others[:extra_edges])
    edges = [(nodes[i], nodes[j], rng.choice(caps), rng.randint(1, max_price)) for i, j in sorted(pairs)]
    if sink_is_source:
        positions = rng.sample(nodes, kappa)
        sink = positions[0]
    else:
        positions = rng.sample(nodes, min(kappa + 1, n))
        sink = positions[-1]
        positions = positions[:kappa] if len(positions) > kappa else positions
    return NetworkGraph(nodes, edges, positions[:kappa], sink)


def random_dag(rng: random.Random, kappa: int, n_inner: int, max_weight: int = 3,
               extra_edges: int = 1, tree: bool = False) -> ComputationDag:
    """Random valid schema with kappa sources, n_inner internal vertices and one sink."""
    src = [f"v{i}" for i in range(kappa)]
    inner = [f"v{kappa + i}" for i in range(n_inner)]
    sink = "out"
    order = src + inner
    if tree:
        # grow an in-tree bottom-up: each inner vertex absorbs one or two active roots
        parent = {}
        active = list(src)
        for u in inner:
            for t in rng.sample(active, rng.randint(1, min(2, len(active)))):
                parent[t] = u
                active.remove(t)
            active.append(u)
        for t in active:
            parent[t] = sink
        edges = [(v, parent[v]) for v in order]
    else:
        edges = []
        for i, u in enumerate(inner):
            cands = order[:kappa + i]
            for t in rng.sample(cands, rng.randint(1, min(2, len(cands)))):
                edges.append((t, u))
        for i, v in enumerate(order):
            if not any(t == v for t, _ in edges):
                later = [u for u in order[i + 1:] if u in inner]
                edges.append((v, rng.choice(later) if later and rng.random() < 0.5 else sink))
        if not any(h == sink for _, h in edges):
            edges.append((order[-1], sink))
        for _ in range(extra_edges):
            i = rng.randrange(len(order))
            later = [u for u in order[i + 1:] if u in inner] + [sink]
            cand = (order[i], rng.choice(later))
            if cand not in edges:
                edges.append(cand)
    edges = list(dict.fromkeys(edges))
    weights = {v: rng.randint(1, max_weight) for v in order}
    return ComputationDag(order + [sink], [DagEdge(f"{u}->{v}", u, v) for u, v in edges], src, sink, weights)


def random_instance(seed: int, n_range=(2, 5), kappa_range=(1, 3), inner_range=(1, 3),
                    tree: bool = False, extra_net=(0, 1), extra_dag=(0, 1), max_weight: int = 3):
    rng = random.Random(seed)
    n = rng.randint(*n_range)
    kappa = rng.randint(kappa_range[0], min(kappa_range[1], max(1, n - 1)))
    net = random_network(rng, n, kappa, rng.randint(*extra_net))
    dag = random_dag(rng, kappa, rng.randint(*inner_range), max_weight, rng.randint(*extra_dag), tree)
    return net, dag


def random_layered_dag(rng: random.Random, kappa: int, widths, max_weight: int = 2) -> ComputationDag:
    """Layered schema: edges only between consecutive layers."""
    layers = [[f"v0_{i}" for i in range(kappa)]]
    for li, w in enumerate(widths, start=1):
        layers.append([f"v{li}_{i}" for i in range(w)])
    layers.append(["out"])
    edges = set()
    for a, b in zip(layers, layers[1:]):
        for v in b:
            edges.add((rng.choice(a), v))
        for u in a:
            if not any(t == u for t, _ in edges):
                edges.add((u, rng.choice(b)))
        if len(a) > 1 and len(b) > 1 and rng.random() < 0.5:
            edges.add((rng.choice(a), rng.choice(b)))
    nodes = [v for layer in layers for v in layer]
    order = {v: i for i, v in enumerate(nodes)}
    edges = sorted(edges, key=lambda e: (order[e[0]], order[e[1]]))
    weights = {v: rng.randint(1, max_weight) for v in nodes}
    return ComputationDag(nodes, [DagEdge(f"{u}->{v}", u, v) for u, v in edges], layers[0], "out", weights)


def random_two_node_instance(seed: int, n_vertices_range=(3, 10)):
    """Two-node network (sink at n2) plus a random schema; several sources may share a node."""
    rng = random.Random(seed)
    total = rng.randint(*n_vertices_range)
    kappa = rng.randint(1, min(3, total - 1))
    inner = max(0, total - kappa - 1)
    dag = random_dag(rng, kappa, inner, max_weight=4, extra_edges=rng.randint(0, 2))
    places = [rng.choice(["n1", "n2"]) for _ in range(kappa)]
    net = NetworkGraph(["n1", "n2"], [("n1", "n2", 1, rng.randint(1, 3))], places, "n2")
    return net, dag
