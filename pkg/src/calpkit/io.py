"""JSON (de)serialization of instances, embeddings and solutions."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .embedding import Embedding, REmbedding
from .graphs import ComputationDag, DagEdge, NetworkGraph


class MalformedInput(ValueError):
    pass


def parse_number(x):
    """JSON number -> int or exact Fraction; "inf" -> math.inf; "a/b" -> Fraction."""
    if isinstance(x, bool):
        raise MalformedInput(f"expected a number, got {x!r}")
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return x
        f = Fraction(str(x))
        return int(f) if f.denominator == 1 else f
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            f = Fraction(s)
        except ValueError as exc:
            raise MalformedInput(f"not a number: {x!r}") from exc
        return int(f) if f.denominator == 1 else f
    raise MalformedInput(f"expected a number, got {x!r}")


def dump_number(x):
    if isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 2 ** 53:
        return int(x)
    return x


def to_plain(obj):
    """Recursively make an object JSON-serializable with stable number output."""
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else "-".join(map(str, k)): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [to_plain(v) for v in obj]
        return sorted(items, key=json.dumps) if isinstance(obj, (set, frozenset)) else items
    if isinstance(obj, (int, float, Fraction)) and not isinstance(obj, bool):
        return dump_number(obj)
    try:
        import numpy as np
        if isinstance(obj, np.generic):
            return dump_number(obj.item())
    except ImportError:  # pragma: no cover
        pass
    return obj


def dumps(obj) -> str:
    return json.dumps(to_plain(obj), indent=2, sort_keys=False)


def network_from_dict(d: dict) -> NetworkGraph:
    try:
        edges = [(e["u"], e["v"], parse_number(e.get("capacity", 1)), parse_number(e.get("weight", 1)))
                 for e in d["edges"]]
        return NetworkGraph(d["nodes"], edges, d["sources"], d["sink"])
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"bad network description: {exc}") from exc


def dag_from_dict(d: dict) -> ComputationDag:
    try:
        nodes, weights = [], {}
        for v in d["nodes"]:
            if isinstance(v, dict):
                nodes.append(v["id"])
                weights[v["id"]] = parse_number(v.get("weight", 1))
            else:
                nodes.append(v)
        edges = []
        for e in d["edges"]:
            w = e.get("weight")
            edges.append(DagEdge(e.get("id", f"{e['u']}->{e['v']}"), e["u"], e["v"],
                                 None if w is None else parse_number(w)))
        return ComputationDag(nodes, edges, d["sources"], d["sink"], weights)
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"bad DAG description: {exc}") from exc


def network_to_dict(net: NetworkGraph) -> dict:
    return {
        "nodes": list(net.nodes),
        "edges": [{"u": u, "v": v, "capacity": dump_number(net.capacity[(u, v)]),
                   "weight": dump_number(net.weight[(u, v)])} for u, v in net.edges],
        "sources": list(net.sources),
        "sink": net.sink,
    }


def dag_to_dict(dag: ComputationDag) -> dict:
    edges = []
    for e in dag.edges:
        item = {"id": e.id, "u": e.tail, "v": e.head}
        if e.weight is not None:
            item["weight"] = dump_number(e.weight)
        edges.append(item)
    return {
        "nodes": [{"id": v, "weight": dump_number(dag.node_weight[v])} for v in dag.nodes],
        "edges": edges,
        "sources": list(dag.sources),
        "sink": dag.sink,
    }


def instance_to_dict(net, dag) -> dict:
    return {"network": network_to_dict(net), "dag": dag_to_dict(dag)}


def instance_from_dict(d: dict):
    if not isinstance(d, dict) or "network" not in d or "dag" not in d:
        raise MalformedInput("instance needs 'network' and 'dag' objects")
    return network_from_dict(d["network"]), dag_from_dict(d["dag"])


def fixture_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    return Path(str(resources.files("calpkit") / "fixtures" / f"{stem}.json"))


def read_json(path) -> object:
    """Read a JSON file; bare names fall back to the packaged fixtures."""
    p = Path(path)
    if not p.exists():
        fp = fixture_path(p.name)
        if fp.exists():
            p = fp
        else:
            raise MalformedInput(f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc


def load_instance(path):
    return instance_from_dict(read_json(path))


def embedding_from_json(d, dag: ComputationDag | None = None, net=None) -> Embedding:
    """Accepts {"gamma": [[path], ...]}, {"paths": {...}} or {"assignment": {...}}."""
    if isinstance(d, dict) and "assignment" in d:
        from .embedding import assignment_to_rembedding
        if dag is None or net is None:
            raise MalformedInput("assignment form needs the instance")
        return assignment_to_rembedding(net, dag, d["assignment"])
    if isinstance(d, dict) and "paths" in d:
        d = d["paths"]
    if not isinstance(d, dict):
        raise MalformedInput("embedding must be a JSON object")
    paths = {}
    for g, ps in d.items():
        if not isinstance(ps, list) or not ps:
            raise MalformedInput(f"edge {g}: expected a non-empty list of paths")
        if all(isinstance(v, str) for v in ps):
            ps = [ps]
        paths[g] = [tuple(p) if isinstance(p, list) else (p,) for p in ps]
    emb = Embedding(paths)
    return REmbedding.from_embedding(emb) if emb.is_restricted else emb


def load_columns(path, dag=None, net=None) -> list:
    d = read_json(path)
    items = d["columns"] if isinstance(d, dict) and "columns" in d else d
    if not isinstance(items, list):
        raise MalformedInput("columns file must hold a list of embeddings")
    return [embedding_from_json(item.get("embedding", item) if isinstance(item, dict) else item, dag, net)
            for item in items]
