"""User-mention network: construction, components, communities, metrics, export.

Graphs are ``networkx.DiGraph`` objects keyed by lowercase handle. Edge
``u -> v`` carries ``weight`` = number of times ``u`` mentioned ``v``.
"""

from __future__ import annotations

import csv
import math
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from crisisnet.errors import ConfigError, ContractError, DivergenceError, NumericalError

MentionGraph = nx.DiGraph


@dataclass
class GroupMetrics:
    group: int
    kind: str
    nodes: int
    edges: int
    density: float | None
    avg_degree: float | None
    diameter: int

    def row(self) -> list:
        fmt = lambda x: "" if x is None else f"{x:.6f}"  # noqa: E731
        return [self.group, self.kind, self.nodes, self.edges,
                fmt(self.density), fmt(self.avg_degree), self.diameter]


@dataclass
class Partition:
    """Total labeling of graph nodes into numbered groups."""

    labels: dict[str, int]
    kind: str  # "component" | "community"
    summaries: list[GroupMetrics] = field(default_factory=list)

    @property
    def groups(self) -> list[list[str]]:
        out: dict[int, list[str]] = {}
        for node in sorted(self.labels):
            out.setdefault(self.labels[node], []).append(node)
        return [out[k] for k in sorted(out)]

    def __len__(self) -> int:
        return len(set(self.labels.values()))


def _labeled(groups: Iterable[Iterable[str]], kind: str) -> Partition:
    ordered = sorted((sorted(g) for g in groups if g), key=lambda g: g[0])
    labels = {n: i for i, g in enumerate(ordered) for n in g}
    return Partition(labels, kind)


# --- construction ------------------------------------------------------------


def build_mention_graph(tweets: Iterable, agency_types: Mapping[str, str] | None = None) -> MentionGraph:
    """Directed mention graph over all authors and all mentioned handles."""
    tweet_count: Counter = Counter()
    weights: Counter = Counter()
    mentioned = set()
    for t in tweets:
        tweet_count[t.author_handle] += 1
        for h in t.mentions:
            if h != t.author_handle:
                weights[(t.author_handle, h)] += 1
                mentioned.add(h)
    g = nx.DiGraph()
    for node in sorted(set(tweet_count) | mentioned):
        g.add_node(node, tweet_count=tweet_count.get(node, 0))
    for (u, v), w in sorted(weights.items()):
        g.add_edge(u, v, weight=w)
    if agency_types:
        set_agency_types(g, agency_types)
    return g


def set_agency_types(g: MentionGraph, agency_types: Mapping[str, str]) -> None:
    for handle, kind in agency_types.items():
        h = handle.lstrip("@").lower()
        if h in g:
            g.nodes[h]["agency_type"] = kind


def load_agency_types(path: str | Path) -> dict[str, str]:
    """Read the optional ``handle,agency_type`` node-attribute CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"handle", "agency_type"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected header handle,agency_type")
        return {row["handle"].lstrip("@").lower(): row["agency_type"] for row in reader if row["handle"]}


def undirected_view(g: MentionGraph) -> nx.Graph:
    """Undirected simple graph; a reciprocated pair gets the summed weight."""
    u = nx.Graph()
    u.add_nodes_from(sorted(g.nodes))
    for a, b, w in sorted(g.edges(data="weight", default=1)):
        if u.has_edge(a, b):
            u[a][b]["weight"] += w
        else:
            u.add_edge(a, b, weight=w)
    return u


# --- components ----------------------------------------------------------------


def weak_components(g: MentionGraph) -> Partition:
    return _labeled(nx.weakly_connected_components(g), "component")


def induced_subgraph(g: MentionGraph, nodes: Iterable[str]) -> MentionGraph:
    nodes = set(nodes)
    unknown = sorted(n for n in nodes if n not in g)
    if unknown:
        raise ContractError(f"nodes not in graph: {unknown[:5]}")
    sub = nx.DiGraph()
    for n in sorted(nodes):
        sub.add_node(n, **g.nodes[n])
    for u, v, data in g.edges(data=True):
        if u in nodes and v in nodes:
            sub.add_edge(u, v, **data)
    return sub


def largest_component(g: MentionGraph) -> list[str]:
    """Members of the biggest weak component (ties: smallest member handle)."""
    groups = weak_components(g).groups
    if not groups:
        return []
    return min(groups, key=lambda grp: (-len(grp), grp[0]))


# --- path weights ------------------------------------------------------------------


def spectral_radius(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def path_weight_matrix(A: np.ndarray, a: float) -> np.ndarray:
    """Attenuated path counts ``sum_l (aA)^l = (I - aA)^-1``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError("adjacency must be square")
    if not a > 0:
        raise ContractError("attenuation must be positive")
    rho = spectral_radius(A)
    if a * rho >= 1.0:
        raise DivergenceError(
            f"path series diverges: a * rho(A) = {a} * {rho:.6g} = {a * rho:.6g} >= 1; "
            f"use a < {1.0 / rho:.6g}"
        )
    n = A.shape[0]
    M = np.eye(n) - a * A
    try:
        W = np.linalg.solve(M, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"I - aA is singular (n={n}, a={a}, rho={rho:.6g})") from exc
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"I - aA is ill-conditioned (cond={cond:.3g}, a={a}, rho={rho:.6g})")
    return W


# --- communities ----------------------------------------------------------------------


def modularity(g: MentionGraph | nx.Graph, partition: Partition | Sequence[Iterable[str]],
               resolution: float = 1.0) -> float:
    """Weighted modularity of the undirected view."""
    u = g if isinstance(g, nx.Graph) and not g.is_directed() else undirected_view(g)
    groups = partition.groups if isinstance(partition, Partition) else [set(c) for c in partition]
    m = u.size(weight="weight")
    if m == 0:
        return 0.0
    deg = dict(u.degree(weight="weight"))
    q = 0.0
    for grp in groups:
        grp = set(grp)
        inside = sum(w for a, b, w in u.edges(grp, data="weight") if a in grp and b in grp)
        tot = sum(deg[n] for n in grp)
        q += inside / m - resolution * (tot / (2 * m)) ** 2
    return q


def default_attenuation(A: np.ndarray) -> float:
    rho = spectral_radius(A)
    return 0.5 / rho if rho > 0 else 0.5


def _pathweight_communities(g: MentionGraph, resolution: float, attenuation: float | None):
    u = undirected_view(g)
    nodes = list(u.nodes)
    n = len(nodes)
    A = nx.to_numpy_array(u, nodelist=nodes, weight=None)
    a = default_attenuation(A) if attenuation is None else attenuation
    W = path_weight_matrix(A, a)
    S = W + W.T

    iu, ju = np.triu_indices(n, k=1)
    order = sorted(range(len(iu)), key=lambda k: (-S[iu[k], ju[k]], nodes[iu[k]], nodes[ju[k]]))

    m = u.size(weight="weight")
    deg = dict(u.degree(weight="weight"))
    parent = list(range(n))
    inside = [0.0] * n
    total = [float(deg[x]) for x in nodes]
    between: list[dict[int, float]] = [{} for _ in range(n)]
    pos = {name: i for i, name in enumerate(nodes)}
    for a_, b_, w in u.edges(data="weight"):
        i, j = pos[a_], pos[b_]
        between[i][j] = between[i].get(j, 0.0) + w
        between[j][i] = between[j].get(i, 0.0) + w

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def q_of(root):
        if m == 0:
            return 0.0
        return inside[root] / m - resolution * (total[root] / (2 * m)) ** 2

    q = sum(q_of(i) for i in range(n))
    best_q, best_step = q, 0
    merges = []
    for k in order:
        ri, rj = find(iu[k]), find(ju[k])
        if ri == rj:
            continue
        before = q_of(ri) + q_of(rj)
        if len(between[ri]) < len(between[rj]):
            ri, rj = rj, ri
        link = between[ri].pop(rj, 0.0)
        between[rj].pop(ri, None)
        for other, w in between[rj].items():
            between[ri][other] = between[ri].get(other, 0.0) + w
            between[other][ri] = between[other].get(ri, 0.0) + w
            del between[other][rj]
        between[rj] = {}
        parent[rj] = ri
        inside[ri] += inside[rj] + link
        total[ri] += total[rj]
        q += q_of(ri) - before
        merges.append((iu[k], ju[k]))
        if q > best_q + 1e-12:
            best_q, best_step = q, len(merges)
        if len(merges) == n - 1:
            break

    # replay the dendrogram up to the best cut
    parent = list(range(n))
    for i, j in merges[:best_step]:
        parent[find(i)] = find(j)
    groups: dict[int, list[str]] = {}
    for i, name in enumerate(nodes):
        groups.setdefault(find(i), []).append(name)
    return list(groups.values())


def detect_communities(
    g: MentionGraph,
    method: str = "modularity",
    resolution: float = 1.0,
    seed: int = 0,
    attenuation: float | None = None,
) -> Partition:
    """Partition ``g`` into communities.

    ``"modularity"`` runs multi-level (Louvain) modularity maximization on
    the weighted undirected view. ``"pathweight"`` merges node pairs in
    decreasing order of attenuated path weight ``W_ij + W_ji`` and cuts the
    merge sequence where modularity peaks.
    """
    if g.number_of_nodes() == 0:
        raise ContractError("community detection needs a non-empty graph")
    if method == "modularity":
        groups = nx.community.louvain_communities(
            undirected_view(g), weight="weight", resolution=resolution, seed=seed
        )
    elif method == "pathweight":
        groups = _pathweight_communities(g, resolution, attenuation)
    else:
        raise ConfigError(f"unknown community method {method!r}")
    return _labeled(groups, "community")


# --- metrics ----------------------------------------------------------------------------


def density_from_counts(n: int, e: int) -> float:
    if n < 2:
        raise ContractError(f"density undefined for {n} node(s)")
    return e / (n * (n - 1))


def average_degree_from_counts(n: int, e: int) -> float:
    if n < 1:
        raise ContractError("average degree undefined for an empty graph")
    return e / n


def density(g: MentionGraph) -> float:
    return density_from_counts(g.number_of_nodes(), g.number_of_edges())


def average_degree(g: MentionGraph) -> float:
    """Directed edges per node, E / N."""
    return average_degree_from_counts(g.number_of_nodes(), g.number_of_edges())


def diameter(g: MentionGraph) -> int:
    """Longest shortest path in the undirected view of the largest weak component."""
    if g.number_of_nodes() == 0:
        raise ContractError("diameter undefined for an empty graph")
    core = largest_component(g)
    if len(core) == 1:
        return 0
    u = nx.Graph(g.subgraph(core).to_undirected(as_view=True))
    return nx.diameter(u)


def total_degree(g: MentionGraph) -> dict[str, int]:
    return {n: g.in_degree(n) + g.out_degree(n) for n in g.nodes}


def top_nodes(g: MentionGraph, partition: Partition, k: int) -> list[list[tuple[str, int]]]:
    """Per group, the ``k`` nodes with the highest unweighted in+out degree."""
    if k < 1:
        raise ContractError("k must be >= 1")
    deg = total_degree(g)
    return [
        sorted(((n, deg[n]) for n in grp), key=lambda x: (-x[1], x[0]))[:k]
        for grp in partition.groups
    ]


def group_metrics(g: MentionGraph, nodes: Sequence[str], group: int, kind: str) -> GroupMetrics:
    sub = induced_subgraph(g, nodes)
    n, e = sub.number_of_nodes(), sub.number_of_edges()
    return GroupMetrics(
        group=group,
        kind=kind,
        nodes=n,
        edges=e,
        density=density_from_counts(n, e) if n >= 2 else None,
        avg_degree=average_degree_from_counts(n, e) if n >= 1 else None,
        diameter=diameter(sub) if n >= 1 else 0,
    )


def summarize(g: MentionGraph, partition: Partition) -> Partition:
    partition.summaries = [
        group_metrics(g, grp, i, partition.kind) for i, grp in enumerate(partition.groups)
    ]
    return partition


METRICS_HEADER = ["group", "kind", "nodes", "edges", "density", "avg_degree", "diameter"]


def write_metrics_csv(rows: Iterable[GroupMetrics], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow(r.row())


# --- export -----------------------------------------------------------------------------

GEXF_NS = "http://www.gexf.net/1.2draft"


def _node_attributes(g: MentionGraph, partitions: Sequence[Partition]) -> dict[str, dict]:
    deg = total_degree(g)
    attrs = {}
    for n in sorted(g.nodes):
        a = {p.kind: p.labels.get(n, -1) for p in partitions}
        a["degree"] = deg[n]
        if "tweet_count" in g.nodes[n]:
            a["tweet_count"] = g.nodes[n]["tweet_count"]
        if "agency_type" in g.nodes[n]:
            a["agency_type"] = g.nodes[n]["agency_type"]
        attrs[n] = a
    return attrs


def _attribute_types(attrs: Mapping[str, Mapping]) -> list[tuple[str, str]]:
    order = ["component", "community", "degree", "tweet_count", "agency_type"]
    present = {k for a in attrs.values() for k in a}
    extra = sorted(present - set(order))
    return [
        (k, "string" if k == "agency_type" else "integer")
        for k in order + extra
        if k in present
    ]


def _edges(g: MentionGraph) -> list[tuple[str, str, int]]:
    return sorted((u, v, int(w)) for u, v, w in g.edges(data="weight", default=1))


def write_gexf(g: MentionGraph, partitions: Sequence[Partition], path: str | Path) -> None:
    attrs = _node_attributes(g, partitions)
    types = _attribute_types(attrs)
    root = ET.Element("gexf", {"xmlns": GEXF_NS, "version": "1.2"})
    graph = ET.SubElement(root, "graph", {"defaultedgetype": "directed", "mode": "static"})
    if types:
        decl = ET.SubElement(graph, "attributes", {"class": "node", "mode": "static"})
        for i, (name, kind) in enumerate(types):
            ET.SubElement(decl, "attribute", {"id": str(i), "title": name, "type": kind})
    nodes_el = ET.SubElement(graph, "nodes")
    for n, a in attrs.items():
        node_el = ET.SubElement(nodes_el, "node", {"id": n, "label": n})
        if types:
            vals = ET.SubElement(node_el, "attvalues")
            for i, (name, _) in enumerate(types):
                if name in a:
                    ET.SubElement(vals, "attvalue", {"for": str(i), "value": str(a[name])})
    edges_el = ET.SubElement(graph, "edges")
    for i, (u, v, w) in enumerate(_edges(g)):
        ET.SubElement(edges_el, "edge", {"id": str(i), "source": u, "target": v, "weight": str(w)})
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def read_gexf_nodes(path: str | Path) -> dict[str, dict[str, str]]:
    """Node attribute table of a GEXF written by :func:`write_gexf`."""
    ns = {"g": GEXF_NS}
    root = ET.parse(path).getroot()
    titles = {a.get("id"): a.get("title") for a in root.iterfind(".//g:attributes/g:attribute", ns)}
    out = {}
    for node in root.iterfind(".//g:nodes/g:node", ns):
        out[node.get("id")] = {
            titles[v.get("for")]: v.get("value") for v in node.iterfind("g:attvalues/g:attvalue", ns)
        }
    return out


def write_edge_csv(g: MentionGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        w.writerows(_edges(g))


def read_edge_csv(path: str | Path) -> MentionGraph:
    g = nx.DiGraph()
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            g.add_edge(row["source"], row["target"], weight=int(row["weight"]))
    return g


def _dot_id(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_dot(g: MentionGraph, partitions: Sequence[Partition], path: str | Path) -> None:
    attrs = _node_attributes(g, partitions)
    lines = ["digraph mentions {"]
    for n, a in attrs.items():
        body = ", ".join(f"{k}={_dot_id(v)}" for k, v in a.items())
        lines.append(f"  {_dot_id(n)} [{body}];")
    for u, v, w in _edges(g):
        lines.append(f"  {_dot_id(u)} -> {_dot_id(v)} [weight={w}];")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_graph(
    g: MentionGraph,
    partition: Partition | Sequence[Partition] | None,
    path: str | Path,
    fmt: str = "gexf",
) -> Path:
    """Write ``g`` as GEXF, CSV edge list or DOT with partition labels on nodes."""
    if partition is None:
        parts: list[Partition] = []
    elif isinstance(partition, Partition):
        parts = [partition]
    else:
        parts = list(partition)
    if fmt == "gexf":
        write_gexf(g, parts, path)
    elif fmt == "csv":
        write_edge_csv(g, path)
    elif fmt == "dot":
        write_dot(g, parts, path)
    else:
        raise ConfigError(f"unknown export format {fmt!r}")
    return Path(path)
