"""Word-adjacency graphs and the 13 graph features.

Nodes are distinct normalized word types; each consecutive token pair adds
one directed edge (multiplicities kept).  The feature set follows the
word-graph methodology used in speech-disorder studies: node/edge counts,
repeated and parallel edges, cycle counts for lengths 1-3 on the 0/1
adjacency, component sizes, average total degree, density, and diameter /
average shortest path over the largest weakly connected component
(undirected paths).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass
class WordGraph:
    nodes: list[str]
    edges: dict[tuple[int, int], int]   # (src, dst) -> multiplicity

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def total_multiplicity(self) -> int:
        return sum(self.edges.values())


def build_graph(tokens: list[str]) -> WordGraph:
    """One node per distinct token, one edge per adjacent pair."""
    index: dict[str, int] = {}
    nodes: list[str] = []
    for tok in tokens:
        if tok not in index:
            index[tok] = len(nodes)
            nodes.append(tok)
    edges: dict[tuple[int, int], int] = {}
    for a, b in zip(tokens, tokens[1:]):
        key = (index[a], index[b])
        edges[key] = edges.get(key, 0) + 1
    return WordGraph(nodes=nodes, edges=edges)


def _weak_components(n: int, edges: set[tuple[int, int]]) -> list[list[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def _strong_components(n: int, edges: set[tuple[int, int]]) -> list[list[int]]:
    """Iterative Kosaraju."""
    fwd: list[list[int]] = [[] for _ in range(n)]
    rev: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        fwd[u].append(v)
        rev[v].append(u)
    order: list[int] = []
    seen = [False] * n
    for start in range(n):
        if seen[start]:
            continue
        stack: list[tuple[int, int]] = [(start, 0)]
        seen[start] = True
        while stack:
            node, i = stack.pop()
            if i < len(fwd[node]):
                stack.append((node, i + 1))
                nxt = fwd[node][i]
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append((nxt, 0))
            else:
                order.append(node)
    comps = []
    assigned = [False] * n
    for start in reversed(order):
        if assigned[start]:
            continue
        comp = [start]
        assigned[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for v in rev[u]:
                if not assigned[v]:
                    assigned[v] = True
                    comp.append(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def _bfs_dists(adj: list[set[int]], start: int) -> dict[int, int]:
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def graph_features(g: WordGraph) -> dict[str, Optional[float]]:
    """The 13 speech-graph features; density/diameter/ASP are missing for
    graphs with at most one node."""
    n = g.n_nodes
    edge_set = set(g.edges.keys())
    feats: dict[str, Optional[float]] = {}
    feats["graph_nodes"] = float(n)
    feats["graph_edges"] = float(len(edge_set))
    feats["graph_repeated_edges"] = float(sum(1 for m in g.edges.values() if m >= 2))
    feats["graph_parallel_edges"] = float(sum(
        1 for (u, v) in edge_set if u < v and (v, u) in edge_set))

    # Cycle counts on the 0/1 adjacency (multiplicity ignored).
    feats["graph_l1"] = float(sum(1 for (u, v) in edge_set if u == v))
    feats["graph_l2"] = float(sum(1 for (u, v) in edge_set
                                  if u < v and (v, u) in edge_set))
    l3 = 0
    out: list[list[int]] = [[] for _ in range(n)]
    for u, v in edge_set:
        if u != v:
            out[u].append(v)
    for i in range(n):
        for j in out[i]:
            for k in out[j]:
                if k != i and (k, i) in edge_set:
                    l3 += 1
    feats["graph_l3"] = l3 / 3.0

    if n == 0:
        feats["graph_lcc"] = 0.0
        feats["graph_lsc"] = 0.0
    else:
        weak = _weak_components(n, edge_set)
        strong = _strong_components(n, edge_set)
        feats["graph_lcc"] = float(max(len(c) for c in weak))
        feats["graph_lsc"] = float(max(len(c) for c in strong))
    feats["graph_atd"] = (2.0 * len(edge_set) / n) if n else None
    feats["graph_density"] = (len(edge_set) / (n * (n - 1))) if n > 1 else None

    diameter = asp = None
    if n > 1:
        weak = _weak_components(n, edge_set)
        lcc = max(weak, key=len)
        if len(lcc) > 1:
            adj: list[set[int]] = [set() for _ in range(n)]
            for u, v in edge_set:
                if u != v:
                    adj[u].add(v)
                    adj[v].add(u)
            dists = []
            for u in lcc:
                du = _bfs_dists(adj, u)
                dists.extend(d for v, d in du.items() if v != u)
            if dists:
                diameter = float(max(dists))
                asp = sum(dists) / len(dists)
    feats["graph_diameter"] = diameter
    feats["graph_asp"] = asp
    return feats


GRAPH_FEATURE_NAMES = [
    "graph_nodes", "graph_edges", "graph_repeated_edges", "graph_parallel_edges",
    "graph_l1", "graph_l2", "graph_l3", "graph_lcc", "graph_lsc",
    "graph_atd", "graph_density", "graph_diameter", "graph_asp",
]
