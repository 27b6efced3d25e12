"""Undirected-graph combinatorics and DAG utilities.

Vertices are labelled ``1..m``.  Arcs of a directed graph must respect
the labelling (``i -> j`` implies ``i < j``), which makes every stored
digraph acyclic by construction.  All enumeration functions produce
deterministic, sorted output so that downstream solvers and the CLI are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import networkx as nx

from .errors import IndexOutOfRange, NotTopological


def _check_vertex(v, m: int) -> int:
    i = int(v)
    if i != v or not 1 <= i <= m:
        raise IndexOutOfRange(f"vertex {v!r} outside 1..{m}")
    return i


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 1..m.

    Edges are stored as a frozenset of pairs ``(i, j)`` with ``i < j``;
    any iterable of pairs (in either orientation) is accepted.
    """

    m: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise IndexOutOfRange(f"vertex count must be >= 1, got {self.m!r}")
        norm = set()
        for e in self.edges:
            i, j = e
            i = _check_vertex(i, self.m)
            j = _check_vertex(j, self.m)
            if i == j:
                raise IndexOutOfRange(f"loop edge ({i}, {j}) not allowed")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(range(1, self.m + 1))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, v: int) -> set[int]:
        _check_vertex(v, self.m)
        out = set()
        for i, j in self.edges:
            if i == v:
                out.add(j)
            elif j == v:
                out.add(i)
        return out

    def is_complete(self) -> bool:
        return len(self.edges) == self.m * (self.m - 1) // 2

    def to_networkx(self) -> "nx.Graph":
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g


@dataclass(frozen=True)
class Digraph:
    """Directed graph on vertices 1..m with arcs ``(i, j)``, ``i < j``.

    The labelling constraint is validated at construction and makes the
    graph acyclic; arcs that run against the labelling raise
    :class:`NotTopological`.
    """

    m: int
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise IndexOutOfRange(f"vertex count must be >= 1, got {self.m!r}")
        norm = set()
        for e in self.arcs:
            i, j = e
            i = _check_vertex(i, self.m)
            j = _check_vertex(j, self.m)
            if i == j:
                raise IndexOutOfRange(f"loop arc ({i}, {j}) not allowed")
            if i > j:
                raise NotTopological(
                    f"arc ({i}, {j}) runs against the vertex labelling")
            norm.add((i, j))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "arcs", frozenset(norm))

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(range(1, self.m + 1))

    def sorted_arcs(self) -> list[tuple[int, int]]:
        return sorted(self.arcs)

    def parents(self, k: int) -> list[int]:
        _check_vertex(k, self.m)
        return sorted(i for i, j in self.arcs if j == k)

    def children(self, k: int) -> list[int]:
        _check_vertex(k, self.m)
        return sorted(j for i, j in self.arcs if i == k)


@dataclass(frozen=True)
class Decomposition:
    """A split (U, T, W) of a vertex set across a clique separator T."""

    U: tuple[int, ...]
    T: tuple[int, ...]
    W: tuple[int, ...]


def maximal_cliques(G: Graph) -> list[tuple[int, ...]]:
    """All maximal cliques, each sorted, listed lexicographically."""
    cliques = [tuple(sorted(c)) for c in nx.find_cliques(G.to_networkx())]
    return sorted(cliques)


def is_chordal(G: Graph) -> tuple[bool, Optional[tuple[int, ...]]]:
    """Chordality test via maximum cardinality search.

    Returns ``(True, order)`` where ``order`` is a perfect elimination
    ordering produced by reversing the search, or ``(False, None)``.
    Ties in the search are broken towards the smallest vertex label, so
    the order is deterministic.
    """
    m = G.m
    nbrs = {v: G.neighbors(v) for v in G.vertices}
    weight = {v: 0 for v in G.vertices}
    unpicked = set(G.vertices)
    picked: list[int] = []
    while unpicked:
        z = min(unpicked, key=lambda v: (-weight[v], v))
        picked.append(z)
        unpicked.remove(z)
        for y in nbrs[z] & unpicked:
            weight[y] += 1
    order = tuple(reversed(picked))
    pos = {v: k for k, v in enumerate(order)}
    for v in order:
        later = {u for u in nbrs[v] if pos[u] > pos[v]}
        if not later:
            continue
        u0 = min(later, key=pos.__getitem__)
        if not (later - {u0}) <= nbrs[u0]:
            return False, None
    return True, order


def _all_cliques(G: Graph) -> list[tuple[int, ...]]:
    """Every clique of G (including the empty one), sorted by size then lex."""
    out = [tuple(sorted(c))
           for c in nx.enumerate_all_cliques(G.to_networkx())]
    out.append(())
    return sorted(out, key=lambda c: (len(c), c))


def find_reducible_decomposition(G: Graph) -> Optional[Decomposition]:
    """Search for a clique separator and split the graph across it.

    Candidate separators are enumerated by increasing size, ties broken
    lexicographically, so the returned separator is a smallest clique
    separator with the lexicographically least vertex set.  The U side
    is the component of ``G - T`` containing the smallest vertex; every
    remaining component goes to the W side.  Returns ``None`` when no
    clique separator exists (in particular for complete graphs).
    """
    vertices = set(G.vertices)
    for T in _all_cliques(G):
        rest = vertices - set(T)
        if len(rest) < 2:
            continue
        sub = G.to_networkx().subgraph(rest)
        comps = [set(c) for c in nx.connected_components(sub)]
        if len(comps) < 2:
            continue
        comps.sort(key=min)
        U = tuple(sorted(comps[0] | set(T)))
        W = tuple(sorted((rest - comps[0]) | set(T)))
        return Decomposition(U=U, T=tuple(T), W=W)
    return None


def induced_subgraph(G: Graph, vertices: Iterable[int]) -> Graph:
    """Induced subgraph on ``vertices``, relabelled 1..k in sorted order."""
    vs = sorted({_check_vertex(v, G.m) for v in vertices})
    relabel = {v: k + 1 for k, v in enumerate(vs)}
    edges = {(relabel[i], relabel[j]) for i, j in G.edges
             if i in relabel and j in relabel}
    return Graph(len(vs), frozenset(edges))


class Trek(NamedTuple):
    """A collider-free path between two vertices of a DAG.

    ``up`` is the directed edge list from the top vertex down to the
    first endpoint, ``down`` the edge list from the top to the second
    endpoint; the two directed paths share no vertex besides the top.
    """

    top: int
    up: tuple[tuple[int, int], ...]
    down: tuple[tuple[int, int], ...]


def _directed_paths(children: dict, t: int, x: int) -> list[tuple]:
    """All directed paths t -> ... -> x as tuples of arcs."""
    if t == x:
        return [()]
    out = []
    for c in children[t]:
        for rest in _directed_paths(children, c, x):
            out.append(((t, c),) + rest)
    return out


def _path_vertices(t: int, path: tuple) -> set[int]:
    vs = {t}
    for _, head in path:
        vs.add(head)
    return vs


def list_treks(dag: Digraph, i: int, j: int) -> list[Trek]:
    """Enumerate all treks between vertices i and j.

    A trek is formed by a pair of directed paths out of a common top
    vertex, one ending at ``i`` and one at ``j``, sharing only the top;
    equivalently, a simple collider-free path between the endpoints.
    ``list_treks(dag, i, i)`` is the single trivial trek at ``i``.
    """
    topological_order(dag)
    _check_vertex(i, dag.m)
    _check_vertex(j, dag.m)
    children = {v: dag.children(v) for v in dag.vertices}
    treks = []
    for t in dag.vertices:
        ups = _directed_paths(children, t, i)
        downs = _directed_paths(children, t, j)
        if not ups or not downs:
            continue
        for up in ups:
            uvs = _path_vertices(t, up)
            for down in downs:
                if uvs & _path_vertices(t, down) == {t}:
                    treks.append(Trek(top=t, up=up, down=down))
    treks.sort()
    return treks


def topological_order(dag: Digraph) -> tuple[int, ...]:
    """Identity order 1..m after validating the labelling constraint."""
    for i, j in dag.arcs:
        if i >= j:
            raise NotTopological(
                f"arc ({i}, {j}) runs against the vertex labelling")
    return dag.vertices


def graph_from_json(obj) -> Graph:
    """Decode ``{"m": ..., "edges": [[i, j], ...]}``."""
    if not isinstance(obj, dict) or "m" not in obj:
        raise IndexOutOfRange('graph JSON needs "m" and "edges"')
    return Graph(obj["m"], frozenset(tuple(e) for e in obj.get("edges", [])))


def graph_to_json(G: Graph) -> dict:
    return {"m": G.m, "edges": [list(e) for e in G.sorted_edges()]}


def digraph_from_json(obj) -> Digraph:
    """Decode ``{"m": ..., "arcs": [[i, j], ...]}``."""
    if not isinstance(obj, dict) or "m" not in obj:
        raise IndexOutOfRange('digraph JSON needs "m" and "arcs"')
    return Digraph(obj["m"], frozenset(tuple(a) for a in obj.get("arcs", [])))


def digraph_to_json(dag: Digraph) -> dict:
    return {"m": dag.m, "arcs": [list(a) for a in dag.sorted_arcs()]}
