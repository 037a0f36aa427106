"""Interaction graphs: Chimera lattices and generic edge lists.

Vertex numbering for Chimera is row-major over unit cells; within a cell the
left half occupies local indices 0..k-1 and the right half k..2k-1.  Left-half
vertices couple vertically to the same local index in the adjacent-row cell,
right-half vertices horizontally to the adjacent-column cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InputError


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with compact 0-based vertex indices.

    ``original_ids`` remembers, for every compacted vertex, its index in the
    graph it was derived from (identity for freshly built graphs).
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    original_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise InputError(f"self-loop at vertex {i}")
            if not (0 <= i < self.vertex_count and 0 <= j < self.vertex_count):
                raise InputError(f"edge ({i},{j}) out of range")
            if i > j:
                raise InputError(f"edge ({i},{j}) not stored as (min,max)")
            if (i, j) in seen:
                raise InputError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
        if not self.original_ids:
            object.__setattr__(self, "original_ids", tuple(range(self.vertex_count)))
        elif len(self.original_ids) != self.vertex_count:
            raise InputError("original_ids length does not match vertex_count")

    @property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for nbrs in adj:
            nbrs.sort()
        return adj

    def degree_histogram(self) -> dict[int, int]:
        counts = [0] * self.vertex_count
        for i, j in self.edges:
            counts[i] += 1
            counts[j] += 1
        hist: dict[int, int] = {}
        for d in counts:
            hist[d] = hist.get(d, 0) + 1
        return hist


@dataclass(frozen=True)
class ChimeraSpec:
    """An m x n grid of K_{k,k} unit cells with an optional dead-vertex list."""

    rows: int
    cols: int
    k: int
    dead_vertices: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1 or self.k < 1:
            raise InputError("Chimera dimensions must be >= 1")
        object.__setattr__(self, "dead_vertices", tuple(self.dead_vertices))

    @property
    def ideal_vertex_count(self) -> int:
        return self.rows * self.cols * 2 * self.k


def _sorted_edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def build_chimera(spec: ChimeraSpec) -> Graph:
    """Build the Chimera graph for ``spec``, removing its dead vertices.

    Each unit cell is a complete bipartite K_{k,k}; inter-cell couplers join
    left halves vertically and right halves horizontally.  Dead vertices are
    deleted and indices compacted, keeping the ideal index in
    ``original_ids``.
    """
    m, n, k = spec.rows, spec.cols, spec.k
    nv = spec.ideal_vertex_count
    for v in spec.dead_vertices:
        if not 0 <= v < nv:
            raise InputError(f"dead vertex {v} out of range for {nv}-vertex graph")

    def vid(r: int, c: int, local: int) -> int:
        return (r * n + c) * 2 * k + local

    edges = []
    for r in range(m):
        for c in range(n):
            for a in range(k):
                for b in range(k):
                    edges.append(_sorted_edge(vid(r, c, a), vid(r, c, k + b)))
            if r + 1 < m:
                for a in range(k):
                    edges.append(_sorted_edge(vid(r, c, a), vid(r + 1, c, a)))
            if c + 1 < n:
                for b in range(k):
                    edges.append(_sorted_edge(vid(r, c, k + b), vid(r, c + 1, k + b)))
    full = Graph(vertex_count=nv, edges=tuple(sorted(edges)))
    if not spec.dead_vertices:
        return full
    return remove_vertices(full, list(spec.dead_vertices))


def remove_vertices(graph: Graph, victims: list[int]) -> Graph:
    """Induced subgraph on the surviving vertices, with compacted indices."""
    victim_set = set(victims)
    for v in victim_set:
        if not 0 <= v < graph.vertex_count:
            raise InputError(f"unknown vertex {v}")
    keep = [v for v in range(graph.vertex_count) if v not in victim_set]
    remap = {old: new for new, old in enumerate(keep)}
    edges = tuple(
        sorted(
            _sorted_edge(remap[i], remap[j])
            for i, j in graph.edges
            if i in remap and j in remap
        )
    )
    original = tuple(graph.original_ids[v] for v in keep)
    return Graph(vertex_count=len(keep), edges=edges, original_ids=original)


def save_graph(graph: Graph, path) -> None:
    """Write the text format: ``vertices <n>`` then one ``i j`` line per edge."""
    lines = [f"vertices {graph.vertex_count}"]
    for i, j in sorted(graph.edges):
        lines.append(f"{i} {j}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2 or tokens[0] != "vertices":
        raise InputError(f"{path}: expected 'vertices <n>' header")
    try:
        nv = int(tokens[1])
        flat = [int(t) for t in tokens[2:]]
    except ValueError as exc:
        raise InputError(f"{path}: non-integer token") from exc
    if len(flat) % 2:
        raise InputError(f"{path}: odd number of edge endpoints")
    edges = tuple(
        sorted(_sorted_edge(flat[i], flat[i + 1]) for i in range(0, len(flat), 2))
    )
    return Graph(vertex_count=nv, edges=edges)
