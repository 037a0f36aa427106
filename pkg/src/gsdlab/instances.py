"""Planted-solution Ising instances built from frustrated loop terms.

The cost function is ``E(s) = sum_{<ij>} J_ij s_i s_j + sum_i h_i s_i`` with
``s_i = +-1`` and integer couplings.  A planted instance is a sum of local
cycle terms, each minimized by the planted configuration, so the global
ground energy is the sum of the per-term minima and is known at build time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InputError
from .topology import Graph

Edge = tuple[int, int]


def config_to_int(config: np.ndarray) -> int:
    """Pack a +-1 spin vector into a bitmask (bit i set iff spin i is +1)."""
    x = 0
    for i, s in enumerate(config):
        if s > 0:
            x |= 1 << i
    return x


def int_to_config(x: int, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.int8)
    for i in range(n):
        out[i] = 1 if (x >> i) & 1 else -1
    return out


def flip_all(config: np.ndarray) -> np.ndarray:
    return (-config).astype(np.int8)


@dataclass
class IsingInstance:
    """Couplings and optional local fields on a fixed graph."""

    graph: Graph
    couplings: dict[Edge, int]
    fields: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        edge_set = set(self.graph.edges)
        for e in self.couplings:
            if e not in edge_set:
                raise InputError(f"coupling on non-edge {e}")
        for v in self.fields:
            if not 0 <= v < self.graph.vertex_count:
                raise InputError(f"field on unknown vertex {v}")
        self._build_arrays()

    def _build_arrays(self) -> None:
        n = self.graph.vertex_count
        edges = sorted(self.couplings)
        self.edge_index = np.array(
            [(i, j) for i, j in edges], dtype=np.int64
        ).reshape(-1, 2)
        self.edge_weight = np.array(
            [self.couplings[e] for e in edges], dtype=np.int64
        )
        self.field_vector = np.zeros(n, dtype=np.int64)
        for v, h in self.fields.items():
            self.field_vector[v] = h
        # per-vertex incident couplings, for O(degree) flip updates
        nbrs: list[list[int]] = [[] for _ in range(n)]
        wts: list[list[int]] = [[] for _ in range(n)]
        for (i, j), w in zip(edges, self.edge_weight):
            nbrs[i].append(j)
            wts[i].append(int(w))
            nbrs[j].append(i)
            wts[j].append(int(w))
        self.neighbor_index = [np.array(a, dtype=np.int64) for a in nbrs]
        self.neighbor_weight = [np.array(a, dtype=np.int64) for a in wts]

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    @property
    def has_fields(self) -> bool:
        return bool(np.any(self.field_vector))


@dataclass(frozen=True)
class LocalTerm:
    """A small connected term; ``min_energy`` is its exact minimum."""

    support: tuple[int, ...]
    couplings: dict[Edge, int]
    min_energy: int

    def energy_of(self, assignment: dict[int, int]) -> int:
        return sum(w * assignment[i] * assignment[j] for (i, j), w in self.couplings.items())


@dataclass
class PlantedInstance:
    instance: IsingInstance
    terms: list[LocalTerm]
    planted: np.ndarray
    ground_energy: int


def energy(instance: IsingInstance, config: np.ndarray) -> int:
    """Total energy of ``config``; exact integer arithmetic."""
    if len(config) != instance.vertex_count:
        raise InputError(
            f"config length {len(config)} != vertex count {instance.vertex_count}"
        )
    s = np.asarray(config, dtype=np.int64)
    if instance.edge_index.size:
        e = int(np.sum(instance.edge_weight * s[instance.edge_index[:, 0]] * s[instance.edge_index[:, 1]]))
    else:
        e = 0
    return e + int(np.dot(instance.field_vector, s))


def batch_energies(instance: IsingInstance, configs: np.ndarray) -> np.ndarray:
    """Energies of many configurations at once; configs has shape (R, N)."""
    if configs.shape[1] != instance.vertex_count:
        raise InputError("configuration width does not match vertex count")
    s = configs.astype(np.int64)
    if instance.edge_index.size:
        e = (
            instance.edge_weight
            * s[:, instance.edge_index[:, 0]]
            * s[:, instance.edge_index[:, 1]]
        ).sum(axis=1)
    else:
        e = np.zeros(len(configs), dtype=np.int64)
    return e + s @ instance.field_vector


def delta_energy(instance: IsingInstance, config: np.ndarray, flip_vertex: int) -> int:
    """Energy change from flipping one spin, computed from incident couplings."""
    n = instance.vertex_count
    if not 0 <= flip_vertex < n:
        raise InputError(f"vertex {flip_vertex} out of range")
    s = config
    local = int(
        np.dot(
            instance.neighbor_weight[flip_vertex],
            np.asarray(s, dtype=np.int64)[instance.neighbor_index[flip_vertex]],
        )
    ) + int(instance.field_vector[flip_vertex])
    return -2 * int(s[flip_vertex]) * local


def _random_cycle(
    graph: Graph,
    adjacency: list[list[int]],
    rng: np.random.Generator,
    min_len: int,
    max_len: int,
    max_steps: int,
) -> list[int] | None:
    """One random-walk attempt at a cycle with ``min_len <= length <= max_len``.

    The walk never backtracks along the edge it just used; it closes as soon
    as it revisits any vertex on its path.  Returns the cycle's vertex list or
    None when the attempt fails.
    """
    start = int(rng.integers(graph.vertex_count))
    path = [start]
    position = {start: 0}
    prev = -1
    for _ in range(max_steps):
        here = path[-1]
        options = [v for v in adjacency[here] if v != prev]
        if not options:
            return None
        nxt = options[int(rng.integers(len(options)))]
        if nxt in position:
            cycle = path[position[nxt]:]
            if min_len <= len(cycle) <= max_len:
                return cycle
            return None
        position[nxt] = len(path)
        path.append(nxt)
        prev = here
    return None


def generate_planted(
    graph: Graph,
    clause_density: float,
    loop_length_limit: int,
    rng_seed: int,
    retry_budget: int = 1000,
) -> PlantedInstance:
    """Generate a frustrated-loop instance around a random planted solution.

    Draws ``ceil(clause_density * N)`` cycle terms by random walks; each term
    gets +-1 couplings that the planted configuration satisfies on every edge
    except one deliberately frustrated edge, making the term minimum
    ``-(len - 2)`` and the planted configuration a simultaneous minimizer of
    every term.
    """
    n = graph.vertex_count
    if clause_density < 0:
        raise InputError("clause_density must be non-negative")
    if loop_length_limit < 4:
        raise InputError("loop_length_limit must be at least 4")
    n_terms = math.ceil(clause_density * n)
    rng = np.random.default_rng(rng_seed)
    planted = np.where(rng.random(n) < 0.5, -1, 1).astype(np.int8)
    if n_terms == 0:
        instance = IsingInstance(graph=graph, couplings={})
        return PlantedInstance(instance=instance, terms=[], planted=planted, ground_energy=0)
    if n < 4 or len(graph.edges) < 4:
        raise InputError("graph too small to host a length-4 cycle")

    adjacency = graph.adjacency
    max_steps = max(8 * loop_length_limit, 64)
    terms: list[LocalTerm] = []
    summed: dict[Edge, int] = {}
    attempts = 0
    while len(terms) < n_terms:
        attempts += 1
        if attempts > retry_budget * n_terms:
            raise GenerationError(
                f"failed to draw {n_terms} cycles within {attempts - 1} walk attempts"
            )
        cycle = _random_cycle(graph, adjacency, rng, 4, loop_length_limit, max_steps)
        if cycle is None:
            continue
        length = len(cycle)
        term_couplings: dict[Edge, int] = {}
        edges = []
        for a in range(length):
            u, w = cycle[a], cycle[(a + 1) % length]
            e = (u, w) if u < w else (w, u)
            edges.append(e)
            term_couplings[e] = -int(planted[u]) * int(planted[w])
        frustrated = edges[int(rng.integers(length))]
        term_couplings[frustrated] = -term_couplings[frustrated]
        terms.append(
            LocalTerm(
                support=tuple(cycle),
                couplings=term_couplings,
                min_energy=-(length - 2),
            )
        )
        for e, w in term_couplings.items():
            summed[e] = summed.get(e, 0) + w

    couplings = {e: w for e, w in sorted(summed.items()) if w != 0}
    instance = IsingInstance(graph=graph, couplings=couplings)
    ground = sum(t.min_energy for t in terms)
    return PlantedInstance(instance=instance, terms=terms, planted=planted, ground_energy=ground)


# ---------------------------------------------------------------------------
# file formats


def save_instance(instance: IsingInstance, path) -> None:
    lines = [f"ising {instance.vertex_count}"]
    for (i, j), w in sorted(instance.couplings.items()):
        lines.append(f"c {i} {j} {w}")
    for v, h in sorted(instance.fields.items()):
        if h:
            lines.append(f"f {v} {h}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> IsingInstance:
    couplings: dict[Edge, int] = {}
    fields: dict[int, int] = {}
    n = None
    with open(path) as fh:
        for raw in fh:
            tokens = raw.split()
            if not tokens:
                continue
            if tokens[0] == "ising":
                n = int(tokens[1])
            elif tokens[0] == "c":
                i, j, w = int(tokens[1]), int(tokens[2]), int(tokens[3])
                couplings[(min(i, j), max(i, j))] = w
            elif tokens[0] == "f":
                fields[int(tokens[1])] = int(tokens[2])
            else:
                raise InputError(f"{path}: unknown record {tokens[0]!r}")
    if n is None:
        raise InputError(f"{path}: missing 'ising <N>' header")
    graph = Graph(vertex_count=n, edges=tuple(sorted(couplings)))
    return IsingInstance(graph=graph, couplings=couplings, fields=fields)


def save_planted(planted: PlantedInstance, path) -> None:
    tokens = " ".join(f"{int(s):+d}" for s in planted.planted)
    with open(path, "w") as fh:
        fh.write(f"planted {len(planted.planted)} {planted.ground_energy}\n{tokens}\n")


def load_planted(path) -> tuple[np.ndarray, int]:
    with open(path) as fh:
        header = fh.readline().split()
        tokens = fh.read().split()
    if len(header) != 3 or header[0] != "planted":
        raise InputError(f"{path}: expected 'planted <N> <E0>' header")
    n, e0 = int(header[1]), int(header[2])
    if len(tokens) != n:
        raise InputError(f"{path}: expected {n} spin tokens, found {len(tokens)}")
    config = np.array([1 if int(t) > 0 else -1 for t in tokens], dtype=np.int8)
    return config, e0


def save_terms(terms: list[LocalTerm], path) -> None:
    blocks = []
    for t in terms:
        lines = [f"term {len(t.support)} {t.min_energy}", " ".join(map(str, t.support))]
        for (i, j), w in sorted(t.couplings.items()):
            lines.append(f"{i} {j} {w}")
        blocks.append("\n".join(lines))
    with open(path, "w") as fh:
        fh.write("\n\n".join(blocks) + "\n")


def load_terms(path) -> list[LocalTerm]:
    with open(path) as fh:
        text = fh.read()
    terms = []
    for block in text.split("\n\n"):
        lines = [ln for ln in block.splitlines() if ln.strip()]
        if not lines:
            continue
        head = lines[0].split()
        if head[0] != "term" or len(head) != 3:
            raise InputError(f"{path}: bad term header {lines[0]!r}")
        size, min_energy = int(head[1]), int(head[2])
        support = tuple(int(t) for t in lines[1].split())
        if len(support) != size:
            raise InputError(f"{path}: support size mismatch")
        couplings: dict[Edge, int] = {}
        for ln in lines[2:]:
            i, j, w = ln.split()
            couplings[(min(int(i), int(j)), max(int(i), int(j)))] = int(w)
        terms.append(LocalTerm(support=support, couplings=couplings, min_energy=min_energy))
    return terms
