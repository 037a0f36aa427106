import numpy as np
import pytest

from gsdlab.instances import IsingInstance, generate_planted
from gsdlab.topology import ChimeraSpec, Graph, build_chimera


@pytest.fixture
def two_spin_ferromagnet() -> IsingInstance:
    graph = Graph(vertex_count=2, edges=((0, 1),))
    return IsingInstance(graph=graph, couplings={(0, 1): -1})


@pytest.fixture
def chimera_cell() -> Graph:
    """A single K_{4,4} cell: 8 vertices, 16 edges."""
    return build_chimera(ChimeraSpec(rows=1, cols=1, k=4))


@pytest.fixture
def chimera_c2() -> Graph:
    """2x2 cells of K_{4,4}: 32 vertices."""
    return build_chimera(ChimeraSpec(rows=2, cols=2, k=4))


def small_planted_batch(graph, count, density=0.5, loop_limit=8, seed0=0):
    """Planted instances with at least two solutions each."""
    out = []
    seed = seed0
    while len(out) < count:
        out.append(generate_planted(graph, density, loop_limit, seed))
        seed += 1
    return out


@pytest.fixture
def planted_cell(chimera_cell):
    return generate_planted(chimera_cell, 0.6, 8, rng_seed=3)


def rand_probability_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    p = rng.random(d) + 1e-12
    return p / p.sum()
