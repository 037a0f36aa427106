import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsdlab.errors import InputError
from gsdlab.topology import ChimeraSpec, Graph, build_chimera, load_graph, remove_vertices, save_graph


def test_single_cell_k1_is_one_edge():
    g = build_chimera(ChimeraSpec(rows=1, cols=1, k=1))
    assert g.vertex_count == 2
    assert g.edges == ((0, 1),)


def test_full_c8_counts():
    g = build_chimera(ChimeraSpec(rows=8, cols=8, k=4))
    assert g.vertex_count == 512
    # 64 cells * k^2 intra + 2 * k * 7 * 8 inter
    assert len(g.edges) == 64 * 16 + 2 * 4 * 7 * 8 == 1472


def test_dead_vertices_spec_504():
    dead = (0, 1, 8, 100, 200, 300, 400, 511)
    g = build_chimera(ChimeraSpec(rows=8, cols=8, k=4, dead_vertices=dead))
    assert g.vertex_count == 504
    assert all(orig not in dead for orig in g.original_ids)
    assert g.original_ids[0] == 2  # first survivor after removing 0 and 1


def test_dead_vertex_out_of_range():
    with pytest.raises(InputError):
        build_chimera(ChimeraSpec(rows=1, cols=1, k=4, dead_vertices=(8,)))


def expected_degree_histogram(m: int, n: int, k: int) -> dict[int, int]:
    """Count degrees combinatorially: k intra-cell neighbors per vertex, plus
    0/1/2 inter-cell couplers depending on boundary position."""
    hist: dict[int, int] = {}
    for r, c in itertools.product(range(m), range(n)):
        left_extra = (r > 0) + (r + 1 < m)
        right_extra = (c > 0) + (c + 1 < n)
        for extra in (left_extra, right_extra):
            hist[k + extra] = hist.get(k + extra, 0) + k
    return hist


@pytest.mark.parametrize("m,n,k", [(1, 1, 4), (2, 3, 4), (8, 8, 4), (3, 3, 2)])
def test_degree_histogram_matches_combinatorics(m, n, k):
    g = build_chimera(ChimeraSpec(rows=m, cols=n, k=k))
    assert g.degree_histogram() == expected_degree_histogram(m, n, k)


def test_interior_degree_is_six_for_k4():
    g = build_chimera(ChimeraSpec(rows=3, cols=3, k=4))
    # the central cell's vertices all have degree 6
    base = (1 * 3 + 1) * 8
    adj = g.adjacency
    for local in range(8):
        assert len(adj[base + local]) == 6


def test_remove_vertices_triangle():
    tri = Graph(vertex_count=3, edges=((0, 1), (0, 2), (1, 2)))
    g = remove_vertices(tri, [1])
    assert g.vertex_count == 2
    assert g.edges == ((0, 1),)
    assert g.original_ids == (0, 2)


def test_remove_nothing_is_identity():
    tri = Graph(vertex_count=3, edges=((0, 1), (0, 2), (1, 2)))
    g = remove_vertices(tri, [])
    assert g.edges == tri.edges and g.vertex_count == 3


def test_remove_unknown_vertex_rejected():
    tri = Graph(vertex_count=3, edges=((0, 1),))
    with pytest.raises(InputError):
        remove_vertices(tri, [7])


@settings(max_examples=50, deadline=None)
@given(
    first=st.sets(st.integers(min_value=0, max_value=31), max_size=6),
    second=st.sets(st.integers(min_value=0, max_value=31), max_size=6),
)
def test_sequential_removal_commutes_with_union(first, second):
    g = build_chimera(ChimeraSpec(rows=2, cols=2, k=4))
    step1 = remove_vertices(g, sorted(first))
    # translate the second victim list into step1's compacted indexing
    back = {orig: new for new, orig in enumerate(step1.original_ids)}
    second_in_new = sorted(back[v] for v in second if v in back)
    two_steps = remove_vertices(step1, second_in_new)
    one_step = remove_vertices(g, sorted(first | second))
    assert two_steps.edges == one_step.edges
    assert two_steps.original_ids == one_step.original_ids


def test_graph_file_roundtrip(tmp_path):
    g = build_chimera(ChimeraSpec(rows=2, cols=1, k=3, dead_vertices=(5,)))
    path = tmp_path / "graph.txt"
    save_graph(g, path)
    text = path.read_text().splitlines()
    assert text[0] == f"vertices {g.vertex_count}"
    pairs = [tuple(map(int, ln.split())) for ln in text[1:]]
    assert pairs == sorted(pairs)  # ascending lexicographic edge order
    loaded = load_graph(path)
    assert loaded.vertex_count == g.vertex_count
    assert loaded.edges == g.edges


def test_graph_invariants_rejected():
    with pytest.raises(InputError):
        Graph(vertex_count=2, edges=((0, 0),))
    with pytest.raises(InputError):
        Graph(vertex_count=2, edges=((0, 3),))
