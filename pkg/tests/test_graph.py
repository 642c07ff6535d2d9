import itertools

import networkx as nx
import numpy as np
import pytest

from rbg_hubs.connection import ConnectionSpec, disperse
from rbg_hubs.graph import (
    UnionFind,
    WrappingUnionFind,
    agent_neighbors_via_hubs,
    build_rbg,
    build_unipartite,
    connected_components,
)
from rbg_hubs.pointprocess import PointSet, Window, sample_ppp


def _instance(window, lam, mu, seed):
    return (
        sample_ppp(lam, window, seed * 2 + 1, kind="agent"),
        sample_ppp(mu, window, seed * 2 + 2, kind="hub"),
    )


@pytest.mark.parametrize("boundary", ["torus", "open"])
@pytest.mark.parametrize(
    "spec",
    [ConnectionSpec.boolean(0.3), ConnectionSpec.p_boolean(0.5, 0.4), ConnectionSpec.exponential(0.05), disperse(ConnectionSpec.boolean(0.2), 0.25)],
)
def test_grid_matches_all_pairs_oracle(boundary, spec):
    window = Window(2, 10.0, boundary)
    agents, hubs = _instance(window, 5.0, 5.0, 1)
    grid = build_rbg(agents, hubs, spec, seed=3, method="grid")
    oracle = build_rbg(agents, hubs, spec, seed=3, method="all_pairs")
    assert np.array_equal(grid.edges, oracle.edges)
    assert np.array_equal(grid.distances, oracle.distances)
    assert len(grid.edges) > 0


def test_unipartite_grid_matches_oracle_and_is_simple():
    window = Window(2, 12.0)
    pts = sample_ppp(7.0, window, 5, kind="agent")
    spec = ConnectionSpec.boolean(0.5)
    g = build_unipartite(pts, spec, seed=2)
    o = build_unipartite(pts, spec, seed=2, method="all_pairs")
    assert np.array_equal(g.edges, o.edges)
    assert np.all(g.edges[:, 0] < g.edges[:, 1])
    assert (g.adjacency != g.adjacency.T).nnz == 0
    for i in range(len(pts)):
        nbrs = set(g.neighbors(i).tolist())
        assert nbrs == {b for a, b in g.edges.tolist() if a == i} | {a for a, b in g.edges.tolist() if b == i}
    assert g.degrees.sum() == 2 * len(g.edges)


def test_raising_the_connection_function_only_adds_edges():
    window = Window(2, 6.0)
    agents, hubs = _instance(window, 6.0, 6.0, 4)
    low = build_rbg(agents, hubs, ConnectionSpec.p_boolean(0.4, 0.5), seed=8)
    high = build_rbg(agents, hubs, ConnectionSpec.boolean(0.5), seed=8)
    low_set = set(map(tuple, low.edges.tolist()))
    high_set = set(map(tuple, high.edges.tolist()))
    assert low_set < high_set


def test_restricting_points_keeps_their_edges():
    window = Window(2, 6.0)
    agents, hubs = _instance(window, 6.0, 6.0, 6)
    spec = ConnectionSpec.boolean(0.6)
    full = build_rbg(agents, hubs, spec, seed=1)
    keep = np.arange(0, len(hubs), 2)
    part = build_rbg(agents, hubs.subset(keep), spec, seed=1)
    expected = {(a, h) for a, h in full.edges.tolist() if h % 2 == 0}
    assert {(a, int(keep[h])) for a, h in part.edges.tolist()} == expected


def test_window_preconditions():
    w = Window(2, 1.0)
    agents, hubs = _instance(w, 5.0, 5.0, 2)
    with pytest.raises(ValueError):
        build_rbg(agents, hubs, ConnectionSpec.boolean(0.5), seed=1)
    other = sample_ppp(5.0, Window(2, 2.0), 3, kind="hub")
    with pytest.raises(ValueError):
        build_rbg(agents, other, ConnectionSpec.boolean(0.1), seed=1)


def test_union_find_matches_networkx_components():
    window = Window(2, 8.0)
    agents, hubs = _instance(window, 3.0, 3.0, 9)
    graph = build_rbg(agents, hubs, ConnectionSpec.boolean(0.35), seed=4)
    labeling = connected_components(graph)
    n_agents = len(agents)
    g = nx.Graph()
    g.add_nodes_from(range(graph.n_vertices))
    g.add_edges_from((a, n_agents + h) for a, h in graph.edges.tolist())
    oracle = {frozenset(c) for c in nx.connected_components(g)}
    ours = {}
    for v, label in enumerate(labeling.labels.tolist()):
        ours.setdefault(label, set()).add(v)
    assert {frozenset(c) for c in ours.values()} == oracle
    assert labeling.sizes.sum() == graph.n_vertices
    assert labeling.agent_sizes.sum() == n_agents
    assert labeling.n_components == len(oracle)


def test_neighbors_via_hubs_match_path_enumeration():
    window = Window(2, 5.0)
    agents, hubs = _instance(window, 8.0, 4.0, 12)
    graph = build_rbg(agents, hubs, ConnectionSpec.boolean(0.5), seed=6)
    adj = {}
    for a, h in graph.edges.tolist():
        adj.setdefault(a, set()).add(h)
    for agent in range(len(agents)):
        paths = [
            (h, b)
            for h in adj.get(agent, ())
            for b, hs in adj.items()
            if b != agent and h in hs
        ]
        m_count, n_paths = agent_neighbors_via_hubs(graph, agent)
        assert n_paths == len(paths)
        assert m_count == len({b for _, b in paths})
        assert n_paths >= m_count


def test_union_find_basics():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.num_components == 3
    labels = uf.labels()
    assert labels[0] == labels[1] and labels[3] == labels[4] and labels[2] not in (labels[0], labels[3])


def test_wrapping_union_find_detects_winding():
    # ring of 10 nodes around a torus of side 10
    uf = WrappingUnionFind(10, 2, 10.0)
    for i in range(10):
        uf.union_displaced(i, (i + 1) % 10, [1.0, 0.0])
    assert uf.wraps
    # a closed loop that does not wind
    uf = WrappingUnionFind(4, 2, 10.0)
    square = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
    for i, delta in enumerate(square):
        uf.union_displaced(i, (i + 1) % 4, delta)
    assert not uf.wraps
    assert uf.num_components == 1


def test_wrapping_on_a_unipartite_lattice_strip():
    window = Window(2, 10.0)
    xs = np.arange(-5.0, 5.0, 0.5)
    pts = PointSet(window, np.column_stack([xs, np.zeros_like(xs)]), "agent", 0.0)
    graph = build_unipartite(pts, ConnectionSpec.boolean(0.6), seed=1)
    uf = WrappingUnionFind(len(pts), 2, window.L)
    for (a, b), delta in zip(graph.edges.tolist(), graph.displacements.tolist()):
        uf.union_displaced(a, b, delta)
    assert uf.wraps
    assert len(graph.edges) == len(xs)


def test_small_torus_uses_a_single_cell():
    # fewer than three cells per axis on the torus collapses to one cell
    window = Window(2, 2.5)
    agents, hubs = _instance(window, 10.0, 10.0, 3)
    spec = ConnectionSpec.boolean(1.0)
    grid = build_rbg(agents, hubs, spec, seed=1)
    oracle = build_rbg(agents, hubs, spec, seed=1, method="all_pairs")
    assert np.array_equal(grid.edges, oracle.edges)


def test_degree_accessors_are_consistent():
    window = Window(2, 4.0)
    agents, hubs = _instance(window, 5.0, 5.0, 7)
    g = build_rbg(agents, hubs, ConnectionSpec.boolean(0.5), seed=2)
    assert g.agent_degrees.sum() == g.hub_degrees.sum() == len(g.edges)
    for h in range(len(hubs)):
        assert len(g.agents_of(h)) == g.hub_degrees[h]
    assert all(len(g.hubs_of(a)) == g.agent_degrees[a] for a in range(len(agents)))
    assert list(itertools.chain.from_iterable(g.hubs_of(a) for a in range(len(agents)))) == g.edges[:, 1].tolist()
