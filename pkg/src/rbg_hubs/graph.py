"""RBG and unipartite graph construction, union-find component labelling.

Candidate pairs come from a uniform grid with cell side >= truncation radius
(or the all-pairs oracle); each candidate pair keeps its edge when its
pair-keyed uniform falls below f_p(distance). Because the uniform depends only
on (seed, id_a, id_b), the edge set does not depend on how candidates are
enumerated, and raising f never removes an edge.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from . import config
from .connection import ConnectionSpec, effective_support, evaluate
from .pointprocess import PointSet, Window, minimal_image
from .rng import TAG_BIPARTITE, TAG_UNIPARTITE, pair_uniforms

log = logging.getLogger(__name__)

Method = Literal["grid", "all_pairs"]


@dataclass(frozen=True)
class RbgGraph:
    agents: PointSet
    hubs: PointSet
    edges: np.ndarray          # (E, 2) agent index, hub index
    distances: np.ndarray      # (E,)
    displacements: np.ndarray  # (E, d) hub minus agent, minimal image
    biadjacency: sparse.csr_matrix  # agents x hubs

    @property
    def n_vertices(self) -> int:
        return len(self.agents) + len(self.hubs)

    @property
    def agent_degrees(self) -> np.ndarray:
        return np.diff(self.biadjacency.indptr)

    @property
    def hub_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=len(self.hubs)) if len(self.edges) else np.zeros(len(self.hubs), dtype=np.int64)

    def hubs_of(self, agent: int) -> np.ndarray:
        a = self.biadjacency
        return a.indices[a.indptr[agent]:a.indptr[agent + 1]]

    def agents_of(self, hub: int) -> np.ndarray:
        t = self._transposed
        return t.indices[t.indptr[hub]:t.indptr[hub + 1]]

    @property
    def _transposed(self) -> sparse.csr_matrix:
        cached = self.__dict__.get("_t")
        if cached is None:
            cached = self.biadjacency.T.tocsr()
            object.__setattr__(self, "_t", cached)
        return cached


@dataclass(frozen=True)
class UniGraph:
    points: PointSet
    edges: np.ndarray          # (E, 2) with i < j
    distances: np.ndarray
    displacements: np.ndarray  # points[j] - points[i], minimal image
    adjacency: sparse.csr_matrix

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]


Graph = Union[RbgGraph, UniGraph]


@dataclass(frozen=True)
class ComponentLabeling:
    labels: np.ndarray        # per vertex; RBG vertices are agents then hubs
    agent_sizes: np.ndarray   # agents per component
    sizes: np.ndarray         # all vertices per component
    n_agents: int

    @property
    def n_components(self) -> int:
        return len(self.sizes)

    def largest_agent_fraction(self) -> float:
        if self.n_agents == 0 or len(self.agent_sizes) == 0:
            return 0.0
        return float(self.agent_sizes.max()) / self.n_agents


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self, size: int):
        self.parents: List[int] = list(range(size))
        self.sizes: List[int] = [1] * size
        self.num_components = size

    def find(self, elem: int) -> int:
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        while elem != root:
            nxt = self.parents[elem]
            self.parents[elem] = root
            elem = nxt
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.sizes[ra] < self.sizes[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        self.sizes[ra] += self.sizes[rb]
        self.num_components -= 1
        return True

    def labels(self) -> np.ndarray:
        roots = np.fromiter((self.find(i) for i in range(len(self.parents))), dtype=np.int64, count=len(self.parents))
        _, canonical = np.unique(roots, return_inverse=True)
        return canonical.astype(np.int64)


class WrappingUnionFind(UnionFind):
    """Union-find carrying each node's displacement from its parent.

    Joining two nodes that already share a root closes a cycle; if the
    accumulated displacement around it is not ~0 the cycle winds around the
    torus and the component wraps.
    """

    def __init__(self, size: int, d: int, L: float):
        super().__init__(size)
        self.L = float(L)
        self.offsets: List[List[float]] = [[0.0] * d for _ in range(size)]
        self.wrapping_roots: set = set()

    def find_with_offset(self, elem: int) -> Tuple[int, List[float]]:
        path = []
        root = elem
        while root != self.parents[root]:
            path.append(root)
            root = self.parents[root]
        # walk back from the node nearest the root, accumulating offsets
        acc = [0.0] * len(self.offsets[elem])
        for node in reversed(path):
            acc = [x + y for x, y in zip(acc, self.offsets[node])]
            self.offsets[node] = acc
            self.parents[node] = root
        return root, (self.offsets[elem] if path else [0.0] * len(acc))

    def find(self, elem: int) -> int:
        return self.find_with_offset(elem)[0]

    def union_displaced(self, a: int, b: int, delta: np.ndarray | List[float]) -> bool:
        """Join a and b where pos(b) - pos(a) = delta; returns True if a wrap was found."""
        ra, oa = self.find_with_offset(a)
        rb, ob = self.find_with_offset(b)
        gap = [x + dx - y for x, dx, y in zip(oa, delta, ob)]  # pos(rb) - pos(ra)
        if ra == rb:
            if any(abs(g) > 0.5 * self.L for g in gap):
                self.wrapping_roots.add(ra)
                return True
            return False
        if self.sizes[ra] < self.sizes[rb]:
            ra, rb = rb, ra
            gap = [-g for g in gap]
        self.parents[rb] = ra
        self.offsets[rb] = gap
        self.sizes[ra] += self.sizes[rb]
        self.num_components -= 1
        if rb in self.wrapping_roots:
            self.wrapping_roots.discard(rb)
            self.wrapping_roots.add(ra)
        return False

    @property
    def wraps(self) -> bool:
        return bool(self.wrapping_roots)


def _truncation_radius(spec: ConnectionSpec, epsilon: Optional[float]) -> float:
    eps = config.edge_epsilon() if epsilon is None else epsilon
    return effective_support(spec, eps).radius


def _check_window(window: Window, radius: float) -> None:
    if window.boundary == "torus" and radius >= window.half:
        raise ValueError(
            f"truncation radius {radius:.4g} >= L/2 = {window.half:.4g} is ambiguous on the torus"
        )


def _grid_cells(pts: np.ndarray, window: Window, n: int) -> np.ndarray:
    cells = np.floor((pts + window.half) * (n / window.L)).astype(np.int64)
    return np.clip(cells, 0, n - 1)


def _grid_candidates(a: np.ndarray, b: np.ndarray, window: Window, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    d = window.d
    n = max(1, int(np.floor(window.L / radius)))
    if window.boundary == "torus" and n < 3:
        n = 1
    shape = (n,) * d
    ca = _grid_cells(a, window, n)
    cb = _grid_cells(b, window, n)
    kb = np.ravel_multi_index(cb.T, shape) if len(b) else np.empty(0, dtype=np.int64)
    order = np.argsort(kb, kind="stable")
    sorted_kb = kb[order]
    offsets = itertools.product((-1, 0, 1), repeat=d) if n >= 3 or window.boundary == "open" else [(0,) * d]
    a_idx = np.arange(len(a))
    ia_parts, ib_parts = [], []
    for off in offsets:
        nb = ca + np.asarray(off, dtype=np.int64)
        if window.boundary == "torus":
            nb %= n
            src = a_idx
        else:
            valid = np.all((nb >= 0) & (nb < n), axis=1)
            nb, src = nb[valid], a_idx[valid]
        if len(src) == 0:
            continue
        keys = np.ravel_multi_index(nb.T, shape)
        start = np.searchsorted(sorted_kb, keys, side="left")
        counts = np.searchsorted(sorted_kb, keys, side="right") - start
        total = int(counts.sum())
        if total == 0:
            continue
        first = np.cumsum(counts) - counts
        pos = np.repeat(start, counts) + (np.arange(total) - np.repeat(first, counts))
        ia_parts.append(np.repeat(src, counts))
        ib_parts.append(order[pos])
    if not ia_parts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(ia_parts), np.concatenate(ib_parts)


def _all_pair_candidates(na: int, nb: int) -> Tuple[np.ndarray, np.ndarray]:
    ia, ib = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
    return ia.ravel(), ib.ravel()


def _thinned_pairs(
    a: PointSet,
    b: PointSet,
    spec: ConnectionSpec,
    seed: int,
    epsilon: Optional[float],
    method: Method,
    same: bool,
):
    window = a.window
    spec = spec.in_dimension(window.d)
    radius = _truncation_radius(spec, epsilon)
    _check_window(window, radius)
    if len(a) == 0 or len(b) == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty(0), np.empty((0, window.d))
    if method == "grid":
        ia, ib = _grid_candidates(a.points, b.points, window, radius)
    elif method == "all_pairs":
        ia, ib = _all_pair_candidates(len(a), len(b))
    else:
        raise ValueError(f"unknown candidate method {method!r}")
    if same:
        keep = ia < ib
        ia, ib = ia[keep], ib[keep]
    disp = minimal_image(window, b.points[ib] - a.points[ia])
    dist = np.linalg.norm(disp, axis=1)
    near = dist <= radius
    ia, ib, disp, dist = ia[near], ib[near], disp[near], dist[near]
    if same:
        id_a, id_b = a.ids[ia], b.ids[ib]
        u = pair_uniforms(seed, np.minimum(id_a, id_b), np.maximum(id_a, id_b), TAG_UNIPARTITE)
    else:
        u = pair_uniforms(seed, a.ids[ia], b.ids[ib], TAG_BIPARTITE)
    hit = u < evaluate(spec, dist)
    ia, ib, disp, dist = ia[hit], ib[hit], disp[hit], dist[hit]
    order = np.lexsort((ib, ia))
    return ia[order], ib[order], dist[order], disp[order]


def build_rbg(
    agents: PointSet,
    hubs: PointSet,
    spec: ConnectionSpec,
    seed: int,
    epsilon: Optional[float] = None,
    method: Method = "grid",
) -> RbgGraph:
    if agents.window != hubs.window:
        raise ValueError("agents and hubs must share the same window")
    ia, ib, dist, disp = _thinned_pairs(agents, hubs, spec, seed, epsilon, method, same=False)
    biadj = sparse.csr_matrix(
        (np.ones(len(ia), dtype=np.int8), (ia, ib)), shape=(len(agents), len(hubs))
    )
    log.debug("rbg built: %d agents, %d hubs, %d edges", len(agents), len(hubs), len(ia))
    return RbgGraph(agents, hubs, np.column_stack([ia, ib]).astype(np.int64), dist, disp, biadj)


def build_unipartite(
    points: PointSet,
    spec: ConnectionSpec,
    seed: int,
    epsilon: Optional[float] = None,
    method: Method = "grid",
) -> UniGraph:
    ia, ib, dist, disp = _thinned_pairs(points, points, spec, seed, epsilon, method, same=True)
    n = len(points)
    adj = sparse.csr_matrix(
        (np.ones(2 * len(ia), dtype=np.int8), (np.concatenate([ia, ib]), np.concatenate([ib, ia]))),
        shape=(n, n),
    )
    return UniGraph(points, np.column_stack([ia, ib]).astype(np.int64), dist, disp, adj)


def _vertex_edges(graph: Graph) -> Tuple[int, int, np.ndarray]:
    """Edge list in the joint vertex space (RBG hubs shifted past the agents)."""
    if isinstance(graph, RbgGraph):
        n_agents = len(graph.agents)
        e = graph.edges.copy()
        e[:, 1] += n_agents
        return graph.n_vertices, n_agents, e
    return graph.n_vertices, graph.n_vertices, graph.edges


def labeling_from(uf: UnionFind, n_agents: int) -> ComponentLabeling:
    labels = uf.labels()
    k = int(labels.max()) + 1 if len(labels) else 0
    return ComponentLabeling(
        labels=labels,
        agent_sizes=np.bincount(labels[:n_agents], minlength=k),
        sizes=np.bincount(labels, minlength=k),
        n_agents=n_agents,
    )


def connected_components(graph: Graph) -> ComponentLabeling:
    n, n_agents, edges = _vertex_edges(graph)
    uf = UnionFind(n)
    for a, b in edges.tolist():
        uf.union(a, b)
    return labeling_from(uf, n_agents)


def agent_neighbors_via_hubs(graph: RbgGraph, agent: int) -> Tuple[int, int]:
    """(M, N): distinct agents sharing a hub with ``agent`` and the number of two-edge paths."""
    if not 0 <= agent < len(graph.agents):
        raise IndexError(f"agent index {agent} out of range")
    hubs = graph.hubs_of(agent)
    if len(hubs) == 0:
        return 0, 0
    degrees = graph.hub_degrees
    n_paths = int((degrees[hubs] - 1).sum())
    reached = np.unique(np.concatenate([graph.agents_of(h) for h in hubs]))
    m_count = int(len(reached) - 1)  # the agent itself is adjacent to each of its hubs
    return m_count, n_paths


__all__ = [
    "RbgGraph",
    "UniGraph",
    "ComponentLabeling",
    "UnionFind",
    "WrappingUnionFind",
    "build_rbg",
    "build_unipartite",
    "connected_components",
    "agent_neighbors_via_hubs",
    "labeling_from",
]
