"""Network model: weighted graph, virtual edge lengths, shortest-path metric.

Nodes are aggregated customer groups attached to backbone routers; every
node carries a priority used to weight its distance in all fitness
calculations. Edges carry optional link-quality attributes (bandwidth,
utilization, delay) that are folded into a virtual length >= 1, so the
all-pairs metric degenerates to plain hop count when no attributes are
given.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import ValidationError


@dataclass
class QualityWeights:
    """Relative weights of the link-quality penalty terms."""

    utilization: float = 0.4
    delay: float = 0.3
    bandwidth: float = 0.3


@dataclass
class NodeRecord:
    id: int
    label: str = ""
    latitude: float | None = None
    longitude: float | None = None
    priority: float = 1.0
    customer_count: int = 1


@dataclass
class EdgeRecord:
    source: int
    target: int
    bandwidth: float | None = None     # Mbit/s
    utilization: float | None = None   # fraction in [0, 1]
    delay: float | None = None         # ms
    virtual_length: float = field(default=1.0, compare=False)


def compute_virtual_length(edge: EdgeRecord, weights: QualityWeights,
                           delay_max: float = 0.0,
                           bandwidth_max: float | None = None) -> float:
    """Map one edge's quality attributes to a virtual length >= 1.

    The length is 1 plus a weighted penalty: utilization enters directly,
    delay is normalized by the topology-wide maximum ``delay_max``, and
    bandwidth enters as the normalized shortfall from ``bandwidth_max``.
    A missing attribute contributes nothing, so an edge without any
    attributes has length exactly 1 (a pure hop).

    Raises
    ------
    ValidationError
        If utilization falls outside [0, 1], bandwidth is not positive,
        or delay is negative.
    """
    name = f"edge {edge.source}-{edge.target}"
    penalty = 0.0
    if edge.utilization is not None:
        if not 0.0 <= edge.utilization <= 1.0:
            raise ValidationError(f"{name}: utilization {edge.utilization} outside [0, 1]")
        penalty += weights.utilization * edge.utilization
    if edge.delay is not None:
        if edge.delay < 0:
            raise ValidationError(f"{name}: negative delay {edge.delay}")
        if delay_max > 0:
            penalty += weights.delay * (edge.delay / delay_max)
    if edge.bandwidth is not None:
        if edge.bandwidth <= 0:
            raise ValidationError(f"{name}: bandwidth {edge.bandwidth} must be positive")
        if bandwidth_max is not None and bandwidth_max > 0:
            penalty += weights.bandwidth * (1.0 - edge.bandwidth / bandwidth_max)
    return 1.0 + penalty


class Topology:
    """Validated, connected, undirected graph of nodes and weighted edges.

    Construction computes every edge's virtual length (using topology-wide
    delay/bandwidth maxima for normalization), builds the adjacency lists
    and verifies connectivity. Instances are treated as immutable
    afterwards and may be shared freely across threads.
    """

    def __init__(self, nodes: list[NodeRecord], edges: list[EdgeRecord],
                 weights: QualityWeights | None = None, name: str = ""):
        self.name = name
        self.weights = weights or QualityWeights()
        self.nodes = list(nodes)
        self.edges = list(edges)
        self._validate_nodes()
        self._compute_lengths()
        self.adjacency = self._build_adjacency()
        self._check_connected()

    # -- construction helpers -------------------------------------------------

    def _validate_nodes(self):
        n = len(self.nodes)
        if n == 0:
            raise ValidationError("topology has no nodes")
        ids = [node.id for node in self.nodes]
        if sorted(ids) != list(range(n)):
            raise ValidationError(f"node ids must be exactly 0..{n - 1}, got {sorted(ids)[:10]}")
        self.nodes.sort(key=lambda node: node.id)
        for node in self.nodes:
            if node.priority <= 0:
                raise ValidationError(f"node {node.id}: priority {node.priority} must be > 0")
            if node.customer_count < 1:
                raise ValidationError(f"node {node.id}: customer_count must be >= 1")

    def _compute_lengths(self):
        n = len(self.nodes)
        for edge in self.edges:
            if edge.source == edge.target:
                raise ValidationError(f"self-loop at node {edge.source}")
            if not (0 <= edge.source < n and 0 <= edge.target < n):
                raise ValidationError(f"edge {edge.source}-{edge.target} references unknown node")
        delays = [e.delay for e in self.edges if e.delay is not None]
        bandwidths = [e.bandwidth for e in self.edges if e.bandwidth is not None]
        self.delay_max = max(delays) if delays else 0.0
        self.bandwidth_max = max(bandwidths) if bandwidths else None
        for edge in self.edges:
            edge.virtual_length = compute_virtual_length(
                edge, self.weights, self.delay_max, self.bandwidth_max)

    def _build_adjacency(self) -> list[list[int]]:
        adjacency = [[] for _ in self.nodes]
        for edge in self.edges:
            if edge.target not in adjacency[edge.source]:
                adjacency[edge.source].append(edge.target)
                adjacency[edge.target].append(edge.source)
        for neighbors in adjacency:
            neighbors.sort()
        return adjacency

    def _check_connected(self):
        n = len(self.nodes)
        if n == 1:
            return
        n_comp, labels = connected_components(self.edge_matrix(), directed=False)
        if n_comp > 1:
            main = np.argmax(np.bincount(labels))
            stranded = [i for i in range(n) if labels[i] != main]
            raise ValidationError(
                f"topology is disconnected; unreachable nodes: {stranded}")

    # -- views ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def priorities(self) -> np.ndarray:
        return np.array([node.priority for node in self.nodes], dtype=float)

    @property
    def customer_counts(self) -> np.ndarray:
        return np.array([node.customer_count for node in self.nodes], dtype=int)

    def edge_matrix(self) -> csr_matrix:
        """Sparse symmetric matrix of virtual lengths (parallel edges: keep best)."""
        n = len(self.nodes)
        rows, cols, data = [], [], []
        best: dict[tuple[int, int], float] = {}
        for edge in self.edges:
            key = (min(edge.source, edge.target), max(edge.source, edge.target))
            if key not in best or edge.virtual_length < best[key]:
                best[key] = edge.virtual_length
        for (u, v), length in best.items():
            rows += [u, v]
            cols += [v, u]
            data += [length, length]
        return csr_matrix((data, (rows, cols)), shape=(n, n))


def all_pairs_distances(topology: Topology) -> np.ndarray:
    """All-pairs shortest-path matrix over virtual lengths (Dijkstra).

    Returns
    -------
    numpy.ndarray
        Symmetric n x n matrix with zero diagonal; entry [i, j] is the
        length of the shortest path between nodes i and j.
    """
    dist = dijkstra(topology.edge_matrix(), directed=False)
    if np.isinf(dist).any():
        unreachable = sorted(set(np.argwhere(np.isinf(dist))[:, 1].tolist()))
        raise ValidationError(f"graph is disconnected; unreachable nodes: {unreachable}")
    return dist


def one_center(dist: np.ndarray, priorities: np.ndarray) -> int:
    """Best single server location: argmin over candidates c of
    max_i priority_i * dist[i, c], ties broken by lowest node id."""
    if dist.shape[0] == 0:
        raise ValidationError("empty distance matrix")
    radii = (np.asarray(priorities)[:, None] * dist).max(axis=0)
    return int(np.argmin(radii))
