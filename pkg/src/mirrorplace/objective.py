"""Customer assignment and fitness metrics for a candidate server set.

All functions are pure and operate on the dense distance matrix plus the
per-node priority vector; they are safe to call from parallel workers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

METRICS = ("maximum", "quantile95", "median", "mean")

# short CLI aliases
METRIC_ALIASES = {"max": "maximum", "q95": "quantile95", "median": "median", "mean": "mean"}


@dataclass(frozen=True)
class FitnessReport:
    """Distance statistics over the multiset {priority_i * d(i, assigned server)}."""

    maximum: float
    quantile95: float
    median: float
    mean: float

    def metric(self, name: str) -> float:
        if name not in METRICS:
            raise ValidationError(f"unknown metric {name!r}; valid: {', '.join(METRICS)}")
        return getattr(self, name)

    def as_dict(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}


@dataclass
class Placement:
    """A server set plus the per-node assignment it induces.

    ``assignment[i]`` is the node id of the server that serves node i. For
    placements produced by the optimizers this is always the nearest server
    (priority-weighted); the profile-driven reassignment in the caching
    module deliberately stores a non-nearest assignment.
    """

    servers: tuple[int, ...]
    assignment: np.ndarray
    report: FitnessReport


def _check_servers(dist: np.ndarray, servers) -> np.ndarray:
    servers = np.asarray(sorted(set(int(s) for s in servers)), dtype=int)
    if servers.size == 0:
        raise ValidationError("server set is empty")
    n = dist.shape[0]
    if servers[0] < 0 or servers[-1] >= n:
        raise ValidationError(f"server ids {servers.tolist()} out of range 0..{n - 1}")
    return servers


def assign_nearest(dist: np.ndarray, priorities: np.ndarray, servers) -> np.ndarray:
    """Map every node to its nearest server (ties: lowest server id).

    The priority factor is constant per node, so it never changes which
    server wins; it is kept in the weighted distances reported elsewhere.
    """
    servers = _check_servers(dist, servers)
    choice = np.argmin(dist[:, servers], axis=1)
    return servers[choice]


def weighted_assigned_distances(dist: np.ndarray, priorities: np.ndarray, servers) -> np.ndarray:
    servers = _check_servers(dist, servers)
    return np.asarray(priorities) * dist[:, servers].min(axis=1)


def evaluate(dist: np.ndarray, priorities: np.ndarray, servers,
             counts: np.ndarray | None = None) -> FitnessReport:
    """Fitness statistics of a server set under nearest assignment.

    Parameters
    ----------
    counts : optional
        Per-node multiplicities (customer counts). Default: every node
        counted once.
    """
    weighted = weighted_assigned_distances(dist, priorities, servers)
    if counts is not None:
        weighted = np.repeat(weighted, np.asarray(counts, dtype=int))
    ordered = np.sort(weighted)
    rank95 = max(int(np.ceil(0.95 * ordered.size)), 1)  # nearest-rank quantile
    return FitnessReport(
        maximum=float(ordered[-1]),
        quantile95=float(ordered[rank95 - 1]),
        median=float(np.median(ordered)),
        mean=float(ordered.mean()),
    )


def make_placement(dist: np.ndarray, priorities: np.ndarray, servers,
                   counts: np.ndarray | None = None) -> Placement:
    servers = _check_servers(dist, servers)
    return Placement(
        servers=tuple(int(s) for s in servers),
        assignment=assign_nearest(dist, priorities, servers),
        report=evaluate(dist, priorities, servers, counts),
    )


def compare(a: FitnessReport, b: FitnessReport,
            primary: str = "maximum", secondary: str = "mean") -> int:
    """Lexicographic comparison of two reports: -1 if ``a`` is strictly
    better (smaller), 1 if strictly worse, 0 if tied on both metrics."""
    for metric in (primary, secondary):
        va, vb = a.metric(metric), b.metric(metric)
        if va < vb:
            return -1
        if va > vb:
            return 1
    return 0
