"""Server placement optimizers.

Seven strategies share one calling convention (distance matrix, priority
vector, server count) and return a :class:`~mirrorplace.objective.Placement`:

* ``dragoon``      deterministic farthest-first init + one-hop local search
* ``two-approx``   farthest-first traversal from a random start node
* ``greedy``       add the server with the biggest marginal benefit
* ``macqueen``     Lloyd-style clustering, uniform random init
* ``kmeans++``     Lloyd-style clustering, squared-distance-biased init
* ``monte-carlo``  best of N uniformly random server sets
* ``genetic``      subset GA with tournament selection and elitism

Every strategy accepts a set of pre-existing fixed servers that are seeded
into the initial solution and never moved, which covers the "upgrade an
existing deployment" use case.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .objective import FitnessReport, Placement, assign_nearest, compare, evaluate, make_placement

ALGORITHM_NAMES = ("dragoon", "two-approx", "greedy", "macqueen", "kmeans++",
                   "monte-carlo", "genetic")


@dataclass
class TraceStep:
    iteration: int
    servers: tuple[int, ...]
    report: FitnessReport


@dataclass
class RunTrace:
    """Per-iteration history of an optimizer run."""

    steps: list[TraceStep] = field(default_factory=list)
    reason: str = ""

    def record(self, iteration: int, servers, report: FitnessReport):
        self.steps.append(TraceStep(iteration, tuple(sorted(int(s) for s in servers)), report))


@dataclass
class AlgorithmConfig:
    """Tunables shared by the CLI and the sweep driver.

    Only the fields an algorithm actually reads have an effect on it; the
    rest are ignored, so one config can drive a whole sweep.
    """

    primary_metric: str = "maximum"
    secondary_metric: str = "mean"
    fixed_servers: tuple[int, ...] = ()
    # monte carlo
    trials: int = 1000
    # genetic algorithm
    population_size: int = 25
    generations: int = 80
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    tournament_size: int = 3
    # k-means family
    restarts: int = 10
    kmeans_mode: str = "graph"          # "graph" (medoids) or "coords" (free placement)
    mapping_mode: str = "every-step"    # coords mode: snap to nodes "every-step" or "at-end"
    kmeans_max_iterations: int = 100
    # dragoon
    dragoon_max_iterations: int = 100
    dragoon_weighted_mark: bool = True      # orientation mark uses priorities
    dragoon_weighted_farthest: bool = True  # farthest-first selection uses priorities


def _check_k(n: int, k: int, fixed_servers=()) -> tuple[int, ...]:
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} must satisfy 1 <= k <= n={n}")
    fixed = tuple(sorted(set(int(s) for s in fixed_servers)))
    if fixed and (fixed[0] < 0 or fixed[-1] >= n):
        raise ValidationError(f"fixed servers {fixed} out of range 0..{n - 1}")
    if len(fixed) > k:
        raise ValidationError(f"{len(fixed)} fixed servers exceed k={k}")
    return fixed


def _farthest_first_fill(dist, selection_weights, servers: list[int], k: int):
    """Extend ``servers`` to size k, always adding the node with the largest
    (weighted) distance to its closest server; ties go to the lowest id."""
    while len(servers) < k:
        gaps = selection_weights * dist[:, servers].min(axis=1)
        gaps[servers] = -1.0
        servers.append(int(np.argmax(gaps)))


def two_approx(dist: np.ndarray, priorities: np.ndarray, k: int,
               rng: np.random.Generator, fixed_servers=()) -> Placement:
    """Farthest-first traversal: random first server, then repeatedly add
    the node farthest (priority-weighted) from the current server set."""
    n = dist.shape[0]
    fixed = _check_k(n, k, fixed_servers)
    servers = list(fixed) if fixed else [int(rng.integers(n))]
    _farthest_first_fill(dist, np.asarray(priorities, dtype=float), servers, k)
    return make_placement(dist, priorities, servers)


def greedy(dist: np.ndarray, priorities: np.ndarray, k: int,
           fixed_servers=(), metric: str = "maximum") -> tuple[Placement, RunTrace]:
    """Deterministic marginal-benefit placement: each added server is the
    node whose addition minimizes ``metric``; ties go to the lowest id."""
    n = dist.shape[0]
    fixed = _check_k(n, k, fixed_servers)
    servers = list(fixed)
    trace = RunTrace()
    while len(servers) < k:
        best_id, best_value = -1, np.inf
        for candidate in range(n):
            if candidate in servers:
                continue
            value = evaluate(dist, priorities, servers + [candidate]).metric(metric)
            if value < best_value:
                best_id, best_value = candidate, value
        servers.append(best_id)
        trace.record(len(servers), servers, evaluate(dist, priorities, servers))
    trace.reason = "converged"
    return make_placement(dist, priorities, servers), trace


def dragoon(dist: np.ndarray, priorities: np.ndarray, k: int, adjacency: list[list[int]],
            fixed_servers=(), primary: str = "maximum", secondary: str = "mean",
            max_iterations: int = 100, weighted_mark: bool = True,
            weighted_farthest: bool = True) -> tuple[Placement, RunTrace]:
    """Deterministic two-phase placement.

    Initialization: a transient orientation mark is put at the single-server
    optimum; the first server goes to the node farthest from the mark, and
    the remaining ones are added farthest-first. Refinement: servers are
    visited in order of their worst assigned weighted distance, each may
    relocate once per iteration to a directly adjacent node, and a move is
    accepted only if it strictly improves (primary, then secondary metric)
    the fitness of the whole placement. Terminates when no server moves.
    """
    from .topology import one_center

    n = dist.shape[0]
    priorities = np.asarray(priorities, dtype=float)
    fixed = _check_k(n, k, fixed_servers)
    select_w = priorities if weighted_farthest else np.ones(n)

    servers = list(fixed)
    if not servers:
        mark = one_center(dist, priorities if weighted_mark else np.ones(n))
        servers = [int(np.argmax(select_w * dist[:, mark]))]
    _farthest_first_fill(dist, select_w, servers, k)

    trace = RunTrace()
    current = evaluate(dist, priorities, servers)
    trace.record(0, servers, current)

    for iteration in range(1, max_iterations + 1):
        assignment = assign_nearest(dist, priorities, servers)
        weighted = priorities * dist[np.arange(n), assignment]
        worst = {s: 0.0 for s in servers}
        for i in range(n):
            worst[assignment[i]] = max(worst[assignment[i]], weighted[i])
        order = sorted(servers, key=lambda s: (-worst[s], s))

        moved = False
        for server in order:
            if server in fixed:
                continue
            rest = [s for s in servers if s != server]
            best_target, best_report = None, current
            for candidate in adjacency[server]:
                if candidate in servers:
                    continue
                report = evaluate(dist, priorities, rest + [candidate])
                if compare(report, best_report, primary, secondary) < 0:
                    best_target, best_report = candidate, report
            if best_target is not None:
                servers = rest + [best_target]
                current = best_report
                moved = True
        if not moved:
            trace.reason = "converged"
            break
        trace.record(iteration, servers, current)
    else:
        trace.reason = "iteration-cap"
    return make_placement(dist, priorities, servers), trace


def monte_carlo(dist: np.ndarray, priorities: np.ndarray, k: int, trials: int,
                rng: np.random.Generator, fixed_servers=(),
                primary: str = "maximum", secondary: str = "mean") -> Placement:
    """Best of ``trials`` uniformly random k-subsets."""
    n = dist.shape[0]
    fixed = _check_k(n, k, fixed_servers)
    if trials < 1:
        raise ValidationError(f"trials={trials} must be >= 1")
    free = np.array([i for i in range(n) if i not in fixed], dtype=int)
    best_servers, best_report = None, None
    for _ in range(trials):
        servers = list(fixed) + [int(i) for i in rng.choice(free, size=k - len(fixed), replace=False)]
        report = evaluate(dist, priorities, servers)
        if best_report is None or compare(report, best_report, primary, secondary) < 0:
            best_servers, best_report = servers, report
    return make_placement(dist, priorities, best_servers)


# -- k-means family -----------------------------------------------------------


def kmeanspp_weights(dist: np.ndarray, chosen: list[int]) -> np.ndarray:
    """Selection probabilities for the next k-means++ center: proportional
    to the squared distance to the nearest already-chosen center."""
    d2 = dist[:, chosen].min(axis=1) ** 2
    total = d2.sum()
    if total == 0:
        out = np.zeros(dist.shape[0])
        free = [i for i in range(dist.shape[0]) if i not in chosen]
        out[free] = 1.0 / len(free)
        return out
    return d2 / total


def _init_centers(dist, n, k, rng, init, fixed) -> list[int]:
    centers = list(fixed)
    if not centers:
        centers = [int(rng.integers(n))]
    if init == "kmeans++":
        while len(centers) < k:
            centers.append(int(rng.choice(n, p=kmeanspp_weights(dist, centers))))
    else:  # macqueen: uniform without replacement
        free = np.array([i for i in range(n) if i not in centers], dtype=int)
        extra = rng.choice(free, size=k - len(centers), replace=False)
        centers.extend(int(i) for i in extra)
    return centers


def _lloyd_graph(dist, priorities, k, rng, init, max_iterations, fixed):
    """One seeded Lloyd run on the graph metric with medoid updates."""
    n = dist.shape[0]
    centers = _init_centers(dist, n, k, rng, init, fixed)
    for _ in range(max_iterations):
        ordered = sorted(centers)
        members = {c: [] for c in ordered}
        nearest = assign_nearest(dist, priorities, ordered)
        for i in range(n):
            members[int(nearest[i])].append(i)
        new_centers = []
        for c in ordered:
            cluster = members[c]
            if c in fixed or not cluster:
                new_centers.append(c)
                continue
            # medoid: cluster member minimizing the worst weighted distance
            block = priorities[cluster, None] * dist[np.ix_(cluster, cluster)]
            new_centers.append(cluster[int(np.argmin(block.max(axis=0)))])
        if sorted(new_centers) == ordered:
            centers = new_centers
            break
        centers = new_centers
    return sorted(set(centers))


def _snap_to_nodes(points: np.ndarray, node_coords: np.ndarray) -> list[int]:
    """Map free-placement centers to distinct nearest nodes (greedy, in
    center order; ties and conflicts resolve to the lowest free node id)."""
    taken: list[int] = []
    for point in points:
        d2 = ((node_coords - point) ** 2).sum(axis=1)
        d2[taken] = np.inf
        taken.append(int(np.argmin(d2)))
    return taken


def _lloyd_coords(coords, priorities, k, rng, init, max_iterations, mapping_mode, fixed):
    """One seeded Lloyd run on Euclidean coordinates (free placement)."""
    n = coords.shape[0]
    euclid = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2))
    node_ids = _init_centers(euclid, n, k, rng, init, fixed)
    centers = coords[node_ids].astype(float)
    for _ in range(max_iterations):
        d = ((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d, axis=1)
        new_centers = centers.copy()
        for j in range(k):
            cluster = np.where(labels == j)[0]
            if cluster.size and node_ids[j] not in fixed:
                new_centers[j] = coords[cluster].mean(axis=0)
        if mapping_mode == "every-step":
            snapped = _snap_to_nodes(new_centers, coords)
            for j, s in enumerate(snapped):
                if node_ids[j] not in fixed:
                    node_ids[j] = s
            new_centers = coords[node_ids].astype(float)
        if np.allclose(new_centers, centers):
            centers = new_centers
            break
        centers = new_centers
    if mapping_mode == "at-end":
        snapped = _snap_to_nodes(centers, coords)
        for j, s in enumerate(snapped):
            if node_ids[j] not in fixed:
                node_ids[j] = s
    return sorted(set(node_ids))


def kmeans(dist: np.ndarray, priorities: np.ndarray, k: int, rng: np.random.Generator,
           init: str = "macqueen", mode: str = "graph", coords: np.ndarray | None = None,
           restarts: int = 10, max_iterations: int = 100, mapping_mode: str = "every-step",
           fixed_servers=(), primary: str = "maximum", secondary: str = "mean") -> Placement:
    """Lloyd-style clustering; ``init`` selects MacQueen (uniform random)
    or k-means++ seeding. Returns the best of ``restarts`` runs.

    ``mode="graph"`` keeps centers on nodes and updates them as cluster
    medoids under the weighted graph metric; ``mode="coords"`` iterates
    free Euclidean centroids and maps them back to nodes according to
    ``mapping_mode``.
    """
    n = dist.shape[0]
    fixed = _check_k(n, k, fixed_servers)
    if mode not in ("graph", "coords"):
        raise ValidationError(f"unknown kmeans mode {mode!r}")
    if mapping_mode not in ("every-step", "at-end"):
        raise ValidationError(f"unknown mapping_mode {mapping_mode!r}")
    if mode == "coords":
        if coords is None or np.isnan(np.asarray(coords, dtype=float)).any():
            raise ValidationError("coords mode requires coordinates for every node")
        coords = np.asarray(coords, dtype=float)
    priorities = np.asarray(priorities, dtype=float)

    best_servers, best_report = None, None
    for _ in range(max(restarts, 1)):
        if mode == "graph":
            servers = _lloyd_graph(dist, priorities, k, rng, init, max_iterations, fixed)
        else:
            servers = _lloyd_coords(coords, priorities, k, rng, init, max_iterations,
                                    mapping_mode, fixed)
        report = evaluate(dist, priorities, servers)
        if best_report is None or compare(report, best_report, primary, secondary) < 0:
            best_servers, best_report = servers, report
    return make_placement(dist, priorities, best_servers)


# -- genetic algorithm ---------------------------------------------------------


def genetic(dist: np.ndarray, priorities: np.ndarray, k: int, rng: np.random.Generator,
            population_size: int = 25, generations: int = 80, mutation_rate: float = 0.1,
            crossover_rate: float = 0.9, tournament_size: int = 3, fixed_servers=(),
            primary: str = "maximum", secondary: str = "mean") -> Placement:
    """Subset GA: genomes are k-subsets of node ids, tournament selection,
    uniform set-crossover repaired to size k, single-server mutation, and
    one elite individual carried over unchanged each generation."""
    n = dist.shape[0]
    fixed = _check_k(n, k, fixed_servers)
    if population_size < 2:
        raise ValidationError("population_size must be >= 2")
    for name, rate in (("mutation_rate", mutation_rate), ("crossover_rate", crossover_rate)):
        if not 0.0 <= rate <= 1.0:
            raise ValidationError(f"{name}={rate} outside [0, 1]")

    fixed_set = set(fixed)
    free = np.array([i for i in range(n) if i not in fixed_set], dtype=int)
    cache: dict[tuple[int, ...], FitnessReport] = {}

    def fitness(genome: tuple[int, ...]) -> FitnessReport:
        if genome not in cache:
            cache[genome] = evaluate(dist, priorities, genome)
        return cache[genome]

    def random_genome() -> tuple[int, ...]:
        picks = rng.choice(free, size=k - len(fixed), replace=False)
        return tuple(sorted(fixed_set | {int(i) for i in picks}))

    def tournament(population) -> tuple[int, ...]:
        contenders = [population[int(i)] for i in rng.integers(len(population), size=tournament_size)]
        best = contenders[0]
        for genome in contenders[1:]:
            if compare(fitness(genome), fitness(best), primary, secondary) < 0:
                best = genome
        return best

    def crossover(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
        sa, sb = set(a), set(b)
        child = (sa & sb) | fixed_set
        for gene in sorted(sa ^ sb):
            if gene not in fixed_set and rng.random() < 0.5:
                child.add(gene)
        pool = sorted((sa | sb) - child)
        while len(child) < k:
            if pool:
                gene = pool.pop(int(rng.integers(len(pool))))
            else:
                gene = int(rng.integers(n))
                if gene in child:
                    continue
            child.add(gene)
        while len(child) > k:
            droppable = sorted(child - fixed_set)
            child.remove(droppable[int(rng.integers(len(droppable)))])
        return tuple(sorted(child))

    def mutate(genome: tuple[int, ...]) -> tuple[int, ...]:
        inside = sorted(set(genome) - fixed_set)
        outside = sorted(set(range(n)) - set(genome))
        if not inside or not outside:
            return genome
        out_gene = inside[int(rng.integers(len(inside)))]
        in_gene = outside[int(rng.integers(len(outside)))]
        return tuple(sorted((set(genome) - {out_gene}) | {in_gene}))

    population = [random_genome() for _ in range(population_size)]
    for _ in range(generations):
        elite = population[0]
        for genome in population[1:]:
            if compare(fitness(genome), fitness(elite), primary, secondary) < 0:
                elite = genome
        offspring = [elite]
        while len(offspring) < population_size:
            parent_a, parent_b = tournament(population), tournament(population)
            child = crossover(parent_a, parent_b) if rng.random() < crossover_rate else parent_a
            if rng.random() < mutation_rate:
                child = mutate(child)
            offspring.append(child)
        population = offspring

    best = population[0]
    for genome in population[1:]:
        if compare(fitness(genome), fitness(best), primary, secondary) < 0:
            best = genome
    return make_placement(dist, priorities, best)


# -- dispatcher ----------------------------------------------------------------


def run_algorithm(name: str, dist: np.ndarray, priorities: np.ndarray, k: int,
                  rng: np.random.Generator | None = None, adjacency=None,
                  coords: np.ndarray | None = None,
                  config: AlgorithmConfig | None = None) -> tuple[Placement, RunTrace | None]:
    """Run one named algorithm; returns its placement and, where the
    algorithm produces one, its iteration trace."""
    cfg = config or AlgorithmConfig()
    if name not in ALGORITHM_NAMES:
        raise ValidationError(
            f"unknown algorithm {name!r}; valid algorithms: {', '.join(ALGORITHM_NAMES)}")
    if name == "dragoon":
        if adjacency is None:
            raise ValidationError("dragoon requires the topology adjacency lists")
        return dragoon(dist, priorities, k, adjacency, cfg.fixed_servers,
                       cfg.primary_metric, cfg.secondary_metric, cfg.dragoon_max_iterations,
                       cfg.dragoon_weighted_mark, cfg.dragoon_weighted_farthest)
    if name == "greedy":
        return greedy(dist, priorities, k, cfg.fixed_servers, cfg.primary_metric)
    if rng is None:
        raise ValidationError(f"{name} is seeded and needs a random generator")
    if name == "two-approx":
        return two_approx(dist, priorities, k, rng, cfg.fixed_servers), None
    if name == "monte-carlo":
        return monte_carlo(dist, priorities, k, cfg.trials, rng, cfg.fixed_servers,
                           cfg.primary_metric, cfg.secondary_metric), None
    if name == "genetic":
        return genetic(dist, priorities, k, rng, cfg.population_size, cfg.generations,
                       cfg.mutation_rate, cfg.crossover_rate, cfg.tournament_size,
                       cfg.fixed_servers, cfg.primary_metric, cfg.secondary_metric), None
    init = "kmeans++" if name == "kmeans++" else "macqueen"
    return kmeans(dist, priorities, k, rng, init, cfg.kmeans_mode, coords, cfg.restarts,
                  cfg.kmeans_max_iterations, cfg.mapping_mode, cfg.fixed_servers,
                  cfg.primary_metric, cfg.secondary_metric), None
