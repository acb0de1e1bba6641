"""NSGA-II search over detector hyperparameters.

Objectives are (DR, FA): detection rate is maximised, false acceptance
minimised. Genes are categorical, one value per field.
"""

from __future__ import annotations

import math
import random
from dataclasses import astuple, dataclass, fields, replace
from typing import Callable, Mapping, Sequence

GENE_DOMAINS: dict[str, tuple] = {
    "L": (1, 2, 3, 4, 5, 6),
    "N": (32, 64, 128, 256, 512, 768),
    "O": ("sgd", "momentum", "adam"),
    "H": ("uniform", "normal", "glorot"),
    "D": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
    "J": (1, 2, 3, 4, 5),
    "A_hd": ("sigmoid", "tanh", "relu", "softsign"),
    "A_op": ("softmax",),
}


@dataclass(frozen=True)
class Chromosome:
    L: int
    N: int
    O: str
    H: str
    D: float
    J: int
    A_hd: str
    A_op: str = "softmax"

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) not in GENE_DOMAINS[f.name]:
                raise ValueError(f"gene {f.name}={getattr(self, f.name)!r} outside its domain")

    @property
    def genes(self) -> tuple:
        return astuple(self)

    def to_training(self, kind: str, base):
        """(Architecture, TrainConfig) realising this chromosome."""
        from .detector.training import Architecture

        arch = Architecture(kind, self.L, self.N, self.A_hd)
        return arch, replace(base, optimizer=self.O, init=self.H, dropout_rate=self.D,
                             max_norm=float(self.J))


@dataclass(frozen=True)
class Objectives:
    dr: float
    fa: float

    def __post_init__(self):
        if not (0.0 <= self.dr <= 1.0 and 0.0 <= self.fa <= 1.0):
            raise ValueError(f"objectives must lie in [0, 1], got {self}")


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 12
    generations: int = 8
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    elite_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if not 0 <= self.elite_count <= self.population_size:
            raise ValueError("elite_count must lie in [0, population_size]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


def dominates(a: Objectives, b: Objectives) -> bool:
    return a.dr >= b.dr and a.fa <= b.fa and (a.dr > b.dr or a.fa < b.fa)


def non_dominated_sort(points: Sequence[Objectives]) -> list[list[int]]:
    """Fast non-dominated sort; returns fronts as ascending index lists."""
    n = len(points)
    if n == 0:
        raise ValueError("need at least one point")
    dominated_by = [[] for _ in range(n)]
    count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(points[i], points[j]):
                dominated_by[i].append(j)
                count[j] += 1
            elif dominates(points[j], points[i]):
                dominated_by[j].append(i)
                count[i] += 1
    fronts = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        fronts.append(sorted(current))
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(j)
        current = nxt
    return fronts


def crowding_distance(front: Sequence[Objectives]) -> list[float]:
    n = len(front)
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for key in ("dr", "fa"):
        vals = [getattr(p, key) for p in front]
        order = sorted(range(n), key=lambda i: vals[i])
        dist[order[0]] = dist[order[-1]] = math.inf
        span = vals[order[-1]] - vals[order[0]]
        if span == 0:
            continue
        for k in range(1, n - 1):
            i = order[k]
            if dist[i] != math.inf:
                dist[i] += (vals[order[k + 1]] - vals[order[k - 1]]) / span
    return dist


@dataclass
class EvolutionResult:
    archive: list[tuple[Chromosome, Objectives]]
    history: list[list[tuple[Chromosome, Objectives]]]
    evaluations: int


def _rank_and_crowd(objs: Sequence[Objectives]):
    rank = [0] * len(objs)
    crowd = [0.0] * len(objs)
    fronts = non_dominated_sort(objs)
    for r, front in enumerate(fronts):
        d = crowding_distance([objs[i] for i in front])
        for i, di in zip(front, d):
            rank[i] = r
            crowd[i] = di
    return fronts, rank, crowd


def _archive(pop: list[Chromosome], objs: list[Objectives]):
    front = non_dominated_sort(objs)[0]
    seen, out = set(), []
    for i in front:
        if pop[i] not in seen:
            seen.add(pop[i])
            out.append((pop[i], objs[i]))
    return out


def evolve(
    config: GaConfig,
    search_space: Mapping[str, Sequence] | None,
    fitness: Callable[[Chromosome], Objectives],
) -> EvolutionResult:
    """Generational NSGA-II with (parents + offspring) truncation.

    Mating uses binary tournaments on (front rank, crowding distance),
    single-point crossover and per-gene resampling mutation. Offspring that
    repeat a chromosome evaluated earlier in the run are mutated again (a
    few tries) so evaluations are not spent on copies. Fitness is memoised per
    chromosome. ``elite_count`` needs no extra step: truncation of the
    combined pool always keeps the first front.
    """
    space = dict(GENE_DOMAINS)
    if search_space:
        for k, v in search_space.items():
            if k not in space:
                raise ValueError(f"unknown gene {k!r}")
            space[k] = tuple(v)
    if any(len(v) == 0 for v in space.values()):
        raise ValueError("empty search space")
    names = list(GENE_DOMAINS)
    rng = random.Random(config.seed)
    cache: dict[Chromosome, Objectives] = {}

    def evaluate(c: Chromosome) -> Objectives:
        if c not in cache:
            cache[c] = fitness(c)
        return cache[c]

    def random_chromosome() -> Chromosome:
        return Chromosome(*(rng.choice(space[g]) for g in names))

    def mutate(genes: list) -> list:
        for i, g in enumerate(names):
            options = [v for v in space[g] if v != genes[i]]
            if options and rng.random() < config.mutation_rate:
                genes[i] = rng.choice(options)
        return genes

    def force_change(genes: list) -> list:
        movable = [i for i, g in enumerate(names) if len(space[g]) > 1]
        if movable:
            i = rng.choice(movable)
            genes[i] = rng.choice([v for v in space[names[i]] if v != genes[i]])
        return genes

    n = config.population_size
    pop: list[Chromosome] = []
    for _ in range(20 * n):
        if len(pop) == n:
            break
        c = random_chromosome()
        if c not in pop:
            pop.append(c)
    while len(pop) < n:  # tiny search spaces
        pop.append(random_chromosome())
    objs = [evaluate(c) for c in pop]
    history = [_archive(pop, objs)]

    for _ in range(config.generations):
        _, rank, crowd = _rank_and_crowd(objs)

        def tournament() -> Chromosome:
            a, b = rng.randrange(n), rng.randrange(n)
            if (rank[b], -crowd[b]) < (rank[a], -crowd[a]):
                a = b
            return pop[a]

        offspring: list[Chromosome] = []
        taken = set(cache)
        while len(offspring) < n:
            p1, p2 = list(tournament().genes), list(tournament().genes)
            if rng.random() < config.crossover_rate:
                cut = rng.randrange(1, len(names))
                c1, c2 = p1[:cut] + p2[cut:], p2[:cut] + p1[cut:]
            else:
                c1, c2 = p1, p2
            for genes in (c1, c2):
                genes = mutate(genes)
                for _ in range(10):
                    if Chromosome(*genes) not in taken:
                        break
                    genes = force_change(genes)
                child = Chromosome(*genes)
                taken.add(child)
                if len(offspring) < n:
                    offspring.append(child)

        pool = pop + offspring
        pool_objs = objs + [evaluate(c) for c in offspring]
        fronts, _, _ = _rank_and_crowd(pool_objs)
        chosen: list[int] = []
        for front in fronts:
            if len(chosen) + len(front) <= n:
                chosen.extend(front)
                continue
            d = crowding_distance([pool_objs[i] for i in front])
            by_crowd = sorted(range(len(front)), key=lambda k: (-d[k], front[k]))
            chosen.extend(front[k] for k in by_crowd[: n - len(chosen)])
            break
        pop = [pool[i] for i in chosen]
        objs = [pool_objs[i] for i in chosen]
        history.append(_archive(pop, objs))

    return EvolutionResult(history[-1], history, len(cache))


ARCHIVE_HEADER = "L,N,O,H,D,J,A_hd,A_op,dr,fa"


def archive_csv(archive: Sequence[tuple[Chromosome, Objectives]]) -> str:
    lines = [ARCHIVE_HEADER]
    for c, o in archive:
        lines.append(f"{c.L},{c.N},{c.O},{c.H},{c.D:.1f},{c.J},{c.A_hd},{c.A_op},{o.dr:.6f},{o.fa:.6f}")
    return "\n".join(lines) + "\n"
