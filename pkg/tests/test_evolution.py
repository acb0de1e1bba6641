import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyingev.evolution import (
    ARCHIVE_HEADER,
    GENE_DOMAINS,
    Chromosome,
    GaConfig,
    Objectives,
    archive_csv,
    crowding_distance,
    dominates,
    evolve,
    non_dominated_sort,
)
from lyingev.detector import TrainConfig

O = Objectives


def test_dominance_examples():
    assert dominates(O(0.9, 0.05), O(0.7, 0.10))
    assert not dominates(O(0.9, 0.05), O(0.8, 0.02))
    assert not dominates(O(0.9, 0.05), O(0.9, 0.05))


def test_sort_examples():
    assert non_dominated_sort([O(0.9, 0.05), O(0.8, 0.02), O(0.7, 0.10)]) == [[0, 1], [2]]
    assert non_dominated_sort([O(0.5, 0.5)]) == [[0]]
    assert non_dominated_sort([O(0.5, 0.5)] * 4) == [[0, 1, 2, 3]]
    with pytest.raises(ValueError):
        non_dominated_sort([])


def brute_fronts(points):
    left = set(range(len(points)))
    fronts = []
    while left:
        front = sorted(i for i in left if not any(dominates(points[j], points[i]) for j in left))
        fronts.append(front)
        left -= set(front)
    return fronts


pts = st.lists(st.tuples(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]),
                         st.sampled_from([0.0, 0.1, 0.5, 1.0])).map(lambda t: O(*t)),
               min_size=1, max_size=15)


@given(pts)
def test_sort_matches_brute_force(points):
    fronts = non_dominated_sort(points)
    assert fronts == brute_fronts(points)
    flat = [i for f in fronts for i in f]
    assert sorted(flat) == list(range(len(points)))
    for k, front in enumerate(fronts):
        for later in fronts[k:]:
            for i in later:
                assert not any(dominates(points[i], points[j]) for j in front)


def test_crowding_examples():
    assert crowding_distance([O(0.1, 0.1), O(0.2, 0.2)]) == [math.inf, math.inf]
    d = crowding_distance([O(0.7, 0.1), O(0.8, 0.05), O(0.9, 0.02)])
    assert d[0] == d[2] == math.inf
    assert d[1] == pytest.approx(2.0)
    d = crowding_distance([O(0.5, 0.5)] * 4)
    assert d.count(math.inf) == 2 and d.count(0.0) == 2


def test_chromosome_validation_and_training_mapping():
    c = Chromosome(2, 128, "adam", "glorot", 0.2, 3, "softsign")
    assert c.genes == (2, 128, "adam", "glorot", 0.2, 3, "softsign", "softmax")
    arch, cfg = c.to_training("gru", TrainConfig(epochs=4))
    assert (arch.kind, arch.layers, arch.units, arch.activation) == ("gru", 2, 128, "softsign")
    assert (cfg.optimizer, cfg.init, cfg.dropout_rate, cfg.max_norm, cfg.epochs) == \
        ("adam", "glorot", 0.2, 3.0, 4)
    with pytest.raises(ValueError):
        Chromosome(7, 128, "adam", "glorot", 0.2, 3, "softsign")


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population_size=1)
    with pytest.raises(ValueError):
        GaConfig(mutation_rate=1.5)


def toy_fitness(c):
    score = GENE_DOMAINS["L"].index(c.L) / 5 * 0.5 + GENE_DOMAINS["N"].index(c.N) / 5 * 0.5
    return O(score, GENE_DOMAINS["D"].index(c.D) / 5)


def test_evolve_deterministic_and_memoised():
    calls = []

    def fit(c):
        calls.append(c)
        return toy_fitness(c)

    a = evolve(GaConfig(seed=4), None, fit)
    assert len(calls) == len(set(calls)) == a.evaluations
    b = evolve(GaConfig(seed=4), None, toy_fitness)
    assert a.archive == b.archive and a.history == b.history
    assert len(a.history) == 9


def test_evolve_elitism_monotone():
    res = evolve(GaConfig(seed=2, generations=10), None, toy_fitness)
    for prev, nxt in zip(res.history, res.history[1:]):
        for _, p in prev:
            assert not any(dominates(p, q) for _, q in nxt)
            assert any(dominates(q, p) or q == p for _, q in nxt)


def test_evolve_restricted_space_and_errors():
    space = {"L": [1, 2], "N": [32], "O": ["adam"], "H": ["glorot"], "D": [0.0],
             "J": [3], "A_hd": ["relu", "tanh"]}
    res = evolve(GaConfig(population_size=4, generations=2), space, toy_fitness)
    assert {c.L for c, _ in res.archive} <= {1, 2}
    assert res.archive[0][0].N == 32
    with pytest.raises(ValueError):
        evolve(GaConfig(), {"L": []}, toy_fitness)
    with pytest.raises(ValueError):
        evolve(GaConfig(), {"Q": [1]}, toy_fitness)


ORDINAL = ("L", "N", "D", "J")
CATEGORICAL = ("O", "H", "A_hd")


def planted_fitness(utopia):
    """Ordinal distance drives DR, categorical mismatches drive FA.

    Only the utopia chromosome reaches (1, 0), so it dominates every other
    chromosome and the final archive must be exactly that one point.
    """
    def fit(c):
        off = sum(abs(GENE_DOMAINS[g].index(getattr(c, g)) - GENE_DOMAINS[g].index(getattr(utopia, g)))
                  / (len(GENE_DOMAINS[g]) - 1) for g in ORDINAL)
        miss = sum(getattr(c, g) != getattr(utopia, g) for g in CATEGORICAL)
        return O(1 - off / len(ORDINAL), miss / len(CATEGORICAL))
    return fit


def random_utopia(seed):
    r = random.Random(1000 + seed)
    return Chromosome(*(r.choice(GENE_DOMAINS[g]) for g in GENE_DOMAINS))


def test_planted_fitness_has_a_unique_utopia():
    u = random_utopia(0)
    fit = planted_fitness(u)
    assert fit(u) == O(1.0, 0.0)
    r = random.Random(5)
    for _ in range(200):
        c = Chromosome(*(r.choice(GENE_DOMAINS[g]) for g in GENE_DOMAINS))
        if c != u:
            assert dominates(fit(u), fit(c))


def test_planted_small_run_makes_progress():
    u = random_utopia(3)
    fit = planted_fitness(u)
    res = evolve(GaConfig(seed=3), None, fit)
    first = max(o.dr - o.fa for _, o in res.history[0])
    last = max(o.dr - o.fa for _, o in res.history[-1])
    assert last >= first


def test_archive_csv():
    c = Chromosome(2, 128, "adam", "glorot", 0.2, 3, "softsign")
    text = archive_csv([(c, O(0.95, 0.05))])
    assert text.splitlines() == [ARCHIVE_HEADER, "2,128,adam,glorot,0.2,3,softsign,softmax,0.950000,0.050000"]
