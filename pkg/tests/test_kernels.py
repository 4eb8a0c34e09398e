"""Backend equivalence: the compiled kernel and the numpy fallback must pick
identical winners, including on exact score ties."""

import itertools
import random

import numpy as np
import pytest

from chainnet import kernels
from chainnet.kernels import available_backends

BACKENDS = available_backends()
WEIGHTS = (0.5, 0.3, 0.2)


def random_cohort(rng, n):
    prices = [rng.choice([1.0, 2.0, 3.0, 4.0, 5.0]) for _ in range(n)]
    leads = [float(rng.randint(1, 3)) for _ in range(n)]
    rels = [rng.choice([0.0, 0.5, 1.0]) for _ in range(n)]
    ranks = list(range(n))
    return prices, leads, rels, ranks


@pytest.mark.parametrize("backend", sorted(BACKENDS), ids=sorted(BACKENDS))
def test_pick_best_single_member(backend):
    impl = BACKENDS[backend]
    assert impl.pick_best([3.0], [2.0], [0.5], [0], *WEIGHTS) == 0


@pytest.mark.parametrize("backend", sorted(BACKENDS), ids=sorted(BACKENDS))
def test_pick_best_tie_breaks_by_rank(backend):
    impl = BACKENDS[backend]
    # identical attributes: scores tie exactly, smallest rank wins
    idx = impl.pick_best([2.0, 2.0, 2.0], [1.0, 1.0, 1.0], [0.5, 0.5, 0.5],
                         [2, 0, 1], *WEIGHTS)
    assert idx == 1


def test_backends_agree_on_random_cohorts():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    rng = random.Random(2024)
    for _ in range(2000):
        n = rng.randint(1, 6)
        prices, leads, rels, ranks = random_cohort(rng, n)
        picks = {name: impl.pick_best(prices, leads, rels, ranks, *WEIGHTS)
                 for name, impl in BACKENDS.items()}
        assert len(set(picks.values())) == 1, picks


@pytest.mark.parametrize("backend", sorted(BACKENDS), ids=sorted(BACKENDS))
def test_sweep_matches_scalar(backend):
    impl = BACKENDS[backend]
    rng = random.Random(99)
    grid = [(p, l, r) for p in (1.0, 2.0, 3.0) for l in (1.0, 2.0) for r in (0.0, 1.0)]
    attrs = np.array(grid, dtype=np.float64)
    combs = np.array(list(itertools.combinations(range(len(grid)), 3)), dtype=np.int8)
    winners = impl.sweep_pick_best(attrs, combs, *WEIGHTS)
    for row, winner in zip(combs, winners):
        prices = [attrs[i, 0] for i in row]
        leads = [attrs[i, 1] for i in row]
        rels = [attrs[i, 2] for i in row]
        assert impl.pick_best(prices, leads, rels, list(range(3)), *WEIGHTS) == winner
    del rng


def test_sweep_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    grid = [(float(p), float(l), r) for p in range(1, 6) for l in range(1, 4)
            for r in (0.0, 0.5, 1.0)]
    attrs = np.array(grid, dtype=np.float64)
    combs = np.array(list(itertools.combinations(range(len(grid)), 2)), dtype=np.int8)
    results = [impl.sweep_pick_best(attrs, combs, *WEIGHTS)
               for impl in BACKENDS.values()]
    assert np.array_equal(results[0], results[1])


def test_selected_backend_exports():
    assert kernels.BACKEND in BACKENDS
    assert callable(kernels.pick_best)
    assert callable(kernels.sweep_pick_best)
