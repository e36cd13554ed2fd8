import random

import pytest

from subspace_approx import lattice


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_subspace(rng, n, e, lo=-9, hi=9):
    while True:
        rows = [[rng.randint(lo, hi) for _ in range(n)] for _ in range(e)]
        try:
            return lattice.saturate(rows)
        except lattice.DegenerateBasisError:
            continue


@pytest.fixture
def make_subspace(rng):
    def _make(n, e):
        return random_subspace(rng, n, e)

    return _make
