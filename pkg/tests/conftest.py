"""Shared fixtures: small path corpora reused across test modules."""

import numpy as np
import pytest

import pathwise as pw


@pytest.fixture(scope="session")
def tent():
    return pw.tent_path()


@pytest.fixture(scope="session")
def corpus():
    """Twenty seeded piecewise-linear paths, mixed sign and scale."""
    return [pw.random_segment_path(seed) for seed in range(20)]


@pytest.fixture(scope="session")
def bounded_corpus():
    return [pw.random_segment_path(seed, bound=2.0) for seed in range(20)]


@pytest.fixture(scope="session")
def brownian():
    # one moderately fine Brownian path shared by the slower checks
    return pw.brownian_path(1.0, 2.0 ** -16, seed=11)


@pytest.fixture()
def rng():
    return np.random.default_rng(417)
