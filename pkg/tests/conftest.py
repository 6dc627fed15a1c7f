import numpy as np
import pytest

from sgm import Context, StratifiedGraph, UndirectedGraph


def graph(d, *edges_1based):
    """Graph from 1-based edge pairs."""
    return UndirectedGraph(d, frozenset((a - 1, b - 1) for a, b in edges_1based))


def model(g, *instances_1based):
    """Stratified graph from ``((a, b), {node: value})`` pairs with 1-based labels."""
    return StratifiedGraph.from_instances(
        g,
        [((a - 1, b - 1), Context({k - 1: v for k, v in ctx.items()})) for (a, b), ctx in instances_1based],
    )


def random_table(rng, d, low=0.05):
    p = rng.uniform(low, 1.0, size=1 << d)
    return p / p.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def complete3():
    return graph(3, (1, 2), (1, 3), (2, 3))


@pytest.fixture
def one_csi(complete3):
    return model(complete3, ((2, 3), {1: 1}))


@pytest.fixture
def two_csi(complete3):
    return model(complete3, ((2, 3), {1: 1}), ((1, 3), {2: 1}))


@pytest.fixture
def edge_and_isolated():
    return graph(3, (1, 2))


@pytest.fixture
def chordless_graph():
    return graph(5, (1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 5))
