# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

# pylint: disable=duplicate-code,missing-function-docstring
"""Unit tests."""

import pytest

from graph import NetworkGraph, TopologyKind

from .helper import make_graph


@pytest.fixture(name="four_cycle")
def four_cycle_fixture() -> NetworkGraph:
    """Directed cycle 0 -> 1 -> 2 -> 3 -> 0 with node 3 adversarial."""
    return make_graph(TopologyKind.CYCLE, [(0, 1), (1, 2), (2, 3), (3, 0)], [3], 4)


@pytest.fixture(name="five_cycle")
def five_cycle_fixture() -> NetworkGraph:
    """Directed cycle 0 -> 1 -> 2 -> 3 -> 4 -> 0 with node 4 adversarial."""
    return make_graph(TopologyKind.CYCLE, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], [4], 5)


@pytest.fixture(name="binary_tree")
def binary_tree_fixture() -> NetworkGraph:
    """Perfect binary tree on 7 nodes, edges towards the root 0, node 1 adversarial."""
    edges = [(child, (child - 1) // 2) for child in range(1, 7)]
    return make_graph(TopologyKind.PERFECT_D_ARY_TREE, edges, [1], 7, degree=2)


@pytest.fixture(name="undirected_ring")
def undirected_ring_fixture() -> NetworkGraph:
    """Undirected 6-ring whose node 0 is a spy."""
    ring = [(v, (v + 1) % 6) for v in range(6)]
    return make_graph(TopologyKind.D_REGULAR, ring + [(b, a) for a, b in ring], [0], 6, degree=2)
