# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Builders for hand-made graphs, logs and ground truths."""

from typing import Optional, Sequence

import numpy as np

from graph import NetworkGraph, TopologyKind, TopologySpec
from spreading import GroundTruth, ObservationLog, ObservationTable, Protocol


def make_graph(
    kind: TopologyKind,
    edges: Sequence[tuple[int, int]],
    spies: Sequence[int],
    n: int,
    degree: Optional[int] = None,
) -> NetworkGraph:
    """Build a labelled graph from explicit edges."""
    adversarial = np.zeros(n, dtype=bool)
    adversarial[list(spies)] = True
    return NetworkGraph(
        spec=TopologySpec(kind=kind, n=n, degree=degree),
        seed=0,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        adversarial=adversarial,
    )


def make_stem_log(
    senders: Sequence[int], spies: Sequence[int], virtual: Sequence[bool]
) -> ObservationLog:
    """Build a dandelion log with one first-spy row per transaction."""
    count = len(senders)
    table = ObservationTable.from_columns(
        tx=np.arange(count),
        spy=spies,
        sender=senders,
        time=np.ones(count),
        virtual=virtual,
    )
    return ObservationLog(
        protocol=Protocol.DANDELION,
        tx_ids=np.arange(100, 100 + count, dtype=np.uint64),
        full=table,
        first_spy=table,
    )


def make_truth(sources: Sequence[int]) -> GroundTruth:
    """Ground truth whose nonces match ``make_stem_log``."""
    return GroundTruth(
        tx_ids=np.arange(100, 100 + len(sources), dtype=np.uint64),
        sources=np.array(sources, dtype=np.int64),
    )
