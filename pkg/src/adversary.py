# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Adversarial estimators mapping transactions to honest sources.

The estimators work on an ``AdversaryView``: the observation log plus either the
full labelled graph (static knowledge) or only the spies' own neighbourhoods
(dynamic knowledge). Posterior-based estimators take a ``PosteriorModel``
holding P(X_v = x | observations) for every honest node v and transaction x.
"""

import csv
import io
import itertools
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Optional, Self, Union

import numpy as np
from pydantic import model_validator
from pydantic.dataclasses import dataclass
from scipy.optimize import linear_sum_assignment

from graph import (
    ARRAY_CONFIG,
    LINE_KINDS,
    NO_NODE,
    NetworkGraph,
    Ward,
    WardExit,
    WardSemantics,
    compute_wards,
)
from helpers import atomic_write_text
from spreading import DandelionParams, ObservationLog, Protocol

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-12
ORACLE_MAX_HONEST = 8
POSTERIOR_COLUMNS = ("node", "tx", "weight")


class MissingObservationError(Exception):
    """Exception raised when the log lacks observations an estimator needs."""


class InvalidPosteriorError(Exception):
    """Exception raised when a posterior is malformed or contradicts the log."""


class UnsupportedViewError(Exception):
    """Exception raised when an estimator is applied to the wrong kind of view."""


class OracleSizeError(Exception):
    """Exception raised when exhaustive enumeration would be too large."""


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class FullGraph:
    """Static knowledge: the labelled graph with roles.

    Attributes:
        graph: The anonymity or broadcast graph.
    """

    graph: NetworkGraph

    @property
    def honest_nodes(self) -> np.ndarray:
        """Sorted honest node ids."""
        return self.graph.honest_nodes

    @property
    def roster_size(self) -> int:
        """Number of nodes in the network."""
        return self.graph.n


@dataclass(frozen=True)
class SpyNeighbors:
    """Neighbours of one spy.

    Attributes:
        predecessors: Nodes with an edge into the spy.
        successors: Nodes the spy has an edge to.
    """

    predecessors: tuple[int, ...]
    successors: tuple[int, ...]


@dataclass(frozen=True)
class LocalNeighborhood:
    """Dynamic knowledge: the spies' neighbourhoods and the node roster.

    Attributes:
        spy_adjacency: Neighbours of every spy.
        node_roster: All node ids of the network.
        spy_ring: Order of the spies along a line, learned by probing; None off lines.
    """

    spy_adjacency: dict[int, SpyNeighbors]
    node_roster: frozenset[int]
    spy_ring: Optional[tuple[int, ...]] = None

    @property
    def spies(self) -> np.ndarray:
        """Sorted spy ids."""
        return np.array(sorted(self.spy_adjacency), dtype=np.int64)

    @property
    def honest_nodes(self) -> np.ndarray:
        """Sorted ids of roster nodes that are not spies."""
        return np.array(sorted(self.node_roster - set(self.spy_adjacency)), dtype=np.int64)

    @property
    def roster_size(self) -> int:
        """Number of nodes in the network."""
        return len(self.node_roster)

    @classmethod
    def from_graph(cls, g: NetworkGraph) -> Self:
        """Restrict a graph to what its spies can see.

        Args:
            g: Graph with roles placed.

        Returns:
            The local knowledge.
        """
        adjacency = {}
        for spy in g.spy_nodes:
            adjacency[int(spy)] = SpyNeighbors(
                predecessors=tuple(int(v) for v in g.edges[g.edges[:, 1] == spy, 0]),
                successors=tuple(int(v) for v in g.edges[g.edges[:, 0] == spy, 1]),
            )
        ring = None
        if g.spec.kind in LINE_KINDS:
            succ = g.successors()
            start = int(g.spy_nodes[0])
            ring_list = [start]
            node = int(succ[start])
            while node != start:
                if g.adversarial[node]:
                    ring_list.append(node)
                node = int(succ[node])
            ring = tuple(ring_list)
        return cls(spy_adjacency=adjacency, node_roster=frozenset(range(g.n)), spy_ring=ring)


Knowledge = Union[FullGraph, LocalNeighborhood]


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class AdversaryView:
    """Observations available to the adversary.

    Attributes:
        log: The observation log.
        knowledge: Graph knowledge.
    """

    log: ObservationLog
    knowledge: Knowledge

    @classmethod
    def full(cls, g: NetworkGraph, log: ObservationLog) -> Self:
        """View with static knowledge of the whole graph.

        Args:
            g: The graph.
            log: The log.

        Returns:
            The view.
        """
        return cls(log=log, knowledge=FullGraph(graph=g))

    @classmethod
    def local(cls, g: NetworkGraph, log: ObservationLog) -> Self:
        """View with dynamic knowledge of the spies' neighbourhoods only.

        Args:
            g: The graph.
            log: The log.

        Returns:
            The view.
        """
        return cls(log=log, knowledge=LocalNeighborhood.from_graph(g))

    @property
    def honest_nodes(self) -> np.ndarray:
        """Sorted honest node ids known to the adversary."""
        return self.knowledge.honest_nodes


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class PosteriorModel:
    """P(X_v = x | observations) for honest nodes v and transactions x.

    Attributes:
        nodes: (rows,) sorted honest node ids labelling the rows.
        tx_ids: (columns,) transaction nonces labelling the columns.
        weights: (rows, columns) probabilities; each column sums to one.
    """

    nodes: np.ndarray
    tx_ids: np.ndarray
    weights: np.ndarray

    @model_validator(mode="after")
    def validate_weights(self) -> Self:
        """Validate shape, sign and column normalisation.

        Returns:
            This class instance.

        Raises:
            ValueError: If weights are negative or a column does not sum to one.
        """
        if self.weights.shape != (self.nodes.size, self.tx_ids.size):
            raise ValueError("Weights must be indexed by (nodes, transactions).")
        if np.any(self.weights < 0):
            raise ValueError("Posterior weights must be non-negative.")
        sums = self.weights.sum(axis=0)
        if np.any(np.abs(sums - 1) > NORMALIZATION_TOLERANCE):
            worst = int(np.argmax(np.abs(sums - 1)))
            raise ValueError(f"Posterior column {worst} sums to {sums[worst]!r}, not 1.")
        return self

    def rows_of(self, nodes: np.ndarray) -> np.ndarray:
        """Row indices of the given nodes, -1 where absent.

        Args:
            nodes: Node ids.

        Returns:
            Row indices.
        """
        positions = np.minimum(np.searchsorted(self.nodes, nodes), self.nodes.size - 1)
        return np.where(self.nodes[positions] == nodes, positions, -1)


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class SourceMapping:
    """Estimated source per transaction.

    Attributes:
        tx_ids: Transaction nonces.
        targets: Honest node assigned to each transaction.
        is_matching: Whether no two transactions share a target.
    """

    tx_ids: np.ndarray
    targets: np.ndarray
    is_matching: bool

    @model_validator(mode="after")
    def validate_injective(self) -> Self:
        """Validate lengths and injectivity of matchings.

        Returns:
            This class instance.

        Raises:
            ValueError: If lengths differ or a matching repeats a target.
        """
        if self.tx_ids.shape != self.targets.shape:
            raise ValueError("Every transaction needs exactly one target.")
        if self.is_matching and np.unique(self.targets).size != self.targets.size:
            raise ValueError("A matching must not assign two transactions to one node.")
        return self


def _require_complete(log: ObservationLog) -> None:
    if not log.is_complete:
        missing = log.n_tx - len(log.first_spy)
        logger.error("%d transactions have no first-spy observation", missing)
        raise MissingObservationError(f"{missing} transactions have no first-spy observation.")


def _require_full_graph(view: AdversaryView) -> NetworkGraph:
    if not isinstance(view.knowledge, FullGraph):
        raise UnsupportedViewError("This estimator needs static knowledge of the full graph.")
    return view.knowledge.graph


def _require_aligned(view: AdversaryView, model: PosteriorModel) -> None:
    if not np.array_equal(view.log.tx_ids, model.tx_ids):
        raise InvalidPosteriorError("Posterior columns do not match the logged transactions.")


def _fill_randomly(
    targets: np.ndarray, honest: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, bool]:
    """Assign unmapped transactions to unused honest nodes in random order.

    Returns:
        The completed targets and whether the result is a matching.
    """
    pending = np.flatnonzero(targets == NO_NODE)
    free = np.setdiff1d(honest, targets[targets != NO_NODE])
    free = rng.permutation(free)
    filled = targets.copy()
    count = min(pending.size, free.size)
    filled[pending[:count]] = free[:count]
    overflow = pending[count:]
    if overflow.size:
        filled[overflow] = rng.choice(honest, size=overflow.size)
    return filled, overflow.size == 0 and np.unique(targets[targets != NO_NODE]).size == int(
        (targets != NO_NODE).sum()
    )


def first_spy_estimator(view: AdversaryView) -> SourceMapping:
    """Map each transaction to the honest node that first delivered it to a spy.

    Args:
        view: Adversary observations.

    Returns:
        The mapping; generally not a matching.
    """
    _require_complete(view.log)
    return SourceMapping(
        tx_ids=view.log.tx_ids, targets=view.log.first_spy.sender.copy(), is_matching=False
    )


def matching_estimator(view: AdversaryView, model: PosteriorModel, seed: int) -> SourceMapping:
    """Maximum-weight matching of transactions to nodes under posterior weights.

    The objective is the sum of posterior probabilities of the chosen pairs, which
    is the expected number of correctly mapped transactions. Zero-probability pairs
    are never used; transactions left without a positive pair are matched uniformly
    at random to the remaining nodes. Rows and columns are shuffled before solving
    so that ties are broken at random.

    Args:
        view: Adversary observations.
        model: Posterior over sources.
        seed: Tie-breaking seed.

    Returns:
        A matching.

    Raises:
        InvalidPosteriorError: If there are fewer candidate nodes than transactions.
    """
    _require_aligned(view, model)
    if model.nodes.size < model.tx_ids.size:
        raise InvalidPosteriorError("A matching needs at least as many nodes as transactions.")
    rng = np.random.default_rng(seed)
    row_perm = rng.permutation(model.nodes.size)
    col_perm = rng.permutation(model.tx_ids.size)
    rows, cols = linear_sum_assignment(model.weights[np.ix_(row_perm, col_perm)], maximize=True)
    node_rows, tx_cols = row_perm[rows], col_perm[cols]
    positive = model.weights[node_rows, tx_cols] > 0
    targets = np.full(model.tx_ids.size, NO_NODE, dtype=np.int64)
    targets[tx_cols[positive]] = model.nodes[node_rows[positive]]
    targets, _ = _fill_randomly(targets, model.nodes, rng)
    return SourceMapping(tx_ids=model.tx_ids, targets=targets, is_matching=True)


def recall_optimal_estimator(
    view: AdversaryView, model: PosteriorModel, seed: int = 0
) -> SourceMapping:
    """Map each transaction independently to a most likely source.

    Among maximisers the logged first-spy sender is preferred when present;
    other ties are broken uniformly at random.

    Args:
        view: Adversary observations.
        model: Posterior over sources.
        seed: Tie-breaking seed.

    Returns:
        The mapping; not a matching.
    """
    _require_aligned(view, model)
    rng = np.random.default_rng(seed)
    weights = model.weights
    ties = weights >= weights.max(axis=0) - TIE_TOLERANCE
    keys = np.where(ties, rng.random(weights.shape), -1.0)
    choice = keys.argmax(axis=0)
    if view.log.is_complete:
        sender_rows = model.rows_of(view.log.first_spy.sender)
        columns = np.arange(weights.shape[1])
        preferred = (sender_rows >= 0) & ties[np.maximum(sender_rows, 0), columns]
        choice = np.where(preferred, sender_rows, choice)
    return SourceMapping(tx_ids=model.tx_ids, targets=model.nodes[choice], is_matching=False)


def _forwarding_paths(g: NetworkGraph, ward: Ward) -> tuple[np.ndarray, np.ndarray]:
    """Members of a ward and which members lie on each member's forwarding path.

    Returns:
        Sorted members and a boolean matrix ``on_path[i, j]`` that is True when
        member j lies on member i's path to the ward exit, i itself included.
    """
    succ = g.successors()
    members = np.array(sorted(ward.members), dtype=np.int64)
    position = {int(node): index for index, node in enumerate(members)}
    on_path = np.zeros((members.size, members.size), dtype=bool)
    for index, node in enumerate(members):
        current = int(node)
        for _ in range(members.size):
            on_path[index, position[current]] = True
            nxt = int(succ[current])
            if current == ward.head or nxt not in position:
                break
            current = nxt
    return members, on_path


def _laminar_marginals(supports: np.ndarray) -> np.ndarray:
    """Marginals of a uniform perfect matching when supports form a laminar family.

    Transactions are processed from the smallest support upwards; each picks a
    uniformly random node still free in its support. Every choice leaves the same
    number of completions, so this is the uniform distribution over perfect
    matchings, and a node's chance to be free decomposes along the chain of
    supports containing it.

    Args:
        supports: Boolean (transactions, members) support matrix.

    Returns:
        (members, transactions) marginal probabilities.

    Raises:
        InvalidPosteriorError: If no perfect matching exists.
    """
    family, inverse = np.unique(supports, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    multiplicity = np.bincount(inverse, minlength=family.shape[0])
    size = family.sum(axis=1)
    as_int = family.astype(np.int64)
    nested = ((as_int @ (1 - as_int).T) == 0) & (size[:, None] < size[None, :])
    free = size - multiplicity @ nested
    if np.any(free < multiplicity):
        raise InvalidPosteriorError("Observed exits admit no consistent source assignment.")
    survive = np.ones(supports.shape[1])
    marginals = np.zeros((supports.shape[1], supports.shape[0]))
    for group in np.argsort(size, kind="stable"):
        members = np.flatnonzero(family[group])
        columns = np.flatnonzero(inverse == group)
        marginals[np.ix_(members, columns)] = (survive[members] / free[group])[:, None]
        survive[members] *= 1 - multiplicity[group] / free[group]
    return marginals


def dandelion_static_posterior(view: AdversaryView) -> PosteriorModel:
    """Posterior of stem logs when the adversary knows the whole anonymity graph.

    On graphs of out-degree at most one every node's path is fixed, so each
    observation constrains its source to a support: a spy exit to the whole ward,
    a virtual exit at h to the ward members strictly upstream of h (or the whole
    ward when h is a sink). Path likelihoods factor into a per-source term and a
    per-observation term, so the posterior is that of a uniform perfect matching
    on the supports. With q = 0 this is uniform within each ward.

    Args:
        view: Observations with static knowledge.

    Returns:
        The posterior.

    Raises:
        InvalidPosteriorError: If a ward's observations are inconsistent.
    """
    g = _require_full_graph(view)
    log = view.log
    _require_complete(log)
    honest = g.honest_nodes
    row_of = np.full(g.n, -1, dtype=np.int64)
    row_of[honest] = np.arange(honest.size)
    weights = np.zeros((honest.size, log.n_tx))
    wards = compute_wards(g, WardSemantics.DANDELION_PATH)
    ward_of = np.full(g.n, -1, dtype=np.int64)
    for index, ward in enumerate(wards):
        ward_of[list(ward.members)] = index
    first = log.first_spy
    exit_ward = ward_of[first.sender]
    for index, ward in enumerate(wards):
        columns = np.flatnonzero(exit_ward == index)
        if columns.size != len(ward.members):
            raise InvalidPosteriorError(
                f"Ward headed by {ward.head} has {len(ward.members)} members "
                f"but {columns.size} exits."
            )
        members, on_path = _forwarding_paths(g, ward)
        whole_ward = (
            ~first.virtual[columns]
            | (first.sender[columns] == ward.head) & (ward.exit != WardExit.SPY)
            | (ward.exit == WardExit.ISOLATED)
        )
        if whole_ward.all():
            weights[np.ix_(row_of[members], columns)] = 1.0 / members.size
            continue
        exit_position = np.searchsorted(members, first.sender[columns])
        supports = on_path[:, exit_position].T.copy()
        supports[np.arange(columns.size), exit_position] = False
        supports[whole_ward] = True
        weights[np.ix_(row_of[members], columns)] = _laminar_marginals(supports)
    return PosteriorModel(nodes=honest, tx_ids=log.tx_ids, weights=weights)


def dandelion_dynamic_line_posterior(view: AdversaryView) -> PosteriorModel:
    """Posterior of q = 0 stem logs on a line when only spy neighbourhoods are known.

    The adversary knows each ward's head and tail and learns the ward size from the
    number of transactions exiting at the head. Head and tail each carry 1/w; the
    remaining mass is spread over the interior candidates, the honest nodes that
    are neither a head nor a tail, in proportion to the ward's share of interior
    slots.

    Args:
        view: Observations with local knowledge of a line.

    Returns:
        The posterior.

    Raises:
        UnsupportedViewError: If the view is not local knowledge of a line or the log
            holds virtual exits.
        InvalidPosteriorError: If the log contradicts the ward structure.
    """
    knowledge = view.knowledge
    if not isinstance(knowledge, LocalNeighborhood) or knowledge.spy_ring is None:
        raise UnsupportedViewError("The line posterior needs local knowledge of a line graph.")
    log = view.log
    _require_complete(log)
    first = log.first_spy
    if first.virtual.any():
        raise UnsupportedViewError(
            "Virtual exits reveal interior nodes; use the static posterior instead."
        )
    honest = knowledge.honest_nodes
    spies = set(knowledge.spy_adjacency)
    ring = knowledge.spy_ring
    wards = []
    for position, spy in enumerate(ring):
        following = ring[(position + 1) % len(ring)]
        tail = knowledge.spy_adjacency[spy].successors[0]
        head = knowledge.spy_adjacency[following].predecessors[0]
        if tail not in spies:
            wards.append((tail, head))
    edges = {node for pair in wards for node in pair}
    interior = np.setdiff1d(honest, np.array(sorted(edges), dtype=np.int64))
    weights = np.zeros((honest.size, log.n_tx))
    rows = {int(node): index for index, node in enumerate(honest)}
    interior_rows = np.array([rows[int(node)] for node in interior], dtype=np.int64)
    for tail, head in wards:
        columns = np.flatnonzero(first.sender == head)
        size = columns.size
        if size == 0 or (size == 1) != (head == tail):
            raise InvalidPosteriorError(f"Ward headed by {head} has inconsistent exits.")
        if size == 1:
            weights[rows[head], columns] = 1.0
            continue
        weights[rows[head], columns] = 1.0 / size
        weights[rows[tail], columns] = 1.0 / size
        if size > 2:
            if interior_rows.size == 0:
                raise InvalidPosteriorError("No interior candidates remain for a large ward.")
            share = (size - 2) / (interior_rows.size * size)
            weights[np.ix_(interior_rows, columns)] = share
    return PosteriorModel(nodes=honest, tx_ids=log.tx_ids, weights=weights)


def flooding_static_estimator(view: AdversaryView, seed: int) -> SourceMapping:
    """Match uniquely delivered flooding transactions within reachability wards.

    A transaction whose first-round deliveries all come from one honest node u
    must belong to a node whose only first-round sender is u. Such transactions
    are matched at random with u's ward; the rest are matched at random with the
    remaining nodes.

    Args:
        view: Flooding observations with static knowledge.
        seed: Matching seed.

    Returns:
        The mapping.

    Raises:
        UnsupportedViewError: If the log does not come from flooding.
    """
    g = _require_full_graph(view)
    log = view.log
    if log.protocol != Protocol.FLOODING:
        raise UnsupportedViewError(f"Expected a flooding log, got {log.protocol.value}.")
    _require_complete(log)
    rng = np.random.default_rng(seed)
    full = log.full
    first_time = np.full(log.n_tx, np.inf)
    first_time[log.first_spy.tx] = log.first_spy.time
    leading = full.time == first_time[full.tx]
    pairs = np.unique(np.column_stack([full.tx[leading], full.sender[leading]]), axis=0)
    senders_per_tx = np.bincount(pairs[:, 0], minlength=log.n_tx)
    sole = senders_per_tx == 1
    sole_sender = np.full(log.n_tx, NO_NODE, dtype=np.int64)
    single = sole[pairs[:, 0]]
    sole_sender[pairs[single, 0]] = pairs[single, 1]
    targets = np.full(log.n_tx, NO_NODE, dtype=np.int64)
    for ward in compute_wards(g, WardSemantics.FLOODING_REACHABILITY):
        columns = rng.permutation(np.flatnonzero(sole_sender == ward.head))
        members = rng.permutation(np.array(sorted(ward.members), dtype=np.int64))
        count = min(columns.size, members.size)
        targets[columns[:count]] = members[:count]
    targets, is_matching = _fill_randomly(targets, g.honest_nodes, rng)
    return SourceMapping(tx_ids=log.tx_ids, targets=targets, is_matching=is_matching)


def threshold_round_offset(n: int) -> int:
    """Rounds after first spy reception at which spy receipts are counted.

    Args:
        n: Network size.

    Returns:
        floor(log2(n) / 4) - 1, never negative.
    """
    return max(0, math.floor(math.log2(n) / 4) - 1)


def flooding_dynamic_estimator(view: AdversaryView, p: float, seed: int) -> SourceMapping:
    """Threshold estimator for flooding on dynamic regular graphs.

    A transaction is mapped to the sender of its first spy observation when few
    spies receive it a fixed number of rounds later, which is typical when that
    sender is the source. Everything else is matched at random with nodes not
    used so far.

    Args:
        view: Flooding observations.
        p: Adversarial fraction known to the adversary.
        seed: Matching seed.

    Returns:
        The mapping; not a matching.

    Raises:
        MissingObservationError: If per-round spy counts are missing.
    """
    log = view.log
    if log.protocol != Protocol.FLOODING or log.per_round_spy_counts is None:
        raise MissingObservationError("Per-round spy counts from a flooding log are required.")
    _require_complete(log)
    rng = np.random.default_rng(seed)
    n = view.knowledge.roster_size
    counts = log.per_round_spy_counts
    first = log.first_spy
    column = first.time.astype(np.int64) + threshold_round_offset(n)
    inside = column < counts.shape[1]
    eta = np.zeros(log.n_tx, dtype=np.int64)
    eta[inside] = counts[first.tx[inside], column[inside]]
    confident = eta < 2 * p * n**0.25
    targets = np.full(log.n_tx, NO_NODE, dtype=np.int64)
    targets[first.tx[confident]] = first.sender[confident]
    logger.debug("Threshold estimator kept %d of %d first senders", confident.sum(), log.n_tx)
    targets, _ = _fill_randomly(targets, view.honest_nodes, rng)
    return SourceMapping(tx_ids=log.tx_ids, targets=targets, is_matching=False)


def _exit_distribution(
    g: NetworkGraph, params: DandelionParams, source: int
) -> dict[tuple[int, int, bool], float]:
    """Exact distribution of (exit node, spy, virtual) for one stem."""
    adjacency = params.anon_graph.out_adjacency
    degree = params.anon_graph.out_degree
    outcome: dict[tuple[int, int, bool], float] = defaultdict(float)
    if degree[source] == 0:
        outcome[(source, NO_NODE, True)] = 1.0
        return outcome
    mass = {source: 1.0}
    for hop in range(1, params.hop_cap + 1):
        carried: dict[int, float] = defaultdict(float)
        for node, weight in mass.items():
            neighbours = adjacency.indices[adjacency.indptr[node] : adjacency.indptr[node + 1]]
            share = weight / neighbours.size
            for nxt in (int(v) for v in neighbours):
                if g.adversarial[nxt]:
                    outcome[(node, nxt, False)] += share
                    continue
                stop = 1.0 if hop >= params.hop_cap or degree[nxt] == 0 else params.q
                outcome[(nxt, NO_NODE, True)] += share * stop
                if stop < 1:
                    carried[nxt] += share * (1 - stop)
        mass = carried
        if not mass:
            break
    return outcome


def brute_force_posterior(
    g: NetworkGraph, log: ObservationLog, params: DandelionParams
) -> PosteriorModel:
    """Exact stem posterior by enumerating every source assignment.

    The likelihood of a log under an assignment is the product over transactions
    of the probability that the stem from the assigned source exits as observed,
    with hop counts ignored. Assignments are weighted uniformly a priori.

    Args:
        g: The anonymity graph with roles.
        log: A stem log.
        params: Stem parameters.

    Returns:
        The posterior.

    Raises:
        OracleSizeError: If there are more than eight honest nodes.
        InvalidPosteriorError: If the log has zero likelihood.
    """
    honest = g.honest_nodes
    if honest.size > ORACLE_MAX_HONEST:
        raise OracleSizeError(
            f"Enumeration over {honest.size}! assignments exceeds the limit of "
            f"{ORACLE_MAX_HONEST} honest nodes."
        )
    _require_complete(log)
    first = log.first_spy
    observed = list(
        zip(
            (int(v) for v in first.sender),
            (int(v) for v in first.spy),
            (bool(v) for v in first.virtual),
            strict=True,
        )
    )
    likelihood = np.zeros((honest.size, log.n_tx))
    for row, source in enumerate(honest):
        distribution = _exit_distribution(g, params, int(source))
        likelihood[row] = [distribution.get(key, 0.0) for key in observed]
    perms = np.array(list(itertools.permutations(range(honest.size))), dtype=np.int64)
    columns = np.arange(log.n_tx)
    joint = likelihood[perms, columns].prod(axis=1)
    total = joint.sum()
    if total <= 0:
        raise InvalidPosteriorError("The log has zero likelihood under the stem model.")
    weights = np.zeros_like(likelihood)
    np.add.at(weights, (perms, np.broadcast_to(columns, perms.shape)), joint[:, None] / total)
    return PosteriorModel(nodes=honest, tx_ids=log.tx_ids, weights=weights)


def expected_correct(model: PosteriorModel, mapping: SourceMapping) -> float:
    """Expected number of correctly mapped transactions under a posterior.

    Args:
        model: The posterior.
        mapping: A mapping over the same transactions.

    Returns:
        Sum over transactions of P(mapped node is the source).
    """
    rows = model.rows_of(mapping.targets)
    values = np.where(rows >= 0, model.weights[np.maximum(rows, 0), np.arange(rows.size)], 0.0)
    return float(values.sum())


def best_matching_value(model: PosteriorModel) -> float:
    """Largest expected number of correct transactions over all matchings, by enumeration.

    Args:
        model: A posterior with at most eight rows.

    Returns:
        The optimum.

    Raises:
        OracleSizeError: If the posterior is too large to enumerate.
    """
    if model.nodes.size > ORACLE_MAX_HONEST:
        raise OracleSizeError(f"Cannot enumerate matchings over {model.nodes.size} nodes.")
    columns = np.arange(model.tx_ids.size)
    perms = np.array(
        list(itertools.permutations(range(model.nodes.size), model.tx_ids.size)), dtype=np.int64
    )
    return float(model.weights[perms, columns].sum(axis=1).max())


def posterior_to_csv(model: PosteriorModel) -> str:
    """Render the non-zero posterior entries as CSV.

    Args:
        model: The posterior.

    Returns:
        CSV text with columns node, tx, weight.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(POSTERIOR_COLUMNS)
    rows, columns = np.nonzero(model.weights)
    for row, column in zip(rows, columns, strict=True):
        writer.writerow(
            [
                int(model.nodes[row]),
                int(model.tx_ids[column]),
                repr(float(model.weights[row, column])),
            ]
        )
    return buffer.getvalue()


def write_posterior_csv(model: PosteriorModel, path: Path) -> None:
    """Write the non-zero posterior entries as CSV.

    Args:
        model: The posterior.
        path: Destination file.
    """
    atomic_write_text(path, posterior_to_csv(model))


def read_posterior_csv(
    path: Path, nodes: Optional[np.ndarray] = None, tx_ids: Optional[np.ndarray] = None
) -> PosteriorModel:
    """Read a posterior written by ``write_posterior_csv``.

    Args:
        path: Source file.
        nodes: Row labels; defaults to the sorted nodes present in the file.
        tx_ids: Column labels; defaults to transactions in order of first appearance.

    Returns:
        The posterior.

    Raises:
        InvalidPosteriorError: If the file is malformed or not normalised.
    """
    with path.open(encoding="utf-8", newline="") as source:
        reader = csv.DictReader(source)
        missing = set(POSTERIOR_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InvalidPosteriorError(f"Posterior CSV lacks columns {sorted(missing)}")
        entries = [(int(row["node"]), int(row["tx"]), float(row["weight"])) for row in reader]
    if nodes is None:
        nodes = np.array(sorted({entry[0] for entry in entries}), dtype=np.int64)
    if tx_ids is None:
        tx_ids = np.array(list(dict.fromkeys(entry[1] for entry in entries)), dtype=np.uint64)
    node_row = {int(node): index for index, node in enumerate(nodes)}
    tx_column = {int(tx): index for index, tx in enumerate(tx_ids)}
    weights = np.zeros((len(nodes), len(tx_ids)))
    try:
        for node, tx, weight in entries:
            weights[node_row[node], tx_column[tx]] = weight
        return PosteriorModel(nodes=nodes, tx_ids=tx_ids, weights=weights)
    except (KeyError, ValueError) as exc:
        raise InvalidPosteriorError(f"Malformed posterior CSV: {exc}") from exc
