# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Broadcast protocols and the adversary's observation logs.

Each honest node emits exactly one transaction per trial. Logs keep only what
spies witness: which honest neighbour delivered a transaction, to which spy,
and when, measured without knowledge of the transaction's origin time.
"""

import csv
import io
import logging
from enum import Enum
from pathlib import Path
from typing import Optional, Self

import numpy as np
from pydantic import Field, model_validator
from pydantic.dataclasses import dataclass
from scipy.sparse import csgraph

from graph import ARRAY_CONFIG, NO_NODE, TREE_KINDS, NetworkGraph
from helpers import atomic_write_text

logger = logging.getLogger(__name__)

_BFS_CHUNK = 512
LOG_COLUMNS = ("tx", "spy", "sender", "time", "virtual")


class UnreachableNodesError(Exception):
    """Exception raised when some sources cannot reach any adversary."""


class StemDeadEndError(Exception):
    """Exception raised when an honest node cannot forward a stem message."""


class InvalidObservationLogError(Exception):
    """Exception raised when an observation log is inconsistent."""


class Protocol(str, Enum):
    """Spreading protocols.

    Attributes:
        FLOODING: synchronous rounds, unit delay per edge.
        DIFFUSION: independent exponential delays per edge.
        DIFFUSION_BY_PROXY: uniform relays drawn from the whole population.
        DANDELION: random-walk stem followed by diffusion.
    """

    FLOODING = "flooding"
    DIFFUSION = "diffusion"
    DIFFUSION_BY_PROXY = "diffusion-by-proxy"
    DANDELION = "dandelion"


def _unique_nonces(rng: np.random.Generator, size: int) -> np.ndarray:
    while True:
        nonces = rng.integers(0, np.iinfo(np.uint64).max, size=size, dtype=np.uint64)
        if np.unique(nonces).size == size:
            return nonces


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class GroundTruth:
    """Which honest node created which transaction.

    Transaction i carries nonce ``tx_ids[i]`` and was created by ``sources[i]``.

    Attributes:
        tx_ids: (n_honest,) opaque 64-bit nonces.
        sources: (n_honest,) honest node per transaction, a permutation of the honest nodes.
    """

    tx_ids: np.ndarray
    sources: np.ndarray

    @model_validator(mode="after")
    def validate_bijection(self) -> Self:
        """Validate that nonces and sources are both unique.

        Returns:
            This class instance.

        Raises:
            ValueError: If the arrays disagree in length or repeat values.
        """
        if self.tx_ids.shape != self.sources.shape:
            raise ValueError("Transaction ids and sources must have the same length.")
        if np.unique(self.tx_ids).size != self.tx_ids.size:
            raise ValueError("Transaction ids must be unique.")
        if np.unique(self.sources).size != self.sources.size:
            raise ValueError("Every honest node creates exactly one transaction.")
        return self

    @classmethod
    def draw(cls, g: NetworkGraph, seed: int) -> Self:
        """Assign one transaction to every honest node uniformly at random.

        Args:
            g: Graph with roles placed.
            seed: Assignment seed.

        Returns:
            The ground truth.
        """
        rng = np.random.default_rng(seed)
        sources = rng.permutation(g.honest_nodes)
        return cls(tx_ids=_unique_nonces(rng, sources.size), sources=sources)

    def tx_index_of(self, tx_ids: np.ndarray) -> np.ndarray:
        """Positions of the given nonces in this ground truth.

        Args:
            tx_ids: Nonces to look up.

        Returns:
            Transaction indices.

        Raises:
            KeyError: If a nonce is unknown.
        """
        order = np.argsort(self.tx_ids)
        positions = np.searchsorted(self.tx_ids, tx_ids, sorter=order)
        positions = np.minimum(positions, self.tx_ids.size - 1)
        found = order[positions]
        if not np.array_equal(self.tx_ids[found], tx_ids):
            raise KeyError("Mapping refers to transactions absent from the ground truth.")
        return found


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class ObservationTable:
    """Columnar (transaction, spy, sender, time) tuples.

    Attributes:
        tx: Transaction index per row.
        spy: Receiving spy per row, NO_NODE for virtual exits.
        sender: Honest node that delivered the transaction.
        time: Round (flooding), relative time (diffusion) or hop index (stems).
        virtual: True when the row is a virtual-spy exit.
    """

    tx: np.ndarray
    spy: np.ndarray
    sender: np.ndarray
    time: np.ndarray
    virtual: np.ndarray

    @model_validator(mode="after")
    def validate_columns(self) -> Self:
        """Validate that all columns have the same length.

        Returns:
            This class instance.

        Raises:
            ValueError: If column lengths differ.
        """
        lengths = {column.shape for column in (self.spy, self.sender, self.time, self.virtual)}
        if lengths != {self.tx.shape}:
            raise ValueError("Observation columns must have equal lengths.")
        return self

    def __len__(self) -> int:
        """Row count."""
        return int(self.tx.size)

    @classmethod
    def from_columns(
        cls,
        tx: np.ndarray,
        spy: np.ndarray,
        sender: np.ndarray,
        time: np.ndarray,
        virtual: Optional[np.ndarray] = None,
    ) -> Self:
        """Build a table coercing column dtypes.

        Args:
            tx: Transaction indices.
            spy: Receiving spies.
            sender: Delivering honest nodes.
            time: Observation times.
            virtual: Virtual-exit flags, all False when omitted.

        Returns:
            The table.
        """
        tx = np.asarray(tx, dtype=np.int64)
        return cls(
            tx=tx,
            spy=np.asarray(spy, dtype=np.int64),
            sender=np.asarray(sender, dtype=np.int64),
            time=np.asarray(time, dtype=np.float64),
            virtual=(
                np.zeros(tx.size, dtype=bool)
                if virtual is None
                else np.asarray(virtual, dtype=bool)
            ),
        )

    def take(self, rows: np.ndarray) -> "ObservationTable":
        """Subset of rows.

        Args:
            rows: Row indices or mask.

        Returns:
            The selected rows.
        """
        return ObservationTable(
            tx=self.tx[rows],
            spy=self.spy[rows],
            sender=self.sender[rows],
            time=self.time[rows],
            virtual=self.virtual[rows],
        )


def first_spy_rows(full: ObservationTable) -> ObservationTable:
    """Earliest observation per transaction.

    Ties are broken by lowest sender, then lowest spy.

    Args:
        full: All observations.

    Returns:
        One row per observed transaction, ordered by transaction index.
    """
    order = np.lexsort((full.spy, full.sender, full.time, full.tx))
    ordered_tx = full.tx[order]
    leading = np.ones(order.size, dtype=bool)
    leading[1:] = ordered_tx[1:] != ordered_tx[:-1]
    return full.take(order[leading])


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class ObservationLog:
    """The adversary's evidence for one trial.

    Attributes:
        protocol: Protocol that produced the log.
        tx_ids: (n_tx,) nonces; table rows refer to positions in this array.
        full: Every first receipt by a spy from an honest sender.
        first_spy: Earliest receipt per transaction, ordered by transaction index.
        per_round_spy_counts: (n_tx, rounds) number of spies first receiving each
            transaction in each round; flooding only.
    """

    protocol: Protocol
    tx_ids: np.ndarray
    full: ObservationTable
    first_spy: ObservationTable
    per_round_spy_counts: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def validate_first_spy(self) -> Self:
        """Validate that first-spy rows are unique per transaction and earliest.

        Returns:
            This class instance.

        Raises:
            ValueError: If a first-spy row is duplicated or later than a full-log row.
        """
        if np.any(np.diff(self.first_spy.tx) <= 0):
            raise ValueError("First-spy rows must be unique and ordered by transaction.")
        earliest = np.full(self.tx_ids.size, np.inf)
        np.minimum.at(earliest, self.full.tx, self.full.time)
        if np.any(self.first_spy.time > earliest[self.first_spy.tx] + 1e-12):
            raise ValueError("First-spy times must not exceed any full-log time.")
        return self

    @property
    def n_tx(self) -> int:
        """Number of transactions in the trial."""
        return int(self.tx_ids.size)

    @property
    def is_complete(self) -> bool:
        """Whether every transaction has a first-spy observation."""
        return len(self.first_spy) == self.n_tx


def run_flooding(
    g: NetworkGraph, truth: GroundTruth, bidirectional: Optional[bool] = None
) -> ObservationLog:
    """Flood every transaction in synchronous rounds.

    All sources start in round 0 and each node forwards to all neighbours one
    round after its first receipt. Spies relay like honest nodes.

    Args:
        g: Graph with roles placed.
        truth: Transaction sources.
        bidirectional: Propagation direction override, see ``spreading_adjacency``.

    Returns:
        The log, with per-round spy counts.

    Raises:
        UnreachableNodesError: If a source cannot reach any spy.
    """
    adjacency = g.spreading_adjacency(bidirectional)
    coo = adjacency.tocoo()
    feeds = ~g.adversarial[coo.row] & g.adversarial[coo.col]
    feed_sender, feed_spy = coo.row[feeds], coo.col[feeds]
    spies = g.spy_nodes
    tables: list[ObservationTable] = []
    spy_rounds: list[np.ndarray] = []
    unreachable: list[int] = []
    for start in range(0, truth.sources.size, _BFS_CHUNK):
        tx = np.arange(start, min(start + _BFS_CHUNK, truth.sources.size))
        dist = csgraph.shortest_path(adjacency, unweighted=True, indices=truth.sources[tx])
        reached = np.isfinite(dist[:, spies]).any(axis=1)
        unreachable.extend(int(v) for v in truth.sources[tx[~reached]])
        hits = np.isfinite(dist[:, feed_spy]) & (dist[:, feed_sender] == dist[:, feed_spy] - 1)
        rows, edges = np.nonzero(hits)
        tables.append(
            ObservationTable.from_columns(
                tx=tx[rows],
                spy=feed_spy[edges],
                sender=feed_sender[edges],
                time=dist[rows, feed_spy[edges]],
            )
        )
        spy_rounds.append(dist[:, spies])
    if unreachable:
        logger.error("Flooding sources cannot reach any adversary: %s", unreachable)
        raise UnreachableNodesError(
            f"Sources without a path to any adversary: {sorted(unreachable)}"
        )
    full = ObservationTable.from_columns(
        *(np.concatenate([getattr(t, name) for t in tables]) for name in LOG_COLUMNS)
    )
    rounds = np.concatenate(spy_rounds)
    finite = np.isfinite(rounds)
    horizon = int(rounds[finite].max()) + 1
    tx_of_cell = np.broadcast_to(np.arange(rounds.shape[0])[:, None], rounds.shape)
    counts = np.bincount(
        tx_of_cell[finite] * horizon + rounds[finite].astype(np.int64),
        minlength=rounds.shape[0] * horizon,
    ).reshape(rounds.shape[0], horizon)
    return ObservationLog(
        protocol=Protocol.FLOODING,
        tx_ids=truth.tx_ids,
        full=full,
        first_spy=first_spy_rows(full),
        per_round_spy_counts=counts,
    )


def run_diffusion(
    g: NetworkGraph, truth: GroundTruth, seed: int, bidirectional: Optional[bool] = None
) -> ObservationLog:
    """Diffuse every transaction with independent Exponential(1) edge delays.

    Times are reported relative to the transaction's first spy receipt. Each spy
    logs only its first receipt of a transaction, from the neighbour that delivered
    it first; later duplicate deliveries are not recorded.

    Args:
        g: Graph with roles placed.
        truth: Transaction sources.
        seed: Delay seed.
        bidirectional: Propagation direction override, see ``spreading_adjacency``.

    Returns:
        The log.

    Raises:
        UnreachableNodesError: If a source cannot reach any spy.
    """
    rng = np.random.default_rng(seed)
    delays = g.spreading_adjacency(bidirectional).astype(np.float64)
    delays.sort_indices()
    spies = g.spy_nodes
    columns: dict[str, list[np.ndarray]] = {name: [] for name in LOG_COLUMNS}
    unreachable: list[int] = []
    for tx, source in enumerate(truth.sources):
        delays.data = rng.exponential(1.0, size=delays.data.size)
        dist, pred = csgraph.dijkstra(
            delays, directed=True, indices=int(source), return_predecessors=True
        )
        arrival, sender = dist[spies], pred[spies]
        if not np.isfinite(arrival).any():
            unreachable.append(int(source))
            continue
        keep = np.isfinite(arrival) & (sender >= 0)
        keep[keep] = ~g.adversarial[sender[keep]]
        columns["tx"].append(np.full(int(keep.sum()), tx))
        columns["spy"].append(spies[keep])
        columns["sender"].append(sender[keep])
        columns["time"].append(arrival[keep] - arrival.min())
        columns["virtual"].append(np.zeros(int(keep.sum()), dtype=bool))
    if unreachable:
        logger.error("Diffusion sources cannot reach any adversary: %s", unreachable)
        raise UnreachableNodesError(
            f"Sources without a path to any adversary: {sorted(unreachable)}"
        )
    full = ObservationTable.from_columns(*(np.concatenate(columns[name]) for name in LOG_COLUMNS))
    return ObservationLog(
        protocol=Protocol.DIFFUSION,
        tx_ids=truth.tx_ids,
        full=full,
        first_spy=first_spy_rows(full),
    )


def run_diffusion_by_proxy(roster: NetworkGraph, truth: GroundTruth, seed: int) -> ObservationLog:
    """Relay every transaction through uniformly drawn nodes until a spy receives it.

    Only the roles of ``roster`` matter; its edges are ignored. Each hop moves to
    a uniform node other than the current holder. Times are hop counts.

    Args:
        roster: Node population with roles placed.
        truth: Transaction sources.
        seed: Walk seed.

    Returns:
        The log; full and first-spy tables coincide.
    """
    rng = np.random.default_rng(seed)
    n = roster.n
    current = truth.sources.astype(np.int64).copy()
    hops = np.zeros(current.size, dtype=np.int64)
    spy = np.full(current.size, NO_NODE, dtype=np.int64)
    sender = np.full(current.size, NO_NODE, dtype=np.int64)
    active = np.ones(current.size, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        draw = rng.integers(0, n - 1, size=idx.size)
        nxt = draw + (draw >= current[idx])
        hops[idx] += 1
        hit = roster.adversarial[nxt]
        spy[idx[hit]] = nxt[hit]
        sender[idx[hit]] = current[idx[hit]]
        active[idx[hit]] = False
        current[idx[~hit]] = nxt[~hit]
    table = ObservationTable.from_columns(
        tx=np.arange(current.size), spy=spy, sender=sender, time=hops
    )
    return ObservationLog(
        protocol=Protocol.DIFFUSION_BY_PROXY, tx_ids=truth.tx_ids, full=table, first_spy=table
    )


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class DandelionParams:
    """Stem parameters.

    Attributes:
        anon_graph: Graph carrying the stem.
        q: Probability of ending the stem after each hop.
        max_hops: Cap on stem length; defaults to the node count.
    """

    anon_graph: NetworkGraph
    q: float = Field(ge=0, lt=1)
    max_hops: Optional[int] = Field(default=None, ge=1)

    @property
    def hop_cap(self) -> int:
        """Effective stem length cap."""
        return self.max_hops if self.max_hops is not None else self.anon_graph.n


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class StemOutcome:
    """Where stem walks left the anonymity graph.

    Attributes:
        exit_node: Honest node that delivered to a spy or launched the broadcast.
        spy: Receiving spy, NO_NODE for virtual exits.
        hops: Hops taken.
        virtual: True when the stem ended at an honest node.
    """

    exit_node: np.ndarray
    spy: np.ndarray
    hops: np.ndarray
    virtual: np.ndarray


def walk_stems(params: DandelionParams, sources: np.ndarray, seed: int) -> StemOutcome:
    """Forward messages along uniform out-neighbours until a spy or termination.

    After every hop onto an honest node the stem ends with probability q. A node
    without out-neighbours ends the stem where it stands; a source without
    out-neighbours exits at itself after zero hops.

    Args:
        params: Stem parameters.
        sources: Starting node per message.
        seed: Walk seed.

    Returns:
        Per-message exits.

    Raises:
        StemDeadEndError: If an honest non-root node cannot forward.
    """
    g = params.anon_graph
    degree = g.out_degree
    dead_ends = g.honest_nodes[degree[g.honest_nodes] == 0]
    if dead_ends.size and g.spec.kind not in TREE_KINDS:
        logger.error("Honest nodes without out-neighbours: %s", dead_ends.tolist())
        raise StemDeadEndError(
            f"Honest nodes {dead_ends.tolist()} have no out-neighbour in {g.spec.tag}."
        )
    adjacency = g.out_adjacency
    rng = np.random.default_rng(seed)
    current = np.asarray(sources, dtype=np.int64).copy()
    exit_node = current.copy()
    spy = np.full(current.size, NO_NODE, dtype=np.int64)
    hops = np.zeros(current.size, dtype=np.int64)
    active = degree[current] > 0
    while active.any():
        idx = np.flatnonzero(active)
        here = current[idx]
        offsets = rng.integers(0, degree[here])
        nxt = adjacency.indices[adjacency.indptr[here] + offsets].astype(np.int64)
        hops[idx] += 1
        hit = g.adversarial[nxt]
        spy[idx[hit]] = nxt[hit]
        exit_node[idx[hit]] = here[hit]
        active[idx[hit]] = False
        moved = idx[~hit]
        current[moved] = nxt[~hit]
        exit_node[moved] = nxt[~hit]
        ends = (
            (rng.random(moved.size) < params.q)
            | (degree[current[moved]] == 0)
            | (hops[moved] >= params.hop_cap)
        )
        active[moved[ends]] = False
    return StemOutcome(exit_node=exit_node, spy=spy, hops=hops, virtual=spy == NO_NODE)


def run_dandelion(
    params: DandelionParams, spread_graph: NetworkGraph, truth: GroundTruth, seed: int
) -> ObservationLog:
    """Run the stem of every transaction on the anonymity graph.

    A stem that ends at an honest node is logged as a virtual-spy exit at that
    node: the node launching the broadcast is assumed identified. The broadcast
    over ``spread_graph`` itself is not simulated.

    Args:
        params: Stem parameters.
        spread_graph: Broadcast graph over the same population.
        truth: Transaction sources.
        seed: Walk seed.

    Returns:
        The log; full and first-spy tables coincide.

    Raises:
        InvalidObservationLogError: If the two graphs disagree on the population.
    """
    anon = params.anon_graph
    if spread_graph.n != anon.n or not np.array_equal(spread_graph.adversarial, anon.adversarial):
        raise InvalidObservationLogError(
            "Anonymity and spreading graphs must share nodes and roles."
        )
    outcome = walk_stems(params, truth.sources, seed)
    logger.debug(
        "Dandelion stems: %d virtual exits out of %d",
        int(outcome.virtual.sum()),
        truth.sources.size,
    )
    table = ObservationTable.from_columns(
        tx=np.arange(truth.sources.size),
        spy=outcome.spy,
        sender=outcome.exit_node,
        time=outcome.hops,
        virtual=outcome.virtual,
    )
    return ObservationLog(
        protocol=Protocol.DANDELION, tx_ids=truth.tx_ids, full=table, first_spy=table
    )


def log_to_csv(log: ObservationLog) -> str:
    """Render the full log as CSV.

    Args:
        log: The log.

    Returns:
        CSV text with columns tx, spy, sender, time, virtual.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    full = log.full
    for row in range(len(full)):
        writer.writerow(
            [
                int(log.tx_ids[full.tx[row]]),
                int(full.spy[row]),
                int(full.sender[row]),
                repr(float(full.time[row])),
                int(full.virtual[row]),
            ]
        )
    return buffer.getvalue()


def write_log_csv(log: ObservationLog, path: Path) -> None:
    """Write the full log as CSV.

    Args:
        log: The log.
        path: Destination file.
    """
    atomic_write_text(path, log_to_csv(log))


def read_log_csv(path: Path, protocol: Protocol) -> ObservationLog:
    """Read a log written by ``write_log_csv``.

    Transactions are indexed in order of first appearance; per-round spy counts
    are not recoverable from the CSV.

    Args:
        path: Source file.
        protocol: Protocol that produced the log.

    Returns:
        The log.

    Raises:
        InvalidObservationLogError: If a column is missing or malformed.
    """
    with path.open(encoding="utf-8", newline="") as source:
        reader = csv.DictReader(source)
        missing = set(LOG_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InvalidObservationLogError(f"Log CSV lacks columns {sorted(missing)}")
        try:
            rows = [
                (
                    int(row["tx"]),
                    int(row["spy"]),
                    int(row["sender"]),
                    float(row["time"]),
                    row["virtual"] == "1",
                )
                for row in reader
            ]
        except ValueError as exc:
            raise InvalidObservationLogError(f"Malformed log CSV row: {exc}") from exc
    nonces = list(dict.fromkeys(row[0] for row in rows))
    position = {nonce: index for index, nonce in enumerate(nonces)}
    full = ObservationTable.from_columns(
        tx=[position[row[0]] for row in rows],
        spy=[row[1] for row in rows],
        sender=[row[2] for row in rows],
        time=[row[3] for row in rows],
        virtual=[row[4] for row in rows],
    )
    return ObservationLog(
        protocol=protocol,
        tx_ids=np.array(nonces, dtype=np.uint64),
        full=full,
        first_spy=first_spy_rows(full),
    )
