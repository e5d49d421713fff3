# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Peer-to-peer topologies, adversary placement, wards and degree statistics.

Every topology is generated on canonical indices and then relabelled with a
uniformly random permutation, so each labelled ordering is equally likely.
"""

import logging
import math
from collections import Counter
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Optional, Self

import networkx as nx
import numpy as np
from pydantic import ConfigDict, Field, model_validator
from pydantic.dataclasses import dataclass
from scipy import sparse
from scipy.sparse import csgraph

logger = logging.getLogger(__name__)

ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True)
NO_NODE = -1
DEFAULT_RANDOM_REGULAR_OUT_DEGREE = 8
_DERANGEMENT_ATTEMPTS = 1000
_PLACEMENT_EPSILON = 1e-9


class InvalidTopologyError(Exception):
    """Exception raised when a topology cannot be built or parsed."""


class InvalidAdversaryPlacementError(Exception):
    """Exception raised when the adversary fraction leaves no spy or no honest node."""


class WardComputationError(Exception):
    """Exception raised when wards cannot be computed for a graph."""


class TopologyKind(str, Enum):
    """Topology families.

    Attributes:
        CYCLE: directed n-cycle.
        SPLICED_LINE: Hamiltonian cycle grown by splicing joiners into random edges.
        K_APPROX_LINE: out-degree-1 graph, each node linking to the least loaded of k candidates.
        RANDOM_REGULAR: fixed number of distinct uniform out-targets per node.
        D_REGULAR: exact undirected d-regular graph stored in both directions.
        DIRECTED_REGULAR: digraph with every in-degree and out-degree equal.
        DIRECTED_D_REGULAR_TREE: complete tree of degree d with edges toward the root.
        PERFECT_D_ARY_TREE: perfect d-ary tree with edges toward the root.
        COMPLETE: every ordered pair of distinct nodes.
        CUSTOM: edges supplied from outside, read back from text; never generated.
    """

    CYCLE = "cycle"
    SPLICED_LINE = "spliced-line"
    K_APPROX_LINE = "k-approx-line"
    RANDOM_REGULAR = "random-regular"
    D_REGULAR = "d-regular"
    DIRECTED_REGULAR = "directed-regular"
    DIRECTED_D_REGULAR_TREE = "directed-tree"
    PERFECT_D_ARY_TREE = "perfect-tree"
    COMPLETE = "complete"
    CUSTOM = "custom"


LINE_KINDS = frozenset({TopologyKind.CYCLE, TopologyKind.SPLICED_LINE})
TREE_KINDS = frozenset({TopologyKind.DIRECTED_D_REGULAR_TREE, TopologyKind.PERFECT_D_ARY_TREE})
BIDIRECTIONAL_KINDS = frozenset(
    {TopologyKind.RANDOM_REGULAR, TopologyKind.D_REGULAR, TopologyKind.COMPLETE}
)
_DEGREE_KINDS = frozenset(
    {
        TopologyKind.K_APPROX_LINE,
        TopologyKind.D_REGULAR,
        TopologyKind.DIRECTED_REGULAR,
        TopologyKind.DIRECTED_D_REGULAR_TREE,
        TopologyKind.PERFECT_D_ARY_TREE,
    }
)


class WardSemantics(str, Enum):
    """How wards are derived from a graph.

    Attributes:
        DANDELION_PATH: group by the exit node of the unique forwarding path.
        FLOODING_REACHABILITY: group by the unique first-round sender under flooding.
    """

    DANDELION_PATH = "dandelion-path"
    FLOODING_REACHABILITY = "flooding-reachability"


class WardExit(str, Enum):
    """How messages leave a ward.

    Attributes:
        SPY: the head forwards to an adversary.
        SINK: the head has no out-neighbour (an honest tree root).
        ISOLATED: the members sit on a spy-free cycle; the head is the lowest member.
    """

    SPY = "spy"
    SINK = "sink"
    ISOLATED = "isolated"


def perfect_tree_size(d: int, depth: int) -> int:
    """Number of nodes of a perfect d-ary tree.

    Args:
        d: Branching factor.
        depth: Depth of the leaves.

    Returns:
        (d^(depth+1) - 1) / (d - 1).
    """
    return (d ** (depth + 1) - 1) // (d - 1)


def nearest_perfect_tree_size(n: int, d: int) -> int:
    """Closest valid perfect d-ary tree size with depth at least 1.

    Args:
        n: Requested node count.
        d: Branching factor.

    Returns:
        The valid size closest to n, the smaller one on ties.
    """
    sizes = []
    depth = 1
    while True:
        size = perfect_tree_size(d, depth)
        sizes.append(size)
        if size >= n:
            break
        depth += 1
    return min(sizes, key=lambda size: (abs(size - n), size))


@dataclass(frozen=True)
class TopologySpec:
    """Topology family and size.

    Attributes:
        kind: Topology family.
        n: Node count.
        degree: k for k-approximate lines, out-degree for random-regular and
            directed-regular graphs, d for d-regular graphs and trees.
    """

    kind: TopologyKind
    n: int = Field(ge=3)
    degree: Optional[int] = Field(default=None, ge=1)

    @property
    def effective_degree(self) -> Optional[int]:
        """Degree parameter with the random-regular default applied."""
        if self.kind == TopologyKind.RANDOM_REGULAR and self.degree is None:
            return DEFAULT_RANDOM_REGULAR_OUT_DEGREE
        return self.degree

    @property
    def tag(self) -> str:
        """Short label used in result files."""
        degree = self.effective_degree
        return self.kind.value if degree is None else f"{self.kind.value}-{degree}"

    @model_validator(mode="after")
    def validate_degree(self) -> Self:
        """Validate the degree parameter against the topology family.

        Returns:
            This class instance.

        Raises:
            ValueError: If the degree is missing, out of range, or incompatible with n.
        """
        degree = self.effective_degree
        if self.kind in _DEGREE_KINDS and degree is None:
            raise ValueError(f"Topology {self.kind.value} requires a degree parameter.")
        if degree is None:
            return self
        if self.kind in (TopologyKind.K_APPROX_LINE, TopologyKind.RANDOM_REGULAR):
            if degree > self.n - 1:
                raise ValueError(f"Degree {degree} must be at most n - 1 = {self.n - 1}.")
        elif self.kind == TopologyKind.D_REGULAR:
            if degree >= self.n or (degree * self.n) % 2:
                raise ValueError(f"No {degree}-regular graph exists on {self.n} nodes.")
        elif self.kind == TopologyKind.DIRECTED_REGULAR:
            if 2 * degree > self.n - 1:
                raise ValueError(f"Out-degree {degree} is too large for {self.n} nodes.")
        elif self.kind in TREE_KINDS:
            if degree < 2:
                raise ValueError("Tree degree must be at least 2.")
            if self.kind == TopologyKind.PERFECT_D_ARY_TREE:
                nearest = nearest_perfect_tree_size(self.n, degree)
                if nearest != self.n:
                    raise ValueError(
                        f"n={self.n} is not a perfect {degree}-ary tree size; "
                        f"nearest valid n is {nearest}."
                    )
        return self


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class NetworkGraph:
    """Labelled directed graph with honest and adversarial nodes.

    Attributes:
        spec: Topology the graph was drawn from.
        seed: Generation seed.
        edges: (m, 2) integer array of directed (from, to) pairs in lexicographic order.
        adversarial: (n,) boolean array, True for adversarial nodes.
    """

    spec: TopologySpec
    seed: int
    edges: np.ndarray
    adversarial: np.ndarray

    @model_validator(mode="after")
    def validate_structure(self) -> Self:
        """Validate edge and role arrays.

        Returns:
            This class instance.

        Raises:
            ValueError: On malformed arrays, self-loops or duplicate edges.
        """
        n = self.spec.n
        if self.edges.ndim != 2 or self.edges.shape[1] != 2:
            raise ValueError("Edges must be an (m, 2) array.")
        if self.adversarial.shape != (n,) or self.adversarial.dtype != np.bool_:
            raise ValueError(f"Roles must be a boolean array of length {n}.")
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= n):
            raise ValueError("Edge endpoints must lie in [0, n).")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise ValueError("Self-loops are not allowed.")
        keys = self.edges[:, 0] * n + self.edges[:, 1]
        if np.unique(keys).size != keys.size:
            raise ValueError("Duplicate directed edges are not allowed.")
        return self

    @property
    def n(self) -> int:
        """Node count."""
        return self.spec.n

    @cached_property
    def honest_nodes(self) -> np.ndarray:
        """Sorted honest node ids."""
        return np.flatnonzero(~self.adversarial)

    @cached_property
    def spy_nodes(self) -> np.ndarray:
        """Sorted adversarial node ids."""
        return np.flatnonzero(self.adversarial)

    @property
    def n_honest(self) -> int:
        """Honest node count."""
        return int(self.honest_nodes.size)

    @cached_property
    def out_degree(self) -> np.ndarray:
        """Out-degree per node."""
        return np.bincount(self.edges[:, 0], minlength=self.n)

    @cached_property
    def in_degree(self) -> np.ndarray:
        """In-degree per node."""
        return np.bincount(self.edges[:, 1], minlength=self.n)

    @cached_property
    def out_adjacency(self) -> sparse.csr_array:
        """Directed adjacency of the stored edges."""
        return _adjacency(self.edges, self.n)

    def spreading_adjacency(self, bidirectional: Optional[bool] = None) -> sparse.csr_array:
        """Adjacency used by broadcast protocols.

        Args:
            bidirectional: Force or forbid the bidirectional union; by default regular
                and complete graphs spread in both directions and all other families
                follow the edge direction.

        Returns:
            Sparse adjacency matrix.
        """
        if bidirectional is None:
            bidirectional = self.spec.kind in BIDIRECTIONAL_KINDS
        if not bidirectional:
            return self.out_adjacency
        both = np.concatenate([self.edges, self.edges[:, ::-1]])
        keys = np.unique(both[:, 0] * self.n + both[:, 1])
        return _adjacency(np.column_stack([keys // self.n, keys % self.n]), self.n)

    def successors(self) -> np.ndarray:
        """Unique out-neighbour per node for graphs of out-degree at most one.

        Returns:
            (n,) array holding the successor or NO_NODE for nodes without one.

        Raises:
            WardComputationError: If a node has more than one out-neighbour.
        """
        if self.edges.size and self.out_degree.max() > 1:
            raise WardComputationError(
                f"Topology {self.spec.tag} has nodes with out-degree above one."
            )
        succ = np.full(self.n, NO_NODE, dtype=np.int64)
        succ[self.edges[:, 0]] = self.edges[:, 1]
        return succ

    def with_roles(self, adversarial: np.ndarray) -> "NetworkGraph":
        """Copy of this graph with new roles.

        Args:
            adversarial: Boolean role array.

        Returns:
            The relabelled-role graph.
        """
        return NetworkGraph(
            spec=self.spec, seed=self.seed, edges=self.edges, adversarial=adversarial
        )


@dataclass(frozen=True)
class Ward:
    """Honest nodes whose messages leave through the same head.

    Attributes:
        head: The exit node.
        members: Honest nodes of the ward, head included.
        exit: How the head releases messages.
    """

    head: int
    members: frozenset[int]
    exit: WardExit = WardExit.SPY

    @model_validator(mode="after")
    def validate_head(self) -> Self:
        """Validate that the head belongs to the ward.

        Returns:
            This class instance.

        Raises:
            ValueError: If the head is not a member.
        """
        if self.head not in self.members:
            raise ValueError(f"Ward head {self.head} is not among its members.")
        return self


@dataclass(frozen=True, config=ARRAY_CONFIG)
class DegreeStats:
    """In-degree histogram of a graph.

    Attributes:
        histogram: In-degree to node count.
        max_in_degree: Largest in-degree.
        mean_total_degree: Exact mean of in-degree plus out-degree.
    """

    histogram: dict[int, int]
    max_in_degree: int
    mean_total_degree: Fraction

    @property
    def leaf_fraction(self) -> float:
        """Fraction of nodes with in-degree zero."""
        return self.histogram.get(0, 0) / sum(self.histogram.values())


def _adjacency(edges: np.ndarray, n: int) -> sparse.csr_array:
    data = np.ones(edges.shape[0], dtype=np.int8)
    return sparse.csr_array((data, (edges[:, 0], edges[:, 1])), shape=(n, n))


def _successor_edges(succ: np.ndarray) -> np.ndarray:
    nodes = np.flatnonzero(succ != NO_NODE)
    return np.column_stack([nodes, succ[nodes]])


def _cycle(spec: TopologySpec, _: np.random.Generator) -> np.ndarray:
    nodes = np.arange(spec.n)
    return np.column_stack([nodes, (nodes + 1) % spec.n])


def _spliced_line(spec: TopologySpec, rng: np.random.Generator) -> np.ndarray:
    succ = np.full(spec.n, NO_NODE, dtype=np.int64)
    succ[0], succ[1] = 1, 0
    for joiner in range(2, spec.n):
        contact = int(rng.integers(joiner))
        succ[joiner] = succ[contact]
        succ[contact] = joiner
    return _successor_edges(succ)


def _k_approx_line(spec: TopologySpec, rng: np.random.Generator) -> np.ndarray:
    k = spec.effective_degree or 1
    in_degree = np.zeros(spec.n, dtype=np.int64)
    succ = np.full(spec.n, NO_NODE, dtype=np.int64)
    for joiner in range(spec.n):
        picks = rng.choice(spec.n - 1, size=k, replace=False)
        candidates = picks + (picks >= joiner)
        loads = in_degree[candidates]
        lightest = candidates[loads == loads.min()]
        target = int(rng.choice(lightest))
        succ[joiner] = target
        in_degree[target] += 1
    return _successor_edges(succ)


def _random_regular(spec: TopologySpec, rng: np.random.Generator) -> np.ndarray:
    out_degree = spec.effective_degree or DEFAULT_RANDOM_REGULAR_OUT_DEGREE
    rows = []
    for node in range(spec.n):
        picks = rng.choice(spec.n - 1, size=out_degree, replace=False)
        targets = picks + (picks >= node)
        rows.append(np.column_stack([np.full(out_degree, node), targets]))
    return np.concatenate(rows)


def _d_regular(spec: TopologySpec, rng: np.random.Generator) -> np.ndarray:
    graph = nx.random_regular_graph(spec.effective_degree, spec.n, seed=int(rng.integers(2**32)))
    pairs = np.array(graph.edges(), dtype=np.int64).reshape(-1, 2)
    return np.concatenate([pairs, pairs[:, ::-1]])


def _directed_regular(spec: TopologySpec, rng: np.random.Generator) -> np.ndarray:
    nodes = np.arange(spec.n)
    chosen: list[np.ndarray] = []
    for _ in range(spec.effective_degree or 1):
        for _ in range(_DERANGEMENT_ATTEMPTS):
            perm = rng.permutation(spec.n)
            if np.any(perm == nodes) or any(np.any(perm == prev) for prev in chosen):
                continue
            chosen.append(perm)
            break
        else:
            raise InvalidTopologyError(
                f"Could not draw a {spec.tag} digraph on {spec.n} nodes "
                f"after {_DERANGEMENT_ATTEMPTS} attempts."
            )
    return np.concatenate([np.column_stack([nodes, perm]) for perm in chosen])


def _directed_tree(spec: TopologySpec, _: np.random.Generator) -> np.ndarray:
    d = spec.effective_degree or 2
    children = np.arange(1, spec.n)
    # the root has d children, every other internal node d - 1
    parents = np.where(children <= d, 0, 1 + (children - d - 1) // (d - 1))
    return np.column_stack([children, parents])


def _perfect_tree(spec: TopologySpec, _: np.random.Generator) -> np.ndarray:
    d = spec.effective_degree or 2
    children = np.arange(1, spec.n)
    return np.column_stack([children, (children - 1) // d])


def _complete(spec: TopologySpec, _: np.random.Generator) -> np.ndarray:
    src, dst = np.nonzero(~np.eye(spec.n, dtype=bool))
    return np.column_stack([src, dst])


_CANONICAL_BUILDERS = {
    TopologyKind.CYCLE: _cycle,
    TopologyKind.SPLICED_LINE: _spliced_line,
    TopologyKind.K_APPROX_LINE: _k_approx_line,
    TopologyKind.RANDOM_REGULAR: _random_regular,
    TopologyKind.D_REGULAR: _d_regular,
    TopologyKind.DIRECTED_REGULAR: _directed_regular,
    TopologyKind.DIRECTED_D_REGULAR_TREE: _directed_tree,
    TopologyKind.PERFECT_D_ARY_TREE: _perfect_tree,
    TopologyKind.COMPLETE: _complete,
}


def _sorted_edges(edges: np.ndarray) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return edges[order]


def build_topology(spec: TopologySpec, seed: int) -> NetworkGraph:
    """Draw a graph of the given family with all nodes honest.

    Args:
        spec: Topology family and size.
        seed: Generation seed.

    Returns:
        The graph, deterministic in (spec, seed).

    Raises:
        InvalidTopologyError: If the family has no generator.
    """
    if spec.kind not in _CANONICAL_BUILDERS:
        raise InvalidTopologyError(f"Topology {spec.kind.value} cannot be generated.")
    rng = np.random.default_rng(seed)
    canonical = _CANONICAL_BUILDERS[spec.kind](spec, rng)
    relabel = rng.permutation(spec.n)
    logger.debug("Built %s topology on %d nodes with seed %d", spec.tag, spec.n, seed)
    return NetworkGraph(
        spec=spec,
        seed=seed,
        edges=_sorted_edges(relabel[canonical]),
        adversarial=np.zeros(spec.n, dtype=bool),
    )


def build_k_approx_line(n: int, k: int, seed: int) -> NetworkGraph:
    """Approximate a directed line by joining each node to the least loaded of k candidates.

    Args:
        n: Node count.
        k: Candidates per joining node.
        seed: Generation seed.

    Returns:
        An out-degree-1 graph with exactly n edges.
    """
    return build_topology(TopologySpec(kind=TopologyKind.K_APPROX_LINE, n=n, degree=k), seed)


def build_spliced_line(n: int, seed: int) -> NetworkGraph:
    """Grow a Hamiltonian directed cycle by splicing each joiner after a random member.

    Args:
        n: Node count.
        seed: Generation seed.

    Returns:
        A directed cycle through all n nodes.
    """
    return build_topology(TopologySpec(kind=TopologyKind.SPLICED_LINE, n=n), seed)


def adversary_count(n: int, p: float) -> int:
    """Number of adversarial nodes placed for a fraction p.

    Args:
        n: Node count.
        p: Adversarial fraction.

    Returns:
        floor(n * p), tolerant to floating point error.
    """
    return math.floor(n * p + _PLACEMENT_EPSILON)


def place_adversaries(g: NetworkGraph, p: float, seed: int) -> NetworkGraph:
    """Flag floor(np) uniformly chosen nodes as adversarial.

    Args:
        g: The graph.
        p: Adversarial fraction in (0, 1).
        seed: Placement seed.

    Returns:
        The graph with new roles.

    Raises:
        InvalidAdversaryPlacementError: If no spy or no honest node would remain.
    """
    count = adversary_count(g.n, p)
    if not 0 < p < 1 or count < 1 or count > g.n - 1:
        raise InvalidAdversaryPlacementError(
            f"p={p} places {count} adversaries on {g.n} nodes; need between 1 and {g.n - 1}."
        )
    rng = np.random.default_rng(seed)
    adversarial = np.zeros(g.n, dtype=bool)
    adversarial[rng.choice(g.n, size=count, replace=False)] = True
    return g.with_roles(adversarial)


def honest_forwarding(g: NetworkGraph) -> tuple[np.ndarray, np.ndarray]:
    """Exit node of every honest node under deterministic forwarding.

    Args:
        g: A graph of out-degree at most one.

    Returns:
        Pair (terminal, settled): terminal[v] is the last honest node on v's path
        before a spy or a sink; settled[v] is False for nodes trapped on spy-free
        cycles, where terminal[v] is some node of that cycle. Entries of spies are
        meaningless.
    """
    succ = g.successors()
    n = g.n
    nodes = np.arange(n)
    forwards = (succ != NO_NODE) & ~g.adversarial[np.maximum(succ, 0)]
    forwards &= ~g.adversarial
    step = np.where(forwards, succ, nodes)
    jump = step.copy()
    for _ in range(max(1, math.ceil(math.log2(n))) + 1):
        jump = jump[jump]
    settled = step[jump] == jump
    return jump, settled


def _dandelion_wards(g: NetworkGraph) -> list[Ward]:
    succ = g.successors()
    terminal, settled = honest_forwarding(g)
    honest = g.honest_nodes
    wards = []
    settled_honest = honest[settled[honest]]
    for head in np.unique(terminal[settled_honest]):
        members = settled_honest[terminal[settled_honest] == head]
        exit_kind = WardExit.SPY if succ[head] != NO_NODE else WardExit.SINK
        wards.append(
            Ward(head=int(head), members=frozenset(int(v) for v in members), exit=exit_kind)
        )
    trapped = honest[~settled[honest]]
    if trapped.size:
        keep = np.zeros(g.n, dtype=bool)
        keep[trapped] = True
        inner = g.edges[keep[g.edges[:, 0]] & keep[g.edges[:, 1]]]
        _, labels = csgraph.connected_components(
            _adjacency(inner, g.n), directed=True, connection="weak"
        )
        for label in np.unique(labels[trapped]):
            members = trapped[labels[trapped] == label]
            wards.append(
                Ward(
                    head=int(members.min()),
                    members=frozenset(int(v) for v in members),
                    exit=WardExit.ISOLATED,
                )
            )
        logger.debug("%d honest nodes sit on spy-free cycles", trapped.size)
    return sorted(wards, key=lambda ward: ward.head)


def flooding_parents(g: NetworkGraph, bidirectional: Optional[bool] = None) -> np.ndarray:
    """First-round senders of every honest node's message under flooding.

    Args:
        g: The graph with roles placed.
        bidirectional: Propagation direction override, see ``spreading_adjacency``.

    Returns:
        Boolean (n_honest, n_honest) matrix B with B[i, j] True when the honest node
        ``honest_nodes[j]`` forwards the message of ``honest_nodes[i]`` to an
        adversary in the first round any adversary sees it. Rows of nodes that
        cannot reach any adversary are all False.
    """
    adjacency = g.spreading_adjacency(bidirectional)
    honest = g.honest_nodes
    dist = csgraph.shortest_path(adjacency, unweighted=True, indices=honest)
    to_spy = dist[:, g.spy_nodes].min(axis=1)
    spy_adjacent = np.asarray(adjacency[honest][:, g.spy_nodes].sum(axis=1)).ravel() > 0
    first_round = dist[:, honest] == (to_spy - 1)[:, None]
    return first_round & spy_adjacent[None, :] & np.isfinite(to_spy)[:, None]


def _flooding_wards(g: NetworkGraph) -> list[Ward]:
    honest = g.honest_nodes
    parents = flooding_parents(g)
    unique_parent = parents.sum(axis=1) == 1
    owner = parents.argmax(axis=1)
    wards = []
    for column in np.unique(owner[unique_parent]):
        members = honest[unique_parent & (owner == column)]
        wards.append(Ward(head=int(honest[column]), members=frozenset(int(v) for v in members)))
    return wards


def compute_wards(g: NetworkGraph, semantics: WardSemantics) -> list[Ward]:
    """Partition honest nodes into wards.

    Under dandelion-path semantics every honest node belongs to exactly one ward:
    spy-exit wards, the sink ward of an honest tree root, or an isolated ward per
    spy-free cycle component.

    Args:
        g: The graph with roles placed.
        semantics: How wards are derived.

    Returns:
        Wards sorted by head.
    """
    if semantics == WardSemantics.DANDELION_PATH:
        return _dandelion_wards(g)
    return _flooding_wards(g)


def degree_stats(g: NetworkGraph) -> DegreeStats:
    """In-degree histogram and exact mean total degree.

    Args:
        g: The graph.

    Returns:
        The degree statistics.
    """
    histogram = Counter(int(value) for value in g.in_degree)
    return DegreeStats(
        histogram=dict(sorted(histogram.items())),
        max_in_degree=int(g.in_degree.max()),
        mean_total_degree=Fraction(2 * g.edges.shape[0], g.n),
    )


def graph_to_text(g: NetworkGraph) -> str:
    """Serialise a graph as newline-delimited text.

    Args:
        g: The graph.

    Returns:
        Header lines ``n``, ``roles``, ``topology``, ``seed`` then one ``from to`` pair per line.
    """
    roles = "".join("1" if flag else "0" for flag in g.adversarial)
    degree = g.spec.degree if g.spec.degree is not None else "-"
    lines = [
        f"n {g.n}",
        f"roles {roles}",
        f"topology {g.spec.kind.value} {degree}",
        f"seed {g.seed}",
    ]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> NetworkGraph:
    """Parse the output of ``graph_to_text``.

    Only the ``n`` and ``roles`` header lines are required. Without a ``topology``
    line the graph is tagged as a custom topology; without a ``seed`` line its seed is 0.

    Args:
        text: Serialised graph.

    Returns:
        The graph.

    Raises:
        InvalidTopologyError: If the header or an edge line is malformed.
    """
    lines = [line for line in text.splitlines() if line.strip()]
    body = next(
        (index for index, line in enumerate(lines) if line.split()[0].isdigit()), len(lines)
    )
    try:
        header = dict(line.split(" ", 1) for line in lines[:body])
        n = int(header["n"])
        kind, degree = header.get("topology", f"{TopologyKind.CUSTOM.value} -").split()
        spec = TopologySpec(
            kind=TopologyKind(kind), n=n, degree=None if degree == "-" else int(degree)
        )
        roles = np.array([char == "1" for char in header["roles"].strip()], dtype=bool)
        edges = np.array([line.split() for line in lines[body:]], dtype=np.int64)
        return NetworkGraph(
            spec=spec,
            seed=int(header.get("seed", 0)),
            edges=edges.reshape(-1, 2),
            adversarial=roles,
        )
    except (KeyError, ValueError) as exc:
        raise InvalidTopologyError(f"Malformed graph text: {exc}") from exc
