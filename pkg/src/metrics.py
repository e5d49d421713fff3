# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Macro-averaged precision and recall of source mappings."""

import csv
import io
import logging
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass

from adversary import SourceMapping
from graph import ARRAY_CONFIG
from helpers import atomic_write_text
from spreading import GroundTruth

logger = logging.getLogger(__name__)

REGION_SLACK = 1e-12
POINT_COLUMNS = (
    "protocol",
    "topology",
    "n",
    "p",
    "q",
    "trials",
    "recall",
    "recall_se",
    "precision",
    "precision_se",
)


class InvalidMappingError(Exception):
    """Exception raised when a mapping does not fit the ground truth."""


class EmptyAggregateError(Exception):
    """Exception raised when aggregating no trials."""


@dataclass(frozen=True, eq=False, config=ARRAY_CONFIG)
class TrialMetrics:
    """Precision and recall of one realization.

    Attributes:
        nodes: Sorted honest nodes.
        per_node_precision: Precision per honest node.
        per_node_recall: Recall per honest node, 0 or 1.
        macro_precision: Mean per-node precision.
        macro_recall: Mean per-node recall.
    """

    nodes: np.ndarray
    per_node_precision: np.ndarray
    per_node_recall: np.ndarray
    macro_precision: float
    macro_recall: float


def evaluate_trial(mapping: SourceMapping, truth: GroundTruth) -> TrialMetrics:
    """Score a mapping against the true sources.

    Node v's precision is 1/|M^-1(v)| when v's own transaction is mapped to v and
    0 otherwise; a node no transaction is mapped to has precision 0.

    Args:
        mapping: Estimated sources.
        truth: True sources.

    Returns:
        Per-node and macro metrics.

    Raises:
        InvalidMappingError: If the mapping misses transactions or targets a non-honest node.
    """
    if mapping.tx_ids.size != truth.tx_ids.size:
        raise InvalidMappingError(
            f"Mapping covers {mapping.tx_ids.size} of {truth.tx_ids.size} transactions."
        )
    try:
        order = truth.tx_index_of(mapping.tx_ids)
    except KeyError as exc:
        raise InvalidMappingError(str(exc)) from exc
    if np.unique(order).size != order.size:
        raise InvalidMappingError("Mapping lists a transaction twice.")
    nodes = np.sort(truth.sources)
    sources = truth.sources[order]
    positions = np.minimum(np.searchsorted(nodes, mapping.targets), nodes.size - 1)
    if not np.array_equal(nodes[positions], mapping.targets):
        stray = np.setdiff1d(mapping.targets, nodes)
        logger.error("Mapping targets non-honest nodes %s", stray.tolist())
        raise InvalidMappingError(f"Mapping targets non-honest nodes {stray.tolist()}.")
    correct = mapping.targets == sources
    recall = np.zeros(nodes.size)
    recall[positions[correct]] = 1.0
    load = np.bincount(positions, minlength=nodes.size)
    precision = np.divide(recall, load, out=np.zeros(nodes.size), where=load > 0)
    return TrialMetrics(
        nodes=nodes,
        per_node_precision=precision,
        per_node_recall=recall,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
    )


@dataclass(frozen=True)
class RegionCheck:
    """Result of checking D <= R <= sqrt(D).

    Attributes:
        passed: Whether both inequalities hold.
        violation: Description of the failed inequality.
    """

    passed: bool
    violation: Optional[str] = None


def region_check(precision: float, recall: float) -> RegionCheck:
    """Check that a precision and recall pair lies in the feasible region.

    Args:
        precision: Macro precision D.
        recall: Macro recall R.

    Returns:
        The check result.
    """
    if precision > recall + REGION_SLACK:
        return RegionCheck(passed=False, violation=f"precision {precision!r} > recall {recall!r}")
    if recall > math.sqrt(precision) + REGION_SLACK:
        return RegionCheck(
            passed=False, violation=f"recall {recall!r} > sqrt(precision {precision!r})"
        )
    return RegionCheck(passed=True)


def assert_region_bounds(t: TrialMetrics) -> RegionCheck:
    """Check D <= R <= sqrt(D) for one realization.

    Args:
        t: Trial metrics.

    Returns:
        The check result.
    """
    return region_check(t.macro_precision, t.macro_recall)


@dataclass(frozen=True)
class DetectionPoint:
    """Aggregated precision and recall for one configuration.

    Attributes:
        protocol: Protocol and estimator tag, e.g. ``dandelion:first-spy``.
        topology: Topology tag.
        n: Network size.
        p: Adversarial fraction.
        q: Stem termination probability.
        trials: Number of trials.
        recall: Mean recall.
        recall_se: Standard error of the recall.
        precision: Mean precision.
        precision_se: Standard error of the precision.
    """

    protocol: str
    topology: str
    n: int
    p: float
    q: float
    trials: int = Field(ge=1)
    recall: float = Field(ge=0, le=1)
    recall_se: float = Field(ge=0)
    precision: float = Field(ge=0, le=1)
    precision_se: float = Field(ge=0)


def _mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def aggregate(
    trials: Sequence[TrialMetrics], protocol: str, topology: str, n: int, p: float, q: float
) -> DetectionPoint:
    """Average trials into a detection point with sample standard errors.

    Args:
        trials: Per-trial metrics.
        protocol: Protocol and estimator tag.
        topology: Topology tag.
        n: Network size.
        p: Adversarial fraction.
        q: Stem termination probability.

    Returns:
        The point.

    Raises:
        EmptyAggregateError: If no trials are given.
    """
    if not trials:
        raise EmptyAggregateError(f"No trials to aggregate for {protocol} on {topology}.")
    recall, recall_se = _mean_and_stderr(np.array([t.macro_recall for t in trials]))
    precision, precision_se = _mean_and_stderr(np.array([t.macro_precision for t in trials]))
    return DetectionPoint(
        protocol=protocol,
        topology=topology,
        n=n,
        p=p,
        q=q,
        trials=len(trials),
        recall=min(max(recall, 0.0), 1.0),
        recall_se=recall_se,
        precision=min(max(precision, 0.0), 1.0),
        precision_se=precision_se,
    )


def points_to_csv(points: Sequence[DetectionPoint]) -> str:
    """Render detection points as CSV.

    Args:
        points: The points.

    Returns:
        CSV text.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(POINT_COLUMNS)
    for point in points:
        writer.writerow([getattr(point, column) for column in POINT_COLUMNS])
    return buffer.getvalue()


def write_points_csv(points: Sequence[DetectionPoint], path: Path) -> None:
    """Write detection points as CSV.

    Args:
        points: The points.
        path: Destination file.
    """
    atomic_write_text(path, points_to_csv(points))
