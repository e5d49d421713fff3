# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Closed-form precision and recall bounds and deployment arithmetic.

All logarithms are natural.
"""

import csv
import io
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from pydantic import Field
from pydantic.dataclasses import dataclass

from helpers import atomic_write_text

logger = logging.getLogger(__name__)

BOUND_COLUMNS = ("bound_name", "direction", "p", "n", "d", "value")


class InvalidBoundParameterError(Exception):
    """Exception raised when a bound is evaluated outside its domain."""


class BoundDirection(str, Enum):
    """How a bound relates to the optimal estimator.

    Attributes:
        LOWER_ON_OPTIMAL: The optimal estimator reaches at least this value.
        UPPER_ON_OPTIMAL: No estimator exceeds this value.
        EXACT: The optimal estimator reaches exactly this value.
    """

    LOWER_ON_OPTIMAL = "lower"
    UPPER_ON_OPTIMAL = "upper"
    EXACT = "exact"


@dataclass(frozen=True)
class BoundEntry:
    """One evaluated bound.

    Attributes:
        name: Bound identifier.
        direction: Relation to the optimum.
        value: Bound value in [0, 1], None outside its domain.
        reason: Why the value is absent.
    """

    name: str
    direction: BoundDirection
    value: Optional[float] = Field(default=None, ge=0, le=1)
    reason: Optional[str] = None


@dataclass(frozen=True)
class BoundTable:
    """Bounds evaluated for one (p, n, d).

    Attributes:
        p: Adversarial fraction.
        n: Network size.
        d: Degree used by the flooding bound.
        entries: Evaluated bounds.
    """

    p: float = Field(gt=0, lt=1)
    n: int = Field(ge=3)
    d: int = Field(ge=1)
    entries: tuple[BoundEntry, ...] = ()

    def value(self, name: str) -> Optional[float]:
        """Look up a bound value by name.

        Args:
            name: Bound identifier.

        Returns:
            The value, None when absent.

        Raises:
            KeyError: If no bound has that name.
        """
        for entry in self.entries:
            if entry.name == name:
                return entry.value
        raise KeyError(name)


def _clip(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def loose_line_bound(p: float) -> float:
    """Upper bound on stem precision over dynamic lines.

    Args:
        p: Adversarial fraction, below 1/3.

    Returns:
        2p^2/(1-p) * ln(2/p), unclipped.

    Raises:
        InvalidBoundParameterError: If p is not in (0, 1/3).
    """
    if not 0 < p < 1 / 3:
        raise InvalidBoundParameterError(f"The line bound needs 0 < p < 1/3, got {p}.")
    return 2 * p**2 / (1 - p) * math.log(2 / p)


def tight_line_bound(p: float, n: int) -> float:
    """Finite-n upper bound on stem precision over dynamic lines.

    Args:
        p: Adversarial fraction.
        n: Network size.

    Returns:
        2(p+1/n)^2/(1-p+2/n) * ln(1/(p-2/n)) + (1-p)^2/(n(1-3p)), unclipped.

    Raises:
        InvalidBoundParameterError: If p is not in (2/n, 1/3).
    """
    if not 2 / n < p < 1 / 3:
        raise InvalidBoundParameterError(f"The finite-n line bound needs 2/n < p < 1/3, got {p}.")
    leading = 2 * (p + 1 / n) ** 2 / (1 - p + 2 / n) * math.log(1 / (p - 2 / n))
    return leading + (1 - p) ** 2 / (n * (1 - 3 * p))


def protocol_bounds(p: float, n: int, d: int) -> BoundTable:
    """Evaluate every protocol bound at one operating point.

    Bounds whose domain excludes (p, n) are kept with a None value and a reason.

    Args:
        p: Adversarial fraction in (0, 1).
        n: Network size.
        d: Degree of the flooding graph.

    Returns:
        The bound table.

    Raises:
        InvalidBoundParameterError: If p is not in (0, 1).
    """
    if not 0 < p < 1:
        raise InvalidBoundParameterError(f"p must lie in (0, 1), got {p}.")
    entries = [
        BoundEntry(name="precision-lower", direction=BoundDirection.LOWER_ON_OPTIMAL, value=p**2),
        BoundEntry(name="recall-lower", direction=BoundDirection.LOWER_ON_OPTIMAL, value=p),
        BoundEntry(
            name="flooding-static-precision",
            direction=BoundDirection.LOWER_ON_OPTIMAL,
            value=_clip(1 - (1 - p) ** d),
        ),
        BoundEntry(
            name="proxy-first-spy-precision",
            direction=BoundDirection.LOWER_ON_OPTIMAL,
            value=_clip(p / (1 - p) * (1 - math.exp(p - 1))),
        ),
        BoundEntry(name="dandelion-recall", direction=BoundDirection.EXACT, value=p),
        BoundEntry(
            name="dandelion-static-tree-precision", direction=BoundDirection.EXACT, value=p
        ),
        BoundEntry(
            name="dandelion-dynamic-tree-precision",
            direction=BoundDirection.LOWER_ON_OPTIMAL,
            value=p / 2,
        ),
    ]
    for name, evaluate in (
        ("dandelion-line-precision-loose", lambda: loose_line_bound(p)),
        ("dandelion-line-precision-tight", lambda: tight_line_bound(p, n)),
    ):
        try:
            entries.append(
                BoundEntry(
                    name=name, direction=BoundDirection.UPPER_ON_OPTIMAL, value=_clip(evaluate())
                )
            )
        except InvalidBoundParameterError as exc:
            logger.debug("Skipping %s: %s", name, exc)
            entries.append(
                BoundEntry(name=name, direction=BoundDirection.UPPER_ON_OPTIMAL, reason=str(exc))
            )
    return BoundTable(p=p, n=n, d=d, entries=tuple(entries))


def max_degree_scaling(n: int, k: int) -> float:
    """Leading term of the maximum in-degree of a k-approximate line.

    Args:
        n: Network size, at least 16.
        k: Candidates per node.

    Returns:
        ln n / ln ln n for k = 1, ln ln n / ln k otherwise.

    Raises:
        InvalidBoundParameterError: If n < 16 or k < 1.
    """
    if n < 16 or k < 1:
        raise InvalidBoundParameterError(f"Degree scaling needs n >= 16 and k >= 1, got {n}, {k}.")
    if k == 1:
        return math.log(n) / math.log(math.log(n))
    return math.log(math.log(n)) / math.log(k)


def refresh_interval(n_servers: int, p: float, tx_rate: float, leak_budget: float) -> float:
    """Seconds between graph refreshes that keep interior leakage within budget.

    Each transaction with a virtual exit can reveal at most one interior node, and
    a fraction (w-2)/w of the honest nodes are interior for a ward of w = round(1/p)
    nodes.

    Args:
        n_servers: Number of servers.
        p: Adversarial fraction in (0, 0.5).
        tx_rate: Transactions per second.
        leak_budget: Fraction of interior nodes allowed to leak, in [0, 1].

    Returns:
        The interval in seconds.

    Raises:
        InvalidBoundParameterError: If a parameter is out of range or wards have no interior.
    """
    if not 0 < p < 0.5 or tx_rate <= 0 or not 0 <= leak_budget <= 1:
        raise InvalidBoundParameterError(
            f"Invalid refresh parameters p={p}, tx_rate={tx_rate}, leak_budget={leak_budget}."
        )
    ward_size = round(1 / p)
    if ward_size <= 2:
        raise InvalidBoundParameterError(f"Wards of {ward_size} nodes have no interior nodes.")
    return n_servers * (ward_size - 2) / ward_size * leak_budget / tx_rate


def bounds_to_csv(tables: Sequence[BoundTable]) -> str:
    """Render bound tables as CSV, omitting absent values.

    Args:
        tables: The tables.

    Returns:
        CSV text with columns bound_name, direction, p, n, d, value.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BOUND_COLUMNS)
    for table in tables:
        for entry in table.entries:
            if entry.value is None:
                continue
            writer.writerow(
                [entry.name, entry.direction.value, table.p, table.n, table.d, repr(entry.value)]
            )
    return buffer.getvalue()


def write_bounds_csv(tables: Sequence[BoundTable], path: Path) -> None:
    """Write bound tables as CSV.

    Args:
        tables: The tables.
        path: Destination file.
    """
    atomic_write_text(path, bounds_to_csv(tables))
