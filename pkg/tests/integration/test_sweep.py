# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Dandelion detection points over a range of adversarial fractions and line constructions."""

import math

import pytest

from .conftest import SWEEP_K_VALUES, SWEEP_P_VALUES, read_csv, tolerance

pytestmark = pytest.mark.slow

SPLICED = "spliced-line"
ORDERING_P = 0.2


@pytest.fixture(scope="module", name="rows")
def rows_fixture(sweep_results) -> list[dict[str, str]]:
    """Sweep points in file order."""
    return read_csv(sweep_results / "points.csv")


def _by_topology(rows: list[dict[str, str]], topology: str) -> list[dict[str, str]]:
    return [row for row in rows if row["topology"] == topology]


def _at(rows: list[dict[str, str]], topology: str, p: float) -> dict[str, str]:
    return next(row for row in _by_topology(rows, topology) if float(row["p"]) == p)


def test_every_line_is_swept_over_every_fraction(rows):
    """Check that the spliced line and each k-approximate line cover every p.

    Args:
        rows: Sweep points.
    """
    topologies = [SPLICED, *(f"k-approx-line-{k}" for k in SWEEP_K_VALUES)]

    assert sorted({row["topology"] for row in rows}) == sorted(topologies)
    for topology in topologies:
        assert [float(row["p"]) for row in _by_topology(rows, topology)] == SWEEP_P_VALUES


def test_recall_tracks_adversarial_fraction(rows):
    """Check that first-spy recall follows p and grows with it on the spliced line.

    Args:
        rows: Sweep points.
    """
    spliced = _by_topology(rows, SPLICED)

    for row in spliced:
        assert float(row["recall"]) == pytest.approx(
            float(row["p"]), abs=tolerance(row["recall_se"])
        )
    recalls = [float(row["recall"]) for row in spliced]
    assert recalls == sorted(recalls)


def test_precision_grows_with_adversarial_fraction(rows):
    """Check that precision grows with p and stays above p^2.

    Args:
        rows: Sweep points.
    """
    spliced = _by_topology(rows, SPLICED)

    precisions = [float(row["precision"]) for row in spliced]
    assert precisions == sorted(precisions)
    for row in spliced:
        assert float(row["precision"]) >= float(row["p"]) ** 2 - tolerance(row["precision_se"])


def test_rougher_lines_leak_more(rows):
    """Check that precision falls from 1-approximate lines through 4-approximate to spliced.

    Args:
        rows: Sweep points.
    """
    spliced = _at(rows, SPLICED, ORDERING_P)
    lines = {k: _at(rows, f"k-approx-line-{k}", ORDERING_P) for k in SWEEP_K_VALUES}
    precision = {k: float(row["precision"]) for k, row in lines.items()}

    assert float(spliced["precision"]) < precision[4] < precision[2] < precision[1]
    assert float(spliced["precision"]) < precision[3] < precision[1]
    gap = precision[1] - float(spliced["precision"])
    stderr = math.hypot(float(lines[1]["precision_se"]), float(spliced["precision_se"]))
    assert gap >= 2 * stderr
