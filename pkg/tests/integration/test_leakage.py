# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Interior-node leakage of stems with early termination."""

import pytest

from theory import refresh_interval

from .conftest import LEAKAGE_N, LEAKAGE_P, LEAKAGE_Q, read_csv


def test_revealed_fraction_grows(leakage_results):
    """Check that the revealed fraction is cumulative and at most one.

    Args:
        leakage_results: Output directory of the leakage run.
    """
    curve = read_csv(leakage_results / "leakage.csv")

    revealed = [float(row["revealed_fraction"]) for row in curve]
    assert revealed == sorted(revealed)
    assert 0 < revealed[-1] <= 1
    assert {float(row["q"]) for row in curve} == {LEAKAGE_Q}


def test_refresh_interval_is_reported(leakage_results):
    """Check that the summary carries the refresh interval of the run's parameters.

    Args:
        leakage_results: Output directory of the leakage run.
    """
    (summary,) = read_csv(leakage_results / "leakage_summary.csv")

    expected = refresh_interval(LEAKAGE_N, LEAKAGE_P, 3.0, 0.4)
    assert float(summary["refresh_interval_s"]) == pytest.approx(expected)
    assert summary["ward_size"] == "7"
