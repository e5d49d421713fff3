# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Analytic posteriors and estimators against exhaustive enumeration."""

import math

import pytest

from .conftest import ORACLE_INSTANCES, read_csv


def test_every_instance_agrees_with_enumeration(oracle_results):
    """Check posteriors, matching optimality and argmax recall on every instance.

    Args:
        oracle_results: Output directory of the oracle check.
    """
    rows = read_csv(oracle_results / "oracle.csv")

    assert len(rows) == ORACLE_INSTANCES
    for row in rows:
        assert int(row["honest"]) <= 6
        assert float(row["max_posterior_difference"]) <= 1e-9
        line_difference = float(row["line_posterior_difference"])
        assert math.isnan(line_difference) or line_difference <= 1e-9
        assert float(row["matching_value"]) == pytest.approx(float(row["best_matching_value"]))
        assert float(row["best_random_recall"]) <= float(row["argmax_recall"]) + 1e-9


def test_instances_cover_early_termination(oracle_results):
    """Check that both stem termination settings are exercised.

    Args:
        oracle_results: Output directory of the oracle check.
    """
    rows = read_csv(oracle_results / "oracle.csv")

    assert {float(row["q"]) for row in rows} == {0.0, 0.3}


def test_line_posterior_is_checked_on_the_six_cycle(oracle_results):
    """Check that the local line posterior was compared on the single-spy 6-cycle.

    Args:
        oracle_results: Output directory of the oracle check.
    """
    first = read_csv(oracle_results / "oracle.csv")[0]

    assert (first["topology"], first["n"], first["honest"]) == ("cycle", "6", "5")
    assert float(first["line_posterior_difference"]) <= 1e-9
