# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Unit tests for the experiment module."""

import csv
import json
import pickle

import numpy as np
import pytest

import experiment
from experiment import (
    MANIFEST_FILE,
    RegionBoundViolationError,
    check_oracle_instance,
    interior_nodes,
    leakage_curve,
    run_experiment,
    run_trial,
    run_trials,
)
from graph import TopologyKind, TopologySpec, build_topology, place_adversaries
from helpers import atomic_write_text
from metrics import RegionCheck
from spreading import Protocol
from state.experiment import Estimator, ExperimentConfig, ExperimentKind, Scenario

from .helper import make_graph

SPLICED_FIRST_SPY = Scenario(protocol=Protocol.DANDELION, topology=TopologyKind.SPLICED_LINE)


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as source:
        return list(csv.DictReader(source))


@pytest.mark.parametrize(
    "scenario, q",
    [
        pytest.param(SPLICED_FIRST_SPY, 0.0, id="dandelion first spy"),
        pytest.param(
            Scenario(
                protocol=Protocol.DANDELION,
                topology=TopologyKind.SPLICED_LINE,
                estimator=Estimator.LINE_MATCHING,
            ),
            0.0,
            id="dandelion line matching",
        ),
        pytest.param(
            Scenario(
                protocol=Protocol.DANDELION,
                topology=TopologyKind.K_APPROX_LINE,
                degree=2,
                estimator=Estimator.WARD_MATCHING,
            ),
            0.0,
            id="dandelion ward matching on k-approximate line",
        ),
        pytest.param(
            Scenario(
                protocol=Protocol.DANDELION,
                topology=TopologyKind.DIRECTED_D_REGULAR_TREE,
                degree=3,
                estimator=Estimator.RECALL_OPTIMAL,
            ),
            0.2,
            id="dandelion recall optimal on tree",
        ),
        pytest.param(
            Scenario(protocol=Protocol.DIFFUSION, topology=TopologyKind.RANDOM_REGULAR),
            0.0,
            id="diffusion",
        ),
        pytest.param(
            Scenario(
                protocol=Protocol.FLOODING,
                topology=TopologyKind.D_REGULAR,
                degree=4,
                estimator=Estimator.FLOODING_WARD,
            ),
            0.0,
            id="flooding ward matching",
        ),
        pytest.param(
            Scenario(
                protocol=Protocol.FLOODING,
                topology=TopologyKind.RANDOM_REGULAR,
                estimator=Estimator.FLOODING_THRESHOLD,
            ),
            0.0,
            id="flooding threshold",
        ),
        pytest.param(
            Scenario(protocol=Protocol.DIFFUSION_BY_PROXY, topology=TopologyKind.CYCLE),
            0.0,
            id="diffusion by proxy",
        ),
    ],
)
def test_run_trial_scores_lie_in_region(scenario, q):
    """
    arrange: a scenario on 60 nodes with p = 0.2
    act: run one trial
    assert: the scores satisfy 0 <= D <= R <= 1
    """
    metrics = run_trial(scenario, 60, 0.2, q, seed=11)

    assert 0 <= metrics.macro_precision <= metrics.macro_recall <= 1
    assert metrics.nodes.size == 48


def test_run_trial_is_deterministic():
    """
    arrange: a dandelion scenario and a seed
    act: run the trial twice
    assert: the per-node scores are identical
    """
    first = run_trial(SPLICED_FIRST_SPY, 80, 0.2, 0.0, seed=5)
    second = run_trial(SPLICED_FIRST_SPY, 80, 0.2, 0.0, seed=5)

    assert np.array_equal(first.per_node_precision, second.per_node_precision)
    assert first.macro_recall == second.macro_recall


def test_run_trials_do_not_depend_on_workers():
    """
    arrange: four trial seeds
    act: run the trials in-process and in two worker processes
    assert: both runs give the same metrics in seed order
    """
    seeds = [3, 4, 5, 6]

    serial = run_trials(SPLICED_FIRST_SPY, 50, 0.2, 0.0, seeds, workers=1)
    parallel = run_trials(SPLICED_FIRST_SPY, 50, 0.2, 0.0, seeds, workers=2)

    assert [t.macro_recall for t in serial] == [t.macro_recall for t in parallel]
    assert [t.macro_precision for t in serial] == [t.macro_precision for t in parallel]


def test_region_violation_carries_seed(monkeypatch):
    """
    arrange: a region check that always fails
    act: run a trial
    assert: a RegionBoundViolationError carries the seed and survives pickling
    """
    monkeypatch.setattr(
        experiment,
        "assert_region_bounds",
        lambda _: RegionCheck(passed=False, violation="precision 1 > recall 0"),
    )

    with pytest.raises(RegionBoundViolationError) as exc_info:
        run_trial(SPLICED_FIRST_SPY, 30, 0.2, 0.0, seed=8)

    restored = pickle.loads(pickle.dumps(exc_info.value))  # nosec B301
    assert restored.seed == 8
    assert str(restored) == str(exc_info.value)
    assert "seed 8" in str(restored)


def test_interior_nodes_of_two_wards():
    """
    arrange: a 7-cycle with spies 3 and 6
    act: compute the interior nodes
    assert: only node 1 is neither next to nor before a spy
    """
    g = make_graph(TopologyKind.CYCLE, [(v, (v + 1) % 7) for v in range(7)], [3, 6], 7)

    assert interior_nodes(g).tolist() == [1]


def test_leakage_curve_is_cumulative():
    """
    arrange: a 200-node spliced line with p = 0.1
    act: compute the leakage curve for q = 0.3
    assert: the revealed fraction never decreases and stays within [0, 1]
    """
    g = place_adversaries(
        build_topology(TopologySpec(kind=TopologyKind.SPLICED_LINE, n=200), 1), 0.1, 2
    )

    curve = leakage_curve(g, 0.3, 500, seed=3)

    assert curve.shape == (500,)
    assert np.all(np.diff(curve) >= 0)
    assert 0 < curve[-1] <= 1


def test_check_oracle_instance_on_cycle(five_cycle):
    """
    arrange: a 5-cycle with one spy and q = 0.3
    act: compare analytic results with enumeration
    assert: the posteriors agree, the line check is skipped and the matching reaches the optimum
    """
    difference, line_difference, achieved, best, argmax, random_best = check_oracle_instance(
        five_cycle, 0.3, seed=4
    )

    assert difference <= 1e-9
    assert np.isnan(line_difference)
    assert achieved == pytest.approx(best)
    assert random_best <= argmax + 1e-9


def test_check_oracle_instance_compares_line_posterior():
    """
    arrange: a 6-cycle with one spy and q = 0
    act: compare analytic results with enumeration
    assert: the local line posterior agrees with enumeration too
    """
    g = make_graph(TopologyKind.CYCLE, [(v, (v + 1) % 6) for v in range(6)], [5], 6)

    difference, line_difference, *_ = check_oracle_instance(g, 0.0, seed=5)

    assert difference <= 1e-9
    assert line_difference <= 1e-9


def test_oracle_experiment_writes_results(tmp_path):
    """
    arrange: an oracle-check configuration with eight instances
    act: run the experiment
    assert: the oracle CSV holds eight agreeing rows and the manifest lists it
    """
    config = ExperimentConfig.default(
        ExperimentKind.ORACLE_CHECK, {"seed": 1, "oracle_instances": 8, "out": str(tmp_path)}
    )

    manifest = run_experiment(config)

    rows = _read_csv(tmp_path / "oracle.csv")
    assert len(rows) == 8
    assert all(float(row["max_posterior_difference"]) <= 1e-9 for row in rows)
    assert float(rows[0]["line_posterior_difference"]) <= 1e-9
    assert manifest.outputs == ("oracle.csv",)
    written = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert written["config"]["seed"] == 1
    assert len(written["points"]) == 8


def test_region_experiment_is_reproducible(tmp_path):
    """
    arrange: a small region configuration with a fixed seed
    act: run it twice into different directories
    assert: the points CSV is byte-identical and the bounds CSV is written
    """
    document = {
        "kind": "region",
        "n": 60,
        "trials": 3,
        "seed": 7,
        "scenarios": [{"protocol": "dandelion", "topology": "spliced-line"}],
    }

    for name in ("first", "second"):
        run_experiment(ExperimentConfig.from_mapping(document, {"out": str(tmp_path / name)}))

    first = (tmp_path / "first" / "points.csv").read_text(encoding="utf-8")
    assert first == (tmp_path / "second" / "points.csv").read_text(encoding="utf-8")
    rows = _read_csv(tmp_path / "first" / "points.csv")
    assert [row["protocol"] for row in rows] == ["dandelion:first-spy"]
    assert rows[0]["trials"] == "3"
    assert (tmp_path / "first" / "bounds.csv").exists()


def test_degree_experiment_writes_histogram_and_summary(tmp_path):
    """
    arrange: a degree-distribution configuration with two k and five graphs each
    act: run the experiment
    assert: each k's mean counts sum to n and its mean total degree is 2
    """
    config = ExperimentConfig.from_mapping(
        {
            "kind": "degree-dist",
            "n": 50,
            "degree_ks": [1, 2],
            "degree_seeds": 5,
            "seed": 2,
            "out": str(tmp_path),
        }
    )

    run_experiment(config)

    histogram = _read_csv(tmp_path / "degree_histogram.csv")
    for k in ("1", "2"):
        total = sum(float(row["mean_count"]) for row in histogram if row["k"] == k)
        assert total == pytest.approx(50)
    summary = _read_csv(tmp_path / "degree_summary.csv")
    assert [row["mean_total_degree"] for row in summary] == ["2", "2"]


def test_leakage_experiment_writes_curve_and_interval(tmp_path):
    """
    arrange: a leakage configuration on 100 nodes with two trials
    act: run the experiment
    assert: the curve has twenty checkpoints and the summary a positive interval
    """
    config = ExperimentConfig.from_mapping(
        {
            "kind": "leakage",
            "n": 100,
            "p_values": [0.15],
            "q": 0.1,
            "trials": 2,
            "leakage_transactions": 200,
            "seed": 4,
            "out": str(tmp_path),
        }
    )

    run_experiment(config)

    curve = _read_csv(tmp_path / "leakage.csv")
    assert len(curve) == 20
    fractions = [float(row["revealed_fraction"]) for row in curve]
    assert fractions == sorted(fractions)
    summary = _read_csv(tmp_path / "leakage_summary.csv")
    assert summary[0]["ward_size"] == "7"
    assert float(summary[0]["refresh_interval_s"]) > 0


def test_failed_write_leaves_no_results(tmp_path, monkeypatch):
    """
    arrange: a manifest write that fails
    act: run an oracle-check experiment
    assert: the error propagates and the result CSV is removed again
    """

    def failing_manifest(path, content):
        if path.name == MANIFEST_FILE:
            raise OSError("disk full")
        atomic_write_text(path, content)

    monkeypatch.setattr(experiment, "atomic_write_text", failing_manifest)
    config = ExperimentConfig.default(
        ExperimentKind.ORACLE_CHECK, {"seed": 1, "oracle_instances": 2, "out": str(tmp_path)}
    )

    with pytest.raises(OSError, match="disk full"):
        run_experiment(config)

    assert not list(tmp_path.iterdir())
