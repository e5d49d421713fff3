# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Integration tests configuration.

Each experiment runs once per session through the command line, at a reduced
scale unless ``--acceptance-trials`` is given.
"""

import csv
import json
import pathlib
from typing import Optional

import pytest

from cli import EXIT_OK, main

SEED = 20260
REGION_N = 400
REGION_P = 0.2
REGION_TRIALS = 80
SWEEP_N = 300
SWEEP_P_VALUES = [0.1, 0.2, 0.3]
SWEEP_TRIALS = 100
SWEEP_K_VALUES = [1, 2, 3, 4]
THRESHOLD_N = 1000
THRESHOLD_P = 0.1
THRESHOLD_TRIALS = 20
DEGREE_N = 500
DEGREE_SEEDS = 20
LEAKAGE_N = 300
LEAKAGE_P = 0.15
LEAKAGE_Q = 0.1
LEAKAGE_TRIALS = 4
ORACLE_INSTANCES = 20
# Absolute floor of the Monte Carlo tolerance; the rest scales with the stderr.
TOLERANCE_FLOOR = 0.03
STDERR_FACTOR = 3

# Region points are keyed by (protocol:estimator, topology tag).
DANDELION_LINE = ("dandelion:first-spy", "spliced-line")
DANDELION_LINE_MATCHING = ("dandelion:line-matching", "spliced-line")
DANDELION_STATIC_TREE = ("dandelion:ward-matching", "directed-tree-3")
DANDELION_DYNAMIC_TREE = ("dandelion:first-spy", "perfect-tree-4")
DIFFUSION = ("diffusion:first-spy", "random-regular-8")
FLOODING_STATIC = ("flooding:flooding-ward", "d-regular-4")
PROXY = ("diffusion-by-proxy:first-spy", "cycle")


def read_csv(path: pathlib.Path) -> list[dict[str, str]]:
    """Read a result CSV.

    Args:
        path: The file.

    Returns:
        Its rows.
    """
    with path.open(encoding="utf-8", newline="") as source:
        return list(csv.DictReader(source))


def tolerance(stderr: str) -> float:
    """Monte Carlo tolerance of an aggregated value.

    Args:
        stderr: Standard error column value.

    Returns:
        The larger of the floor and a multiple of the standard error.
    """
    return max(TOLERANCE_FLOOR, STDERR_FACTOR * float(stderr))


def _run(
    tmp_path_factory: pytest.TempPathFactory, command: str, document: dict, trials: Optional[int]
) -> pathlib.Path:
    """Run an experiment from a configuration file through the command line.

    Args:
        tmp_path_factory: Session temporary directory factory.
        command: Experiment subcommand.
        document: Configuration document.
        trials: Trials flag; None keeps the document's value.

    Returns:
        The output directory.
    """
    base = tmp_path_factory.mktemp(command)
    config = base / "config.json"
    config.write_text(json.dumps(document), encoding="utf-8")
    out = base / "results"
    argv = [command, "--config", str(config), "--seed", str(SEED), "--out", str(out)]
    if trials is not None:
        argv += ["--trials", str(trials)]
    assert main(argv) == EXIT_OK
    return out


@pytest.fixture(scope="session", name="acceptance_trials")
def acceptance_trials_fixture(pytestconfig: pytest.Config) -> Optional[int]:
    """Trials per point requested on the command line."""
    return pytestconfig.getoption("--acceptance-trials")


@pytest.fixture(scope="session", name="region_results")
def region_results_fixture(tmp_path_factory, acceptance_trials) -> pathlib.Path:
    """Output directory of a region run over every protocol."""
    document = {
        "kind": "region",
        "n": REGION_N,
        "p_values": [REGION_P],
        "trials": REGION_TRIALS,
        "workers": 2,
        "scenarios": [
            {"protocol": "dandelion", "topology": "spliced-line"},
            {"protocol": "dandelion", "topology": "spliced-line", "estimator": "line-matching"},
            {
                "protocol": "dandelion",
                "topology": "directed-tree",
                "degree": 3,
                "estimator": "ward-matching",
            },
            {"protocol": "dandelion", "topology": "perfect-tree", "degree": 4, "n": 1365},
            {"protocol": "diffusion", "topology": "random-regular"},
            {
                "protocol": "flooding",
                "topology": "d-regular",
                "degree": 4,
                "estimator": "flooding-ward",
            },
            {"protocol": "diffusion-by-proxy", "topology": "cycle"},
        ],
    }
    return _run(tmp_path_factory, "region", document, acceptance_trials)


@pytest.fixture(scope="session", name="sweep_results")
def sweep_results_fixture(tmp_path_factory, acceptance_trials) -> pathlib.Path:
    """Output directory of a dandelion sweep over p on spliced and k-approximate lines."""
    document = {
        "kind": "sweep",
        "n": SWEEP_N,
        "p_values": SWEEP_P_VALUES,
        "trials": SWEEP_TRIALS,
        "scenarios": [
            {"protocol": "dandelion", "topology": "spliced-line"},
            *(
                {"protocol": "dandelion", "topology": "k-approx-line", "degree": k}
                for k in SWEEP_K_VALUES
            ),
        ],
    }
    return _run(tmp_path_factory, "sweep", document, acceptance_trials)


@pytest.fixture(scope="session", name="threshold_results")
def threshold_results_fixture(tmp_path_factory, acceptance_trials) -> pathlib.Path:
    """Output directory of a threshold-estimator flooding run on directed-regular graphs."""
    document = {
        "kind": "region",
        "n": THRESHOLD_N,
        "p_values": [THRESHOLD_P],
        "trials": THRESHOLD_TRIALS,
        "scenarios": [
            {
                "protocol": "flooding",
                "topology": "directed-regular",
                "degree": 2,
                "estimator": "flooding-threshold",
            }
        ],
    }
    return _run(tmp_path_factory, "region", document, acceptance_trials)


@pytest.fixture(scope="session", name="degree_results")
def degree_results_fixture(tmp_path_factory) -> pathlib.Path:
    """Output directory of a degree-distribution run for k = 1 and k = 4."""
    document = {
        "kind": "degree-dist",
        "n": DEGREE_N,
        "degree_ks": [1, 4],
        "degree_seeds": DEGREE_SEEDS,
    }
    return _run(tmp_path_factory, "degree-dist", document, None)


@pytest.fixture(scope="session", name="leakage_results")
def leakage_results_fixture(tmp_path_factory) -> pathlib.Path:
    """Output directory of a leakage run."""
    document = {
        "kind": "leakage",
        "n": LEAKAGE_N,
        "p_values": [LEAKAGE_P],
        "q": LEAKAGE_Q,
        "trials": LEAKAGE_TRIALS,
        "leakage_transactions": 2000,
    }
    return _run(tmp_path_factory, "leakage", document, None)


@pytest.fixture(scope="session", name="oracle_results")
def oracle_results_fixture(tmp_path_factory) -> pathlib.Path:
    """Output directory of an oracle check."""
    document = {"kind": "oracle-check", "oracle_instances": ORACLE_INSTANCES}
    return _run(tmp_path_factory, "oracle-check", document, None)
