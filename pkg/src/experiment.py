# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Monte Carlo experiment runner.

Every trial draws a fresh graph, adversary placement, ground truth and protocol
randomness from a seed derived from (base seed, point index, trial index), so the
results do not depend on the number of worker processes.
"""

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from adversary import (
    AdversaryView,
    LocalNeighborhood,
    PosteriorModel,
    SourceMapping,
    best_matching_value,
    brute_force_posterior,
    dandelion_dynamic_line_posterior,
    dandelion_static_posterior,
    expected_correct,
    first_spy_estimator,
    flooding_dynamic_estimator,
    flooding_static_estimator,
    matching_estimator,
    recall_optimal_estimator,
)
from graph import (
    LINE_KINDS,
    NetworkGraph,
    TopologyKind,
    TopologySpec,
    WardSemantics,
    build_k_approx_line,
    build_topology,
    compute_wards,
    degree_stats,
    place_adversaries,
)
from helpers import atomic_write_text, derive_seed
from metrics import (
    DetectionPoint,
    TrialMetrics,
    aggregate,
    assert_region_bounds,
    evaluate_trial,
    points_to_csv,
)
from spreading import (
    DandelionParams,
    GroundTruth,
    ObservationLog,
    Protocol,
    run_dandelion,
    run_diffusion,
    run_diffusion_by_proxy,
    run_flooding,
    walk_stems,
)
from state.experiment import (
    Estimator,
    ExperimentConfig,
    ExperimentKind,
    PointRecord,
    RunManifest,
    Scenario,
)
from theory import BoundTable, bounds_to_csv, max_degree_scaling, protocol_bounds, refresh_interval

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
ORACLE_TOLERANCE = 1e-9
ORACLE_RANDOM_MAPPINGS = 1000
LEAKAGE_CHECKPOINTS = 20


class RegionBoundViolationError(Exception):
    """Exception raised when a trial violates D <= R <= sqrt(D).

    Attributes:
        seed: Seed of the violating trial.
        violation: Description of the failed inequality.
    """

    def __init__(self, seed: int, violation: str):
        """Initialize the error.

        Args:
            seed: Seed of the violating trial.
            violation: Description of the failed inequality.
        """
        super().__init__(seed, violation)
        self.seed = seed
        self.violation = violation

    def __str__(self) -> str:
        """Render the violation with the trial seed."""
        return f"Trial with seed {self.seed} violates the region bounds: {self.violation}"


class OracleMismatchError(Exception):
    """Exception raised when an analytic result disagrees with enumeration."""


def _spread(
    scenario: Scenario, g: NetworkGraph, truth: GroundTruth, q: float, seed: int
) -> ObservationLog:
    if scenario.protocol == Protocol.FLOODING:
        return run_flooding(g, truth)
    if scenario.protocol == Protocol.DIFFUSION:
        return run_diffusion(g, truth, seed)
    if scenario.protocol == Protocol.DIFFUSION_BY_PROXY:
        return run_diffusion_by_proxy(g, truth, seed)
    broadcast = build_topology(
        TopologySpec(kind=TopologyKind.RANDOM_REGULAR, n=g.n), derive_seed(seed, 1)
    ).with_roles(g.adversarial)
    return run_dandelion(DandelionParams(q=q, anon_graph=g), broadcast, truth, seed)


def _estimate(
    scenario: Scenario, g: NetworkGraph, log: ObservationLog, p: float, seed: int
) -> SourceMapping:
    estimator = scenario.estimator
    if estimator == Estimator.FIRST_SPY:
        return first_spy_estimator(AdversaryView.local(g, log))
    if estimator == Estimator.LINE_MATCHING:
        view = AdversaryView.local(g, log)
        return matching_estimator(view, dandelion_dynamic_line_posterior(view), seed)
    if estimator == Estimator.FLOODING_THRESHOLD:
        return flooding_dynamic_estimator(AdversaryView.local(g, log), p, seed)
    view = AdversaryView.full(g, log)
    if estimator == Estimator.FLOODING_WARD:
        return flooding_static_estimator(view, seed)
    model = dandelion_static_posterior(view)
    if estimator == Estimator.RECALL_OPTIMAL:
        return recall_optimal_estimator(view, model, seed)
    return matching_estimator(view, model, seed)


def run_trial(scenario: Scenario, n: int, p: float, q: float, seed: int) -> TrialMetrics:
    """Run one independent trial of a scenario.

    Args:
        scenario: Protocol, topology and estimator.
        n: Experiment-wide network size.
        p: Adversarial fraction.
        q: Stem termination probability.
        seed: Trial seed.

    Returns:
        The trial's metrics.

    Raises:
        RegionBoundViolationError: If the trial violates D <= R <= sqrt(D).
    """
    spec = scenario.topology_spec(n)
    g = place_adversaries(build_topology(spec, derive_seed(seed, 0)), p, derive_seed(seed, 1))
    truth = GroundTruth.draw(g, derive_seed(seed, 2))
    log = _spread(scenario, g, truth, q, derive_seed(seed, 3))
    mapping = _estimate(scenario, g, log, p, derive_seed(seed, 4))
    metrics = evaluate_trial(mapping, truth)
    check = assert_region_bounds(metrics)
    if not check.passed:
        logger.error("Trial %d of %s violates the region bounds", seed, scenario.tag)
        raise RegionBoundViolationError(seed, check.violation or "")
    return metrics


def run_trials(
    scenario: Scenario, n: int, p: float, q: float, seeds: Sequence[int], workers: int
) -> list[TrialMetrics]:
    """Run trials of one point, in worker processes when workers > 1.

    Args:
        scenario: Protocol, topology and estimator.
        n: Experiment-wide network size.
        p: Adversarial fraction.
        q: Stem termination probability.
        seeds: One seed per trial.
        workers: Worker processes.

    Returns:
        Metrics in seed order.
    """
    if workers == 1:
        return [run_trial(scenario, n, p, q, seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(
            pool.map(run_trial, repeat(scenario), repeat(n), repeat(p), repeat(q), seeds)
        )


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _detection_points(
    config: ExperimentConfig, seed: int
) -> tuple[dict[str, str], list[PointRecord]]:
    points: list[DetectionPoint] = []
    tables: dict[tuple[float, int], BoundTable] = {}
    records = []
    index = 0
    for scenario in config.scenarios:
        spec = scenario.topology_spec(config.n)
        for p in config.p_values:
            seeds = [derive_seed(seed, index, trial) for trial in range(config.trials)]
            started = time.perf_counter()
            trials = run_trials(scenario, config.n, p, config.q, seeds, config.workers)
            point = aggregate(trials, scenario.tag, spec.tag, spec.n, p, config.q)
            elapsed = time.perf_counter() - started
            logger.info(
                "%s on %s at p=%s: recall %.4f, precision %.4f (%d trials, %.1fs)",
                point.protocol,
                point.topology,
                p,
                point.recall,
                point.precision,
                point.trials,
                elapsed,
            )
            points.append(point)
            degree = spec.effective_degree if scenario.protocol == Protocol.FLOODING else None
            key = (p, spec.n)
            if key not in tables or degree is not None:
                tables[key] = protocol_bounds(p, spec.n, degree or config.bound_degree)
            records.append(
                PointRecord(
                    index=index,
                    label=f"{point.protocol} {point.topology} p={p}",
                    trial_seeds=tuple(seeds),
                    wall_clock_seconds=elapsed,
                )
            )
            index += 1
    return {
        "points.csv": points_to_csv(points),
        "bounds.csv": bounds_to_csv(list(tables.values())),
    }, records


def _degree_distribution(
    config: ExperimentConfig, seed: int
) -> tuple[dict[str, str], list[PointRecord]]:
    histogram_rows = []
    summary_rows = []
    records = []
    for index, k in enumerate(config.degree_ks):
        seeds = [derive_seed(seed, index, trial) for trial in range(config.degree_seeds)]
        started = time.perf_counter()
        counts: dict[int, int] = {}
        max_degrees = []
        leaf_fractions = []
        for trial_seed in seeds:
            stats = degree_stats(build_k_approx_line(config.n, k, trial_seed))
            if stats.mean_total_degree != 2:
                raise OracleMismatchError(f"Mean total degree {stats.mean_total_degree} != 2.")
            for degree, count in stats.histogram.items():
                counts[degree] = counts.get(degree, 0) + count
            max_degrees.append(stats.max_in_degree)
            leaf_fractions.append(stats.leaf_fraction)
        histogram_rows.extend(
            (k, degree, repr(count / len(seeds))) for degree, count in sorted(counts.items())
        )
        summary_rows.append(
            (
                k,
                repr(float(np.mean(max_degrees))),
                repr(float(np.mean(leaf_fractions))),
                2,
                repr(max_degree_scaling(config.n, k)),
            )
        )
        records.append(
            PointRecord(
                index=index,
                label=f"k-approx-line k={k}",
                trial_seeds=tuple(seeds),
                wall_clock_seconds=time.perf_counter() - started,
            )
        )
        logger.info("k=%d: mean max in-degree %.3f", k, np.mean(max_degrees))
    return {
        "degree_histogram.csv": _csv_text(("k", "in_degree", "mean_count"), histogram_rows),
        "degree_summary.csv": _csv_text(
            (
                "k",
                "mean_max_in_degree",
                "leaf_fraction",
                "mean_total_degree",
                "predicted_leading_term",
            ),
            summary_rows,
        ),
    }, records


def interior_nodes(g: NetworkGraph) -> np.ndarray:
    """Honest nodes of a line that are neither the head nor the tail of a ward.

    Args:
        g: A line with roles placed.

    Returns:
        Sorted interior node ids.
    """
    knowledge = LocalNeighborhood.from_graph(g)
    boundary = set()
    for neighbours in knowledge.spy_adjacency.values():
        boundary.update(neighbours.predecessors)
        boundary.update(neighbours.successors)
    return np.setdiff1d(g.honest_nodes, np.array(sorted(boundary), dtype=np.int64))


def leakage_curve(g: NetworkGraph, q: float, transactions: int, seed: int) -> np.ndarray:
    """Fraction of interior nodes revealed by virtual exits after each transaction.

    Args:
        g: A line with roles placed.
        q: Stem termination probability.
        transactions: Number of transactions, each from a uniform honest source.
        seed: Trial seed.

    Returns:
        (transactions,) cumulative revealed fraction.
    """
    rng = np.random.default_rng(seed)
    interior = interior_nodes(g)
    sources = rng.choice(g.honest_nodes, size=transactions)
    outcome = walk_stems(DandelionParams(q=q, anon_graph=g), sources, derive_seed(seed, 0))
    if interior.size == 0:
        return np.zeros(transactions)
    revealing = outcome.virtual & np.isin(outcome.exit_node, interior)
    first_seen = np.zeros(transactions, dtype=bool)
    _, first_index = np.unique(outcome.exit_node[revealing], return_index=True)
    first_seen[np.flatnonzero(revealing)[first_index]] = True
    return np.cumsum(first_seen) / interior.size


def _leakage(config: ExperimentConfig, seed: int) -> tuple[dict[str, str], list[PointRecord]]:
    curve_rows = []
    summary_rows = []
    records = []
    checkpoints = np.unique(
        np.linspace(1, config.leakage_transactions, LEAKAGE_CHECKPOINTS).astype(np.int64)
    )
    spec = TopologySpec(kind=TopologyKind.SPLICED_LINE, n=config.n)
    for index, p in enumerate(config.p_values):
        seeds = [derive_seed(seed, index, trial) for trial in range(config.trials)]
        started = time.perf_counter()
        curves = []
        interior_sizes = []
        for trial_seed in seeds:
            g = place_adversaries(
                build_topology(spec, derive_seed(trial_seed, 0)), p, derive_seed(trial_seed, 1)
            )
            interior_sizes.append(interior_nodes(g).size)
            curves.append(
                leakage_curve(g, config.q, config.leakage_transactions, derive_seed(trial_seed, 2))
            )
        mean_curve = np.mean(curves, axis=0)
        mean_interior = float(np.mean(interior_sizes))
        for count in checkpoints:
            conservative = min(1.0, count / mean_interior) if mean_interior else 0.0
            curve_rows.append(
                (p, config.q, int(count), repr(float(mean_curve[count - 1])), repr(conservative))
            )
        interval = refresh_interval(config.n, p, config.tx_rate, config.leak_budget)
        summary_rows.append(
            (
                p,
                config.n,
                round(1 / p),
                repr(mean_interior),
                config.tx_rate,
                config.leak_budget,
                repr(interval),
            )
        )
        records.append(
            PointRecord(
                index=index,
                label=f"leakage p={p}",
                trial_seeds=tuple(seeds),
                wall_clock_seconds=time.perf_counter() - started,
            )
        )
        logger.info("Leakage at p=%s: refresh every %.1fs", p, interval)
    return {
        "leakage.csv": _csv_text(
            ("p", "q", "transactions", "revealed_fraction", "conservative_fraction"), curve_rows
        ),
        "leakage_summary.csv": _csv_text(
            (
                "p",
                "n",
                "ward_size",
                "mean_interior_nodes",
                "tx_rate",
                "leak_budget",
                "refresh_interval_s",
            ),
            summary_rows,
        ),
    }, records


def _oracle_instance(rng: np.random.Generator, instance: int) -> tuple[NetworkGraph, float]:
    """Random small graph with at most six honest nodes and its stem q.

    Instance 0 is always a six-node cycle with a single spy and q = 0.
    """
    q = 0.0 if instance % 2 == 0 else 0.3
    if instance == 0:
        n, spies = 6, 1
        spec = TopologySpec(kind=TopologyKind.CYCLE, n=n)
    elif instance % 4 in (0, 1):
        n = int(rng.integers(4, 9))
        spies = int(rng.integers(max(1, n - 6), n))
        spec = TopologySpec(kind=TopologyKind.CYCLE, n=n)
    else:
        n, spies = 3, 1
        spec = TopologySpec(kind=TopologyKind.PERFECT_D_ARY_TREE, n=3, degree=2)
    g = build_topology(spec, int(rng.integers(2**62)))
    return place_adversaries(g, (spies + 0.5) / n, int(rng.integers(2**62))), q


def _line_posterior_difference(
    g: NetworkGraph, log: ObservationLog, exact: PosteriorModel, q: float
) -> float:
    """Gap between the local line posterior and enumeration, NaN where they differ by design.

    With local knowledge the interior of every ward is pooled, so the two posteriors
    only coincide on q = 0 lines where at most one ward has interior nodes.
    """
    if q != 0 or g.spec.kind not in LINE_KINDS:
        return float("nan")
    wards = compute_wards(g, WardSemantics.DANDELION_PATH)
    if sum(len(ward.members) > 2 for ward in wards) > 1:
        return float("nan")
    local = dandelion_dynamic_line_posterior(AdversaryView.local(g, log))
    return float(np.abs(local.weights - exact.weights).max())


def check_oracle_instance(g: NetworkGraph, q: float, seed: int) -> tuple[float, ...]:
    """Compare analytic stem results with enumeration on one small instance.

    Args:
        g: Graph with at most eight honest nodes.
        q: Stem termination probability.
        seed: Instance seed.

    Returns:
        (max static posterior difference, line posterior difference or NaN, matching
        value, best matching value, argmax expected recall, best random expected recall).

    Raises:
        OracleMismatchError: If any comparison fails.
    """
    rng = np.random.default_rng(seed)
    params = DandelionParams(q=q, anon_graph=g)
    truth = GroundTruth.draw(g, derive_seed(seed, 0))
    log = run_dandelion(params, g, truth, derive_seed(seed, 1))
    view = AdversaryView.full(g, log)
    analytic = dandelion_static_posterior(view)
    exact = brute_force_posterior(g, log, params)
    difference = float(np.abs(analytic.weights - exact.weights).max())
    if difference > ORACLE_TOLERANCE:
        raise OracleMismatchError(f"Posterior differs from enumeration by {difference!r}.")
    line_difference = _line_posterior_difference(g, log, exact, q)
    if line_difference > ORACLE_TOLERANCE:
        raise OracleMismatchError(
            f"Line posterior differs from enumeration by {line_difference!r}."
        )
    matching = matching_estimator(view, analytic, derive_seed(seed, 2))
    achieved = expected_correct(exact, matching)
    best = best_matching_value(exact)
    if achieved < best - ORACLE_TOLERANCE:
        raise OracleMismatchError(f"Matching reaches {achieved!r}, enumeration {best!r}.")
    honest = g.n_honest
    argmax_mapping = recall_optimal_estimator(view, analytic, derive_seed(seed, 3))
    argmax = expected_correct(exact, argmax_mapping)
    random_rows = rng.integers(0, honest, size=(ORACLE_RANDOM_MAPPINGS, honest))
    random_best = float(exact.weights[random_rows, np.arange(honest)].sum(axis=1).max())
    if random_best > argmax + ORACLE_TOLERANCE:
        raise OracleMismatchError(f"A random mapping beats the argmax: {random_best!r}.")
    return difference, line_difference, achieved, best, argmax / honest, random_best / honest


def _oracle_check(
    config: ExperimentConfig, seed: int
) -> tuple[dict[str, str], list[PointRecord]]:
    rng = np.random.default_rng(seed)
    rows = []
    records = []
    for instance in range(config.oracle_instances):
        g, q = _oracle_instance(rng, instance)
        instance_seed = derive_seed(seed, instance)
        started = time.perf_counter()
        result = check_oracle_instance(g, q, instance_seed)
        rows.append((instance, g.spec.tag, g.n, g.n_honest, q, *(repr(v) for v in result)))
        records.append(
            PointRecord(
                index=instance,
                label=f"oracle {g.spec.tag} n={g.n} q={q}",
                trial_seeds=(instance_seed,),
                wall_clock_seconds=time.perf_counter() - started,
            )
        )
    logger.info("All %d oracle instances agree", config.oracle_instances)
    header = (
        "instance",
        "topology",
        "n",
        "honest",
        "q",
        "max_posterior_difference",
        "line_posterior_difference",
        "matching_value",
        "best_matching_value",
        "argmax_recall",
        "best_random_recall",
    )
    return {"oracle.csv": _csv_text(header, rows)}, records


_RUNNERS: dict[
    ExperimentKind,
    Callable[[ExperimentConfig, int], tuple[dict[str, str], list[PointRecord]]],
] = {
    ExperimentKind.REGION: _detection_points,
    ExperimentKind.SWEEP: _detection_points,
    ExperimentKind.DEGREE_DIST: _degree_distribution,
    ExperimentKind.LEAKAGE: _leakage,
    ExperimentKind.ORACLE_CHECK: _oracle_check,
}


def _write_outputs(out: Path, files: dict[str, str]) -> None:
    written: list[Path] = []
    try:
        for name, content in files.items():
            path = out / name
            atomic_write_text(path, content)
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Run an experiment and write its result files and manifest.

    Results are only written once every point has completed, so an aborted run
    leaves no partial result files behind.

    Args:
        config: The configuration; a random seed is drawn when none is set.

    Returns:
        The manifest written next to the results.
    """
    config = config.resolve_seed()
    seed = config.resolved_seed
    logger.info("Running %s experiment with seed %d", config.kind.value, seed)
    files, records = _RUNNERS[config.kind](config, seed)
    manifest = RunManifest(
        config=config.to_dict(),
        points=tuple(records),
        outputs=tuple(sorted(files)),
    )
    _write_outputs(config.out, {**files, MANIFEST_FILE: manifest.to_json()})
    logger.info("Wrote %s to %s", ", ".join(sorted(files)), config.out)
    return manifest
