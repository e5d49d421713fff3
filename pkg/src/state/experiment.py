# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Experiment configuration state.

A configuration is a JSON document validated into ``ExperimentConfig``. Command
line flags are applied as overrides before validation, so a flag and a file value
go through the same checks.
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Self

import numpy as np
from pydantic import ConfigDict, Field, TypeAdapter, ValidationError, model_validator
from pydantic.dataclasses import dataclass

from graph import (
    LINE_KINDS,
    TREE_KINDS,
    TopologyKind,
    TopologySpec,
    adversary_count,
)
from helpers import SEED_UPPER_BOUND, get_invalid_config_fields
from spreading import Protocol

logger = logging.getLogger(__name__)

SOFTWARE_VERSION = "1.0.0"
STRICT_CONFIG = ConfigDict(extra="forbid")
_OUT_DEGREE_ONE_KINDS = LINE_KINDS | TREE_KINDS | {TopologyKind.K_APPROX_LINE}


class InvalidExperimentConfigError(Exception):
    """Exception raised when an experiment configuration is invalid.

    Attributes:
        fields: Names of the offending fields.
    """

    def __init__(self, message: str, fields: Optional[list[str]] = None):
        """Initialize the error.

        Args:
            message: Description of the problem.
            fields: Names of the offending fields.
        """
        super().__init__(message, fields)
        self.message = message
        self.fields = fields or []

    def __str__(self) -> str:
        """Render the message with the offending fields."""
        if self.fields:
            return f"{self.message} (fields: {', '.join(self.fields)})"
        return self.message


class ExperimentKind(str, Enum):
    """Experiment to run.

    Attributes:
        REGION: Detection points of several protocols at fixed p.
        SWEEP: Detection points over a range of p.
        DEGREE_DIST: In-degree distributions of k-approximate lines.
        LEAKAGE: Interior-node leakage of stems with early termination.
        ORACLE_CHECK: Analytic posteriors and estimators against enumeration.
    """

    REGION = "region"
    SWEEP = "sweep"
    DEGREE_DIST = "degree-dist"
    LEAKAGE = "leakage"
    ORACLE_CHECK = "oracle-check"


class Estimator(str, Enum):
    """Adversary estimator.

    Attributes:
        FIRST_SPY: Sender of the first spy observation, local knowledge.
        WARD_MATCHING: Matching under the static stem posterior.
        LINE_MATCHING: Matching under the dynamic line posterior.
        RECALL_OPTIMAL: Per-transaction argmax of the static stem posterior.
        FLOODING_WARD: Ward matching on a static flooding graph.
        FLOODING_THRESHOLD: Threshold estimator for flooding on dynamic graphs.
    """

    FIRST_SPY = "first-spy"
    WARD_MATCHING = "ward-matching"
    LINE_MATCHING = "line-matching"
    RECALL_OPTIMAL = "recall-optimal"
    FLOODING_WARD = "flooding-ward"
    FLOODING_THRESHOLD = "flooding-threshold"


_DANDELION_ESTIMATORS = {
    Estimator.WARD_MATCHING,
    Estimator.LINE_MATCHING,
    Estimator.RECALL_OPTIMAL,
}
_FLOODING_ESTIMATORS = {Estimator.FLOODING_WARD, Estimator.FLOODING_THRESHOLD}


@dataclass(frozen=True, config=STRICT_CONFIG)
class Scenario:
    """One protocol, topology and estimator combination.

    Attributes:
        protocol: Spreading protocol.
        topology: Topology kind of the protocol's graph.
        degree: Kind parameter, see ``TopologySpec``.
        estimator: Adversary estimator.
        n: Network size overriding the experiment's.
    """

    protocol: Protocol
    topology: TopologyKind
    degree: Optional[int] = Field(default=None, ge=1)
    estimator: Estimator = Estimator.FIRST_SPY
    n: Optional[int] = Field(default=None, ge=3)

    @model_validator(mode="after")
    def validate_combination(self) -> Self:
        """Validate that the estimator applies to the protocol and topology.

        Returns:
            This class instance.

        Raises:
            ValueError: If the combination is not supported.
        """
        if self.topology == TopologyKind.CUSTOM:
            raise ValueError("custom topologies are read from text and cannot be generated.")
        if self.estimator in _FLOODING_ESTIMATORS and self.protocol != Protocol.FLOODING:
            raise ValueError(f"{self.estimator.value} needs the flooding protocol.")
        if self.estimator in _DANDELION_ESTIMATORS:
            if self.protocol != Protocol.DANDELION:
                raise ValueError(f"{self.estimator.value} needs the dandelion protocol.")
            if self.topology not in _OUT_DEGREE_ONE_KINDS:
                raise ValueError(f"{self.estimator.value} needs an out-degree-one topology.")
        if self.estimator == Estimator.LINE_MATCHING and self.topology not in LINE_KINDS:
            raise ValueError("line-matching needs a cycle or spliced line.")
        return self

    @property
    def tag(self) -> str:
        """Protocol and estimator tag used in result files."""
        return f"{self.protocol.value}:{self.estimator.value}"

    def topology_spec(self, n: int) -> TopologySpec:
        """Topology of this scenario.

        Args:
            n: Experiment-wide network size, used unless the scenario sets its own.

        Returns:
            The topology spec.
        """
        return TopologySpec(kind=self.topology, n=self.n or n, degree=self.degree)


@dataclass(frozen=True, config=STRICT_CONFIG)
class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    """Validated experiment configuration.

    Attributes:
        kind: Experiment to run.
        n: Network size.
        p_values: Adversarial fractions.
        q: Stem termination probability.
        trials: Trials per point.
        seed: Base seed; drawn at random when absent.
        out: Output directory.
        workers: Worker processes for trials.
        scenarios: Scenarios for region and sweep experiments.
        bound_degree: Degree used for the flooding bound overlay.
        degree_ks: Candidate counts for degree distributions.
        degree_seeds: Graphs per candidate count.
        leakage_transactions: Transactions per leakage trial.
        tx_rate: Transactions per second for the refresh interval.
        leak_budget: Tolerated fraction of leaked interior nodes.
        oracle_instances: Random instances for the oracle check.
    """

    kind: ExperimentKind
    n: int = Field(default=1000, ge=3)
    p_values: tuple[float, ...] = (0.2,)
    q: float = Field(default=0.0, ge=0, lt=1)
    trials: int = Field(default=100, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, lt=SEED_UPPER_BOUND)
    out: Path = Path("results")
    workers: int = Field(default=1, ge=1)
    scenarios: tuple[Scenario, ...] = ()
    bound_degree: int = Field(default=4, ge=1)
    degree_ks: tuple[int, ...] = (1, 2, 3, 4)
    degree_seeds: int = Field(default=1000, ge=1)
    leakage_transactions: int = Field(default=5000, ge=1)
    tx_rate: float = Field(default=3.0, gt=0)
    leak_budget: float = Field(default=0.4, ge=0, le=1)
    oracle_instances: int = Field(default=50, ge=1)

    @model_validator(mode="after")
    def validate_experiment(self) -> Self:
        """Validate cross-field constraints.

        Returns:
            This class instance.

        Raises:
            ValueError: If p values, scenarios or kind-specific settings are invalid.
        """
        if not self.p_values:
            raise ValueError("At least one p value is required.")
        for p in self.p_values:
            if not 0 < p < 1:
                raise ValueError(f"p values must lie in (0, 1), got {p}.")
        if self.kind in (ExperimentKind.REGION, ExperimentKind.SWEEP) and not self.scenarios:
            raise ValueError(f"A {self.kind.value} experiment needs at least one scenario.")
        if self.kind == ExperimentKind.LEAKAGE and self.q == 0:
            raise ValueError("A leakage experiment needs q > 0.")
        if any(k < 1 or k >= self.n for k in self.degree_ks):
            raise ValueError(f"Candidate counts must lie in [1, n), got {self.degree_ks}.")
        self._check_scenarios()
        return self

    def _check_scenarios(self) -> None:
        """Check every scenario's topology and adversary count at every p.

        Raises:
            ValueError: If a scenario cannot be run at some p.
        """
        for scenario in self.scenarios:
            if scenario.estimator == Estimator.LINE_MATCHING and self.q > 0:
                raise ValueError("line-matching assumes q = 0.")
            try:
                spec = scenario.topology_spec(self.n)
            except ValidationError as exc:
                raise ValueError(
                    f"Scenario {scenario.tag} has an invalid topology: {exc}"
                ) from exc
            for p in self.p_values:
                if not 1 <= adversary_count(spec.n, p) <= spec.n - 1:
                    raise ValueError(f"p={p} leaves no spy or no honest node among {spec.n}.")

    @property
    def resolved_seed(self) -> int:
        """The base seed; only valid after ``resolve_seed``."""
        if self.seed is None:
            raise ValueError("The seed has not been resolved.")
        return self.seed

    def resolve_seed(self) -> "ExperimentConfig":
        """Return a copy with a random base seed when none is set.

        Returns:
            The configuration with a seed.
        """
        if self.seed is not None:
            return self
        seed = int(np.random.SeedSequence().entropy) % SEED_UPPER_BOUND
        logger.info("Using random base seed %d", seed)
        return self.from_mapping({**self.to_dict(), "seed": seed})

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible representation.

        Returns:
            The configuration as plain data.
        """
        return TypeAdapter(ExperimentConfig).dump_python(self, mode="json")

    @classmethod
    def from_mapping(
        cls, data: dict[str, Any], overrides: Optional[dict[str, Any]] = None
    ) -> Self:
        """Validate a configuration document.

        Args:
            data: Parsed document.
            overrides: Values replacing document entries; None values are ignored.

        Returns:
            The validated configuration.

        Raises:
            InvalidExperimentConfigError: If validation fails.
        """
        merged = {**data, **{k: v for k, v in (overrides or {}).items() if v is not None}}
        try:
            return TypeAdapter(cls).validate_python(merged)
        except ValidationError as exc:
            fields = get_invalid_config_fields(exc)
            logger.error("Invalid experiment configuration: %s", exc)
            raise InvalidExperimentConfigError(
                "Experiment configuration is invalid.", fields
            ) from exc

    @classmethod
    def from_file(cls, path: Path, overrides: Optional[dict[str, Any]] = None) -> Self:
        """Load and validate a JSON configuration file.

        Args:
            path: Configuration file.
            overrides: Values replacing file entries; None values are ignored.

        Returns:
            The validated configuration.

        Raises:
            InvalidExperimentConfigError: If the file cannot be read or is invalid.
        """
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidExperimentConfigError(f"Cannot read configuration {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidExperimentConfigError(f"Configuration {path} must be a JSON object.")
        return cls.from_mapping(data, overrides)

    @classmethod
    def default(cls, kind: ExperimentKind, overrides: Optional[dict[str, Any]] = None) -> Self:
        """Built-in configuration of an experiment kind.

        Args:
            kind: Experiment kind.
            overrides: Values replacing defaults; None values are ignored.

        Returns:
            The validated configuration.
        """
        return cls.from_mapping(DEFAULT_CONFIGS[kind], overrides)


def _scenario(
    protocol: Protocol,
    topology: TopologyKind,
    estimator: Estimator = Estimator.FIRST_SPY,
    degree: Optional[int] = None,
    n: Optional[int] = None,
) -> dict[str, Any]:
    scenario: dict[str, Any] = {
        "protocol": protocol.value,
        "topology": topology.value,
        "estimator": estimator.value,
    }
    if degree is not None:
        scenario["degree"] = degree
    if n is not None:
        scenario["n"] = n
    return scenario


DEFAULT_CONFIGS: dict[ExperimentKind, dict[str, Any]] = {
    ExperimentKind.REGION: {
        "kind": ExperimentKind.REGION.value,
        "n": 1000,
        "p_values": [0.2],
        "trials": 100,
        "scenarios": [
            _scenario(Protocol.DANDELION, TopologyKind.SPLICED_LINE),
            _scenario(Protocol.DANDELION, TopologyKind.SPLICED_LINE, Estimator.LINE_MATCHING),
            _scenario(
                Protocol.DANDELION,
                TopologyKind.DIRECTED_D_REGULAR_TREE,
                Estimator.WARD_MATCHING,
                degree=3,
            ),
            _scenario(Protocol.DANDELION, TopologyKind.PERFECT_D_ARY_TREE, degree=4, n=1365),
            _scenario(Protocol.DIFFUSION, TopologyKind.RANDOM_REGULAR),
            _scenario(Protocol.FLOODING, TopologyKind.D_REGULAR, Estimator.FLOODING_WARD, 4),
            _scenario(Protocol.DIFFUSION_BY_PROXY, TopologyKind.CYCLE),
        ],
    },
    ExperimentKind.SWEEP: {
        "kind": ExperimentKind.SWEEP.value,
        "n": 1000,
        "p_values": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45],
        "trials": 200,
        "scenarios": [
            _scenario(Protocol.DANDELION, TopologyKind.SPLICED_LINE),
            *(
                _scenario(Protocol.DANDELION, TopologyKind.K_APPROX_LINE, degree=k)
                for k in (1, 2, 3, 4)
            ),
        ],
    },
    ExperimentKind.DEGREE_DIST: {
        "kind": ExperimentKind.DEGREE_DIST.value,
        "n": 1000,
        "degree_ks": [1, 2, 3, 4],
        "degree_seeds": 1000,
    },
    ExperimentKind.LEAKAGE: {
        "kind": ExperimentKind.LEAKAGE.value,
        "n": 1000,
        "p_values": [0.15],
        "q": 0.1,
        "trials": 20,
        "leakage_transactions": 5000,
        "tx_rate": 3.0,
        "leak_budget": 0.4,
    },
    ExperimentKind.ORACLE_CHECK: {
        "kind": ExperimentKind.ORACLE_CHECK.value,
        "n": 8,
        "oracle_instances": 50,
    },
}


@dataclass(frozen=True)
class PointRecord:
    """Reproduction record of one result point.

    Attributes:
        index: Point index in the seed derivation.
        label: Human readable point description.
        trial_seeds: Seed of every trial.
        wall_clock_seconds: Time spent on the point.
    """

    index: int
    label: str
    trial_seeds: tuple[int, ...]
    wall_clock_seconds: float


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run.

    Attributes:
        config: Resolved configuration.
        points: Per-point records.
        outputs: Files written, relative to the output directory.
        software_version: Version of this simulator.
    """

    config: dict[str, Any]
    points: tuple[PointRecord, ...]
    outputs: tuple[str, ...]
    software_version: str = SOFTWARE_VERSION

    def to_json(self) -> str:
        """Render the manifest as JSON.

        Returns:
            Indented JSON text.
        """
        data = TypeAdapter(RunManifest).dump_python(self, mode="json")
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
