# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Detection-region figures from result CSVs."""

import csv
import io
import logging
from pathlib import Path
from typing import Optional

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from helpers import atomic_write_text
from metrics import POINT_COLUMNS
from theory import BOUND_COLUMNS

matplotlib.use("Agg")

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "detection-region"
_CURVE = np.linspace(0.0, 1.0, 201)


class InvalidCsvSchemaError(Exception):
    """Exception raised when a result CSV lacks a required column."""


def read_rows(path: Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    """Read a CSV file and check its header.

    Args:
        path: The file.
        columns: Required columns.

    Returns:
        The rows.

    Raises:
        InvalidCsvSchemaError: If a required column is missing.
    """
    with path.open(encoding="utf-8", newline="") as source:
        reader = csv.DictReader(source)
        present = reader.fieldnames or []
        for column in columns:
            if column not in present:
                raise InvalidCsvSchemaError(f"{path} is missing column '{column}'.")
        return list(reader)


def _adversary_fraction(
    points: list[dict[str, str]], bounds: list[dict[str, str]], p: Optional[float]
) -> Optional[float]:
    if p is not None:
        return p
    for row in bounds:
        return float(row["p"])
    for row in points:
        return float(row["p"])
    return None


def render_svg(
    points: list[dict[str, str]], bounds: list[dict[str, str]], p: Optional[float] = None
) -> str:
    """Render detection points over the feasible region.

    Recall is on the x axis and precision on the y axis. Every estimator lies
    between D = R and D = R^2; the corner above recall p and precision p^2 that the
    optimal estimator reaches is shaded.

    Args:
        points: Rows of a points CSV.
        bounds: Rows of a bounds CSV.
        p: Adversarial fraction for the shaded corner; read from the CSVs when absent.

    Returns:
        SVG text.
    """
    figure = Figure(figsize=(6, 6))
    axes = figure.add_subplot()
    axes.plot(_CURVE, _CURVE, color="black", linewidth=1, label="D = R")
    axes.plot(_CURVE, _CURVE**2, color="black", linewidth=1, linestyle="--", label="D = R²")
    fraction = _adversary_fraction(points, bounds, p)
    if fraction is not None:
        corner = _CURVE[_CURVE >= fraction]
        axes.fill_between(
            corner,
            np.maximum(corner**2, fraction**2),
            corner,
            color="tab:gray",
            alpha=0.3,
            label=f"R ≥ {fraction:g}, D ≥ {fraction**2:g}",
        )
    for row in bounds:
        if fraction is not None and not np.isclose(float(row["p"]), fraction):
            continue
        value = float(row["value"])
        style = {"linewidth": 0.8, "linestyle": ":", "alpha": 0.7}
        if "recall" in row["bound_name"]:
            axes.axvline(value, **style)
        else:
            axes.axhline(value, **style)
        axes.annotate(row["bound_name"], (0.01, value), fontsize=6)
    for row in points:
        axes.errorbar(
            float(row["recall"]),
            float(row["precision"]),
            xerr=2 * float(row["recall_se"]),
            yerr=2 * float(row["precision_se"]),
            marker="o",
            markersize=4,
            capsize=2,
            label=f"{row['protocol']} ({row['topology']})",
        )
    axes.set_xlim(0, 1)
    axes.set_ylim(0, 1)
    axes.set_xlabel("Recall")
    axes.set_ylabel("Precision")
    axes.legend(fontsize=6, loc="upper left")
    axes.grid(True, alpha=0.3)
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def emit_svg(
    points_csv: Optional[Path], bounds_csv: Optional[Path], out: Path, p: Optional[float] = None
) -> None:
    """Render result CSVs into a standalone SVG file.

    The output is byte-identical for identical inputs.

    Args:
        points_csv: Detection points; None for a bounds-only figure.
        bounds_csv: Bound overlay; None to omit.
        out: Destination SVG.
        p: Adversarial fraction for the shaded corner.
    """
    points = read_rows(points_csv, POINT_COLUMNS) if points_csv else []
    bounds = read_rows(bounds_csv, BOUND_COLUMNS) if bounds_csv else []
    atomic_write_text(out, render_svg(points, bounds, p))
    logger.info("Wrote %s with %d points", out, len(points))
