# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Helper methods shared by the simulator modules."""

import logging
import os
import tempfile
from pathlib import Path

import numpy as np
from pydantic import ValidationError

logger = logging.getLogger(__name__)

SEED_UPPER_BOUND = 2**63


def derive_seed(*entropy: int) -> int:
    """Derive a 63-bit integer seed from a tuple of integers.

    The derivation goes through ``numpy.random.SeedSequence`` so that distinct
    tuples give statistically independent streams.

    Args:
        entropy: Integers identifying the stream, e.g. base seed, point and trial index.

    Returns:
        A non-negative integer below 2**63.
    """
    state = np.random.SeedSequence(list(entropy)).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def atomic_write_text(path: Path, content: str) -> None:
    """Write a text file so that readers never observe a partial file.

    Args:
        path: Destination file.
        content: Text to write.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as tmp:
            tmp.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug("Wrote %s", path)


def get_invalid_config_fields(exc: ValidationError) -> list[str]:
    """Return the top-level field names that failed pydantic validation.

    Only the first element of each error's ``loc`` tuple is kept, so nested
    type paths (e.g. for list items) are collapsed to their parent field.
    Results are de-duplicated while preserving order.

    Args:
        exc: The validation error exception.

    Returns:
        list[str]: De-duplicated top-level field names that failed validation.
    """
    error_fields: list[str] = []
    for error in exc.errors():
        if not error["loc"]:
            continue
        field = str(error["loc"][0])
        if field not in error_fields:
            error_fields.append(field)
    return error_fields
