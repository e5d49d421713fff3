# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Sphinx configuration for the broadcast anonymity simulator documentation."""

import datetime
import os

project = "Broadcast Anonymity Simulator"
author = "Canonical Ltd."
copyright = f"{datetime.date.today().year}"
version = f"{os.environ.get('READTHEDOCS_VERSION', 'local')}"
html_title = project + " documentation"

html_context = {
    "author": author,
    "repo_default_branch": "main",
    "repo_folder": "/docs/",
    "display_contributors": False,
}

extensions = [
    "canonical_sphinx",
    "sphinx_design",
    "sphinxcontrib.mermaid",
    "sphinx_last_updated_by_git",
]

html_extra_path = ["config.schema.json"]

exclude_patterns = [
    ".venv*",
]

linkcheck_ignore = [
    "http://127.0.0.1:8000",
]
linkcheck_retries = 3
