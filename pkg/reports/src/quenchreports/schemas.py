"""Input discovery and schema validation for experiment-runner outputs.

One manifest JSON per run plus one CSV per manifest `outputs` entry.
Column sets are fixed here to match the producer's documented schemas
(docs/schemas.md in the producer repo); any drift fails loudly with the
offending column named.
"""

from __future__ import annotations

import csv
import glob
import json
import os
from dataclasses import dataclass, field


class SchemaError(ValueError):
    """Raised with the offending column or key named in the message."""


class NoDataError(ValueError):
    """Raised when an input CSV has a header but no rows, or nothing is found."""


# Required columns per subcommand, before the appended (seed, config_hash).
REQUIRED_COLUMNS = {
    "peierls-scan": [
        "model", "n_max", "measured_rho", "declared_rho",
        "witness_size", "witness_weight",
    ],
    "polymer-verify": [
        "epsilon", "T", "L", "log_xi_direct", "log_xi_polymer", "rel_err",
    ],
    "stability-estimate": [
        "event", "epsilon", "T", "n_max", "trials", "p_hat", "ci_lo",
        "ci_hi", "seed",
    ],
    "coarsegrain-audit": [
        "instance_id", "l", "lhs", "rhs", "ratio", "constant_name",
    ],
    "count-contours": ["n", "count", "bound"],
    "tail-probe": [
        "statistic", "epsilon", "lambda", "empirical", "bound",
        "bound_small_eps", "ci_lo", "ci_hi",
    ],
    "symmetry-verify": [
        "kind", "k1", "k2", "locality", "injectivity", "energy",
        "regularity", "measure",
    ],
    "mcmc": ["draw", "T", "epsilon", "agreement", "tau_est"],
}

APPENDED_COLUMNS = ["seed", "config_hash"]

MANIFEST_KEYS = ["subcommand", "seed", "config_hash", "outputs"]


@dataclass
class Bundle:
    """One run: its manifest and the parsed rows of its CSV."""

    subcommand: str
    manifest: dict
    rows: list = field(default_factory=list)
    csv_path: str = ""


def _coerce(value: str):
    try:
        return float(value)
    except ValueError:
        return value


def load_table(path: str, subcommand: str) -> list[dict]:
    """Parse and validate one CSV against the subcommand's schema."""
    if subcommand not in REQUIRED_COLUMNS:
        raise SchemaError(f"unknown subcommand {subcommand!r}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS[subcommand] + APPENDED_COLUMNS:
            if col not in header:
                raise SchemaError(
                    f"{os.path.basename(path)}: missing column {col!r}"
                )
        rows = [{k: _coerce(v) for k, v in row.items()} for row in reader]
    if not rows:
        raise NoDataError(f"{os.path.basename(path)}: no data rows")
    return rows


def load_manifest(path: str) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    for key in MANIFEST_KEYS:
        if key not in manifest:
            raise SchemaError(
                f"{os.path.basename(path)}: missing manifest key {key!r}"
            )
    return manifest


def discover(in_dir: str) -> list[Bundle]:
    """All (manifest, CSV) bundles under a directory, schema-validated."""
    manifests = sorted(glob.glob(os.path.join(in_dir, "*.manifest.json")))
    if not manifests:
        raise NoDataError(f"no manifest files found in {in_dir}")
    bundles = []
    for mpath in manifests:
        manifest = load_manifest(mpath)
        sub = manifest["subcommand"]
        for name in manifest["outputs"]:
            cpath = os.path.join(in_dir, name)
            bundles.append(Bundle(sub, manifest, load_table(cpath, sub), cpath))
    return bundles
