"""Experiment runner: config parsing, subcommand dispatch, CSV/JSON output.

Exit codes: 0 success, 1 failed internal assertion (the message names the
invariant), 2 config error (the message names the key path), 3 enumeration
budget exceeded.  All files are written atomically (temp file + rename) and
every run emits one CSV plus a JSON manifest carrying the parameters, seed,
config hash, package versions, and wall time.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np
import scipy

from . import __version__
from .geometry import EnumerationBudgetError, Region, cube
from .disorder import (
    DistributionSpec,
    ParameterError,
    sample_omega,
    statistic_library,
    tail_probe,
)
from .models import ModelError, build_eta, model_from_declaration

EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    """Raised with the offending key path in the message."""


class AssertionFailure(RuntimeError):
    """Raised with the violated invariant's name in the message."""


_SCHEMA = {
    "model": {"model", "d", "J", "Q", "mu", "gamma", "delta", "lattice_graph"},
    "disorder": {"kind", "epsilon", "epsilons"},
    "geometry": {"d", "L", "n_max", "n", "levels", "count", "grow_max"},
    "sampler": {"T", "sweeps", "burn_in", "draws", "frozen_depth"},
    "run": {
        "subcommand", "seed", "T", "trials", "event", "k", "kind",
        "statistic", "lambda_grid", "n_coords", "budget", "rho",
    },
}


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    for table, keys in cfg.items():
        if table not in _SCHEMA:
            raise ConfigError(f"unknown config table {table!r}")
        if not isinstance(keys, dict):
            raise ConfigError(f"config table {table!r} must be a table")
        for key in keys:
            if key not in _SCHEMA[table]:
                raise ConfigError(f"unknown config key {table}.{key}")
    if "model" in cfg and "model" not in cfg["model"]:
        raise ConfigError("missing config key model.model")


def require(cfg: dict, table: str, key: str, default=None):
    if table not in cfg:
        if default is not None:
            return default
        raise ConfigError(f"missing config table {table!r}")
    if key not in cfg[table]:
        if default is not None:
            return default
        raise ConfigError(f"missing config key {table}.{key}")
    return cfg[table][key]


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def derive_seed(root: int, label: str) -> int:
    h = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(h[:8], "big") % (2**63)


def atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: str, rows: list[dict], columns: list[str]) -> None:
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in columns})
    atomic_write_text(path, buf.getvalue())


def write_manifest(out_dir: str, name: str, cfg: dict, seed: int,
                   outputs: list[str], started: float, extra: dict) -> None:
    manifest = {
        "subcommand": name,
        "parameters": cfg,
        "seed": seed,
        "config_hash": config_hash(cfg),
        "versions": {
            "quenchlab": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": round(time.time() - started, 3),
        "outputs": outputs,
    }
    manifest.update(extra)
    atomic_write_text(
        os.path.join(out_dir, f"{name}.manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
    )


def _epsilons(cfg: dict) -> list[float]:
    dis = cfg.get("disorder", {})
    if "epsilons" in dis:
        return list(dis["epsilons"])
    return [dis.get("epsilon", 0.0)]


def _dist(cfg: dict, eps: float) -> DistributionSpec:
    return DistributionSpec(require(cfg, "disorder", "kind", "gaussian"), eps)


def _model(cfg: dict):
    return model_from_declaration(require(cfg, "model", "model") and cfg["model"])


# ---------------------------------------------------------------------------
# Subcommands: each returns (rows, columns, extra-manifest dict)


def cmd_peierls_scan(cfg, seed, budget):
    from .models import peierls_scan, peierls_weight_size

    model = _model(cfg)
    n_max = require(cfg, "geometry", "n_max")
    try:
        measured, witness = peierls_scan(model, n_max, budget=budget)
    except ModelError:
        raise AssertionFailure("peierls-ratio") from None
    rows = [
        {
            "model": model.name,
            "n_max": n_max,
            "measured_rho": measured,
            "declared_rho": model.declared_rho,
            "witness_size": len(witness.support) if witness else 0,
            "witness_weight": peierls_weight_size(model, witness) if witness else 0,
        }
    ]
    cols = ["model", "n_max", "measured_rho", "declared_rho", "witness_size",
            "witness_weight"]
    if witness and model.declared_rho is not None:
        if measured < model.declared_rho - 1e-12:
            raise AssertionFailure("peierls-ratio")
    return rows, cols, {"measured_rho": measured}


def cmd_polymer_verify(cfg, seed, budget):
    from .polymer import polymer_identity_check

    model = _model(cfg)
    L = require(cfg, "geometry", "L")
    T = require(cfg, "run", "T", 1.0)
    k = require(cfg, "run", "k", 0)
    reg = cube(L, model.dimension)
    rows = []
    worst = 0.0
    for eps in _epsilons(cfg):
        omega = sample_omega(
            _dist(cfg, eps), reg, 3, derive_seed(seed, f"polymer:{eps}"),
            max(1, model.n_beta),
        )
        eta = build_eta(model, omega)
        direct, gas = polymer_identity_check(model, eta, reg, k, T, budget=budget)
        rel = abs(direct - gas) / max(1.0, abs(direct))
        worst = max(worst, rel)
        rows.append(
            {
                "epsilon": eps,
                "T": T,
                "L": L,
                "log_xi_direct": repr(direct),
                "log_xi_polymer": repr(gas),
                "rel_err": repr(rel),
            }
        )
    cols = ["epsilon", "T", "L", "log_xi_direct", "log_xi_polymer", "rel_err"]
    if worst > 1e-10:
        raise AssertionFailure("polymer-identity")
    return rows, cols, {"max_rel_err": worst}


def cmd_stability_estimate(cfg, seed, budget):
    from .stability import event_probability_rows

    model = _model(cfg)
    event = require(cfg, "run", "event", "fsc")
    n_max = require(cfg, "geometry", "n_max")
    trials = require(cfg, "run", "trials")
    T = require(cfg, "run", "T", 1.0)
    kind = require(cfg, "disorder", "kind", "gaussian")
    rho = cfg.get("run", {}).get("rho")
    rows = event_probability_rows(
        event, model, kind, _epsilons(cfg), n_max, trials, T, seed,
        rho=rho, budget=budget,
    )
    cols = ["event", "epsilon", "T", "n_max", "trials", "p_hat", "ci_lo",
            "ci_hi", "seed"]
    rho_eff = rho if rho is not None else model.declared_rho
    extra = {
        "truncation": f"contour family truncated at n_max={n_max}",
        "overlay": {
            "id": "weight-decay",
            "expr": "exp(-rho * n / (4 * T))",
            "rho": rho_eff,
            "T": T,
            "n": n_max,
        },
    }
    return rows, cols, extra


def cmd_coarsegrain_audit(cfg, seed, budget):
    from .coarsegrain import audit_geometry, measured_constants, random_region_suite

    d = require(cfg, "geometry", "d")
    count = require(cfg, "geometry", "count", 100)
    levels = require(cfg, "geometry", "levels", 4)
    grow_max = require(cfg, "geometry", "grow_max", 40)
    suite = random_region_suite(count, d, seed, grow_max)
    rows = audit_geometry(suite, levels)
    constants = measured_constants(rows)
    if any(not np.isfinite(v) for v in constants.values()):
        raise AssertionFailure("audit-finite-constants")
    cols = ["instance_id", "l", "lhs", "rhs", "ratio", "constant_name"]
    return rows, cols, {"measured_constants": constants}


def cmd_count_contours(cfg, seed, budget):
    from .contours import contour_count_bound, enumerate_contours_up_to

    model = _model(cfg)
    n_max = require(cfg, "geometry", "n_max")
    by_size = enumerate_contours_up_to(model, n_max, anchored=True, budget=budget)
    rows = []
    for n in range(1, n_max + 1):
        count = len(by_size.get(n, ()))
        bound = contour_count_bound(n, model.dimension, max(model.n_spin, 2))
        if count > bound:
            raise AssertionFailure("contour-count-bound")
        rows.append({"n": n, "count": count, "bound": repr(bound)})
    return rows, ["n", "count", "bound"], {}


def cmd_tail_probe(cfg, seed, budget):
    stats = statistic_library()
    name = require(cfg, "run", "statistic", "sum")
    if name not in stats:
        raise ConfigError(f"unknown run.statistic {name!r}")
    n = require(cfg, "run", "n_coords", 100)
    trials = require(cfg, "run", "trials")
    lam_grid = require(cfg, "run", "lambda_grid")
    rows_out = []
    for eps in _epsilons(cfg):
        rows = tail_probe(stats[name], _dist(cfg, eps), n, lam_grid, trials,
                          derive_seed(seed, f"tail:{eps}"))
        for r in rows:
            r["epsilon"] = eps
            r["statistic"] = name
            if r["empirical"] > r["bound"] + 3 * (r["ci_hi"] - r["ci_lo"]):
                raise AssertionFailure("tail-bound")
            rows_out.append(r)
    cols = ["statistic", "epsilon", "lambda", "empirical", "bound",
            "bound_small_eps", "ci_lo", "ci_hi"]
    return rows_out, cols, {}


def cmd_symmetry_verify(cfg, seed, budget):
    from .symmetry import make_transform, verify_local_symmetry

    model = _model(cfg)
    kind = require(cfg, "run", "kind")
    L = require(cfg, "geometry", "L", 4)
    trials = require(cfg, "run", "trials", 3)
    eps = _epsilons(cfg)[0]
    pair = make_transform(model, kind)
    report = verify_local_symmetry(
        pair, model, cube(L, model.dimension), trials, seed,
        dist=_dist(cfg, eps) if eps else None,
    )
    for cond in ("locality", "injectivity", "energy", "regularity", "measure"):
        if not report[cond]:
            raise AssertionFailure(f"symmetry-{cond}")
    row = {"kind": kind, "k1": pair.k1, "k2": pair.k2, **report}
    cols = list(row)
    return [row], cols, {"report": report}


def cmd_mcmc(cfg, seed, budget):
    from .sampler import agreement_over_draws

    model = _model(cfg)
    L = require(cfg, "geometry", "L")
    T = require(cfg, "sampler", "T")
    sweeps = require(cfg, "sampler", "sweeps")
    burn_in = require(cfg, "sampler", "burn_in")
    draws = require(cfg, "sampler", "draws")
    frozen = require(cfg, "sampler", "frozen_depth", 2)
    eps = _epsilons(cfg)[0]
    rows = agreement_over_draws(
        model, _dist(cfg, eps), L, 0, T, sweeps, burn_in, draws, seed,
        frozen_depth=frozen,
    )
    return rows, ["draw", "T", "epsilon", "agreement", "tau_est"], {}


_COMMANDS = {
    "peierls-scan": cmd_peierls_scan,
    "polymer-verify": cmd_polymer_verify,
    "stability-estimate": cmd_stability_estimate,
    "coarsegrain-audit": cmd_coarsegrain_audit,
    "count-contours": cmd_count_contours,
    "tail-probe": cmd_tail_probe,
    "symmetry-verify": cmd_symmetry_verify,
    "mcmc": cmd_mcmc,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="quenchlab", description="contour-stability experiment runner"
    )
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="TOML config path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--budget", type=int, default=2_000_000,
                        help="enumeration budget in states")
    args = parser.parse_args(argv)
    started = time.time()
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else require(cfg, "run", "seed", 0)
        os.makedirs(args.out, exist_ok=True)
        rows, cols, extra = _COMMANDS[args.subcommand](cfg, seed, args.budget)
        for row in rows:
            row.setdefault("seed", seed)
            row["config_hash"] = config_hash(cfg)
        cols = cols + [c for c in ("seed", "config_hash") if c not in cols]
        csv_path = os.path.join(args.out, f"{args.subcommand}.csv")
        write_csv(csv_path, rows, cols)
        extra["threads"] = args.threads
        write_manifest(args.out, args.subcommand, cfg, seed,
                       [os.path.basename(csv_path)], started, extra)
    except (ConfigError, ParameterError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnumerationBudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except AssertionFailure as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    return 0


if __name__ == "__main__":
    sys.exit(main())
