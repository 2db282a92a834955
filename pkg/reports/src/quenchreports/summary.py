"""Pass/fail summary table from validated bundles.

Each check replays a documented acceptance condition on the already-
computed CSV values; nothing is recomputed from model definitions.
"""

from __future__ import annotations

import math

from .schemas import Bundle


def _check_polymer(rows):
    worst = max(r["rel_err"] for r in rows)
    return worst <= 1e-10, f"max rel err {worst:.2e} <= 1e-10"


def _check_peierls(rows):
    ok = all(
        not isinstance(r["declared_rho"], float)
        or r["measured_rho"] >= r["declared_rho"] - 1e-12
        for r in rows
    )
    return ok, "measured ratio >= declared for every model"


def _check_stability(rows):
    rows = sorted(rows, key=lambda r: r["epsilon"])
    p = [r["p_hat"] for r in rows]
    ok = all(a >= b - 1e-12 for a, b in zip(p, p[1:]))
    return ok, f"p_hat nonincreasing in epsilon: {p}"


def _check_tail(rows):
    ok = all(
        r["empirical"] <= r["bound"] + 3.0 * (r["ci_hi"] - r["ci_lo"])
        for r in rows
    )
    return ok, "empirical tails within bound + 3 CI widths"


def _check_counts(rows):
    ok = all(r["count"] <= r["bound"] for r in rows)
    return ok, "every count within the combinatorial ceiling"


def _check_audit(rows, manifest):
    constants = manifest.get("measured_constants", {})
    ok = bool(constants) and all(
        isinstance(v, (int, float)) and math.isfinite(v)
        for v in constants.values()
    )
    return ok, f"measured constants finite: {constants}"


def _check_symmetry(rows):
    conds = ("locality", "injectivity", "energy", "regularity", "measure")
    ok = all(str(r[c]) == "True" for r in rows for c in conds)
    return ok, "all five transform conditions hold"


def _check_mcmc(rows):
    above = sum(r["agreement"] > 0.5 for r in rows)
    ok = above >= 0.9 * len(rows)
    return ok, f"agreement > 0.5 in {above}/{len(rows)} draws"


def summarize(bundles: list[Bundle]) -> str:
    """Markdown pass/fail table over all recognized bundles."""
    lines = [
        "# Run summary",
        "",
        "| output | check | status |",
        "| --- | --- | --- |",
    ]
    for bundle in bundles:
        sub = bundle.subcommand
        if sub == "polymer-verify":
            ok, note = _check_polymer(bundle.rows)
        elif sub == "peierls-scan":
            ok, note = _check_peierls(bundle.rows)
        elif sub == "stability-estimate":
            ok, note = _check_stability(bundle.rows)
        elif sub == "tail-probe":
            ok, note = _check_tail(bundle.rows)
        elif sub == "count-contours":
            ok, note = _check_counts(bundle.rows)
        elif sub == "coarsegrain-audit":
            ok, note = _check_audit(bundle.rows, bundle.manifest)
        elif sub == "symmetry-verify":
            ok, note = _check_symmetry(bundle.rows)
        elif sub == "mcmc":
            ok, note = _check_mcmc(bundle.rows)
        else:
            continue
        status = "PASS" if ok else "FAIL"
        lines.append(f"| `{sub}` | {note} | {status} |")
    lines.append("")
    return "\n".join(lines)
