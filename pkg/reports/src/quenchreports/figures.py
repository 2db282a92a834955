"""Figure rendering, one SVG per recognized bundle.

Closed-form overlay curves are parameterized by the manifest's `overlay`
object and evaluated through a small registry keyed by overlay id; nothing
physical is recomputed here.  Figures are byte-stable: a fixed SVG hash
salt and suppressed Date metadata.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import Bundle, SchemaError

HASH_SALT = "quenchlab-reports"

# Overlay id -> callable(params) -> (label, value). Values are scalars
# evaluated from the manifest parameters; curves over a row column are
# handled per-figure below.
OVERLAYS = {
    "weight-decay": lambda p: (
        f"exp(-rho n / 4T), n={int(p['n'])}",
        math.exp(-float(p["rho"]) * float(p["n"]) / (4.0 * float(p["T"]))),
    ),
}


def _overlay_value(manifest: dict):
    overlay = manifest.get("overlay")
    if overlay is None:
        return None
    oid = overlay.get("id")
    if oid not in OVERLAYS:
        raise SchemaError(f"unknown overlay id {oid!r}")
    return OVERLAYS[oid](overlay)


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, f"{name}.svg")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _fig_stability(bundle: Bundle, out_dir: str) -> str:
    rows = bundle.rows
    eps = [r["epsilon"] for r in rows]
    p = [r["p_hat"] for r in rows]
    lo = [max(r["p_hat"] - r["ci_lo"], 0.0) for r in rows]
    hi = [max(r["ci_hi"] - r["p_hat"], 0.0) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(eps, p, yerr=[lo, hi], fmt="o-", capsize=3, label="p_hat")
    overlay = _overlay_value(bundle.manifest)
    if overlay is not None:
        label, value = overlay
        ax.axhline(value, ls="--", color="C3", label=label)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("event probability")
    ax.set_title(f"event {rows[0]['event']}, T={rows[0]['T']}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "stability-estimate")


def _fig_tail(bundle: Bundle, out_dir: str) -> str:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_key: dict[tuple, list] = {}
    for r in bundle.rows:
        by_key.setdefault((r["statistic"], r["epsilon"]), []).append(r)
    for (stat, eps), rows in sorted(by_key.items()):
        rows.sort(key=lambda r: r["lambda"])
        lam = [r["lambda"] for r in rows]
        ax.plot(lam, [r["empirical"] for r in rows], "o-",
                label=f"{stat} eps={eps}")
        ax.fill_between(lam, [r["ci_lo"] for r in rows],
                        [r["ci_hi"] for r in rows], alpha=0.2)
        ax.plot(lam, [r["bound"] for r in rows], "--", label="bound")
        ax.plot(lam, [r["bound_small_eps"] for r in rows], ":",
                label="bound (variance proxy)")
    ax.set_yscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel("tail probability")
    ax.legend(loc="best", fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir, "tail-probe")


def _fig_mcmc(bundle: Bundle, out_dir: str) -> str:
    cells: dict[tuple, list] = {}
    for r in bundle.rows:
        cells.setdefault((r["T"], r["epsilon"]), []).append(r["agreement"])
    ts = sorted({t for t, _ in cells})
    es = sorted({e for _, e in cells})
    grid = np.full((len(es), len(ts)), np.nan)
    for (t, e), vals in cells.items():
        grid[es.index(e), ts.index(t)] = float(np.mean(vals))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    mesh = ax.imshow(grid, origin="lower", aspect="auto", vmin=0.0, vmax=1.0,
                     cmap="viridis")
    ax.set_xticks(range(len(ts)), [f"{t:g}" for t in ts])
    ax.set_yticks(range(len(es)), [f"{e:g}" for e in es])
    if len(ts) >= 2 and len(es) >= 2:
        ax.contour(grid, levels=[0.5], colors="w", linewidths=1.5)
    else:
        for (i, j), v in np.ndenumerate(grid):
            ax.text(j, i, f"{v:.2f}", ha="center", va="center", color="w")
    fig.colorbar(mesh, ax=ax, label="mean agreement (0.5 contour in white)")
    ax.set_xlabel("T")
    ax.set_ylabel("epsilon")
    fig.tight_layout()
    return _save(fig, out_dir, "mcmc")


def _fig_audit(bundle: Bundle, out_dir: str) -> str:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    constants = bundle.manifest.get("measured_constants", {})
    names = sorted({r["constant_name"] for r in bundle.rows})
    for i, name in enumerate(names):
        rows = [r for r in bundle.rows if r["constant_name"] == name]
        ax.scatter([r["l"] + 0.1 * i for r in rows],
                   [r["ratio"] for r in rows], s=8, label=name)
        if name in constants:
            ax.axhline(constants[name], color=f"C{i}", ls="--", lw=0.8)
    ax.set_xlabel("level l")
    ax.set_ylabel("lhs / rhs (dashed: measured constant)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "coarsegrain-audit")


def _fig_counts(bundle: Bundle, out_dir: str) -> str:
    rows = sorted(bundle.rows, key=lambda r: r["n"])
    n = [r["n"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(n, [r["count"] + 1.0 for r in rows], "o-", label="count + 1")
    ax.plot(n, [r["bound"] for r in rows], "--", label="ceiling")
    ax.set_yscale("log")
    ax.set_xlabel("support size n")
    ax.set_ylabel("anchored classes")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "count-contours")


def _fig_polymer(bundle: Bundle, out_dir: str) -> str:
    rows = sorted(bundle.rows, key=lambda r: r["epsilon"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([r["epsilon"] for r in rows],
            [max(r["rel_err"], 1e-18) for r in rows], "o-", label="rel err")
    ax.axhline(1e-10, ls="--", color="C3", label="tolerance 1e-10")
    ax.set_yscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("identity relative error")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "polymer-verify")


def _fig_peierls(bundle: Bundle, out_dir: str) -> str:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for i, r in enumerate(bundle.rows):
        measured = r["measured_rho"]
        if isinstance(measured, float) and math.isfinite(measured):
            ax.bar(i - 0.2, measured, width=0.4, color="C0",
                   label="measured" if i == 0 else None)
        ax.bar(i + 0.2, r["declared_rho"], width=0.4, color="C1",
               label="declared" if i == 0 else None)
    ax.set_xticks(range(len(bundle.rows)),
                  [r["model"] for r in bundle.rows])
    ax.set_ylabel("excitation / weight ratio")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "peierls-scan")


_RENDERERS = {
    "stability-estimate": _fig_stability,
    "tail-probe": _fig_tail,
    "mcmc": _fig_mcmc,
    "coarsegrain-audit": _fig_audit,
    "count-contours": _fig_counts,
    "polymer-verify": _fig_polymer,
    "peierls-scan": _fig_peierls,
    # symmetry-verify carries booleans only; it appears in the summary table.
}


def render_figures(bundles: list[Bundle], out_dir: str) -> list[str]:
    """One figure per bundle with a renderer; returns written paths."""
    plt.rcParams["svg.hashsalt"] = HASH_SALT
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for bundle in bundles:
        renderer = _RENDERERS.get(bundle.subcommand)
        if renderer is not None:
            written.append(renderer(bundle, out_dir))
    return written
