"""The three per-contour stability events and their Monte Carlo frequency.

For a contour C with exterior label k (Peierls constant rho, threshold
rho |sC| / 4):

  fsc  : the random fields move the excitation cost of C by at most the
         threshold (two-sided),
  qisc : the field mass on the innermost interior ring, before and after
         the interior symmetry transform, is at most the threshold,
  fsir : transforming the quenched parameters on Int C moves the free
         energy on a neighborhood of C by at most the threshold
         (one-sided, exactly as defined).

The quenched transform acts on omega first and the fields are rebuilt,
never on the fields directly.  Event probabilities quantify over all
anchored contours up to a support-size cutoff (a lower truncation of the
full family; tail sizes are exponentially suppressed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Region, internal_margin, thicken
from .disorder import (
    DistributionSpec,
    ParameterError,
    QuenchedConfig,
    wilson_interval,
)
from .models import ModelError, ModelInstance, build_eta, unperturbed_gap
from .contours import Contour, enumerate_contours_up_to
from .polymer import excitation_cost, log_partition_function
from .symmetry import SymmetryPair, boundary_field_sum, transform_for


@dataclass(frozen=True)
class StabilityReport:
    contour: Contour
    fsc: bool
    qisc: bool
    fsir: bool
    fsc_margin: float
    qisc_margin: float
    fsir_margin: float
    rho: float
    threshold: float


@dataclass(frozen=True)
class FreeEnergyDelta:
    value: float
    reg: Region
    reg_prime: Region
    k: int
    transform_kind: str
    T: float


def _rho(model: ModelInstance, rho: float | None) -> float:
    if rho is not None:
        return rho
    if model.declared_rho is None:
        raise ModelError(f"{model.name} declares no Peierls constant")
    return model.declared_rho


def footprint(c: Contour) -> Region:
    return c.support.union(c.interior_union())


def access_window(c: Contour) -> Region:
    """All sites the event computations may read: the contour footprint
    plus a depth-2 external margin."""
    return thicken(footprint(c), 2)


def restrict_omega(model: ModelInstance, omega: QuenchedConfig, window: Region) -> QuenchedConfig:
    """Copy of omega holding exactly the base-lattice sites of the window."""
    base = window if model.blocking is None else model.blocking.unblock_region(window)
    n_beta = max(1, model.n_beta)
    values = {(b, s): omega.get(b, s) for s in base for b in range(n_beta)}
    return QuenchedConfig(values, omega.seed, omega.spec)


def interior_transform(model: ModelInstance, c: Contour) -> list:
    """Per-hole symmetry pairs (hole label -> exterior label), identity
    components omitted."""
    return [
        (transform_for(model, k, c.label), hole)
        for k, hole in sorted(c.interiors.items())
        if k != c.label and len(hole)
    ]


def apply_interior_transform(model, c: Contour, omega: QuenchedConfig) -> QuenchedConfig:
    for pair, hole in interior_transform(model, c):
        omega = pair.apply_omega(omega, hole)
    return omega


def fsc_quantity(model, eta, c: Contour, gap0: float | None = None) -> float:
    """|D_eta(C) - D_0(C)|: the field-induced shift of the excitation cost."""
    if gap0 is None:
        gap0 = unperturbed_gap(model, c)
    return abs(excitation_cost(model, eta, c) - gap0)


def qisc_quantity(model, c: Contour, omega: QuenchedConfig) -> float:
    """Field mass |eta| + |transformed eta| on the innermost interior ring."""
    ring = internal_margin(c.interior_union(), 1)
    if not len(ring):
        return 0.0
    eta = build_eta(model, omega)
    tau_eta = build_eta(model, apply_interior_transform(model, c, omega))
    return boundary_field_sum(eta, tau_eta, ring)


def free_energy_delta(
    model: ModelInstance,
    omega: QuenchedConfig,
    reg: Region,
    reg_prime: Region,
    k: int,
    transform,
    T: float,
    budget: int = 2_000_000,
) -> FreeEnergyDelta:
    """T (ln Z under eta(transformed omega) - ln Z under eta(omega)) on reg.

    transform is a symmetry pair, a list of (pair, region) components, or
    None for the identity; pairs act on omega over reg_prime.
    """
    if transform is None:
        parts: list = []
    elif isinstance(transform, SymmetryPair):
        parts = [(transform, reg_prime)]
    else:
        parts = list(transform)
    tau_omega = omega
    for pair, where in parts:
        tau_omega = pair.apply_omega(tau_omega, where)
    kinds = "+".join(pair.kind for pair, _ in parts) or "identity"
    if not parts:
        value = 0.0
    else:
        lz0 = log_partition_function(model, build_eta(model, omega), reg, k, T,
                                     budget=budget)
        lz1 = log_partition_function(model, build_eta(model, tau_omega), reg, k, T,
                                     budget=budget)
        value = T * (lz1 - lz0)
    return FreeEnergyDelta(value, reg, reg_prime, k, kinds, T)


def fsir_quantity(model, c: Contour, omega: QuenchedConfig, T: float,
                  budget: int = 2_000_000) -> float:
    """Free-energy shift of the interior transform on thicken(footprint, 1)."""
    parts = interior_transform(model, c)
    if not parts:
        return 0.0
    lam = thicken(footprint(c), 1)
    return free_energy_delta(
        model, omega, lam, c.interior_union(), c.label, parts, T, budget
    ).value


def stability_events(
    c: Contour,
    model: ModelInstance,
    omega: QuenchedConfig,
    T: float,
    rho: float | None = None,
    budget: int = 2_000_000,
) -> StabilityReport:
    """Evaluate all three events for one contour and one disorder draw."""
    rho = _rho(model, rho)
    threshold = rho * len(c.support) / 4.0
    local = restrict_omega(model, omega, access_window(c))
    eta = build_eta(model, local)
    q_fsc = fsc_quantity(model, eta, c)
    q_qisc = qisc_quantity(model, c, local)
    q_fsir = fsir_quantity(model, c, local, T, budget)
    return StabilityReport(
        contour=c,
        fsc=q_fsc <= threshold,
        qisc=q_qisc <= threshold,
        fsir=q_fsir <= threshold,
        fsc_margin=threshold - q_fsc,
        qisc_margin=threshold - q_qisc,
        fsir_margin=threshold - q_fsir,
        rho=rho,
        threshold=threshold,
    )


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def _anchored_family(model: ModelInstance, n_max: int, budget: int) -> list:
    by_size = enumerate_contours_up_to(model, n_max, anchored=True, budget=budget)
    return [c for contours in by_size.values() for c in contours]


def estimate_event_probability(
    event: str,
    model: ModelInstance,
    dist: DistributionSpec,
    n_max: int,
    trials: int,
    T: float,
    seed: int,
    rho: float | None = None,
    budget: int = 200_000,
    pf_budget: int = 2_000_000,
) -> tuple[float, tuple[float, float]]:
    """Fraction of disorder draws for which every anchored contour with
    support size at most n_max satisfies the event, with a Wilson CI.

    The quantifier is truncated at n_max; with no contour that small the
    event holds vacuously and p_hat is 1.
    """
    if event not in ("fsc", "qisc", "fsir"):
        raise ParameterError(f"unknown stability event {event!r}")
    if trials < 100:
        raise ParameterError(
            "event probability estimation needs at least 100 trials"
        )
    rho_v = _rho(model, rho)
    family = _anchored_family(model, n_max, budget)
    if not family:
        return 1.0, wilson_interval(trials, trials)
    gap0 = {c: unperturbed_gap(model, c) for c in family}
    windows = {c: access_window(c) for c in family}
    domain = Region(
        frozenset().union(*(w.sites for w in windows.values())), model.dimension
    )
    base = domain if model.blocking is None else model.blocking.unblock_region(domain)
    successes = 0
    for trial in range(trials):
        omega = sample_omega_for(model, dist, base, _trial_seed(seed, trial))
        eta = build_eta(model, omega) if event == "fsc" else None
        ok = True
        for c in family:
            threshold = rho_v * len(c.support) / 4.0
            if event == "fsc":
                q = fsc_quantity(model, eta, c, gap0[c])
            elif event == "qisc":
                q = qisc_quantity(model, c, omega)
            else:
                q = fsir_quantity(model, c, omega, T, pf_budget)
            if q > threshold:
                ok = False
                break
        successes += ok
    p_hat = successes / trials
    return p_hat, wilson_interval(successes, trials)


def sample_omega_for(model: ModelInstance, dist: DistributionSpec, base: Region,
                     seed: int) -> QuenchedConfig:
    from .disorder import sample_omega

    return sample_omega(dist, base, 0, seed, max(1, model.n_beta))


def event_probability_rows(
    event: str,
    model: ModelInstance,
    kind: str,
    epsilons: list[float],
    n_max: int,
    trials: int,
    T: float,
    seed: int,
    rho: float | None = None,
    budget: int = 200_000,
) -> list[dict]:
    """CSV-shaped rows over an epsilon grid (shared contour family and seeds)."""
    rows = []
    for eps in epsilons:
        p_hat, (lo, hi) = estimate_event_probability(
            event, model, DistributionSpec(kind, eps), n_max, trials, T, seed,
            rho=rho, budget=budget,
        )
        rows.append(
            {
                "event": event,
                "epsilon": eps,
                "T": T,
                "n_max": n_max,
                "trials": trials,
                "p_hat": p_hat,
                "ci_lo": lo,
                "ci_hi": hi,
                "seed": seed,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Supporting checks: area-variation tails and the weight-domination chain


def area_variation_probe(
    model: ModelInstance,
    dist: DistributionSpec,
    reg: Region,
    reg1: Region,
    reg2: Region,
    k: int,
    T: float,
    trials: int,
    lambda_grid: list[float],
    seed: int,
    budget: int = 2_000_000,
) -> list[dict]:
    """Empirical tail of |Delta_{reg1}F - Delta_{reg2}F| against the
    subgaussian bound exp(-lam^2 / (nu (|reg1 sym reg2| + |joint margin|)))."""
    from .coarsegrain import dbar  # noqa: F401  (shared nu convention)
    from .disorder import nu_of_epsilon
    from .geometry import external_margin

    if trials < 100:
        raise ParameterError("area variation probe needs at least 100 trials")
    pair1 = transform_for(model, (k + 1) % model.n_ground, k)
    nu = nu_of_epsilon(dist)
    margin = external_margin(reg1, 2).union(external_margin(reg2, 2))
    scale = len(reg1.symmetric_difference(reg2)) + len(margin)
    base = reg if model.blocking is None else model.blocking.unblock_region(reg)
    base = thicken(base, 4)
    diffs = []
    for trial in range(trials):
        omega = sample_omega_for(model, dist, base, _trial_seed(seed, trial))
        d1 = free_energy_delta(model, omega, reg, reg1, k, pair1, T, budget).value
        d2 = free_energy_delta(model, omega, reg, reg2, k, pair1, T, budget).value
        diffs.append(abs(d1 - d2))
    diffs = np.asarray(diffs)
    rows = []
    for lam in lambda_grid:
        hits = int((diffs >= lam).sum())
        bound = (
            min(1.0, math.exp(-(lam**2) / (nu * scale))) if nu > 0 else float(lam <= 0)
        )
        lo, hi = wilson_interval(hits, trials)
        rows.append(
            {
                "lambda": lam,
                "empirical": hits / trials,
                "bound": bound,
                "ci_lo": lo,
                "ci_hi": hi,
                "scale": scale,
                "nu": nu,
            }
        )
    return rows


def composite_bound_replay(
    model: ModelInstance,
    omega: QuenchedConfig,
    c: Contour,
    reg: Region,
    k0: int,
    T: float,
    rho: float | None = None,
    budget: int = 2_000_000,
) -> dict:
    """When all three events hold, replay the weight-domination chain: the
    contour weight is at most exp(-rho |sC| / 2T) and its probability of
    occurring as an external contour at most exp(-rho |sC| / 4T)."""
    from .polymer import external_probability_formula, log_weight

    report = stability_events(c, model, omega, T, rho=rho, budget=budget)
    eta = build_eta(model, restrict_omega(model, omega, access_window(c)))
    lw = log_weight(model, eta, c, T, budget)
    n = len(c.support)
    rho_v = report.rho
    full_eta = build_eta(model, omega)
    mu = external_probability_formula(model, full_eta, reg, k0, c, T, budget=budget)
    events_ok = report.fsc and report.qisc and report.fsir
    return {
        "events_ok": events_ok,
        "log_weight": lw,
        "log_weight_bound": -rho_v * n / (2.0 * T),
        "weight_ok": lw <= -rho_v * n / (2.0 * T) + 1e-9,
        "mu": mu,
        "mu_bound": math.exp(-rho_v * n / (4.0 * T)),
        "mu_ok": mu <= math.exp(-rho_v * n / (4.0 * T)) + 1e-12,
        "report": report,
    }
