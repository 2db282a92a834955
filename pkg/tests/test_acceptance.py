"""Acceptance checks at desk scale, one test per criterion.

Each test prints a single PASS/FAIL line naming the criterion before
asserting, so the run log doubles as the acceptance report.
"""

import math

import numpy as np
import pytest

from quenchlab.coarsegrain import (
    audit_geometry,
    coarse_replica,
    dudley_summands_decreasing,
    ell0,
    measured_constants,
    random_region_suite,
)
from quenchlab.contours import (
    contour_count_bound,
    decomposition_check,
    enumerate_contours_up_to,
)
from quenchlab.disorder import (
    DistributionSpec,
    ZERO_FIELD,
    lipschitz_variance_check,
    sample_omega,
    statistic_library,
    tail_probe,
    three_point_max,
    three_point_oracle,
)
from quenchlab.geometry import cube, internal_margin
from quenchlab.models import (
    build_eta,
    make_ea,
    make_rfpm,
    peierls_scan,
)
from quenchlab.polymer import (
    brute_force_contour_census,
    external_probabilities_direct,
    external_probabilities_formula,
    polymer_identity_check,
)
from quenchlab.sampler import agreement_over_draws
from quenchlab.stability import estimate_event_probability
from quenchlab.symmetry import make_transform, verify_local_symmetry


def _report(name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    print(f"{tag}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def _eta_for(model, reg, eps, seed):
    if eps == 0.0:
        return ZERO_FIELD
    omega = sample_omega(
        DistributionSpec("gaussian", eps), reg, 3, seed, max(1, model.n_beta)
    )
    return build_eta(model, omega)


def test_acceptance_polymer_identity(rfim2):
    worst = 0.0
    for L in (4, 5, 6):
        for eps, seed in ((0.0, 0), (0.05, 100 + L)):
            reg = cube(L, 2)
            eta = _eta_for(rfim2, reg, eps, seed)
            direct, gas = polymer_identity_check(rfim2, eta, reg, 0, 1.0)
            worst = max(worst, abs(direct - gas) / max(1.0, abs(direct)))
    _report(
        "polymer identity on boxes up to 6x6 (rel err <= 1e-10)",
        worst <= 1e-10,
        f"worst rel err {worst:.3e}",
    )


def test_acceptance_contour_probability_crosscheck(rfim2):
    reg = cube(6, 2)
    targets = sorted(
        brute_force_contour_census(rfim2, reg, 0),
        key=lambda c: tuple(sorted(c.support.sites)),
    )[:4]
    assert len(targets) >= 3
    worst = 0.0
    for eps, seed in ((0.0, 0), (0.05, 17)):
        eta = _eta_for(rfim2, reg, eps, seed)
        direct = external_probabilities_direct(rfim2, eta, reg, 0, targets, 1.2)
        formula = external_probabilities_formula(rfim2, eta, reg, 0, targets, 1.2)
        for p_d, p_f in zip(direct, formula):
            worst = max(worst, abs(p_d - p_f) / max(p_d, 1e-300))
    _report(
        "external-contour probability: formula vs direct enumeration "
        "(>= 3 contours, rel err <= 1e-10)",
        worst <= 1e-10,
        f"{len(targets)} contours, worst rel err {worst:.3e}",
    )


def test_acceptance_peierls_scan(rfim2, fa1b2):
    rho_ising, wit_i = peierls_scan(rfim2, 25)
    rho_core, wit_c = peierls_scan(fa1b2, 25)
    ok = (
        wit_i is not None
        and rho_ising >= 1.0 / 9.0 - 1e-12
        and wit_c is not None
        and rho_core >= 0.5 / 9.0 - 1e-12
    )
    _report(
        "excitation-per-weight scan, |sC| <= 25: two-valued >= J/3^d, "
        "exclusion model >= h^c/3^d",
        ok,
        f"measured {rho_ising:.4f} vs 1/9, {rho_core:.4f} vs 1/18",
    )


def test_acceptance_decomposition_identity(rfim2):
    models = [rfim2, make_rfpm(2, Q=3), make_ea(2, Jbar=1.0)]
    reg = cube(9, 2)
    rng = np.random.default_rng(2026)
    worst = 0.0
    for model in models:
        omega = sample_omega(
            DistributionSpec("gaussian", 0.2), reg, 2, 77, max(1, model.n_beta)
        )
        eta = build_eta(model, omega)
        free = sorted(reg.difference(internal_margin(reg, 3)))
        b0 = model.ground_value(0)
        for _ in range(1000):
            x = {s: b0 for s in reg}
            for s in free:
                x[s] = model.spin_values[int(rng.integers(model.n_spin))]
            lhs, rhs = decomposition_check(model, eta, reg, 0, x)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    _report(
        "exterior-contour energy decomposition exact to 1e-12 "
        "(10^3 random configurations x 3 models)",
        worst <= 1e-12,
        f"worst rel err {worst:.3e}",
    )


def test_acceptance_moment_optimization_and_variance_bound():
    worst = 0.0
    for lam in np.linspace(0.1, 3.0, 20):
        for sigma in np.linspace(0.05, 0.95, 20):
            value, _ = three_point_max(float(lam), float(sigma))
            worst = max(worst, abs(value - three_point_oracle(float(lam), float(sigma))))
    spec = DistributionSpec("gaussian", 0.4)
    var_x, var_fx = lipschitz_variance_check(spec, np.abs, 300_000, 8)
    closed = 0.16 * (1.0 - 2.0 / math.pi)  # folded normal variance
    var_ok = var_fx <= var_x and abs(var_fx - closed) <= 0.05 * closed
    _report(
        "constrained moment maximum matches grid-search oracle to 1e-6 "
        "on a 20x20 grid; folded-normal variance contraction",
        worst <= 1e-6 and var_ok,
        f"grid err {worst:.2e}, Var|X| {var_fx:.4f} vs closed form {closed:.4f}",
    )


def test_acceptance_concentration_tails():
    stats = statistic_library()
    points = [
        (DistributionSpec("bounded", 0.5), 50),
        (DistributionSpec("bounded", 0.1), 100),
        (DistributionSpec("gaussian", 0.2), 50),
    ]
    ok = True
    worst = -math.inf
    for name, stat in stats.items():
        for spec, n in points:
            scale = spec.epsilon * math.sqrt(n)
            grid = [0.5 * scale, 1.0 * scale, 2.0 * scale, 3.0 * scale]
            rows = tail_probe(stat, spec, n, grid, 100_000, 20_260_823)
            for r in rows:
                half = (r["ci_hi"] - r["ci_lo"]) / 2.0
                excess = r["empirical"] - r["bound"] - 3.0 * half
                worst = max(worst, excess)
                ok = ok and excess <= 0.0
                if spec.kind == "bounded":
                    excess2 = r["empirical"] - r["bound_small_eps"] - 3.0 * half
                    worst = max(worst, excess2)
                    ok = ok and excess2 <= 0.0
    _report(
        "empirical tails within the concentration bounds + 3 CI half-widths "
        "(3 statistics x 3 parameter points, 1e5 trials)",
        ok,
        f"max excess {worst:.3e}",
    )


def test_acceptance_contour_counting(rfim2):
    by_size = enumerate_contours_up_to(rfim2, 6, anchored=True)
    ok = True
    for n in range(1, 7):
        count = len(by_size.get(n, ()))
        ok = ok and count <= math.e**n * (3**2 - 1) ** (2 * n)
    # A positive count at the minimal support size, still under the bound.
    family = enumerate_contours_up_to(rfim2, 25, anchored=True)
    ok = ok and 0 < len(family[25]) <= contour_count_bound(25, 2, 2)
    _report(
        "anchored contour counts within e^n (3^d - 1)^{2n} for n <= 6 (d=2)",
        ok,
        f"counts zero below the minimal support; {len(family[25])} at n=25",
    )


def test_acceptance_coarse_grain_audits():
    suite = random_region_suite(500, 2, 20260823, 40)
    rows = audit_geometry(suite, 4)
    constants = measured_constants(rows)
    finite = all(math.isfinite(v) for v in constants.values())
    pinned = (
        constants["b0"] == pytest.approx(1.0)
        and constants["b1"] == pytest.approx(4.0 / 3.0)
        and constants["b2"] == pytest.approx(0.5)
    )
    inequalities = all(
        r["lhs"] <= constants[r["constant_name"]] * r["rhs"] + 1e-9 for r in rows
    )
    empty_beyond = all(
        len(coarse_replica(reg, ell0(len(reg), constants["b1"], 2)).cubes) == 0
        for reg in suite
    )
    dudley = (
        not dudley_summands_decreasing(2)
        and dudley_summands_decreasing(3)
        and dudley_summands_decreasing(4)
    )
    _report(
        "replica geometry constants on the pinned 500-region suite, "
        "empty replicas beyond l0, chaining summands decreasing only for d >= 3",
        finite and pinned and inequalities and empty_beyond and dudley,
        f"b0={constants['b0']:.4f} b1={constants['b1']:.4f} "
        f"b2={constants['b2']:.4f}",
    )


def test_acceptance_symmetry_verification(rfim2, rfpm2, ea_af2, fa1b2):
    reg = cube(4, 2)
    flip = verify_local_symmetry(make_transform(rfim2, "flip"), rfim2, reg, 3, 1)
    cycle = verify_local_symmetry(
        make_transform(rfpm2, "potts_cycle"), rfpm2, reg, 3, 2
    )
    exact_ok = (
        all(flip[k] for k in ("locality", "injectivity", "energy",
                              "regularity", "measure"))
        and all(cycle[k] for k in ("locality", "injectivity", "energy",
                                   "regularity", "measure"))
        and flip["max_energy_diff"] == 0.0
        and cycle["max_energy_diff"] == 0.0
    )
    shift_ea = verify_local_symmetry(
        make_transform(ea_af2, "translate"), ea_af2, reg, 2, 3
    )
    shift_fa = verify_local_symmetry(
        make_transform(fa1b2, "translate"), fa1b2, reg, 2, 4
    )
    shift_ok = (
        shift_ea["energy"] and shift_ea["min_bound_slack"] >= 0.0
        and shift_fa["energy"] and shift_fa["min_bound_slack"] >= 0.0
        and shift_ea["measure"] and shift_fa["measure"]
    )
    _report(
        "spin-flip and state-cycle pairs exactly energy/measure invariant; "
        "translation pairs within the boundary field sum on 4x4 blocked boxes",
        exact_ok and shift_ok,
        f"translate energy gaps {shift_ea['max_energy_diff']:.3f} / "
        f"{shift_fa['max_energy_diff']:.3f} within bound",
    )


def test_acceptance_stability_events(rfim2, rfim3, rfim_anchored):
    # Zero disorder: the cost-shift event holds surely.
    p0, _ = estimate_event_probability(
        "fsc", rfim2, DistributionSpec("gaussian", 0.0), 25, 100, 0.5, 1
    )
    # Frequency is nonincreasing along an epsilon grid.
    grid = [0.01, 0.05, 0.2]
    ps = [
        estimate_event_probability(
            "fsc", rfim2, DistributionSpec("gaussian", eps), 25, 150, 0.5, 42
        )[0]
        for eps in grid
    ]
    monotone = all(a >= b for a, b in zip(ps, ps[1:]))
    # Operating point in d=3 (the truncated family is empty below n=27, so
    # every event holds for all contours in range).
    cis = {}
    joint_ok = True
    for event in ("fsc", "qisc", "fsir"):
        p, ci = estimate_event_probability(
            event, rfim3, DistributionSpec("gaussian", 0.02), 11, 100, 0.2, 7
        )
        cis[event] = (p, ci)
        joint_ok = joint_ok and p >= 0.9
    _report(
        "stability events: sure at zero disorder, nonincreasing in epsilon, "
        ">= 0.9 at the d=3 operating point",
        p0 == 1.0 and monotone and joint_ok,
        f"p(eps=0)={p0}, grid {ps}, d=3 {cis}",
    )


def test_acceptance_long_range_order_proxy(rfim3):
    dist = DistributionSpec("gaussian", 0.1)
    point = dict(L=8, T=1.0, sweeps=600, burn_in=300, draws=20, seed=20260823)
    plus = agreement_over_draws(
        rfim3, dist, point["L"], 0, point["T"], point["sweeps"],
        point["burn_in"], point["draws"], point["seed"],
    )
    minus = agreement_over_draws(
        rfim3, dist, point["L"], 1, point["T"], point["sweeps"],
        point["burn_in"], point["draws"], point["seed"],
    )
    n_plus = sum(r["agreement"] > 0.5 for r in plus)
    n_minus = sum(r["agreement"] > 0.5 for r in minus)
    _report(
        "order parameter above 1/2 in >= 18/20 disorder draws under both "
        "boundary ground states (d=3, L=8, T=1, eps=0.1)",
        n_plus >= 18 and n_minus >= 18,
        f"operating point {point}; plus {n_plus}/20, minus {n_minus}/20",
    )
