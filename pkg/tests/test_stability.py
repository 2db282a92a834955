"""Per-contour stability events, free-energy shifts, and event frequency."""

import math

import numpy as np
import pytest

from quenchlab.contours import extract_contours
from quenchlab.disorder import (
    DistributionSpec,
    ParameterError,
    QuenchedConfig,
    RandomField,
)
from quenchlab.geometry import EnumerationBudgetError, box, cube, thicken
from quenchlab.models import build_eta
from quenchlab.stability import (
    access_window,
    apply_interior_transform,
    area_variation_probe,
    composite_bound_replay,
    estimate_event_probability,
    event_probability_rows,
    footprint,
    free_energy_delta,
    fsc_quantity,
    fsir_quantity,
    interior_transform,
    qisc_quantity,
    restrict_omega,
    sample_omega_for,
    stability_events,
)


def _holed_contour(rfim2):
    island = box((0, 0), (4, 4))
    x = {s: -1 if s in island else 1 for s in box((-6, -6), (10, 10))}
    return extract_contours(rfim2, x).contours[0]


def _zero_omega(model, reg, eps=0.1):
    spec = DistributionSpec("gaussian", eps)
    values = {
        (b, s): 0.0
        for s in reg
        for b in range(max(1, model.n_beta))
    }
    return QuenchedConfig(values, 0, spec)


def test_footprint_and_access_window(rfim2, single_flip):
    holed = _holed_contour(rfim2)
    assert footprint(single_flip) == single_flip.support
    assert footprint(holed).sites == (
        holed.support.sites | holed.interior_union().sites
    )
    assert access_window(single_flip) == thicken(single_flip.support, 2)


def test_restrict_omega_keeps_exactly_the_window(rfim2, single_flip):
    window = access_window(single_flip)
    omega = _zero_omega(rfim2, thicken(window, 3))
    local = restrict_omega(rfim2, omega, window)
    assert set(local.values) == {(0, s) for s in window}


def test_zero_disorder_events_all_hold(rfim2, single_flip):
    omega = _zero_omega(rfim2, access_window(single_flip))
    report = stability_events(single_flip, rfim2, omega, T=0.5)
    assert report.fsc and report.qisc and report.fsir
    # rho = 1/9, |sC| = 25: threshold 25/36; every quantity is exactly 0.
    assert report.threshold == pytest.approx(25.0 / 36.0)
    assert report.fsc_margin == pytest.approx(report.threshold)
    assert report.qisc_margin == pytest.approx(report.threshold)
    assert report.fsir_margin == pytest.approx(report.threshold)


def test_fsc_quantity_oracle(rfim2, single_flip):
    flip = [s for s, v in single_flip.values.items() if v == -1][0]
    eta = RandomField({("field", flip): 0.3}, {"field": 0})
    assert fsc_quantity(rfim2, eta, single_flip) == pytest.approx(0.6)


def test_qisc_quantity_oracle(rfim2):
    holed = _holed_contour(rfim2)
    hole = next(iter(holed.interiors.values()))
    window = access_window(holed)
    omega = _zero_omega(rfim2, window)
    values = dict(omega.values)
    center = next(iter(hole))
    values[(0, center)] = 0.25
    omega = QuenchedConfig(values, 0, omega.spec)
    # The interior ring is the hole site itself; the interior flip negates
    # omega there, so |eta| + |tau eta| = 2 |omega|.
    assert qisc_quantity(rfim2, holed, omega) == pytest.approx(0.5)
    parts = interior_transform(rfim2, holed)
    assert len(parts) == 1 and parts[0][0].kind == "flip"
    tau = apply_interior_transform(rfim2, holed, omega)
    assert tau.values[(0, center)] == -0.25


def test_free_energy_delta_identity_and_zero_field(rfim2):
    reg = cube(5, 2)
    omega = sample_omega_for(rfim2, DistributionSpec("gaussian", 0.2), reg, 7)
    fe = free_energy_delta(rfim2, omega, reg, reg, 0, None, 0.8)
    assert fe.value == 0.0
    assert fe.transform_kind == "identity"
    # With omega identically zero a flip of omega changes nothing.
    from quenchlab.symmetry import make_transform

    zero = _zero_omega(rfim2, reg)
    fe2 = free_energy_delta(
        rfim2, zero, reg, cube(3, 2, origin=(1, 1)), 0, make_transform(rfim2, "flip"), 0.8
    )
    assert fe2.value == pytest.approx(0.0, abs=1e-12)
    assert fe2.transform_kind == "flip"


def test_fsir_trivial_and_budget(rfim2, single_flip):
    omega = _zero_omega(rfim2, access_window(single_flip), 0.1)
    assert fsir_quantity(rfim2, single_flip, omega, 0.5) == 0.0
    holed = _holed_contour(rfim2)
    omega_h = _zero_omega(rfim2, access_window(holed), 0.1)
    # The full free-energy evaluation on the holed footprint is beyond any
    # desk-scale enumeration; the budget guard must fire.
    with pytest.raises(EnumerationBudgetError):
        fsir_quantity(rfim2, holed, omega_h, 0.5, budget=10_000)


def test_estimate_event_probability_validation(rfim2):
    dist = DistributionSpec("gaussian", 0.1)
    with pytest.raises(ParameterError):
        estimate_event_probability("fsx", rfim2, dist, 25, 100, 1.0, 0)
    with pytest.raises(ParameterError):
        estimate_event_probability("fsc", rfim2, dist, 25, 10, 1.0, 0)


def test_estimate_event_probability_vacuous(rfim2):
    dist = DistributionSpec("gaussian", 0.5)
    p, (lo, hi) = estimate_event_probability("fsc", rfim2, dist, 9, 100, 1.0, 0)
    assert p == 1.0
    assert hi == pytest.approx(1.0)
    assert lo > 0.9


def test_event_rows_schema(rfim2):
    rows = event_probability_rows(
        "qisc", rfim2, "gaussian", [0.0, 0.3], 9, 100, 1.0, 5
    )
    assert [r["epsilon"] for r in rows] == [0.0, 0.3]
    for r in rows:
        assert set(r) == {
            "event", "epsilon", "T", "n_max", "trials", "p_hat",
            "ci_lo", "ci_hi", "seed",
        }
        assert r["p_hat"] == 1.0  # vacuous below the minimal support


def test_fsc_probability_one_at_zero_epsilon(rfim2, rfim_anchored):
    dist = DistributionSpec("gaussian", 0.0)
    p, (lo, hi) = estimate_event_probability("fsc", rfim2, dist, 25, 100, 0.5, 1)
    assert p == 1.0 and hi == pytest.approx(1.0)


def test_area_variation_probe_rows(rfim2):
    reg = cube(4, 2)
    rows = area_variation_probe(
        rfim2, DistributionSpec("gaussian", 0.1), reg,
        cube(2, 2, origin=(1, 1)), cube(2, 2, origin=(0, 0)), 0, 1.0,
        100, [0.1, 1.0], 3,
    )
    assert len(rows) == 2
    for r in rows:
        assert 0.0 <= r["empirical"] <= 1.0
        assert 0.0 < r["bound"] <= 1.0
        assert r["scale"] > 0 and r["nu"] == pytest.approx(0.01)
    with pytest.raises(ParameterError):
        area_variation_probe(
            rfim2, DistributionSpec("gaussian", 0.1), reg, reg, reg, 0, 1.0,
            10, [0.1], 3,
        )


def test_composite_bound_replay(rfim2):
    reg = cube(6, 2)
    omega = sample_omega_for(
        rfim2, DistributionSpec("gaussian", 0.02), thicken(reg, 4), 11
    )
    from quenchlab.polymer import brute_force_contour_census

    census = sorted(
        brute_force_contour_census(rfim2, reg, 0),
        key=lambda c: len(c.support),
    )
    target = census[0]
    out = composite_bound_replay(rfim2, omega, target, reg, 0, 1.0)
    assert out["events_ok"]
    assert out["weight_ok"] and out["mu_ok"]
    assert out["log_weight"] <= out["log_weight_bound"] + 1e-9
    assert out["mu"] <= out["mu_bound"] + 1e-12
