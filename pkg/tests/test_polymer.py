"""Contour-gas identities against direct summation on small boxes."""

import math

import pytest

from quenchlab.disorder import DistributionSpec, ZERO_FIELD, sample_omega
from quenchlab.geometry import EnumerationBudgetError, cube
from quenchlab.models import BoundaryCondition, build_eta, hamiltonian
from quenchlab.polymer import (
    brute_force_contour_census,
    candidate_contours,
    excitation_cost,
    external_probabilities_direct,
    external_probabilities_formula,
    iter_constrained_configs,
    log_partition_function,
    log_weight,
    polymer_identity_check,
    surface_term,
)


def _eta_for(model, reg, eps, seed):
    if eps == 0.0:
        return ZERO_FIELD
    omega = sample_omega(
        DistributionSpec("gaussian", eps), reg, 3, seed, max(1, model.n_beta)
    )
    return build_eta(model, omega)


def test_iter_constrained_configs_counts(rfim2):
    reg = cube(6, 2)
    assert sum(1 for _ in iter_constrained_configs(rfim2, reg, 0, 2, 10**6)) == 16
    assert sum(1 for _ in iter_constrained_configs(rfim2, reg, 0, 3, 10**6)) == 1
    with pytest.raises(EnumerationBudgetError):
        list(iter_constrained_configs(rfim2, cube(10, 2), 0, 0, 100))


def test_log_partition_function_fully_frozen_is_ground_energy(rfim2):
    # Depth-2 freezing of a 4x4 box leaves no free site: ln Z = -H(ground)/T.
    reg = cube(4, 2)
    eta = _eta_for(rfim2, reg, 0.1, 3)
    T = 0.7
    h = hamiltonian(
        rfim2, eta, reg, BoundaryCondition.ground(0), {s: 1 for s in reg}
    )
    assert log_partition_function(rfim2, eta, reg, 0, T) == pytest.approx(-h / T)


def test_surface_term_is_field_sum(rfim2):
    reg = cube(5, 2)
    eta = _eta_for(rfim2, reg, 0.3, 9)
    want = -sum(eta.get("field", s) for s in reg)
    assert surface_term(rfim2, eta, reg, 0) == pytest.approx(want)
    assert surface_term(rfim2, ZERO_FIELD, reg, 0) == pytest.approx(0.0)


def test_excitation_cost_and_weight_zero_field(rfim2, single_flip):
    assert excitation_cost(rfim2, ZERO_FIELD, single_flip) == pytest.approx(8.0)
    # No holes: ln w(C) = -D(C)/T exactly.
    assert log_weight(rfim2, ZERO_FIELD, single_flip, 2.0) == pytest.approx(-4.0)


def test_excitation_cost_field_shift_oracle(rfim2, single_flip):
    from quenchlab.disorder import RandomField

    flip = [s for s, v in single_flip.values.items() if v == -1][0]
    eta = RandomField({("field", flip): 0.25}, {"field": 0})
    # Only the flipped site feels the field: -eta x with x = -1 vs +1.
    assert excitation_cost(rfim2, eta, single_flip) == pytest.approx(8.0 + 0.5)


@pytest.mark.parametrize("eps", [0.0, 0.1])
def test_polymer_identity_small_boxes(rfim2, eps):
    for L in (4, 5):
        reg = cube(L, 2)
        eta = _eta_for(rfim2, reg, eps, 17 + L)
        direct, gas = polymer_identity_check(rfim2, eta, reg, 0, 1.1)
        assert abs(direct - gas) <= 1e-10 * max(1.0, abs(direct))


def test_polymer_identity_minus_exterior(rfim2):
    reg = cube(5, 2)
    eta = _eta_for(rfim2, reg, 0.15, 23)
    direct, gas = polymer_identity_check(rfim2, eta, reg, 1, 0.9)
    assert abs(direct - gas) <= 1e-10 * max(1.0, abs(direct))


def test_census_and_sliding_candidates_agree(rfim2):
    reg = cube(6, 2)
    census = brute_force_contour_census(rfim2, reg, 0)
    sliding = candidate_contours(rfim2, reg, 0, 25)
    # The sliding enumeration is capped at support size 25; it must agree
    # with the census exactly on that range.
    assert {c for c in census if len(c.support) <= 25} == set(sliding)
    assert all(len(c.support) <= 36 for c in census)
    assert len(census) >= 3


def test_external_probabilities_direct_vs_formula(rfim2):
    reg = cube(6, 2)
    eta = _eta_for(rfim2, reg, 0.05, 41)
    targets = sorted(
        brute_force_contour_census(rfim2, reg, 0),
        key=lambda c: tuple(sorted(c.support.sites)),
    )[:4]
    direct = external_probabilities_direct(rfim2, eta, reg, 0, targets, 1.3)
    formula = external_probabilities_formula(rfim2, eta, reg, 0, targets, 1.3)
    for p_d, p_f in zip(direct, formula):
        assert p_d > 0.0
        assert abs(p_d - p_f) <= 1e-10 * p_d


def test_formula_rejects_inadmissible_target(rfim2, single_flip):
    from quenchlab.contours import translate_contour

    off_box = translate_contour(single_flip, (100, 100))
    with pytest.raises(ValueError):
        external_probabilities_formula(
            rfim2, ZERO_FIELD, cube(6, 2), 0, [off_box], 1.0
        )


def test_probabilities_sum_against_gibbs_identity(rfim2):
    # With zero field the two external single-flip contours at symmetric
    # positions have equal probability.
    reg = cube(6, 2)
    census = brute_force_contour_census(rfim2, reg, 0)
    flips = sorted(
        (c for c in census if len(c.support) == 25),
        key=lambda c: tuple(sorted(c.support.sites)),
    )
    assert len(flips) == 4
    probs = external_probabilities_direct(rfim2, ZERO_FIELD, reg, 0, flips, 1.0)
    assert max(probs) == pytest.approx(min(probs))
