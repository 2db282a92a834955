"""Quenched coordinate sampling, variance proxies, moment optimization,
and the concentration-bound machinery."""

import math

import numpy as np
import pytest

from quenchlab.disorder import (
    CoverageError,
    DistributionSpec,
    ParameterError,
    QuenchedConfig,
    RandomField,
    ZERO_FIELD,
    coordinate_uniforms,
    lipschitz_variance_check,
    nu_of_epsilon,
    sample_omega,
    statistic_library,
    tail_probe,
    three_point_max,
    three_point_oracle,
    wilson_interval,
)
from quenchlab.geometry import cube


def test_distribution_spec_validation():
    with pytest.raises(ParameterError):
        DistributionSpec("cauchy", 0.1)
    with pytest.raises(ParameterError):
        DistributionSpec("gaussian", -0.1)
    with pytest.raises(ParameterError):
        DistributionSpec("bounded", 1.5)
    DistributionSpec("bounded", 1.0)  # boundary value allowed


def test_sample_omega_deterministic_and_site_keyed():
    spec = DistributionSpec("gaussian", 0.3)
    reg = cube(4, 2)
    a = sample_omega(spec, reg, 2, 7)
    b = sample_omega(spec, reg, 2, 7)
    assert a.values == b.values
    # Enlarging the region must not change values at shared sites.
    big = sample_omega(spec, cube(6, 2), 2, 7)
    for key, v in a.values.items():
        assert big.values[key] == v
    assert sample_omega(spec, reg, 2, 8).values != a.values


def test_sample_omega_bounded_support_and_padding():
    spec = DistributionSpec("bounded", 0.25)
    reg = cube(3, 2)
    om = sample_omega(spec, reg, 2, 1)
    assert set(map(abs, om.values.values())) == {0.25}
    assert len(om.covered_sites()) == len(cube(7, 2, origin=(-2, -2)))
    with pytest.raises(CoverageError):
        om.get(0, (100, 100))


def test_sample_omega_gaussian_moments():
    spec = DistributionSpec("gaussian", 0.5)
    om = sample_omega(spec, cube(100, 2), 0, 3)
    draws = np.array(list(om.values.values()))
    assert abs(draws.mean()) < 0.01
    assert abs(draws.std() - 0.5) < 0.01


def test_quenched_translate_semantics():
    spec = DistributionSpec("gaussian", 0.1)
    om = sample_omega(spec, cube(4, 2), 1, 5)
    shifted = om.translate((1, 0))
    assert shifted.get(0, (0, 0)) == om.get(0, (1, 0))


def test_coordinate_uniforms_properties():
    sites = list(cube(5, 2))
    u = coordinate_uniforms(9, 0, sites)
    assert np.all((u > 0) & (u < 1))
    assert np.array_equal(u, coordinate_uniforms(9, 0, sites))
    assert not np.array_equal(u, coordinate_uniforms(9, 1, sites))
    # Order independence: per-site values do not depend on the list order.
    rev = coordinate_uniforms(9, 0, sites[::-1])
    assert np.array_equal(u, rev[::-1])


def test_random_field_accessors():
    eta = RandomField({("field", (0, 0)): -0.3, ("bond", (0, 0)): 0.1}, {})
    assert eta.get("field", (0, 0)) == -0.3
    assert eta.get("field", (1, 1)) == 0.0
    assert eta.abs_sum_at((0, 0)) == pytest.approx(0.4)
    assert ZERO_FIELD.abs_sum_at((0, 0)) == 0.0


def test_nu_of_epsilon():
    assert nu_of_epsilon(DistributionSpec("gaussian", 0.2)) == pytest.approx(0.04)
    # Bounded: 1/|2 ln eps| in the small-eps regime, clamped to [eps^2, 1].
    assert nu_of_epsilon(DistributionSpec("bounded", 0.1)) == pytest.approx(
        1.0 / (2.0 * abs(math.log(0.1)))
    )
    assert nu_of_epsilon(DistributionSpec("bounded", 0.0)) == 0.0


def test_three_point_max_moments_and_value():
    lam, sigma = 1.3, 0.6
    value, law = three_point_max(lam, sigma)
    xs = np.array([law["x1"], law["x2"]])
    ps = np.array([law["p1"], law["p2"]])
    assert ps.sum() == pytest.approx(1.0)
    assert (ps * xs).sum() == pytest.approx(0.0, abs=1e-14)
    assert (ps * xs**2).sum() == pytest.approx(sigma**2)
    assert (ps * np.exp(lam * xs)).sum() == pytest.approx(value)
    with pytest.raises(ParameterError):
        three_point_max(-1.0, 0.5)
    with pytest.raises(ParameterError):
        three_point_max(1.0, 1.5)


def test_three_point_max_matches_oracle_spot_checks():
    for lam in (0.2, 1.0, 2.5):
        for sigma in (0.1, 0.5, 0.9):
            value, _ = three_point_max(lam, sigma)
            assert value == pytest.approx(three_point_oracle(lam, sigma), abs=1e-6)


def test_wilson_interval_basics():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        wilson_interval(1, 0)


def test_statistic_library_values():
    stats = statistic_library()
    x = np.array([[3.0, -4.0, 0.0]])
    assert stats["sum"].fn(x)[0] == -1.0
    assert stats["norm"].fn(x)[0] == 5.0
    assert stats["max"].fn(x)[0] == 3.0


def test_tail_probe_rows_and_bound_formula():
    spec = DistributionSpec("bounded", 0.3)
    stat = statistic_library()["sum"]
    rows = tail_probe(stat, spec, 20, [0.5, 2.0], 500, 11)
    assert [r["lambda"] for r in rows] == [0.5, 2.0]
    for r in rows:
        assert 0.0 <= r["empirical"] <= 1.0
        d = stat.bounded_diff(0.3)
        assert r["bound"] == pytest.approx(
            min(1.0, 2.0 * math.exp(-2.0 * r["lambda"] ** 2 / (20 * d**2)))
        )
        assert r["ci_lo"] <= r["empirical"] <= r["ci_hi"]
    with pytest.raises(ParameterError):
        tail_probe(stat, spec, 20, [1.0], 50, 11)


def test_lipschitz_variance_contraction():
    spec = DistributionSpec("gaussian", 0.4)
    var_x, var_fx = lipschitz_variance_check(spec, np.abs, 200_000, 4)
    assert var_x == pytest.approx(0.16, rel=0.05)
    # Folded normal: Var|X| = eps^2 (1 - 2/pi) <= Var X.
    assert var_fx == pytest.approx(0.16 * (1 - 2 / math.pi), rel=0.05)
    assert var_fx <= var_x
