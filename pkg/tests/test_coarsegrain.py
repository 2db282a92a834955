"""Dyadic replicas, geometric audit constants, metrics, and chaining."""

import math

import pytest

from quenchlab.coarsegrain import (
    CubeIndex,
    audit_geometry,
    b3_from_b2,
    coarse_replica,
    covering_and_entropy,
    dbar,
    dudley_summand,
    dudley_summands_decreasing,
    ell0,
    measured_constants,
    random_region_suite,
    region_metric,
)
from quenchlab.geometry import Region, box, cube


def test_cube_index_sites():
    c = CubeIndex(2, (1, 0))
    assert c.sites() == box((4, 0), (7, 3))
    assert c.size == 16


def test_coarse_replica_majority_rule():
    # A full 2x2 block is kept at level 1; a lone site is not.
    assert coarse_replica(cube(2, 2), 1).covered == cube(2, 2)
    assert len(coarse_replica(Region({(0, 0)}, 2), 1).cubes) == 0
    # Exactly half-filled counts as occupied.
    half = Region({(0, 0), (0, 1)}, 2)
    assert coarse_replica(half, 1).covered == cube(2, 2)
    assert coarse_replica(cube(4, 2), 0).covered == cube(4, 2)
    with pytest.raises(ValueError):
        coarse_replica(cube(2, 2), -1)


def test_random_region_suite_reproducible():
    a = random_region_suite(20, 2, 5)
    b = random_region_suite(20, 2, 5)
    assert [r.sites for r in a] == [r.sites for r in b]
    assert all(1 <= len(r) <= 40 for r in a)


def test_audit_rows_and_constants_finite():
    suite = random_region_suite(60, 2, 3)
    rows = audit_geometry(suite, 3)
    constants = measured_constants(rows)
    assert set(constants) == {"b0", "b1", "b2"}
    assert all(math.isfinite(v) for v in constants.values())
    for r in rows:
        if r["constant_name"] == "b0":
            assert r["lhs"] == 2 ** r["l"]  # 2^{l(d-1)} in d=2
        assert r["lhs"] <= constants[r["constant_name"]] * r["rhs"] + 1e-12


def test_replicas_empty_beyond_ell0():
    suite = random_region_suite(60, 2, 3)
    constants = measured_constants(audit_geometry(suite, 3))
    for reg in suite:
        level = ell0(len(reg), constants["b1"], 2)
        assert len(coarse_replica(reg, level).cubes) == 0
        assert len(coarse_replica(reg, level + 1).cubes) == 0
    with pytest.raises(ValueError):
        ell0(0, 1.0, 2)


def test_dbar_and_region_metric(rfim2, single_flip):
    from quenchlab.contours import extract_contours

    a = cube(4, 2)
    b = cube(4, 2, origin=(1, 0))
    assert region_metric(a, a, 0.5) == 0.0
    assert region_metric(a, b, 0.5) == pytest.approx(0.5 * math.sqrt(8))
    # The increment metric only sees interiors: solid regions are at zero.
    assert dbar(a, b, 0.3) == 0.0
    assert dbar(single_flip, single_flip, 0.3) == 0.0
    island = box((0, 0), (4, 4))
    x = {s: -1 if s in island else 1 for s in box((-6, -6), (10, 10))}
    holed = extract_contours(rfim2, x).contours[0]
    # One hole site plus its depth-2 external margin (24 sites): sqrt(25).
    assert dbar(single_flip, holed, 0.3) == pytest.approx(0.3 * 5.0)
    assert dbar(holed, single_flip, 0.3) == dbar(single_flip, holed, 0.3)


def test_dudley_summands_pattern():
    assert not dudley_summands_decreasing(2)
    assert dudley_summands_decreasing(3)
    assert dudley_summands_decreasing(4)
    assert dudley_summand(4, 3) == pytest.approx(2.0 * 2.0 ** (-2.0))


def test_covering_and_entropy_rows():
    rows = covering_and_entropy(5, 2, 3)
    assert [r["l"] for r in rows] == [0, 1, 2, 3]
    sizes = [r["net_size"] for r in rows]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    integrals = [r["dudley_integral"] for r in rows]
    assert all(b >= a - 1e-12 for a, b in zip(integrals, integrals[1:]))
    assert all(r["entropy_bound"] >= 1.0 for r in rows)


def test_b3_from_b2():
    plain = b3_from_b2(0.5, 2, enlarged=False)
    assert plain == pytest.approx(2.0 * (math.sqrt(2.0) + 1.0))
    assert b3_from_b2(0.5, 2) == pytest.approx(plain + math.sqrt(2.0) * 5.0)
