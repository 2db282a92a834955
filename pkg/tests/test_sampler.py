"""Metropolis chains: local moves, exactness on small boxes, observables."""

import math
from collections import Counter

import numpy as np
import pytest

from quenchlab.disorder import DistributionSpec, ZERO_FIELD, sample_omega
from quenchlab.geometry import cube
from quenchlab.models import (
    BoundaryCondition,
    ModelError,
    build_eta,
    hamiltonian,
)
from quenchlab.sampler import (
    Observables,
    _autocorrelation_time,
    agreement_over_draws,
    contour_frequency,
    exact_state_distribution,
    local_delta,
    run_chain,
    total_variation,
)


def test_local_delta_matches_global_difference(rfim2):
    reg = cube(4, 2)
    omega = sample_omega(DistributionSpec("gaussian", 0.3), reg, 1, 2)
    eta = build_eta(rfim2, omega)
    bc = BoundaryCondition.ground(0)
    rng = np.random.default_rng(1)
    x = {s: int(rng.choice([1, -1])) for s in reg}
    h0 = hamiltonian(rfim2, eta, reg, bc, x)
    for s in reg:
        dh = local_delta(rfim2, eta, reg, bc, x, s, -x[s])
        x2 = dict(x)
        x2[s] = -x[s]
        assert dh == pytest.approx(
            hamiltonian(rfim2, eta, reg, bc, x2) - h0, abs=1e-12
        )


def test_run_chain_validation(rfim2):
    with pytest.raises(ModelError):
        run_chain(rfim2, ZERO_FIELD, cube(4, 2), 0, 0.0, 10, 2, 1)
    with pytest.raises(ModelError):
        run_chain(rfim2, ZERO_FIELD, cube(4, 2), 0, 1.0, 10, 10, 1)


def test_cold_chain_stays_at_ground(rfim2):
    obs = run_chain(
        rfim2, ZERO_FIELD, cube(5, 2), 0, 0.01, 300, 100, 3,
        track_states=True, frozen_depth=2,
    )
    assert obs.agreement_fraction == 1.0
    assert obs.energy_drift <= 1e-9
    assert obs.n_free == 1


def test_fast_and_generic_paths_agree_statistically(rfim2):
    # Same ensemble, two implementations: the per-site generic sweep and
    # the vectorized checkerboard sweep must produce the same mean
    # agreement within Monte Carlo error.
    reg = cube(6, 2)
    T = 2.0
    fast = run_chain(rfim2, ZERO_FIELD, reg, 0, T, 4000, 500, 11)
    slow = run_chain(
        rfim2, ZERO_FIELD, reg, 0, T, 4000, 500, 12, track_states=True
    )
    assert fast.n_free == slow.n_free == 4
    se = 3 * math.sqrt(
        fast.tau_est / fast.n_measured_sweeps + slow.tau_est / slow.n_measured_sweeps
    )
    assert abs(fast.agreement_fraction - slow.agreement_fraction) <= max(se, 0.02)


def test_exact_distribution_one_free_site(rfim2):
    # 3x3 box, depth-1 frozen: one free spin, a two-state Gibbs law.
    reg = cube(3, 2)
    T = 1.5
    exact = exact_state_distribution(rfim2, ZERO_FIELD, reg, 0, T, frozen_depth=1)
    assert set(exact) == {(1,), (-1,)}
    # Flipping the center against 4 aligned neighbors costs 8J.
    ratio = exact[(-1,)] / exact[(1,)]
    assert ratio == pytest.approx(math.exp(-8.0 / T))
    assert sum(exact.values()) == pytest.approx(1.0)


def test_chain_matches_exact_distribution_tv(rfim2):
    reg = cube(2, 2)
    T = 2.0
    omega = sample_omega(DistributionSpec("gaussian", 0.3), reg, 1, 21)
    eta = build_eta(rfim2, omega)
    obs = run_chain(
        rfim2, eta, reg, 0, T, 60_000, 2_000, 5, frozen_depth=0,
        track_states=True,
    )
    exact = exact_state_distribution(rfim2, eta, reg, 0, T, frozen_depth=0)
    assert total_variation(obs.state_counts, exact) < 0.02
    assert obs.energy_drift <= 1e-8


def test_total_variation_basics():
    counts = Counter({(1,): 50, (-1,): 50})
    assert total_variation(counts, {(1,): 0.5, (-1,): 0.5}) == 0.0
    assert total_variation(counts, {(1,): 1.0}) == pytest.approx(0.5)


def test_autocorrelation_time():
    assert _autocorrelation_time(np.ones(100)) == 1.0
    rng = np.random.default_rng(0)
    iid = rng.normal(size=20_000)
    assert _autocorrelation_time(iid) == pytest.approx(1.0, abs=0.2)


def test_contour_frequency_against_exact_probability(rfim2):
    from quenchlab.polymer import (
        brute_force_contour_census,
        external_probabilities_direct,
    )

    reg = cube(6, 2)
    T = 2.0
    targets = sorted(
        (c for c in brute_force_contour_census(rfim2, reg, 0)
         if len(c.support) == 25),
        key=lambda c: tuple(sorted(c.support.sites)),
    )[:2]
    obs = run_chain(
        rfim2, ZERO_FIELD, reg, 0, T, 40_000, 2_000, 9,
        track_contours=True, snapshot_every=5,
    )
    freq = contour_frequency(obs, targets)
    exact = external_probabilities_direct(rfim2, ZERO_FIELD, reg, 0, targets, T)
    for (key, (p_hat, (lo, hi))), p in zip(freq.items(), exact):
        assert lo - 0.02 <= p <= hi + 0.02
    with pytest.raises(ModelError):
        contour_frequency(Observables(1.0), targets)


def test_agreement_over_draws_rows(rfim3):
    rows = agreement_over_draws(
        rfim3, DistributionSpec("gaussian", 0.1), 8, 0, 1.0, 300, 100, 2, 7
    )
    assert len(rows) == 2
    for r in rows:
        assert set(r) == {"draw", "T", "epsilon", "agreement", "tau_est"}
        assert r["agreement"] > 0.9
