"""Single-site Metropolis sampling of the finite-volume Gibbs measures.

Single-site proposals (uniform over the other spin values, uniform on
[-1, 1] for continuous spins) with the standard acceptance rule; quenched
fields break the symmetries cluster algorithms rely on, so no cluster moves.
The chain freezes the depth-`frozen_depth` internal margin at the boundary
ground, matching the partition-function convention (depth 0 frees the whole
region for small-box exactness tests).  A vectorized checkerboard sweep
(sequential over the two parities, so per-move detailed balance is kept)
accelerates the two-valued nearest-neighbor models on box regions.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .geometry import Region, internal_margin, linf_ball
from .disorder import RandomField
from .models import (
    BoundaryCondition,
    ModelError,
    ModelInstance,
    config_lookup,
    hamiltonian,
    local_energy,
)

INF = math.inf


@dataclass
class Observables:
    """Averaged chain output: the order parameter, per-contour occurrence
    counts, state occupation counts, and an autocorrelation estimate."""

    agreement_fraction: float
    contour_counts: Counter = field(default_factory=Counter)
    state_counts: Counter = field(default_factory=Counter)
    n_snapshots: int = 0
    n_measured_sweeps: int = 0
    tau_est: float = 0.0
    energy_drift: float = 0.0
    n_free: int = 0
    sweeps: int = 0
    burn_in: int = 0


def local_delta(model: ModelInstance, eta: RandomField, reg: Region,
                bc: BoundaryCondition, x: dict, s, v_new) -> float:
    """Energy change of setting x[s] = v_new, from the radius-1 stencil."""
    window = [t for t in linf_ball(s, model.max_range) if t in reg]
    old = local_energy(model, eta, window, config_lookup(model, bc, x))
    x_new = dict(x)
    x_new[s] = v_new
    new = local_energy(model, eta, window, config_lookup(model, bc, x_new))
    if new == INF:
        return INF
    if old == INF:
        return -INF
    return new - old


def _free_sites(reg: Region, frozen_depth: int) -> list:
    if frozen_depth <= 0:
        return sorted(reg)
    return sorted(reg.difference(internal_margin(reg, frozen_depth)))


def _is_box(reg: Region) -> bool:
    lo, hi = reg.bounding_box
    size = 1
    for a, b in zip(lo, hi):
        size *= b - a + 1
    return size == len(reg)


def run_chain(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k: int,
    T: float,
    sweeps: int,
    burn_in: int,
    seed: int,
    frozen_depth: int = 2,
    snapshot_every: int = 10,
    track_contours: bool = False,
    track_states: bool = False,
    start: str = "ground",
) -> Observables:
    """Metropolis chain for the ground-k Gibbs measure on reg.

    Observables average over the sweeps after burn_in; deterministic given
    the seed.  Hard-constraint violations carry infinite energy and are
    always rejected, so the chain never leaves the valid subspace.
    """
    if T <= 0:
        raise ModelError("T must be positive")
    if burn_in >= sweeps:
        raise ModelError("burn_in must be smaller than sweeps")
    if (
        model.name == "rfim"
        and not track_contours
        and not track_states
        and _is_box(reg)
    ):
        return _run_chain_ising_box(
            model, eta, reg, k, T, sweeps, burn_in, seed, frozen_depth,
            start,
        )
    return _run_chain_generic(
        model, eta, reg, k, T, sweeps, burn_in, seed, frozen_depth,
        snapshot_every, track_contours, track_states, start,
    )


def _run_chain_generic(
    model, eta, reg, k, T, sweeps, burn_in, seed, frozen_depth,
    snapshot_every, track_contours, track_states, start,
):
    from .contours import extract_contours, serialize

    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    bc = BoundaryCondition.ground(k)
    b = model.ground_value(k)
    free = _free_sites(reg, frozen_depth)
    x = {s: b for s in reg}
    if start == "random" and model.spin_values is not None:
        for s in free:
            x[s] = model.spin_values[int(rng.integers(model.n_spin))]
        while hamiltonian(model, eta, reg, bc, x) == INF:
            for s in free:
                x[s] = model.spin_values[int(rng.integers(model.n_spin))]
    energy = hamiltonian(model, eta, reg, bc, x)
    max_drift = 0.0
    series = []
    contour_counts: Counter = Counter()
    state_counts: Counter = Counter()
    n_snapshots = 0
    for sweep in range(sweeps):
        for s in free:
            if model.spin_values is not None:
                others = [v for v in model.spin_values if v != x[s]]
                v_new = others[int(rng.integers(len(others)))]
            else:
                v_new = float(rng.uniform(-1.0, 1.0))
            dh = local_delta(model, eta, reg, bc, x, s, v_new)
            if dh <= 0 or (dh < INF and rng.random() < math.exp(-dh / T)):
                x[s] = v_new
                energy += dh
        if (sweep + 1) % 1000 == 0:
            exact = hamiltonian(model, eta, reg, bc, x)
            max_drift = max(max_drift, abs(exact - energy))
            energy = exact
        if sweep < burn_in:
            continue
        series.append(
            float(np.mean([x[s] == b for s in free])) if free else 1.0
        )
        if track_states:
            state_counts[tuple(x[s] for s in free)] += 1
        if track_contours and (sweep - burn_in) % snapshot_every == 0:
            n_snapshots += 1
            for c in extract_contours(model, dict(x), exterior=k).external():
                contour_counts[serialize(c)] += 1
    exact = hamiltonian(model, eta, reg, bc, x)
    max_drift = max(max_drift, abs(exact - energy))
    return Observables(
        agreement_fraction=float(np.mean(series)) if series else 1.0,
        contour_counts=contour_counts,
        state_counts=state_counts,
        n_snapshots=n_snapshots,
        n_measured_sweeps=len(series),
        tau_est=_autocorrelation_time(np.asarray(series)),
        energy_drift=max_drift,
        n_free=len(free),
        sweeps=sweeps,
        burn_in=burn_in,
    )


def _run_chain_ising_box(
    model, eta, reg, k, T, sweeps, burn_in, seed, frozen_depth, start
):
    """Checkerboard Metropolis for the two-valued nearest-neighbor model on
    a box: the two parity classes do not interact, so updating one class in
    parallel equals sequential single-site updates."""
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    d = model.dimension
    J = model.params["J"]
    b = model.ground_value(k)
    lo, hi = reg.bounding_box
    shape = tuple(h - l + 1 for l, h in zip(lo, hi))
    pad_shape = tuple(n + 2 for n in shape)
    spins = np.full(pad_shape, b, dtype=np.int8)
    inner = tuple(slice(1, 1 + n) for n in shape)
    free_mask = np.zeros(shape, dtype=bool)
    free = _free_sites(reg, frozen_depth)
    for s in free:
        free_mask[tuple(c - l for c, l in zip(s, lo))] = True
    if start == "random":
        rand = rng.integers(0, 2, size=shape) * 2 - 1
        spins[inner] = np.where(free_mask, rand.astype(np.int8), b)
    field = np.zeros(shape)
    for s in reg:
        field[tuple(c - l for c, l in zip(s, lo))] = eta.get("field", s)
    coords = np.indices(shape).sum(axis=0)
    parity_masks = [free_mask & (coords % 2 == p) for p in (0, 1)]
    series = []
    for sweep in range(sweeps):
        for pmask in parity_masks:
            x = spins[inner]
            nbr = np.zeros(shape, dtype=np.int16)
            for axis in range(d):
                plus = tuple(
                    slice(1, 1 + n) if a != axis else slice(2, 2 + n)
                    for a, n in enumerate(shape)
                )
                minus = tuple(
                    slice(1, 1 + n) if a != axis else slice(0, n)
                    for a, n in enumerate(shape)
                )
                nbr = nbr + spins[plus] + spins[minus]
            dh = 2.0 * x * (J * nbr + field)
            u = rng.random(shape)
            accept = pmask & ((dh <= 0) | (u < np.exp(np.maximum(-dh / T, -700.0))))
            spins[inner] = np.where(accept, -x, x)
        if sweep >= burn_in:
            x = spins[inner]
            series.append(float((x[free_mask] == b).mean()) if free else 1.0)
    arr = np.asarray(series)
    return Observables(
        agreement_fraction=float(arr.mean()) if len(arr) else 1.0,
        n_measured_sweeps=len(arr),
        tau_est=_autocorrelation_time(arr),
        n_free=len(free),
        sweeps=sweeps,
        burn_in=burn_in,
    )


def _autocorrelation_time(series: np.ndarray, cut: float = 0.05) -> float:
    """Integrated autocorrelation time of a scalar series (1 for iid)."""
    n = len(series)
    if n < 10:
        return 1.0
    centered = series - series.mean()
    var = float(centered @ centered) / n
    if var == 0:
        return 1.0
    tau = 1.0
    for lag in range(1, min(n // 4, 2000)):
        rho = float(centered[:-lag] @ centered[lag:]) / ((n - lag) * var)
        if rho < cut:
            break
        tau += 2.0 * rho
    return tau


def contour_frequency(obs: Observables, targets: list) -> dict:
    """Empirical external-occurrence frequency per target contour with a
    Wilson interval, from the chain's snapshot counts."""
    from .contours import serialize
    from .disorder import wilson_interval

    if obs.n_snapshots == 0:
        raise ModelError("chain was run without contour tracking")
    out = {}
    for c in targets:
        key = serialize(c)
        hits = obs.contour_counts.get(key, 0)
        lo, hi = wilson_interval(hits, obs.n_snapshots)
        out[key] = (hits / obs.n_snapshots, (lo, hi))
    return out


def exact_state_distribution(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k: int,
    T: float,
    frozen_depth: int = 0,
    budget: int = 2_000_000,
) -> dict:
    """Exact Gibbs law over free-site value tuples, by direct enumeration."""
    from .polymer import iter_constrained_configs

    free = _free_sites(reg, frozen_depth)
    bc = BoundaryCondition.ground(k)
    weights = {}
    for x in iter_constrained_configs(model, reg, k, frozen_depth, budget):
        h = hamiltonian(model, eta, reg, bc, x)
        if h == INF:
            continue
        weights[tuple(x[s] for s in free)] = math.exp(-h / T)
    z = sum(weights.values())
    return {state: w / z for state, w in weights.items()}


def total_variation(counts: Counter, exact: dict) -> float:
    """TV distance between the empirical state law and the exact one."""
    n = sum(counts.values())
    states = set(counts) | set(exact)
    return 0.5 * sum(
        abs(counts.get(s, 0) / n - exact.get(s, 0.0)) for s in states
    )


def agreement_over_draws(
    model: ModelInstance,
    dist,
    L: int,
    k: int,
    T: float,
    sweeps: int,
    burn_in: int,
    draws: int,
    seed: int,
    frozen_depth: int = 2,
) -> list[dict]:
    """Order-parameter rows over independent disorder draws on an L^d box."""
    from .geometry import cube
    from .disorder import sample_omega
    from .models import build_eta

    reg = cube(L, model.dimension)
    rows = []
    for draw in range(draws):
        s = int(np.random.SeedSequence([seed, draw]).generate_state(1)[0])
        omega = sample_omega(dist, reg, 3, s, max(1, model.n_beta))
        eta = build_eta(model, omega)
        obs = run_chain(
            model, eta, reg, k, T, sweeps, burn_in, s + 1,
            frozen_depth=frozen_depth,
        )
        rows.append(
            {
                "draw": draw,
                "T": T,
                "epsilon": dist.epsilon,
                "agreement": obs.agreement_fraction,
                "tau_est": obs.tau_est,
            }
        )
    return rows
