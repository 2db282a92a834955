"""Local symmetry pairs: spin-space maps paired with quenched-parameter maps.

A pair (spin map, omega map) relates two ground labels: spin flip for the
two-ground Ising-type models, a cyclic state permutation for the Potts-type
models, and a unit translation (acting in the original lattice, induced on
the blocked coordinates) for the chessboard-ground models.  The verifier
checks the five defining conditions on a small region: locality, injectivity
on the boundary-constrained subspace, energy quasi-invariance up to the
boundary field sum, a Lipschitz estimate of the omega map, and measure
invariance of the pushforward law.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import kstest

from .geometry import (
    Region,
    Site,
    internal_margin,
    thicken,
)
from .disorder import DistributionSpec, QuenchedConfig, sample_omega
from .models import (
    BoundaryCondition,
    ModelError,
    ModelInstance,
    build_eta,
    config_lookup,
    hamiltonian,
)

INF = math.inf


@dataclass(frozen=True)
class SymmetryPair:
    """A ground-label pair with its spin and quenched-parameter maps.

    spin_transform(lookup, s) gives the transformed spin at s from a full
    spin lookup; quench_transform(omega, reg) rewrites omega on reg plus a
    width-1 external margin (reading one margin further) and leaves the rest
    untouched.  Both maps have locality radius 1 in model coordinates.
    """

    kind: str
    k1: int
    k2: int
    spin_transform: Callable
    quench_transform: Callable
    lipschitz: float
    p_set: str
    vector: Site | None = None

    def apply_spin(self, model: ModelInstance, lookup, reg: Region) -> dict:
        return {s: self.spin_transform(lookup, s) for s in reg}

    def apply_omega(self, omega: QuenchedConfig, reg: Region) -> QuenchedConfig:
        return self.quench_transform(omega, reg)


def _codomain_base_sites(model: ModelInstance, reg: Region) -> list:
    """Base-lattice sites of reg plus one external margin (model coords)."""
    cod = thicken(reg, 1)
    if model.blocking is not None:
        cod = model.blocking.unblock_region(cod)
    return sorted(cod)


def _flip_pair(model: ModelInstance, k1: int, k2: int) -> SymmetryPair:
    if -model.ground_value(k1) != model.ground_value(k2):
        raise ModelError(
            f"flip does not map ground {k1} to ground {k2} of {model.name}"
        )

    def spin(lookup, s):
        return -lookup(s)

    def quench(omega, reg):
        sites = _codomain_base_sites(model, reg)
        values = dict(omega.values)
        for s in sites:
            values[(0, s)] = -omega.get(0, s)
        return QuenchedConfig(values, omega.seed, omega.spec)

    return SymmetryPair("flip", k1, k2, spin, quench, 1.0, "all")


def _cycle_pair(model: ModelInstance, k1: int, k2: int) -> SymmetryPair:
    Q = model.n_spin

    def pi_pow(q, c):
        return (q - 1 + c) % Q + 1

    shift = (model.ground_value(k2) - model.ground_value(k1)) % Q

    def spin(lookup, s):
        return pi_pow(lookup(s), shift)

    def quench(omega, reg):
        sites = _codomain_base_sites(model, reg)
        values = dict(omega.values)
        for s in sites:
            old = [omega.get(b, s) for b in range(Q)]
            for b in range(Q):
                # fields relabel by the inverse cycle: new^q = old^{pi^-shift q}
                values[(b, s)] = old[pi_pow(b + 1, -shift) - 1]
        return QuenchedConfig(values, omega.seed, omega.spec)

    return SymmetryPair("potts_cycle", k1, k2, spin, quench, 1.0, "all")


def _translate_pair(model: ModelInstance, u: Site, k1: int) -> SymmetryPair:
    """Unit translation x_s -> x_{s-u}, omega_s -> omega_{s-u} in the base
    lattice, induced on blocked coordinates when the model is blocked."""
    spec = model.blocking

    if spec is None:
        def spin(lookup, s):
            return lookup(tuple(c - uc for c, uc in zip(s, u)))
    else:
        period = spec.period
        offsets = tuple(spec.offsets())
        index = {o: i for i, o in enumerate(offsets)}

        def spin(lookup, S):
            vals = []
            for o in offsets:
                base = tuple(
                    period * c + oc - uc for c, oc, uc in zip(S, o, u)
                )
                blk = tuple(c // period for c in base)
                off = tuple(c - period * b for c, b in zip(base, blk))
                vals.append(lookup(blk)[index[off]])
            return tuple(vals)

    n_beta = max(1, model.n_beta)

    def quench(omega, reg):
        sites = _codomain_base_sites(model, reg)
        values = dict(omega.values)
        for s in sites:
            src = tuple(c - uc for c, uc in zip(s, u))
            for b in range(n_beta):
                values[(b, s)] = omega.get(b, src)
        return QuenchedConfig(values, omega.seed, omega.spec)

    image = spin(lambda t: model.ground_value(k1), (0,) * model.dimension)
    try:
        k2 = model.ground_states.index(image)
    except ValueError:
        raise ModelError(
            f"translation by {u} does not map ground {k1} of {model.name} "
            "to another ground state"
        ) from None
    return SymmetryPair(
        "translate", k1, k2, spin, quench, 1.0, "shifted-preimage", vector=u
    )


def identity_pair(model: ModelInstance, k: int) -> SymmetryPair:
    return SymmetryPair(
        "identity", k, k, lambda lookup, s: lookup(s), lambda om, reg: om, 1.0, "all"
    )


def make_transform(
    model: ModelInstance,
    kind: str,
    k1: int = 0,
    k2: int | None = None,
    vector: Site | None = None,
) -> SymmetryPair:
    """Build the named symmetry pair, or fail naming the model's group."""
    if kind == "identity":
        return identity_pair(model, k1)
    if kind not in model.symmetries:
        raise ModelError(
            f"{model.name} admits only the symmetry kinds {model.symmetries}"
        )
    if kind == "flip":
        return _flip_pair(model, k1, 1 - k1 if k2 is None else k2)
    if kind == "potts_cycle":
        return _cycle_pair(model, k1, (k1 + 1) % model.n_ground if k2 is None else k2)
    if kind == "translate":
        if vector is not None:
            pair = _translate_pair(model, vector, k1)
            if k2 is not None and pair.k2 != k2:
                raise ModelError(f"translation by {vector} maps {k1} to {pair.k2}")
            return pair
        d = model.dimension
        want = (k1 + 1) % model.n_ground if k2 is None else k2
        for i in range(d):
            for sign in (1, -1):
                u = tuple(sign if j == i else 0 for j in range(d))
                try:
                    pair = _translate_pair(model, u, k1)
                except ModelError:
                    continue
                if pair.k2 == want:
                    return pair
        raise ModelError(
            f"no unit translation maps ground {k1} to {want} in {model.name}"
        )
    raise ModelError(f"unknown transform kind {kind!r}")


def transform_for(model: ModelInstance, k1: int, k2: int) -> SymmetryPair:
    """The canonical pair relating two ground labels of the model."""
    if k1 == k2:
        return identity_pair(model, k1)
    for kind in ("flip", "potts_cycle", "translate"):
        if kind in model.symmetries:
            return make_transform(model, kind, k1=k1, k2=k2)
    raise ModelError(f"{model.name} declares no symmetry pair for ({k1}, {k2})")


# ---------------------------------------------------------------------------
# Five-condition verification


def boundary_field_sum(eta, tau_eta, sites) -> float:
    """Sum over the sites of |eta| + |transformed eta| across all slots."""
    return sum(eta.abs_sum_at(s) + tau_eta.abs_sum_at(s) for s in sites)


def _constrained_configs(model: ModelInstance, reg: Region, k1: int, depth: int = 1):
    """Configurations on reg frozen at ground k1 within depth of the edge."""
    frozen = internal_margin(reg, depth)
    free = sorted(reg.difference(frozen))
    b = model.ground_value(k1)
    base = {s: b for s in reg}
    for vals in itertools.product(model.spin_values, repeat=len(free)):
        x = dict(base)
        x.update(zip(free, vals))
        yield x


def _sample_base_omega(model, reg, dist, seed, trial):
    base = reg if model.blocking is None else model.blocking.unblock_region(reg)
    pad = 3 * (1 if model.blocking is None else model.blocking.period)
    s = int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])
    return sample_omega(dist, Region(base.sites, model.dimension), pad, s,
                        max(1, model.n_beta))


def _check_locality(pair, model, reg, dist, seed) -> bool:
    """Perturbing one input coordinate moves the outputs by at most one
    step in model coordinates (one block for blocked omega maps)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    probe = thicken(reg, 2)
    period = 1 if model.blocking is None else model.blocking.period
    for _ in range(5):
        if model.spin_values is not None:
            x = {
                s: model.spin_values[int(rng.integers(model.n_spin))]
                for s in probe
            }
        else:
            x = {s: float(rng.uniform(-1, 1)) for s in probe}
        out = pair.apply_spin(model, lambda t: x[t], reg)
        for t in reg:
            alt = dict(x)
            if model.spin_values is not None:
                choices = [v for v in model.spin_values if v != x[t]]
                alt[t] = choices[int(rng.integers(len(choices)))]
            else:
                alt[t] = -x[t] if x[t] else 0.5
            out2 = pair.apply_spin(model, lambda r: alt[r], reg)
            changed = {s for s in reg if out[s] != out2[s]}
            if any(max(abs(a - b) for a, b in zip(s, t)) > 1 for s in changed):
                return False
    omega = _sample_base_omega(model, reg, dist, seed, 0)
    tau0 = pair.apply_omega(omega, reg)
    cod = _codomain_base_sites(model, reg)
    for (b, t) in list(omega.values):
        if max(abs(c) for c in t) > 4 * period:
            continue
        values = dict(omega.values)
        values[(b, t)] = values[(b, t)] + 1.0
        tau1 = pair.apply_omega(QuenchedConfig(values, omega.seed, omega.spec), reg)
        for s in cod:
            for bb in range(max(1, model.n_beta)):
                if tau0.get(bb, s) != tau1.get(bb, s):
                    if max(abs(a - c) for a, c in zip(s, t)) > period:
                        return False
    return True


def _check_injectivity(pair, model, reg, seed) -> bool:
    if model.spin_values is None:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
        probe = thicken(reg, 1)
        images = set()
        for _ in range(200):
            x = {s: float(rng.uniform(-1, 1)) for s in probe}
            img = tuple(sorted(pair.apply_spin(model, lambda t: x[t], reg).items()))
            if img in images:
                return False
            images.add(img)
        return True
    b1 = model.ground_value(pair.k1)
    seen = set()
    for x in _constrained_configs(model, reg, pair.k1):
        lookup = lambda t, _x=x: _x[t] if t in _x else b1
        img = tuple(sorted(pair.apply_spin(model, lookup, reg).items()))
        if img in seen:
            return False
        seen.add(img)
    return True


def _subspace_configs(model, reg, k1, rng, cap: int = 2048):
    """The constrained subspace, exhaustively when small, sampled otherwise."""
    frozen = internal_margin(reg, 1)
    free = sorted(reg.difference(frozen))
    total = model.n_spin ** len(free)
    if total <= cap:
        yield from _constrained_configs(model, reg, k1)
        return
    b = model.ground_value(k1)
    base = {s: b for s in reg}
    for _ in range(cap):
        x = dict(base)
        for s in free:
            x[s] = model.spin_values[int(rng.integers(model.n_spin))]
        yield x


def _check_energy(pair, model, reg, dist, trials, seed):
    """Energy quasi-invariance over the constrained subspace and sampled
    disorder; returns (ok, max difference, max slack of bound minus diff)."""
    inb = internal_margin(reg, 1)
    bc1 = BoundaryCondition.ground(pair.k1)
    bc2 = BoundaryCondition.ground(pair.k2)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13]))
    max_diff = 0.0
    min_room = INF
    ok = True
    for trial in range(trials):
        omega = _sample_base_omega(model, reg, dist, seed, trial)
        eta = build_eta(model, omega)
        tau_eta = build_eta(model, pair.apply_omega(omega, reg))
        bound = boundary_field_sum(eta, tau_eta, inb)
        for x in _subspace_configs(model, reg, pair.k1, rng):
            h1 = hamiltonian(model, eta, reg, bc1, x)
            if h1 == INF:
                continue
            tx = pair.apply_spin(model, config_lookup(model, bc1, x), reg)
            h2 = hamiltonian(model, tau_eta, reg, bc2, tx)
            if h2 == INF:
                ok = False
                continue
            diff = abs(h1 - h2)
            max_diff = max(max_diff, diff)
            min_room = min(min_room, bound - diff)
            if diff > bound + 1e-9:
                ok = False
    return ok, max_diff, min_room


def _check_lipschitz(pair, model, reg, dist, seed) -> tuple[bool, float]:
    omega = _sample_base_omega(model, reg, dist, seed, 1)
    tau0 = pair.apply_omega(omega, reg)
    cod = _codomain_base_sites(model, reg)
    n_beta = max(1, model.n_beta)
    worst = 0.0
    for (b, t) in list(omega.values):
        if max(abs(c) for c in t) > 6:
            continue
        values = dict(omega.values)
        delta = 0.25
        values[(b, t)] = values[(b, t)] + delta
        tau1 = pair.apply_omega(QuenchedConfig(values, omega.seed, omega.spec), reg)
        move = max(
            abs(tau1.get(bb, s) - tau0.get(bb, s)) for s in cod for bb in range(n_beta)
        )
        worst = max(worst, move / delta)
    return worst <= pair.lipschitz + 1e-9, worst


def _signed_permutation(pair, model, reg) -> bool:
    """The omega map restricted to its codomain is a signed permutation of
    input coordinates: exact measure invariance for symmetric product laws."""
    base = reg if model.blocking is None else model.blocking.unblock_region(reg)
    pad = 3 * (1 if model.blocking is None else model.blocking.period)
    domain = sorted(thicken(Region(base.sites, model.dimension), pad))
    n_beta = max(1, model.n_beta)
    spec = DistributionSpec("bounded", 0.5)
    zero = QuenchedConfig(
        {(b, s): 0.0 for b in range(n_beta) for s in domain}, 0, spec
    )
    cod = _codomain_base_sites(model, reg)
    tz = pair.apply_omega(zero, reg)
    if any(tz.get(b, s) != 0.0 for s in cod for b in range(n_beta)):
        return False
    sources: dict = {}
    for (b, t) in zero.values:
        values = dict(zero.values)
        values[(b, t)] = 1.0
        tau = pair.apply_omega(QuenchedConfig(values, 0, spec), reg)
        for s in cod:
            for bb in range(n_beta):
                v = tau.get(bb, s)
                if v != 0.0:
                    if abs(v) != 1.0 or (bb, s) in sources:
                        return False
                    sources[(bb, s)] = (b, t, v)
    return all((b, s) in sources for s in cod for b in range(n_beta))


def _check_measure(pair, model, reg, dist, trials, seed) -> bool:
    if not _signed_permutation(pair, model, reg):
        return False
    if dist.kind == "gaussian" and dist.epsilon > 0:
        draws = []
        cod = _codomain_base_sites(model, reg)
        for trial in range(max(trials, 5)):
            omega = _sample_base_omega(model, reg, dist, seed, 100 + trial)
            tau = pair.apply_omega(omega, reg)
            draws.extend(
                tau.get(b, s) for s in cod for b in range(max(1, model.n_beta))
            )
        stat = kstest(np.asarray(draws), "norm", args=(0.0, dist.epsilon))
        return bool(stat.pvalue > 0.01)
    return True


def verify_local_symmetry(
    pair: SymmetryPair,
    model: ModelInstance,
    reg: Region,
    trials: int,
    seed: int,
    dist: DistributionSpec | None = None,
) -> dict:
    """Report on the five conditions: locality, injectivity, energy
    quasi-invariance, regularity (Lipschitz), and measure invariance.

    max_energy_diff is the largest |H difference| seen: zero (to rounding)
    for flip and cycle pairs, positive but within the boundary field sum for
    the translation pairs.
    """
    if dist is None:
        dist = DistributionSpec("gaussian", 0.2)
    energy_ok, max_diff, min_room = _check_energy(
        pair, model, reg, dist, trials, seed
    )
    lip_ok, lip = _check_lipschitz(pair, model, reg, dist, seed)
    return {
        "locality": _check_locality(pair, model, reg, dist, seed),
        "injectivity": _check_injectivity(pair, model, reg, seed),
        "energy": energy_ok,
        "regularity": lip_ok,
        "measure": _check_measure(pair, model, reg, dist, trials, seed),
        "max_energy_diff": max_diff,
        "min_bound_slack": min_room,
        "lipschitz_measured": lip,
    }


def ground_mapping_check(pair: SymmetryPair, model: ModelInstance, reg: Region) -> bool:
    """The spin map sends the constant k1 ground to the constant k2 ground."""
    b1 = model.ground_value(pair.k1)
    out = pair.apply_spin(model, lambda t: b1, reg)
    b2 = model.ground_value(pair.k2)
    return all(v == b2 for v in out.values())
