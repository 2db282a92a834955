"""Polymer representation of constrained partition functions.

The partition function with a ground boundary condition, frozen at that
ground on the depth-2 internal margin, rewrites exactly as a gas of contours
sharing the exterior label, with pairwise compatibility (far apart or
nested) and recursively defined weights.  Everything here is brute force in
log domain, intended for exact small-volume verification.
"""

from __future__ import annotations

import itertools
import math

from scipy.special import logsumexp

from .geometry import (
    EnumerationBudgetError,
    Region,
    internal_margin,
)
from .disorder import RandomField, ZERO_FIELD
from .models import (
    BoundaryCondition,
    ModelInstance,
    hamiltonian,
    local_energy,
)
from .contours import (
    Contour,
    ContourSet,
    compatible,
    embed_lookup,
    enumerate_contours_up_to,
    extract_contours,
    translate_contour,
)

_NESTING = ContourSet(())


def iter_constrained_configs(model: ModelInstance, reg: Region, k: int,
                             frozen_depth: int, budget: int):
    """All configurations on reg frozen at ground k on the internal margin."""
    if model.spin_values is None:
        raise EnumerationBudgetError(
            f"{model.name} has no finite spin space to sum over"
        )
    frozen = internal_margin(reg, frozen_depth)
    free = sorted(reg.difference(frozen))
    total = len(model.spin_values) ** len(free)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} configurations on {len(free)} free sites exceed "
            f"budget {budget}"
        )
    b = model.ground_value(k)
    base = {s: b for s in reg}
    for vals in itertools.product(model.spin_values, repeat=len(free)):
        x = dict(base)
        x.update(zip(free, vals))
        yield x


def log_partition_function(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k: int,
    T: float,
    frozen_depth: int = 2,
    budget: int = 2_000_000,
) -> float:
    """ln of the ground-k partition function with the stated frozen margin."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    bc = BoundaryCondition.ground(k)
    energies = []
    for x in iter_constrained_configs(model, reg, k, frozen_depth, budget):
        h = hamiltonian(model, eta, reg, bc, x)
        if h != math.inf:
            energies.append(-h / T)
    if not energies:
        return -math.inf
    return float(logsumexp(energies))


def surface_term(model: ModelInstance, eta: RandomField, reg: Region, k: int) -> float:
    """Sum over reg of the random-field part of the energy at ground k."""
    b = model.ground_value(k)
    lookup = lambda t: b
    full = local_energy(model, eta, reg, lookup)
    return full - len(reg) * model.ground_energy


def log_xi_direct(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k: int,
    T: float,
    budget: int = 2_000_000,
) -> float:
    """ln Xi from the partition function, normalized by the ground energy."""
    s = surface_term(model, eta, reg, k)
    z = log_partition_function(model, eta, reg, k, T, 2, budget)
    return (len(reg) * model.ground_energy + s) / T + z


def excitation_cost(model: ModelInstance, eta: RandomField, c: Contour) -> float:
    """Energy over the support of the embedded contour minus the same sites
    at the exterior ground, random fields included."""
    b = model.ground_value(c.label)
    ground = lambda t: b
    return local_energy(model, eta, c.support, embed_lookup(model, c)) - local_energy(
        model, eta, c.support, ground
    )


def log_weight(
    model: ModelInstance,
    eta: RandomField,
    c: Contour,
    T: float,
    budget: int = 2_000_000,
) -> float:
    """ln w(C): the excitation cost plus, per hole, the ratio of the
    hole-label partition function (depth-3 frozen) to the exterior-label one
    (depth-2 frozen)."""
    lw = -excitation_cost(model, eta, c) / T
    for k, hole in c.interiors.items():
        lw += log_partition_function(model, eta, hole, k, T, 3, budget)
        lw -= log_partition_function(model, eta, hole, c.label, T, 2, budget)
    return lw


def admissible_in(model: ModelInstance, c: Contour, reg: Region, k0: int) -> bool:
    """Whether the contour can occur in the depth-2 frozen ensemble on reg:
    exterior label k0, footprint inside reg, ground k0 on the frozen margin."""
    if c.label != k0:
        return False
    footprint = c.support.sites | c.interior_union().sites
    if not footprint <= reg.sites:
        return False
    b0 = model.ground_value(k0)
    lookup = embed_lookup(model, c)
    return all(lookup(s) == b0 for s in internal_margin(reg, 2))


def candidate_contours(
    model: ModelInstance,
    reg: Region,
    k0: int,
    n_cap: int,
    budget: int = 200_000,
) -> list:
    """All contours admissible in reg with support size at most n_cap,
    obtained by sliding each translation class across the region."""
    lo, hi = reg.bounding_box
    by_size = enumerate_contours_up_to(model, n_cap, anchored=False, budget=budget)
    out = []
    for contours in by_size.values():
        for c0 in contours:
            clo, chi = c0.support.bounding_box
            ranges = [
                range(lo[i] - clo[i], hi[i] - chi[i] + 1)
                for i in range(model.dimension)
            ]
            for v in itertools.product(*ranges):
                c = translate_contour(c0, v)
                if admissible_in(model, c, reg, k0):
                    out.append(c)
    return out


def _compatible_families(candidates: list):
    """All pairwise-compatible subsets (the empty family included)."""
    n = len(candidates)
    ok = [
        [compatible(candidates[i], candidates[j]) for j in range(n)]
        for i in range(n)
    ]
    families = [[]]

    def grow(start, chosen):
        for i in range(start, n):
            if all(ok[i][j] for j in chosen):
                families.append(chosen + [i])
                grow(i + 1, chosen + [i])

    grow(0, [])
    return families, ok


def log_xi_polymer(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k0: int,
    T: float,
    n_cap: int | None = None,
    budget: int = 2_000_000,
) -> float:
    """ln Xi from the contour-gas side: sum over compatible families of the
    product of weights.

    With n_cap=None the candidate set is the exact census of contours
    occurring in the ensemble (feasible on small regions only); otherwise
    it is the size-capped sliding enumeration.
    """
    if n_cap is None:
        cand = sorted(
            brute_force_contour_census(model, reg, k0, budget),
            key=lambda c: tuple(sorted(c.support.sites)),
        )
    else:
        cand = candidate_contours(model, reg, k0, n_cap, budget)
    lw = [log_weight(model, eta, c, T, budget) for c in cand]
    families, _ = _compatible_families(cand)
    return float(logsumexp([sum(lw[i] for i in fam) for fam in families]))


def polymer_identity_check(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k0: int,
    T: float,
    n_cap: int | None = None,
    budget: int = 2_000_000,
) -> tuple[float, float]:
    """(ln Xi by direct summation, ln Xi by the contour gas)."""
    return (
        log_xi_direct(model, eta, reg, k0, T, budget),
        log_xi_polymer(model, eta, reg, k0, T, n_cap, budget),
    )


def external_probabilities_direct(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k0: int,
    targets: list,
    T: float,
    budget: int = 2_000_000,
) -> list[float]:
    """Gibbs probabilities that each target occurs as an external contour,
    by direct summation over the depth-2 frozen ensemble."""
    bc = BoundaryCondition.ground(k0)
    num: list[list[float]] = [[] for _ in targets]
    den = []
    for x in iter_constrained_configs(model, reg, k0, 2, budget):
        h = hamiltonian(model, eta, reg, bc, x)
        if h == math.inf:
            continue
        den.append(-h / T)
        ext = extract_contours(model, x, exterior=k0).external()
        for i, c0 in enumerate(targets):
            if any(c == c0 for c in ext):
                num[i].append(-h / T)
    log_den = logsumexp(den)
    return [
        math.exp(logsumexp(ni) - log_den) if ni else 0.0 for ni in num
    ]


def external_probability_direct(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k0: int,
    c0: Contour,
    T: float,
    budget: int = 2_000_000,
) -> float:
    return external_probabilities_direct(model, eta, reg, k0, [c0], T, budget)[0]


def external_probabilities_formula(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k0: int,
    targets: list,
    T: float,
    n_cap: int | None = None,
    budget: int = 2_000_000,
) -> list[float]:
    """The same probabilities from the contour gas: families containing the
    target as a maximal element, over the full gas."""
    if n_cap is None:
        cand = sorted(
            brute_force_contour_census(model, reg, k0, budget),
            key=lambda c: tuple(sorted(c.support.sites)),
        )
    else:
        cand = candidate_contours(model, reg, k0, n_cap, budget)
    index = {c: i for i, c in enumerate(cand)}
    for c0 in targets:
        if c0 not in index:
            raise ValueError("a target contour is not admissible in reg")
    lw = [log_weight(model, eta, c, T, budget) for c in cand]
    families, _ = _compatible_families(cand)
    num: list[list[float]] = [[] for _ in targets]
    den = []
    for fam in families:
        total = sum(lw[i] for i in fam)
        den.append(total)
        for t, c0 in enumerate(targets):
            i0 = index[c0]
            if i0 in fam and not any(
                i != i0 and _NESTING.nested(c0, cand[i]) for i in fam
            ):
                num[t].append(total)
    log_den = logsumexp(den)
    return [
        math.exp(logsumexp(ni) - log_den) if ni else 0.0 for ni in num
    ]


def external_probability_formula(
    model: ModelInstance,
    eta: RandomField,
    reg: Region,
    k0: int,
    c0: Contour,
    T: float,
    n_cap: int | None = None,
    budget: int = 2_000_000,
) -> float:
    return external_probabilities_formula(
        model, eta, reg, k0, [c0], T, n_cap, budget
    )[0]


def brute_force_contour_census(
    model: ModelInstance,
    reg: Region,
    k0: int,
    budget: int = 2_000_000,
) -> set:
    """Independent oracle: the set of distinct contours appearing in any
    configuration of the depth-2 frozen ensemble on reg."""
    seen = set()
    for x in iter_constrained_configs(model, reg, k0, 2, budget):
        if model.constraint is not None:
            lookup = lambda t, _x=x: _x.get(t, model.ground_value(k0))
            if any(not model.constraint(s, lookup) for s in reg):
                continue
        for c in extract_contours(model, x, exterior=k0):
            seen.add(c)
    return seen
